#include "deft/train/train_config.hpp"

#include "deft/core/errors.hpp"

namespace deft {

void TrainConfig::validate() const {
  auto fail = [](const std::string& m) { throw ConfigError("train config: " + m); };
  if (epochs < 0) fail("epochs must be >= 0");
  if (batch_size < 1) fail("batch_size must be >= 1");
  if (!(base_lr > 0)) fail("base_lr must be positive");
  if (momentum < 0 || momentum >= 1) fail("momentum must be in [0, 1)");
  if (weight_decay < 0) fail("weight_decay must be >= 0");
  if (!(poly_power > 0)) fail("poly_power must be positive");
  if (loss_weights.bce < 0 || loss_weights.ssim < 0 || loss_weights.iou < 0) fail("loss weights must be >= 0");
  if (crop_to < 1 || crop_to > resize_to) fail("need 1 <= crop_to <= resize_to");
  if (crop_to % 32 != 0) fail("crop_to must be a multiple of 32");
  if (checkpoint_every < 0) fail("checkpoint_every must be >= 0");
}

void TrainConfig::write(KeyValueText& kv, const std::string& p) const {
  kv.set(p + "epochs", std::to_string(epochs));
  kv.set(p + "batch_size", std::to_string(batch_size));
  kv.set(p + "base_lr", format_double(base_lr));
  kv.set(p + "momentum", format_double(momentum));
  kv.set(p + "weight_decay", format_double(weight_decay));
  kv.set(p + "poly_power", format_double(poly_power));
  kv.set(p + "loss.bce", format_double(loss_weights.bce));
  kv.set(p + "loss.ssim", format_double(loss_weights.ssim));
  kv.set(p + "loss.iou", format_double(loss_weights.iou));
  kv.set(p + "seed", std::to_string(seed));
  kv.set(p + "resize_to", std::to_string(resize_to));
  kv.set(p + "crop_to", std::to_string(crop_to));
  kv.set(p + "checkpoint_every", std::to_string(checkpoint_every));
}

void TrainConfig::read(KeyValueText& kv, const std::string& p) {
  kv.read(p + "epochs", epochs);
  kv.read(p + "batch_size", batch_size);
  kv.read(p + "base_lr", base_lr);
  kv.read(p + "momentum", momentum);
  kv.read(p + "weight_decay", weight_decay);
  kv.read(p + "poly_power", poly_power);
  kv.read(p + "loss.bce", loss_weights.bce);
  kv.read(p + "loss.ssim", loss_weights.ssim);
  kv.read(p + "loss.iou", loss_weights.iou);
  kv.read(p + "seed", seed);
  kv.read(p + "resize_to", resize_to);
  kv.read(p + "crop_to", crop_to);
  kv.read(p + "checkpoint_every", checkpoint_every);
}

}  // namespace deft
