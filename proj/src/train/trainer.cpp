#include "deft/train/trainer.hpp"

#include <cmath>
#include <fstream>

#include "deft/core/autograd.hpp"
#include "deft/core/errors.hpp"
#include "deft/core/kv_text.hpp"
#include "deft/core/rng.hpp"
#include "deft/data/transforms.hpp"
#include "deft/train/loss.hpp"

namespace deft {

std::int64_t batches_per_epoch(std::size_t samples, int batch_size) {
  return (static_cast<std::int64_t>(samples) + batch_size - 1) / batch_size;
}

TrainResult train(DefTModel& model, const std::vector<Sample>& dataset, const TrainConfig& cfg,
                  const TrainHooks& hooks) {
  cfg.validate();
  if (dataset.empty()) throw UsageError("train: dataset is empty");
  if (cfg.crop_to != model.config().input_size) {
    // the encoder accepts any multiple of 32, but a mismatch is almost always a config slip
    throw ConfigError("train: crop_to " + std::to_string(cfg.crop_to) + " differs from model input_size " +
                      std::to_string(model.config().input_size));
  }
  TrainResult result;
  const std::int64_t per_epoch = batches_per_epoch(dataset.size(), cfg.batch_size);
  const std::int64_t max_iter = per_epoch * cfg.epochs;
  Rng rng(cfg.seed);
  model.set_training(true);

  std::int64_t it = 0;
  for (int ep = 0; ep < cfg.epochs; ++ep) {
    const auto order = rng.permutation(static_cast<std::int64_t>(dataset.size()));
    for (std::int64_t b = 0; b < per_epoch; ++b) {
      std::vector<Sample> batch_samples;
      std::vector<std::size_t> idx;
      const std::int64_t end = std::min<std::int64_t>((b + 1) * cfg.batch_size, order.size());
      for (std::int64_t k = b * cfg.batch_size; k < end; ++k) {
        batch_samples.push_back(augment_train(dataset[static_cast<std::size_t>(order[k])], rng, cfg.resize_to, cfg.crop_to));
        idx.push_back(idx.size());
      }
      const Batch batch = make_batch(batch_samples, idx, model.dtype());
      const double lr = poly_lr(cfg.base_lr, it, max_iter, cfg.poly_power);

      LossRecord rec;
      try {
        const ModelOutput out = model.forward(batch.images);
        const LossTerms loss = deep_supervised_loss(out, batch.masks, cfg.loss_weights);
        rec = {it, ep, lr, loss.total.item(), loss.bce.item(), loss.ssim.item(), loss.iou.item()};
        if (!std::isfinite(rec.total)) throw NumericError("loss is not finite");
        model.store().zero_grad();
        backward(loss.total);
      } catch (const NumericError& e) {
        throw NumericError("training diverged at iteration " + std::to_string(it) + " (epoch " +
                           std::to_string(ep) + ", lr " + format_double(lr) + "): " + e.what());
      }
      sgd_step(model.store(), result.optimizer, lr, cfg.momentum, cfg.weight_decay);
      model.store().zero_grad();
      result.log.push_back(rec);
      ++it;
      if (hooks.on_iteration) hooks.on_iteration(rec);
      if (cfg.checkpoint_every > 0 && it % cfg.checkpoint_every == 0 && hooks.on_checkpoint) {
        hooks.on_checkpoint(it, model);
      }
    }
  }
  model.set_training(false);
  return result;
}

void write_loss_log(const std::filesystem::path& path, const std::vector<LossRecord>& log) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw IoError("cannot open '" + path.string() + "' for writing");
  os << "iteration,epoch,lr,total_loss,bce,ssim,iou\n";
  for (const auto& r : log) {
    os << r.iteration << ',' << r.epoch << ',' << format_double(r.lr) << ',' << format_double(r.total) << ','
       << format_double(r.bce) << ',' << format_double(r.ssim) << ',' << format_double(r.iou) << '\n';
  }
  if (!os) throw IoError("failed writing '" + path.string() + "'");
}

}  // namespace deft
