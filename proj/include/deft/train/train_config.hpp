#pragma once

#include <cstdint>
#include <string>

#include "deft/core/kv_text.hpp"

namespace deft {

struct LossWeights {
  double bce = 1.0, ssim = 1.0, iou = 1.0;
  bool operator==(const LossWeights&) const = default;
};

struct TrainConfig {
  int epochs = 700;
  int batch_size = 8;
  double base_lr = 0.003;
  double momentum = 0.9;
  double weight_decay = 1e-4;
  double poly_power = 0.9;
  LossWeights loss_weights;
  std::uint64_t seed = 0;
  int resize_to = 256;
  int crop_to = 224;
  // Checkpoint interval in iterations; 0 disables intermediate checkpoints.
  int checkpoint_every = 0;

  void validate() const;
  void write(KeyValueText& kv, const std::string& prefix) const;
  void read(KeyValueText& kv, const std::string& prefix);
  bool operator==(const TrainConfig&) const = default;
};

}  // namespace deft
