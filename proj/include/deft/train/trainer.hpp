#pragma once

#include <filesystem>
#include <functional>
#include <vector>

#include "deft/data/sample.hpp"
#include "deft/model/deft_model.hpp"
#include "deft/train/optim.hpp"
#include "deft/train/train_config.hpp"

namespace deft {

struct LossRecord {
  std::int64_t iteration = 0;
  int epoch = 0;
  double lr = 0.0;
  double total = 0.0, bce = 0.0, ssim = 0.0, iou = 0.0;
};

struct TrainHooks {
  // Called after every update.
  std::function<void(const LossRecord&)> on_iteration;
  // Called every cfg.checkpoint_every iterations with the completed count.
  std::function<void(std::int64_t, const DefTModel&)> on_checkpoint;
};

struct TrainResult {
  std::vector<LossRecord> log;
  OptimizerState optimizer;
};

// Batches per epoch: ceil(samples / batch_size); the last batch may be short.
std::int64_t batches_per_epoch(std::size_t samples, int batch_size);

// Each epoch draws a fresh permutation, then every sample of a batch is
// augmented (resize + random crop) from the same seeded stream. The poly
// schedule decays per iteration over epochs * batches_per_epoch. A non-finite
// loss aborts with NumericError naming the iteration and lr.
TrainResult train(DefTModel& model, const std::vector<Sample>& dataset, const TrainConfig& cfg,
                  const TrainHooks& hooks = {});

// CSV: iteration,epoch,lr,total_loss,bce,ssim,iou
void write_loss_log(const std::filesystem::path& path, const std::vector<LossRecord>& log);

}  // namespace deft
