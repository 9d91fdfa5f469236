#pragma once

#include <vector>

#include "deft/data/sample.hpp"
#include "deft/metrics/metrics.hpp"
#include "deft/model/deft_model.hpp"

namespace deft {

struct EvalOptions {
  double threshold = 0.5;
  // 0 skips the curve sweep.
  int n_thresholds = 256;
  // prepare_eval target size.
  int eval_size = 256;

  bool operator==(const EvalOptions&) const = default;
};

// Runs the model in inference mode on prepare_eval'd samples and pools the
// confusion counts and absolute errors over every pixel of every image.
MetricsReport evaluate(DefTModel& model, const std::vector<Sample>& dataset, const EvalOptions& opt = {});

// Same pooling over precomputed prediction/ground-truth pairs.
MetricsReport evaluate_pairs(const std::vector<PredGtPair>& pairs, const EvalOptions& opt = {});

}  // namespace deft
