#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "deft/model/blocks.hpp"
#include "deft/model/config.hpp"
#include "deft/model/layers.hpp"

namespace deft {

// F1..F5 at strides 2, 4, 8, 16, 32 (f[0] is F1).
struct PyramidFeatures {
  std::array<Tensor, 5> f;
};

struct ModelOutput {
  Tensor pred;                       // [N, 1, H, W] probabilities
  std::array<Tensor, 4> side_outputs;  // one per decoder merge, deepest first
  // Pre-sigmoid values of the above.
  Tensor logits;
  std::array<Tensor, 4> side_logits;
};

class DefTModel {
 public:
  explicit DefTModel(ModelConfig cfg, std::uint64_t seed = 0, DType dtype = DType::kFloat32);

  DefTModel(const DefTModel&) = delete;
  DefTModel& operator=(const DefTModel&) = delete;
  DefTModel(DefTModel&&) = default;
  DefTModel& operator=(DefTModel&&) = default;

  const ModelConfig& config() const { return cfg_; }
  DType dtype() const { return dtype_; }
  ParamStore& store() { return store_; }
  const ParamStore& store() const { return store_; }

  // Training mode makes the stem BatchNorm use and update batch statistics.
  void set_training(bool training) { training_ = training; }
  bool training() const { return training_; }

  PyramidFeatures encode(const Tensor& x);
  ModelOutput forward(const Tensor& x);

  StemBlock& stem() { return stem_; }
  PatchAggregation& embed(int stage) { return stages_[stage].embed; }
  DecoderMerge& merge(int i) { return merges_[i]; }

  std::int64_t param_count() const { return store_.param_count(); }
  // Parameter totals grouped by top-level module, in construction order.
  std::vector<std::pair<std::string, std::int64_t>> param_breakdown() const;

 private:
  struct Stage {
    bool has_embed = true;
    PatchAggregation embed;
    std::vector<DefTBlock> blocks;
  };

  ModelConfig cfg_;
  DType dtype_;
  bool training_ = false;
  ParamStore store_;
  StemBlock stem_;
  std::array<Stage, 4> stages_;
  std::array<DecoderMerge, 4> merges_;
  Conv2d final_head_;
  std::array<Conv2d, 4> side_heads_;
};

// FLOPs (2 x MACs of convs, linear layers and matmuls) of one forward pass on
// a single square image.
std::int64_t estimate_flops(DefTModel& model, int input_size);

}  // namespace deft
