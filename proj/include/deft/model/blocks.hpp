#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "deft/model/config.hpp"
#include "deft/model/layers.hpp"

namespace deft {

// Stride-2 feature F1. With use_csb: three 3x3 convs (strides 2, 1, 1), each
// optionally followed by BatchNorm + ReLU. Without: a 4x4/s4 patchify conv
// whose output also serves as the stage-1 tokens; F1 is its x2 upsample.
class StemBlock {
 public:
  StemBlock() = default;
  StemBlock(Initializer& init, const ModelConfig& cfg);

  Tensor forward(const Tensor& x, bool training);
  // Stride-4 patch embedding of the baseline stem (use_csb off only).
  Tensor patchify(const Tensor& x) const;
  bool is_conv_stem() const { return conv_stem_; }

 private:
  bool conv_stem_ = true;
  bool norm_ = true;
  std::vector<Conv2d> convs_;
  std::vector<BatchNorm2d> norms_;
};

// Halves resolution: 3x3/s2/p1 conv, or a non-overlapping 2x2/s2 conv when
// use_pab is off.
class PatchAggregation {
 public:
  PatchAggregation() = default;
  PatchAggregation(Initializer& init, const std::string& name, int in, int out, bool overlap);
  Tensor forward(const Tensor& x) const;

 private:
  Conv2d conv_;
};

// x + dwconv3x3(x)
class PositionBlock {
 public:
  PositionBlock() = default;
  PositionBlock(Initializer& init, const std::string& name, int channels);
  Tensor forward(const Tensor& x) const;
  Conv2d& conv() { return conv_; }

 private:
  Conv2d conv_;
};

// Number of pooled tokens: sum over ratios of ceil(h/i) * ceil(w/i).
std::int64_t pooled_token_count(std::int64_t h, std::int64_t w, const std::vector<int>& ratios);

// [N, c, h, w] -> [N, L', c]: adaptive average pool to ceil(h/i) x ceil(w/i)
// per ratio, flatten each, concatenate along the token axis.
Tensor lmps_pool_tokens(const Tensor& x, const std::vector<int>& ratios);

// Multi-head attention with queries from all tokens and keys/values from a
// reduced token set. With use_lmps the reduction is multi-ratio pooling;
// otherwise a kernel=stride=R conv followed by LayerNorm (identity when R=1).
class PoolingAttention {
 public:
  PoolingAttention() = default;
  PoolingAttention(Initializer& init, const std::string& name, int channels, int heads,
                   std::vector<int> ratios, bool multi_pool, int sr_ratio);

  // tokens: [N, h*w, c] -> [N, h*w, c]
  Tensor forward(const Tensor& tokens, std::int64_t h, std::int64_t w) const;
  // Map-layout convenience wrapper: [N, c, h, w] -> [N, c, h, w].
  Tensor forward_map(const Tensor& x) const;
  // Softmax weights [N, heads, h*w, L'] for inspection.
  Tensor attention_weights(const Tensor& tokens, std::int64_t h, std::int64_t w) const;

  int heads() const { return heads_; }
  const Linear& q() const { return q_; }
  const Linear& k() const { return k_; }
  const Linear& v() const { return v_; }
  const Linear& proj() const { return proj_; }

 private:
  int channels_ = 0, heads_ = 1;
  std::vector<int> ratios_;
  bool multi_pool_ = true;
  int sr_ratio_ = 1;
  Linear q_, k_, v_, proj_;
  Conv2d sr_;
  LayerNorm sr_norm_;

  Tensor reduced_tokens(const Tensor& tokens, std::int64_t h, std::int64_t w) const;
  Tensor split_heads(const Tensor& t) const;
  Tensor scores(const Tensor& tokens, std::int64_t h, std::int64_t w, Tensor* values) const;
};

// fc1 -> GELU -> [dwconv3x3 -> GELU] -> fc2, the bracket only with use_cffn.
class ConvFeedForward {
 public:
  ConvFeedForward() = default;
  ConvFeedForward(Initializer& init, const std::string& name, int channels, int expansion,
                  bool use_conv);

  Tensor forward(const Tensor& tokens, std::int64_t h, std::int64_t w) const;
  Tensor forward_map(const Tensor& x) const;
  // Hidden activation after the middle stage, map layout (for shape checks).
  Tensor hidden_map(const Tensor& x) const;

 private:
  bool use_conv_ = true;
  Linear fc1_, fc2_;
  Conv2d dw_;
  Tensor hidden(const Tensor& tokens, std::int64_t h, std::int64_t w) const;
};

// x'' = LPB(x); t' = attn(LN(t'')) + t''; out = FFN(LN(t')) + t'.
class DefTBlock {
 public:
  DefTBlock() = default;
  DefTBlock(Initializer& init, const std::string& name, const ModelConfig& cfg, int stage);
  Tensor forward(const Tensor& x) const;

 private:
  bool use_lpb_ = true;
  PositionBlock lpb_;
  LayerNorm norm1_, norm2_;
  PoolingAttention attn_;
  ConvFeedForward ffn_;
};

// relu(conv3x3(cat(up2(x), y))) with y's channel count.
class DecoderMerge {
 public:
  DecoderMerge() = default;
  DecoderMerge(Initializer& init, const std::string& name, int cx, int cy);
  Tensor forward(const Tensor& x, const Tensor& y) const;
  Conv2d& conv() { return conv_; }

 private:
  Conv2d conv_;
};

}  // namespace deft
