#include "deft/model/blocks.hpp"

#include <cmath>

#include "deft/core/errors.hpp"

namespace deft {

namespace {

std::int64_t ceil_div(std::int64_t a, std::int64_t b) { return (a + b - 1) / b; }

void require_map(const Tensor& x, const char* what) {
  if (x.rank() != 4) {
    throw DimensionError(std::string(what) + ": expected [N, C, H, W], got " + shape_str(x.shape()));
  }
}

}  // namespace

// ---- stem ------------------------------------------------------------------

StemBlock::StemBlock(Initializer& init, const ModelConfig& cfg)
    : conv_stem_(cfg.toggles.use_csb), norm_(cfg.stem_norm) {
  const int c = cfg.base_channels;
  if (!conv_stem_) {
    convs_.emplace_back(init, "stem.patchify", cfg.in_channels, c, 4, 4, 0);
    return;
  }
  const int strides[3] = {2, 1, 1};
  for (int i = 0; i < 3; ++i) {
    const std::string name = "stem.conv" + std::to_string(i + 1);
    convs_.emplace_back(init, name, i == 0 ? cfg.in_channels : c, c, 3, strides[i], 1);
    if (norm_) norms_.emplace_back(init, "stem.norm" + std::to_string(i + 1), c);
  }
}

Tensor StemBlock::forward(const Tensor& x, bool training) {
  require_map(x, "stem");
  if (x.dim(2) % 2 != 0 || x.dim(3) % 2 != 0) {
    throw DimensionError("stem: input spatial dims must be even, got " + shape_str(x.shape()));
  }
  if (!conv_stem_) return bilinear_upsample(patchify(x), 2);
  Tensor h = x;
  for (std::size_t i = 0; i < convs_.size(); ++i) {
    h = convs_[i](h);
    if (norm_) h = relu(norms_[i](h, training));
  }
  return h;
}

Tensor StemBlock::patchify(const Tensor& x) const {
  if (conv_stem_) throw UsageError("stem: patchify is only available for the patch stem");
  require_map(x, "stem");
  if (x.dim(2) % 4 != 0 || x.dim(3) % 4 != 0) {
    throw DimensionError("stem: patch stem needs spatial dims divisible by 4, got " +
                         shape_str(x.shape()));
  }
  return convs_[0](x);
}

// ---- patch aggregation -------------------------------------------------------

PatchAggregation::PatchAggregation(Initializer& init, const std::string& name, int in, int out,
                                   bool overlap)
    : conv_(overlap ? Conv2d(init, name, in, out, 3, 2, 1) : Conv2d(init, name, in, out, 2, 2, 0)) {}

Tensor PatchAggregation::forward(const Tensor& x) const {
  require_map(x, "patch_aggregate");
  if (x.dim(2) < 2 || x.dim(3) < 2) {
    throw DegenerateOutputError("patch_aggregate: input " + shape_str(x.shape()) +
                                " too small to downsample");
  }
  return conv_(x);
}

// ---- LPB ---------------------------------------------------------------------

PositionBlock::PositionBlock(Initializer& init, const std::string& name, int channels)
    : conv_(Conv2d::small(init, name, channels, channels, 3, channels)) {}

Tensor PositionBlock::forward(const Tensor& x) const { return x + conv_(x); }

// ---- attention ---------------------------------------------------------------

std::int64_t pooled_token_count(std::int64_t h, std::int64_t w, const std::vector<int>& ratios) {
  std::int64_t n = 0;
  for (int r : ratios) n += ceil_div(h, r) * ceil_div(w, r);
  return n;
}

Tensor lmps_pool_tokens(const Tensor& x, const std::vector<int>& ratios) {
  require_map(x, "lmps_pool_tokens");
  if (ratios.empty()) throw UsageError("lmps_pool_tokens: no ratios");
  std::vector<Tensor> parts;
  for (int r : ratios) {
    if (r < 1) throw UsageError("lmps_pool_tokens: ratio must be >= 1");
    parts.push_back(img2seq(adaptive_avg_pool2d(x, ceil_div(x.dim(2), r), ceil_div(x.dim(3), r))));
  }
  return parts.size() == 1 ? parts[0] : concat(parts, 1);
}

PoolingAttention::PoolingAttention(Initializer& init, const std::string& name, int channels,
                                   int heads, std::vector<int> ratios, bool multi_pool,
                                   int sr_ratio)
    : channels_(channels),
      heads_(heads),
      ratios_(std::move(ratios)),
      multi_pool_(multi_pool),
      sr_ratio_(sr_ratio) {
  if (heads < 1 || channels % heads != 0) {
    throw ConfigError(name + ": " + std::to_string(channels) + " channels not divisible by " +
                      std::to_string(heads) + " heads");
  }
  q_ = Linear(init, name + ".q", channels, channels);
  k_ = Linear(init, name + ".k", channels, channels);
  v_ = Linear(init, name + ".v", channels, channels);
  proj_ = Linear(init, name + ".proj", channels, channels);
  if (!multi_pool_ && sr_ratio_ > 1) {
    sr_ = Conv2d(init, name + ".sr", channels, channels, sr_ratio_, sr_ratio_, 0);
    sr_norm_ = LayerNorm(init, name + ".sr_norm", channels);
  }
}

Tensor PoolingAttention::reduced_tokens(const Tensor& tokens, std::int64_t h,
                                        std::int64_t w) const {
  if (multi_pool_) return lmps_pool_tokens(seq2img(tokens, h, w), ratios_);
  if (sr_ratio_ == 1) return tokens;
  return sr_norm_(img2seq(sr_(seq2img(tokens, h, w))));
}

Tensor PoolingAttention::split_heads(const Tensor& t) const {
  const std::int64_t n = t.dim(0), len = t.dim(1);
  return permute(reshape(t, {n, len, heads_, channels_ / heads_}), {0, 2, 1, 3});
}

Tensor PoolingAttention::scores(const Tensor& tokens, std::int64_t h, std::int64_t w,
                                Tensor* values) const {
  if (tokens.rank() != 3 || tokens.dim(1) != h * w || tokens.dim(2) != channels_) {
    throw DimensionError("attention: tokens " + shape_str(tokens.shape()) + " do not match " +
                         std::to_string(h) + "x" + std::to_string(w) + "x" +
                         std::to_string(channels_));
  }
  Tensor reduced = reduced_tokens(tokens, h, w);
  Tensor q = split_heads(q_(tokens));
  Tensor k = split_heads(k_(reduced));
  if (values) *values = split_heads(v_(reduced));
  const double d = static_cast<double>(channels_ / heads_);
  return softmax(scale(matmul(q, k, true), 1.0 / std::sqrt(d)), -1);
}

Tensor PoolingAttention::attention_weights(const Tensor& tokens, std::int64_t h,
                                           std::int64_t w) const {
  return scores(tokens, h, w, nullptr);
}

Tensor PoolingAttention::forward(const Tensor& tokens, std::int64_t h, std::int64_t w) const {
  Tensor v;
  Tensor attn = scores(tokens, h, w, &v);
  Tensor out = permute(matmul(attn, v), {0, 2, 1, 3});
  return proj_(reshape(out, {tokens.dim(0), tokens.dim(1), channels_}));
}

Tensor PoolingAttention::forward_map(const Tensor& x) const {
  require_map(x, "attention");
  return seq2img(forward(img2seq(x), x.dim(2), x.dim(3)), x.dim(2), x.dim(3));
}

// ---- CFFN --------------------------------------------------------------------

ConvFeedForward::ConvFeedForward(Initializer& init, const std::string& name, int channels,
                                 int expansion, bool use_conv)
    : use_conv_(use_conv) {
  const int hidden = channels * expansion;
  fc1_ = Linear(init, name + ".fc1", channels, hidden);
  if (use_conv_) dw_ = Conv2d(init, name + ".dwconv", hidden, hidden, 3, 1, 1, hidden);
  fc2_ = Linear(init, name + ".fc2", hidden, channels);
}

Tensor ConvFeedForward::hidden(const Tensor& tokens, std::int64_t h, std::int64_t w) const {
  Tensor a = gelu(fc1_(tokens));
  if (!use_conv_) return a;
  return img2seq(gelu(dw_(seq2img(a, h, w))));
}

Tensor ConvFeedForward::forward(const Tensor& tokens, std::int64_t h, std::int64_t w) const {
  return fc2_(hidden(tokens, h, w));
}

Tensor ConvFeedForward::forward_map(const Tensor& x) const {
  require_map(x, "cffn");
  return seq2img(forward(img2seq(x), x.dim(2), x.dim(3)), x.dim(2), x.dim(3));
}

Tensor ConvFeedForward::hidden_map(const Tensor& x) const {
  require_map(x, "cffn");
  return seq2img(hidden(img2seq(x), x.dim(2), x.dim(3)), x.dim(2), x.dim(3));
}

// ---- DefT block --------------------------------------------------------------

DefTBlock::DefTBlock(Initializer& init, const std::string& name, const ModelConfig& cfg,
                     int stage)
    : use_lpb_(cfg.toggles.use_lpb) {
  const int c = cfg.stage_channels(stage);
  if (use_lpb_) lpb_ = PositionBlock(init, name + ".lpb", c);
  norm1_ = LayerNorm(init, name + ".norm1", c);
  attn_ = PoolingAttention(init, name + ".attn", c, cfg.heads[stage], cfg.pool_ratios[stage],
                           cfg.toggles.use_lmps, cfg.sr_ratios[stage]);
  norm2_ = LayerNorm(init, name + ".norm2", c);
  ffn_ = ConvFeedForward(init, name + ".ffn", c, cfg.expansion, cfg.toggles.use_cffn);
}

Tensor DefTBlock::forward(const Tensor& x) const {
  require_map(x, "deft_block");
  const std::int64_t h = x.dim(2), w = x.dim(3);
  Tensor t = img2seq(use_lpb_ ? lpb_.forward(x) : x);
  t = t + attn_.forward(norm1_(t), h, w);
  t = t + ffn_.forward(norm2_(t), h, w);
  return seq2img(t, h, w);
}

// ---- decoder -----------------------------------------------------------------

DecoderMerge::DecoderMerge(Initializer& init, const std::string& name, int cx, int cy)
    : conv_(init, name, cx + cy, cy, 3, 1, 1) {}

Tensor DecoderMerge::forward(const Tensor& x, const Tensor& y) const {
  require_map(x, "decoder_merge");
  require_map(y, "decoder_merge");
  Tensor up = bilinear_upsample(x, 2);
  if (up.dim(0) != y.dim(0) || up.dim(2) != y.dim(2) || up.dim(3) != y.dim(3)) {
    throw DimensionError("decoder_merge: upsampled " + shape_str(up.shape()) +
                         " does not align with skip " + shape_str(y.shape()));
  }
  return relu(conv_(concat({up, y}, 1)));
}

}  // namespace deft
