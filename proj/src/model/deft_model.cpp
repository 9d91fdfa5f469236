#include "deft/model/deft_model.hpp"

#include "deft/core/autograd.hpp"
#include "deft/core/errors.hpp"

namespace deft {

DefTModel::DefTModel(ModelConfig cfg, std::uint64_t seed, DType dtype)
    : cfg_(std::move(cfg)), dtype_(dtype) {
  cfg_.validate();
  Initializer init(store_, seed, dtype);
  stem_ = StemBlock(init, cfg_);
  for (int s = 0; s < 4; ++s) {
    const std::string name = "stage" + std::to_string(s + 1);
    Stage& st = stages_[s];
    const int out = cfg_.stage_channels(s);
    // Stage 1 keeps C channels; the patch stem already embeds at stride 4.
    st.has_embed = s > 0 || cfg_.toggles.use_csb;
    if (st.has_embed) {
      const int in = s == 0 ? cfg_.base_channels : cfg_.stage_channels(s - 1);
      st.embed = PatchAggregation(init, name + ".embed", in, out, cfg_.toggles.use_pab);
    }
    for (int b = 0; b < cfg_.depths[s]; ++b) {
      st.blocks.emplace_back(init, name + ".block" + std::to_string(b), cfg_, s);
    }
  }
  // merge i fuses the running decoder feature with skip F(4 - i).
  const int skip_channels[4] = {cfg_.stage_channels(2), cfg_.stage_channels(1),
                                cfg_.stage_channels(0), cfg_.base_channels};
  int cx = cfg_.stage_channels(3);
  for (int i = 0; i < 4; ++i) {
    merges_[i] = DecoderMerge(init, "decoder.merge" + std::to_string(i + 1), cx, skip_channels[i]);
    cx = skip_channels[i];
  }
  final_head_ = Conv2d::head(init, "head.final", cfg_.base_channels);
  for (int i = 0; i < 4; ++i) {
    side_heads_[i] = Conv2d::head(init, "head.side" + std::to_string(i + 1), skip_channels[i]);
  }
}

PyramidFeatures DefTModel::encode(const Tensor& x) {
  if (x.rank() != 4 || x.dim(1) != cfg_.in_channels) {
    throw DimensionError("model: expected [N, " + std::to_string(cfg_.in_channels) +
                         ", H, W] input, got " + shape_str(x.shape()));
  }
  if (x.dim(2) % 32 != 0 || x.dim(3) % 32 != 0) {
    throw DimensionError("model: input spatial dims must be divisible by 32, got " +
                         shape_str(x.shape()));
  }
  if (x.dtype() != dtype_) throw DimensionError("model: input dtype does not match parameters");
  PyramidFeatures out;
  Tensor h;
  if (stem_.is_conv_stem()) {
    out.f[0] = stem_.forward(x, training_);
    h = out.f[0];
  } else {
    h = stem_.patchify(x);
    out.f[0] = bilinear_upsample(h, 2);
  }
  for (int s = 0; s < 4; ++s) {
    if (stages_[s].has_embed) h = stages_[s].embed.forward(h);
    for (const auto& block : stages_[s].blocks) h = block.forward(h);
    out.f[s + 1] = h;
  }
  return out;
}

ModelOutput DefTModel::forward(const Tensor& x) {
  PyramidFeatures feats = encode(x);
  ModelOutput out;
  Tensor d = feats.f[4];
  for (int i = 0; i < 4; ++i) {
    d = merges_[i].forward(d, feats.f[3 - i]);
    const int factor = static_cast<int>(x.dim(2) / d.dim(2));
    out.side_logits[i] = bilinear_upsample(side_heads_[i](d), factor);
    out.side_outputs[i] = sigmoid(out.side_logits[i]);
  }
  out.logits = bilinear_upsample(final_head_(d), 2);
  out.pred = sigmoid(out.logits);
  return out;
}

std::vector<std::pair<std::string, std::int64_t>> DefTModel::param_breakdown() const {
  std::vector<std::pair<std::string, std::int64_t>> groups;
  for (const auto& p : store_.params()) {
    const std::string top = p.name.substr(0, p.name.find('.'));
    if (groups.empty() || groups.back().first != top) groups.emplace_back(top, 0);
    groups.back().second += p.tensor.numel();
  }
  return groups;
}

std::int64_t estimate_flops(DefTModel& model, int input_size) {
  const bool was_training = model.training();
  model.set_training(false);
  NoGradGuard no_grad;
  FlopCounter counter;
  model.forward(Tensor::zeros({1, model.config().in_channels, input_size, input_size},
                              model.dtype()));
  model.set_training(was_training);
  return counter.total();
}

}  // namespace deft
