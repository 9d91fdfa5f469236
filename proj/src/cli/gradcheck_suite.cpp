#include "deft/cli/gradcheck_suite.hpp"

#include <functional>

#include "deft/core/errors.hpp"
#include "deft/core/ops.hpp"
#include "deft/core/rng.hpp"
#include "deft/model/blocks.hpp"
#include "deft/model/deft_model.hpp"

namespace deft {

namespace {

constexpr DType f64 = DType::kFloat64;

Tensor random(Rng& rng, Shape shape, double lo = -1.0, double hi = 1.0) {
  std::vector<double> v(static_cast<std::size_t>(numel_of(shape)));
  for (auto& x : v) x = rng.uniform(lo, hi);
  return Tensor::from_values(std::move(shape), v, f64);
}

// Values kept at least `gap` away from zero, for ops with a kink there.
Tensor random_away_from_zero(Rng& rng, Shape shape, double gap = 0.05) {
  std::vector<double> v(static_cast<std::size_t>(numel_of(shape)));
  for (auto& x : v) {
    x = rng.uniform(gap, 1.0);
    if (rng.uniform() < 0.5) x = -x;
  }
  return Tensor::from_values(std::move(shape), v, f64);
}

struct OpCase {
  std::string name;
  std::function<std::vector<Tensor>(Rng&)> inputs;
  GradCheckFn fn;
};

std::vector<OpCase> op_cases() {
  std::vector<OpCase> c;
  auto conv_case = [&](std::string name, Shape xs, Shape ws, Conv2dOptions o) {
    c.push_back({std::move(name),
                 [=](Rng& r) { return std::vector<Tensor>{random(r, xs), random(r, ws), random(r, {ws[0]})}; },
                 [=](const std::vector<Tensor>& in) { return conv2d(in[0], in[1], in[2], o); }});
  };
  conv_case("conv2d", {2, 3, 6, 5}, {4, 3, 3, 3}, {1, 1, 1});
  conv_case("conv2d_strided", {1, 2, 7, 7}, {3, 2, 3, 3}, {2, 1, 1});
  conv_case("conv2d_depthwise", {2, 4, 5, 5}, {4, 1, 3, 3}, {1, 1, 4});
  conv_case("conv2d_grouped", {1, 4, 5, 4}, {6, 2, 3, 3}, {1, 1, 2});
  conv_case("conv2d_pointwise", {2, 3, 4, 4}, {5, 3, 1, 1}, {1, 0, 1});
  conv_case("conv2d_patchify", {1, 2, 8, 8}, {3, 2, 4, 4}, {4, 0, 1});
  c.push_back({"adaptive_avg_pool2d", [](Rng& r) { return std::vector<Tensor>{random(r, {2, 2, 7, 6})}; },
               [](const std::vector<Tensor>& in) { return adaptive_avg_pool2d(in[0], 4, 3); }});
  c.push_back({"resize_bilinear", [](Rng& r) { return std::vector<Tensor>{random(r, {1, 2, 5, 4})}; },
               [](const std::vector<Tensor>& in) { return resize_bilinear(in[0], 7, 9); }});
  c.push_back({"bilinear_upsample", [](Rng& r) { return std::vector<Tensor>{random(r, {2, 2, 3, 4})}; },
               [](const std::vector<Tensor>& in) { return bilinear_upsample(in[0], 2); }});
  c.push_back({"linear",
               [](Rng& r) { return std::vector<Tensor>{random(r, {2, 3, 4}), random(r, {4, 5}), random(r, {5})}; },
               [](const std::vector<Tensor>& in) { return linear(in[0], in[1], in[2]); }});
  c.push_back({"matmul",
               [](Rng& r) { return std::vector<Tensor>{random(r, {2, 3, 4}), random(r, {2, 4, 5})}; },
               [](const std::vector<Tensor>& in) { return matmul(in[0], in[1]); }});
  c.push_back({"matmul_transposed",
               [](Rng& r) { return std::vector<Tensor>{random(r, {2, 2, 3, 4}), random(r, {2, 2, 5, 4})}; },
               [](const std::vector<Tensor>& in) { return matmul(in[0], in[1], true); }});
  c.push_back({"softmax", [](Rng& r) { return std::vector<Tensor>{random(r, {3, 4, 5}, -2, 2)}; },
               [](const std::vector<Tensor>& in) { return softmax(in[0], -1); }});
  c.push_back({"softmax_axis1", [](Rng& r) { return std::vector<Tensor>{random(r, {3, 4, 5}, -2, 2)}; },
               [](const std::vector<Tensor>& in) { return softmax(in[0], 1); }});
  c.push_back({"layer_norm",
               [](Rng& r) { return std::vector<Tensor>{random(r, {2, 3, 6}), random(r, {6}), random(r, {6})}; },
               [](const std::vector<Tensor>& in) { return layer_norm(in[0], in[1], in[2]); }});
  c.push_back({"batch_norm2d_train",
               [](Rng& r) { return std::vector<Tensor>{random(r, {2, 3, 3, 2}), random(r, {3}), random(r, {3})}; },
               [](const std::vector<Tensor>& in) {
                 Tensor rm = Tensor::zeros({3}, f64), rv = Tensor::full({3}, 1.0, f64);
                 return batch_norm2d(in[0], in[1], in[2], rm, rv, true);
               }});
  c.push_back({"batch_norm2d_eval",
               [](Rng& r) { return std::vector<Tensor>{random(r, {2, 3, 3, 2}), random(r, {3}), random(r, {3})}; },
               [](const std::vector<Tensor>& in) {
                 Tensor rm = Tensor::full({3}, 0.2, f64), rv = Tensor::full({3}, 1.5, f64);
                 return batch_norm2d(in[0], in[1], in[2], rm, rv, false);
               }});
  c.push_back({"relu", [](Rng& r) { return std::vector<Tensor>{random_away_from_zero(r, {3, 7})}; },
               [](const std::vector<Tensor>& in) { return relu(in[0]); }});
  c.push_back({"gelu", [](Rng& r) { return std::vector<Tensor>{random(r, {3, 7}, -3, 3)}; },
               [](const std::vector<Tensor>& in) { return gelu(in[0]); }});
  c.push_back({"sigmoid", [](Rng& r) { return std::vector<Tensor>{random(r, {3, 7}, -4, 4)}; },
               [](const std::vector<Tensor>& in) { return sigmoid(in[0]); }});
  c.push_back({"softplus", [](Rng& r) { return std::vector<Tensor>{random(r, {3, 7}, -6, 6)}; },
               [](const std::vector<Tensor>& in) { return softplus(in[0]); }});
  c.push_back({"separable_blur", [](Rng& r) { return std::vector<Tensor>{random(r, {2, 2, 6, 7})}; },
               [](const std::vector<Tensor>& in) { return separable_blur(in[0], {0.2, 0.5, 1.0, 0.5, 0.2}); }});
  c.push_back({"reshape", [](Rng& r) { return std::vector<Tensor>{random(r, {2, 3, 4})}; },
               [](const std::vector<Tensor>& in) { return reshape(in[0], {4, 6}); }});
  c.push_back({"permute", [](Rng& r) { return std::vector<Tensor>{random(r, {2, 3, 4})}; },
               [](const std::vector<Tensor>& in) { return permute(in[0], {2, 0, 1}); }});
  c.push_back({"concat",
               [](Rng& r) { return std::vector<Tensor>{random(r, {2, 3, 4}), random(r, {2, 5, 4})}; },
               [](const std::vector<Tensor>& in) { return concat({in[0], in[1]}, 1); }});
  c.push_back({"img2seq", [](Rng& r) { return std::vector<Tensor>{random(r, {2, 3, 4, 5})}; },
               [](const std::vector<Tensor>& in) { return img2seq(in[0]); }});
  c.push_back({"seq2img", [](Rng& r) { return std::vector<Tensor>{random(r, {2, 20, 3})}; },
               [](const std::vector<Tensor>& in) { return seq2img(in[0], 4, 5); }});
  auto binary = [&](std::string name, std::function<Tensor(const Tensor&, const Tensor&)> f, bool positive_b) {
    c.push_back({std::move(name),
                 [=](Rng& r) {
                   return std::vector<Tensor>{random(r, {3, 4}), positive_b ? random(r, {3, 4}, 0.5, 2.0) : random(r, {3, 4})};
                 },
                 [=](const std::vector<Tensor>& in) { return f(in[0], in[1]); }});
  };
  binary("add", [](const Tensor& a, const Tensor& b) { return add(a, b); }, false);
  binary("sub", [](const Tensor& a, const Tensor& b) { return sub(a, b); }, false);
  binary("mul", [](const Tensor& a, const Tensor& b) { return mul(a, b); }, false);
  binary("div", [](const Tensor& a, const Tensor& b) { return div(a, b); }, true);
  c.push_back({"scale", [](Rng& r) { return std::vector<Tensor>{random(r, {3, 4})}; },
               [](const std::vector<Tensor>& in) { return scale(in[0], -1.7); }});
  c.push_back({"add_scalar", [](Rng& r) { return std::vector<Tensor>{random(r, {3, 4})}; },
               [](const std::vector<Tensor>& in) { return add_scalar(in[0], 0.3); }});
  c.push_back({"square", [](Rng& r) { return std::vector<Tensor>{random(r, {3, 4})}; },
               [](const std::vector<Tensor>& in) { return square(in[0]); }});
  c.push_back({"log", [](Rng& r) { return std::vector<Tensor>{random(r, {3, 4}, 0.2, 3.0)}; },
               [](const std::vector<Tensor>& in) { return log(in[0]); }});
  c.push_back({"clamp", [](Rng& r) { return std::vector<Tensor>{random_away_from_zero(r, {4, 5})}; },
               [](const std::vector<Tensor>& in) { return clamp(in[0], -0.5 + 0.025, 0.5 + 0.025); }});
  c.push_back({"sum", [](Rng& r) { return std::vector<Tensor>{random(r, {3, 4})}; },
               [](const std::vector<Tensor>& in) { return sum(in[0]); }});
  c.push_back({"mean", [](Rng& r) { return std::vector<Tensor>{random(r, {3, 4})}; },
               [](const std::vector<Tensor>& in) { return mean(in[0]); }});
  c.push_back({"sum_axis", [](Rng& r) { return std::vector<Tensor>{random(r, {3, 4, 2})}; },
               [](const std::vector<Tensor>& in) { return sum(in[0], 1); }});
  return c;
}

// Block cases own their module; inputs are the activation plus every parameter.
struct BlockCase {
  std::string name;
  std::function<GradCheckResult(Rng&, const GradCheckOptions&)> run;
};

// Default init is tiny for projections (std 0.02), which would make most
// gradients ~0 and the check toothless.
void randomize(const ParamStore& store, Rng& r, double amplitude) {
  for (const auto& p : store.params()) {
    Tensor t = p.tensor;
    for (auto& v : t.mutable_data<double>()) v = r.uniform(-amplitude, amplitude);
  }
}

GradCheckResult check_module(const ParamStore& store, Tensor x,
                             const std::function<Tensor(const Tensor&)>& fwd,
                             const GradCheckOptions& opts) {
  Rng r(static_cast<std::uint64_t>(store.param_count()) * 7919u + 1);
  randomize(store, r, 1.0);
  std::vector<Tensor> inputs{std::move(x)};
  for (const auto& p : store.params()) inputs.push_back(p.tensor);
  return grad_check([&](const std::vector<Tensor>& in) { return fwd(in[0]); }, inputs, opts);
}

ModelConfig block_config() {
  ModelConfig cfg = tiny_model_config();
  cfg.base_channels = 4;
  cfg.heads = {2, 2, 2, 2};
  cfg.pool_ratios = {std::vector<int>{1, 2, 3}, std::vector<int>{1, 2}, std::vector<int>{1, 2},
                     std::vector<int>{1}};
  cfg.sr_ratios = {2, 2, 1, 1};
  return cfg;
}

std::vector<BlockCase> block_cases() {
  std::vector<BlockCase> c;
  c.push_back({"stem", [](Rng& r, const GradCheckOptions& o) {
                 ParamStore s;
                 Initializer init(s, r.next_u64(), f64);
                 ModelConfig cfg = block_config();
                 StemBlock stem(init, cfg);
                 return check_module(s, random(r, {2, 3, 6, 6}),
                                     [&](const Tensor& x) { return stem.forward(x, true); }, o);
               }});
  c.push_back({"stem_patchify", [](Rng& r, const GradCheckOptions& o) {
                 ParamStore s;
                 Initializer init(s, r.next_u64(), f64);
                 ModelConfig cfg = block_config();
                 cfg.toggles.use_csb = false;
                 StemBlock stem(init, cfg);
                 return check_module(s, random(r, {1, 3, 8, 8}),
                                     [&](const Tensor& x) { return stem.forward(x, true); }, o);
               }});
  c.push_back({"patch_aggregate", [](Rng& r, const GradCheckOptions& o) {
                 ParamStore s;
                 Initializer init(s, r.next_u64(), f64);
                 PatchAggregation pa(init, "pa", 3, 4, true);
                 return check_module(s, random(r, {1, 3, 5, 6}),
                                     [&](const Tensor& x) { return pa.forward(x); }, o);
               }});
  c.push_back({"lpb", [](Rng& r, const GradCheckOptions& o) {
                 ParamStore s;
                 Initializer init(s, r.next_u64(), f64);
                 PositionBlock lpb(init, "lpb", 3);
                 return check_module(s, random(r, {2, 3, 4, 5}),
                                     [&](const Tensor& x) { return lpb.forward(x); }, o);
               }});
  c.push_back({"lmps_pool_tokens", [](Rng& r, const GradCheckOptions& o) {
                 return grad_check(
                     [](const std::vector<Tensor>& in) { return lmps_pool_tokens(in[0], {1, 2, 3}); },
                     {random(r, {1, 2, 5, 7})}, o);
               }});
  c.push_back({"lmps_attention", [](Rng& r, const GradCheckOptions& o) {
                 ParamStore s;
                 Initializer init(s, r.next_u64(), f64);
                 PoolingAttention attn(init, "attn", 4, 2, {1, 2, 3}, true, 1);
                 return check_module(s, random(r, {2, 4, 5, 4}),
                                     [&](const Tensor& x) { return attn.forward_map(x); }, o);
               }});
  c.push_back({"sra_attention", [](Rng& r, const GradCheckOptions& o) {
                 ParamStore s;
                 Initializer init(s, r.next_u64(), f64);
                 PoolingAttention attn(init, "attn", 4, 2, {}, false, 2);
                 return check_module(s, random(r, {1, 4, 4, 6}),
                                     [&](const Tensor& x) { return attn.forward_map(x); }, o);
               }});
  for (bool conv : {true, false}) {
    c.push_back({conv ? "cffn" : "ffn", [conv](Rng& r, const GradCheckOptions& o) {
                   ParamStore s;
                   Initializer init(s, r.next_u64(), f64);
                   ConvFeedForward ffn(init, "ffn", 3, 2, conv);
                   return check_module(s, random(r, {2, 3, 4, 3}),
                                       [&](const Tensor& x) { return ffn.forward_map(x); }, o);
                 }});
  }
  c.push_back({"deft_block", [](Rng& r, const GradCheckOptions& o) {
                 ParamStore s;
                 Initializer init(s, r.next_u64(), f64);
                 DefTBlock block(init, "blk", block_config(), 0);
                 return check_module(s, random(r, {2, 4, 5, 5}),
                                     [&](const Tensor& x) { return block.forward(x); }, o);
               }});
  c.push_back({"decoder_merge", [](Rng& r, const GradCheckOptions& o) {
                 ParamStore s;
                 Initializer init(s, r.next_u64(), f64);
                 DecoderMerge merge(init, "m", 4, 2);
                 randomize(s, r, 1.0);
                 Tensor y = random(r, {1, 2, 6, 4});
                 std::vector<Tensor> inputs{random(r, {1, 4, 3, 2}), y};
                 for (const auto& p : s.params()) inputs.push_back(p.tensor);
                 return grad_check(
                     [&](const std::vector<Tensor>& in) { return merge.forward(in[0], in[1]); },
                     inputs, o);
               }});
  return c;
}

GradCheckResult model_check(Rng& r, const GradCheckOptions& opts) {
  DefTModel model(tiny_model_config(), r.next_u64(), f64);
  model.set_training(true);
  randomize(model.store(), r, 0.3);
  Tensor x = random(r, {2, 3, 32, 32}, 0.0, 1.0);
  std::vector<Tensor> inputs;
  for (const auto& p : model.store().params()) inputs.push_back(p.tensor);
  auto fn = [&](const std::vector<Tensor>&) {
    ModelOutput out = model.forward(x);
    std::vector<Tensor> heads{out.pred};
    for (const auto& s : out.side_outputs) heads.push_back(s);
    return concat(heads, 1);
  };
  return grad_check(fn, inputs, opts);
}

}  // namespace

std::vector<std::string> gradcheck_op_names() {
  std::vector<std::string> names;
  for (const auto& c : op_cases()) names.push_back(c.name);
  return names;
}

std::vector<GradCheckCase> run_gradcheck_suite(const std::string& scope, std::uint64_t seed) {
  if (scope != "op" && scope != "block" && scope != "model" && scope != "all") {
    throw UsageError("gradcheck scope must be op, block, model or all; got '" + scope + "'");
  }
  std::vector<GradCheckCase> out;
  Rng rng(seed);
  GradCheckOptions opts;
  opts.seed = seed;
  if (scope == "op" || scope == "all") {
    opts.tolerance = 1e-5;
    for (const auto& c : op_cases()) {
      out.push_back({"op", c.name, opts.tolerance, grad_check(c.fn, c.inputs(rng), opts)});
    }
  }
  if (scope == "block" || scope == "all") {
    opts.tolerance = 1e-4;
    for (const auto& c : block_cases()) {
      out.push_back({"block", c.name, opts.tolerance, c.run(rng, opts)});
    }
  }
  if (scope == "model" || scope == "all") {
    opts.tolerance = 1e-3;
    opts.max_elements_per_input = 3;
    out.push_back({"model", "deft_tiny", opts.tolerance, model_check(rng, opts)});
  }
  return out;
}

}  // namespace deft
