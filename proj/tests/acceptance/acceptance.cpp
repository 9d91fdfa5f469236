// Acceptance checks, one PASS/FAIL line per criterion.
// Usage: acceptance [criterion numbers...]   (all when none given)

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "deft/cli/commands.hpp"
#include "deft/core/autograd.hpp"
#include "deft/core/ops.hpp"
#include "deft/core/rng.hpp"
#include "deft/data/synth.hpp"
#include "deft/metrics/evaluate.hpp"
#include "deft/model/checkpoint.hpp"
#include "deft/train/optim.hpp"
#include "deft/train/trainer.hpp"

using namespace deft;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), f, args...);
  return buf;
}

std::string shape_of(const Tensor& t) { return shape_str(t.shape()); }

fs::path scratch(const std::string& name) {
  auto d = fs::temp_directory_path() / ("deft_accept_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

// 1 ------------------------------------------------------------------------
Outcome shapes() {
  const auto t0 = std::chrono::steady_clock::now();
  ModelConfig cfg;
  DefTModel model(cfg, 0);
  NoGradGuard ng;
  const Tensor x = Tensor::zeros({1, 3, 224, 224});
  const auto feats = model.encode(x);
  const auto out = model.forward(x);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const std::int64_t C = cfg.base_channels;
  const Shape want[5] = {{1, C, 112, 112}, {1, C, 56, 56}, {1, 2 * C, 28, 28}, {1, 4 * C, 14, 14},
                         {1, 8 * C, 7, 7}};
  bool ok = secs < 60;
  std::string d;
  for (int i = 0; i < 5; ++i) {
    ok &= feats.f[i].shape() == want[i];
    d += "F" + std::to_string(i + 1) + "=" + shape_of(feats.f[i]) + " ";
  }
  ok &= out.pred.shape() == Shape{1, 1, 224, 224};
  d += "pred=" + shape_of(out.pred) + fmt(" in %.1fs", secs);
  return {ok, d};
}

// 2 ------------------------------------------------------------------------
Outcome gradients() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto ops = run_gradcheck_suite("op", 1);
  const auto model = run_gradcheck_suite("model", 1);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const auto names = gradcheck_op_names();
  double worst_op = 0;
  bool ok = ops.size() == names.size() && !model.empty();
  std::string failed;
  for (const auto& c : ops) {
    worst_op = std::max(worst_op, c.result.max_rel_error);
    if (!(c.result.max_rel_error < 1e-5)) failed += " " + c.name;
  }
  ok &= failed.empty();
  const ModelConfig tiny = tiny_model_config();
  ok &= tiny.base_channels == 8 && tiny.depths == std::array<int, 4>{1, 1, 1, 1} && tiny.input_size == 32;
  ok &= model[0].result.max_rel_error < 1e-3 && model[0].result.elements_checked > 0;
  ok &= secs < 600;
  return {ok, fmt("%zu ops, worst %.2e (< 1e-5)%s; model C=8 [1,1,1,1] 32x32 worst %.2e (< 1e-3); %.1fs",
                  ops.size(), worst_op, failed.empty() ? "" : (" FAILED:" + failed).c_str(),
                  model[0].result.max_rel_error, secs)};
}

// 3 ------------------------------------------------------------------------
// Dense attention straight from the definition.
std::vector<double> dense_attention(const std::vector<double>& tokens, int L, int c, int heads,
                                    const PoolingAttention& a) {
  auto lin = [&](const Linear& l, const std::vector<double>& x) {
    auto w = l.weight.to_vector(), b = l.bias.to_vector();
    std::vector<double> y(L * c);
    for (int t = 0; t < L; ++t)
      for (int o = 0; o < c; ++o) {
        double acc = b[o];
        for (int i = 0; i < c; ++i) acc += x[t * c + i] * w[i * c + o];
        y[t * c + o] = acc;
      }
    return y;
  };
  auto q = lin(a.q(), tokens), k = lin(a.k(), tokens), v = lin(a.v(), tokens);
  const int d = c / heads;
  std::vector<double> o(L * c, 0.0);
  for (int h = 0; h < heads; ++h)
    for (int i = 0; i < L; ++i) {
      std::vector<double> s(L);
      double mx = -1e300;
      for (int j = 0; j < L; ++j) {
        double dot = 0;
        for (int e = 0; e < d; ++e) dot += q[i * c + h * d + e] * k[j * c + h * d + e];
        s[j] = dot / std::sqrt(static_cast<double>(d));
        mx = std::max(mx, s[j]);
      }
      double z = 0;
      for (auto& x : s) z += (x = std::exp(x - mx));
      for (int j = 0; j < L; ++j)
        for (int e = 0; e < d; ++e) o[i * c + h * d + e] += s[j] / z * v[j * c + h * d + e];
    }
  return lin(a.proj(), o);
}

Outcome lmps_oracle() {
  ParamStore store;
  Initializer init(store, 3, DType::kFloat64);
  const int c = 16, heads = 4;
  PoolingAttention a(init, "lmps", c, heads, {1, 1, 1, 1}, true, 1);
  Rng rng(11);
  // wider weights than the init so the softmax is far from uniform
  for (const auto& p : store.params()) {
    Tensor t = p.tensor;
    for (auto& v : t.mutable_data<double>()) v = rng.uniform(-0.6, 0.6);
  }
  std::vector<double> xv(static_cast<std::size_t>(c) * 64);
  for (auto& v : xv) v = rng.uniform(-1, 1);
  const Tensor tokens = img2seq(Tensor::from_values({1, c, 8, 8}, xv, DType::kFloat64));
  const auto ref = dense_attention(tokens.to_vector(), 64, c, heads, a);
  const auto got = a.forward(tokens, 8, 8).to_vector();
  double worst = 0;
  for (std::size_t i = 0; i < ref.size(); ++i) worst = std::max(worst, std::abs(got[i] - ref[i]));
  return {worst < 1e-5, fmt("8x8 map, ratios {1,1,1,1}, %d heads: max |diff| %.2e (< 1e-5)", heads, worst)};
}

// 4 ------------------------------------------------------------------------
Outcome token_counts() {
  ModelConfig cfg;
  bool ok = true;
  std::string d;
  std::int64_t side = cfg.input_size / 4;
  for (int s = 0; s < 4; ++s, side /= 2) {
    std::int64_t law = 0;
    for (int i : cfg.pool_ratios[s]) law += ((side + i - 1) / i) * ((side + i - 1) / i);
    const std::int64_t counted = pooled_token_count(side, side, cfg.pool_ratios[s]);
    const std::int64_t built = lmps_pool_tokens(Tensor::zeros({1, 1, side, side}), cfg.pool_ratios[s]).dim(1);
    ok &= law == counted && law == built;
    d += fmt("stage%d %lldx%lld: %lld ", s + 1, (long long)side, (long long)side, (long long)built);
  }
  ok &= pooled_token_count(56, 56, cfg.pool_ratios[0]) == 59 && pooled_token_count(7, 7, cfg.pool_ratios[3]) == 78;
  return {ok, d + "(expect 59 and 78 at stages 1 and 4)"};
}

// 5 ------------------------------------------------------------------------
Outcome overfit() {
  const auto t0 = std::chrono::steady_clock::now();
  SynthSpec spec;
  spec.count = 8;
  spec.image_size = 224;
  const auto data = synth_generate(spec);
  ModelConfig mc;
  mc.base_channels = 16;
  mc.depths = {1, 1, 2, 1};
  DefTModel model(mc, 1);
  TrainConfig tc;
  tc.batch_size = 8;
  tc.epochs = 500;  // one batch per epoch
  tc.resize_to = 224;
  tc.crop_to = 224;
  tc.seed = 1;
  const auto log = train(model, data, tc).log;
  double first = 0, last = 0;
  for (int i = 0; i < 10; ++i) {
    first += log[i].total / 10;
    last += log[log.size() - 1 - i].total / 10;
  }
  EvalOptions eo;
  eo.eval_size = 224;
  eo.n_thresholds = 0;
  const MetricsReport r = evaluate(model, data, eo);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const bool ok = log.size() <= 500 && r.f1 >= 0.95 && first >= 10 * last;
  return {ok, fmt("%zu iterations: train F1 %.4f (>= 0.95), loss first-10 %.3f / last-10 %.3f = %.1fx (>= 10x); "
                  "%.0fs",
                  log.size(), r.f1, first, last, first / last, secs)};
}

// 6 ------------------------------------------------------------------------
Outcome metric_oracle() {
  auto t2 = [](std::vector<double> v) { return Tensor::from_values({1, 2, 2}, v, DType::kFloat64); };
  const Tensor p = t2({0.9, 0.2, 0.6, 0.1}), g = t2({1, 0, 0, 0});
  const auto w = scalar_metrics(confusion(p, g), p, g);
  bool ok = std::abs(w.fpr - 1.0 / 3) < 1e-12 && w.acc == 0.75 && std::abs(w.f1 - 2.0 / 3) < 1e-12 &&
            std::abs(w.mae - 0.25) < 1e-12;

  Rng rng(2024);
  int mismatches = 0;
  double worst = 0;
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> pv(256), gv(256);
    for (int i = 0; i < 256; ++i) {
      pv[i] = rng.uniform();
      gv[i] = rng.uniform() < 0.3 ? 1 : 0;
    }
    const double t = rng.uniform(0.05, 0.95);
    std::int64_t tp = 0, fp = 0, tn = 0, fn = 0;
    double abs = 0;
    for (int i = 0; i < 256; ++i) {
      const bool pp = pv[i] >= t, gg = gv[i] == 1;
      tp += pp && gg;
      fp += pp && !gg;
      tn += !pp && !gg;
      fn += !pp && gg;
      abs += std::abs(pv[i] - gv[i]);
    }
    const Tensor pt = Tensor::from_values({1, 16, 16}, pv, DType::kFloat64);
    const Tensor gt = Tensor::from_values({1, 16, 16}, gv, DType::kFloat64);
    const auto c = confusion(pt, gt, t);
    if (!(c == ConfusionCounts{tp, fp, tn, fn})) ++mismatches;
    const auto r = scalar_metrics(c, pt, gt);
    const double ref[5] = {fp + tn ? double(fp) / (fp + tn) : 0.0, fn + tp ? double(fn) / (fn + tp) : 0.0,
                           double(tp + tn) / 256, 2 * tp + fp + fn ? 2.0 * tp / (2 * tp + fp + fn) : 1.0,
                           abs / 256};
    const double got[5] = {r.fpr, r.fnr, r.acc, r.f1, r.mae};
    for (int k = 0; k < 5; ++k) worst = std::max(worst, std::abs(got[k] - ref[k]));
  }
  ok &= mismatches == 0 && worst <= 1e-12;
  return {ok, fmt("2x2 example fpr %.6f acc %.2f f1 %.6f mae %.2f; 100 random 16x16: %d count mismatches, "
                  "worst ratio diff %.1e",
                  w.fpr, w.acc, w.f1, w.mae, mismatches, worst)};
}

// 7 ------------------------------------------------------------------------
Outcome param_budget() {
  std::ostringstream out;
  const auto r = cmd_params(ModelConfig{}, 256, out, scratch("params"));
  std::string breakdown;
  for (const auto& [name, n] : r.breakdown) breakdown += name + "=" + std::to_string(n) + " ";
  const bool ok = r.total >= 27'500'000 && r.total <= 33'600'000;
  return {ok, fmt("%lld params (%.2fM, window [27.5M, 33.6M], reference 30.56M); ", (long long)r.total,
                  r.total / 1e6) +
                  breakdown + fmt("; FLOPs@256 %.2fG vs reference 8.72G (informational)", r.flops / 1e9)};
}

// 8 ------------------------------------------------------------------------
Outcome poly_schedule() {
  const std::int64_t max_iter = 1000;
  const double a = poly_lr(0.003, 0, max_iter, 0.9);
  const double b = poly_lr(0.003, max_iter, max_iter, 0.9);
  const double c = poly_lr(0.003, max_iter / 2, max_iter, 0.9);
  const double want = 0.003 * std::pow(0.5, 0.9);
  const bool ok = a == 0.003 && b == 0.0 && std::abs(c - want) < 1e-9;
  return {ok, fmt("lr(0)=%.6g lr(max)=%.6g lr(max/2)=%.10f vs %.10f", a, b, c, want)};
}

// 9 ------------------------------------------------------------------------
Outcome determinism() {
  SynthSpec spec;
  spec.count = 4;
  spec.image_size = 40;
  const auto data = synth_generate(spec);
  TrainConfig tc;
  tc.epochs = 10;
  tc.batch_size = 2;
  tc.resize_to = 36;
  tc.crop_to = 32;
  tc.base_lr = 0.01;
  tc.seed = 9;
  auto run = [&](DefTModel& m) { return train(m, data, tc).log; };
  DefTModel a(tiny_model_config(), 5), b(tiny_model_config(), 5);
  const auto la = run(a), lb = run(b);
  bool same_log = la.size() == lb.size() && !la.empty();
  for (std::size_t i = 0; same_log && i < la.size(); ++i) {
    same_log = la[i].total == lb[i].total && la[i].bce == lb[i].bce && la[i].ssim == lb[i].ssim &&
               la[i].iou == lb[i].iou && la[i].lr == lb[i].lr;
  }

  const auto dir = scratch("persist");
  save_checkpoint(dir / "a.ckpt", a);
  DefTModel back = load_checkpoint(dir / "a.ckpt");
  save_checkpoint(dir / "b.ckpt", back);
  auto bytes = [](const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(is), {});
  };
  bool same_tensors = back.config() == a.config();
  auto compare = [&](const std::vector<NamedTensor>& x, const std::vector<NamedTensor>& y) {
    if (x.size() != y.size()) return false;
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (x[i].name != y[i].name || x[i].tensor.to_vector() != y[i].tensor.to_vector()) return false;
    }
    return true;
  };
  same_tensors &= compare(a.store().params(), back.store().params());
  same_tensors &= compare(a.store().buffers(), back.store().buffers());
  const bool same_bytes = bytes(dir / "a.ckpt") == bytes(dir / "b.ckpt");

  SynthSpec es = spec;
  es.seed = 31;
  const auto eval_set = synth_generate(es);
  EvalOptions eo;
  eo.eval_size = 32;
  eo.n_thresholds = 32;
  const auto ma = evaluate(a, eval_set, eo), mb = evaluate(back, eval_set, eo);
  bool same_metrics = ma.counts == mb.counts && ma.mae == mb.mae && ma.f1 == mb.f1;
  for (std::size_t i = 0; same_metrics && i < ma.curves.size(); ++i) {
    same_metrics = ma.curves[i].precision == mb.curves[i].precision && ma.curves[i].recall == mb.curves[i].recall;
  }
  return {same_log && same_tensors && same_bytes && same_metrics,
          fmt("loss logs (%zu iters) identical: %s; checkpoint tensors bit-exact: %s; re-saved bytes identical: "
              "%s; eval metrics preserved: %s",
              la.size(), same_log ? "yes" : "no", same_tensors ? "yes" : "no", same_bytes ? "yes" : "no",
              same_metrics ? "yes" : "no")};
}

// 10 -----------------------------------------------------------------------
Outcome ablation_direction() {
  const auto t0 = std::chrono::steady_clock::now();
  RunConfig cfg;
  cfg.model.base_channels = 16;
  cfg.model.depths = {1, 1, 2, 1};
  cfg.model.input_size = 64;
  cfg.data.synth.count = 16;
  cfg.data.synth.image_size = 64;
  cfg.data.eval_synth.count = 16;
  cfg.data.eval_synth.image_size = 64;
  cfg.train.epochs = 75;
  cfg.train.batch_size = 8;
  cfg.train.resize_to = 72;
  cfg.train.crop_to = 64;
  cfg.train.seed = 3;
  cfg.eval.eval_size = 64;
  cfg.eval.n_thresholds = 0;
  cfg.output_dir = scratch("ablate").string();
  const auto rows = cmd_ablate(cfg);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::string d;
  for (const auto& r : rows) d += fmt("%s mae %.4f; ", r.name.c_str(), r.report.mae);
  const bool ok = rows.size() == 6 && rows.front().name == "Baseline" && rows.back().report.mae <= rows.front().report.mae;
  return {ok, d + fmt("full <= baseline required; %.0fs", secs)};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"shape conformance", shapes},
      {"gradient correctness", gradients},
      {"LMPS dense-attention equivalence", lmps_oracle},
      {"pooled token-count law", token_counts},
      {"overfit sanity", overfit},
      {"metric oracle equivalence", metric_oracle},
      {"parameter budget", param_budget},
      {"poly learning-rate schedule", poly_schedule},
      {"determinism and persistence", determinism},
      {"ablation direction", ablation_direction},
  };
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));

  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!only.empty() && !only.count(id)) continue;
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    failures += !o.pass;
    std::printf("criterion %2d %s: %s | %s\n", id, o.pass ? "PASS" : "FAIL", criteria[i].first.c_str(),
                o.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
