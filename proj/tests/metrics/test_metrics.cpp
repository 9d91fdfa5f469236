#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "json.hpp"

#include "deft/core/errors.hpp"
#include "deft/metrics/evaluate.hpp"
#include "deft/metrics/metrics.hpp"
#include "support.hpp"

namespace deft {
namespace {

Tensor map2d(int h, int w, std::vector<double> v) { return Tensor::from_values({1, h, w}, v, DType::kFloat32); }

struct Naive {
  std::int64_t tp = 0, fp = 0, tn = 0, fn = 0;
  double abs_sum = 0;
  std::int64_t n = 0;
};

// per-pixel definitions, nothing shared with the library
Naive naive_counts(const std::vector<double>& p, const std::vector<double>& g, double t) {
  Naive r;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const int pred = p[i] >= t ? 1 : 0;
    const int gt = g[i] == 1.0 ? 1 : 0;
    r.tp += pred & gt;
    r.fp += pred & (1 - gt);
    r.tn += (1 - pred) & (1 - gt);
    r.fn += (1 - pred) & gt;
    r.abs_sum += std::abs(p[i] - g[i]);
    ++r.n;
  }
  return r;
}

TEST(Confusion, WorkedTwoByTwo) {
  const Tensor pred = map2d(2, 2, {0.9, 0.2, 0.6, 0.1});
  const Tensor gt = map2d(2, 2, {1, 0, 0, 0});
  const ConfusionCounts c = confusion(pred, gt, 0.5);
  EXPECT_EQ(c, (ConfusionCounts{1, 1, 2, 0}));
  const MetricsReport r = scalar_metrics(c, pred, gt);
  EXPECT_NEAR(r.fpr, 1.0 / 3.0, 1e-12);
  EXPECT_EQ(r.fnr, 0.0);
  EXPECT_EQ(r.acc, 0.75);
  EXPECT_NEAR(r.f1, 2.0 / 3.0, 1e-12);
  // float32 storage of the predictions limits this one
  EXPECT_NEAR(r.mae, 0.25, 1e-7);
}

TEST(Confusion, PerfectAndInverted) {
  const Tensor gt = map2d(2, 3, {1, 0, 1, 0, 0, 1});
  const ConfusionCounts same = confusion(gt, gt);
  EXPECT_EQ(same.fp, 0);
  EXPECT_EQ(same.fn, 0);
  const MetricsReport r = scalar_metrics(same, gt, gt);
  EXPECT_EQ(r.fpr, 0.0);
  EXPECT_EQ(r.fnr, 0.0);
  EXPECT_EQ(r.acc, 1.0);
  EXPECT_EQ(r.f1, 1.0);
  EXPECT_EQ(r.mae, 0.0);

  const Tensor inv = map2d(2, 3, {0, 1, 0, 1, 1, 0});
  const ConfusionCounts c = confusion(inv, gt);
  EXPECT_EQ(c.tp, 0);
  EXPECT_EQ(c.tn, 0);
  const MetricsReport w = scalar_metrics(c, inv, gt);
  EXPECT_EQ(w.acc, 0.0);
  EXPECT_EQ(w.f1, 0.0);
}

TEST(Confusion, ShapeMismatchIsDimensionError) {
  EXPECT_THROW(confusion(map2d(2, 2, {0, 0, 0, 0}), map2d(1, 4, {0, 0, 0, 0})), DimensionError);
}

TEST(Metrics, ZeroDenominatorConventions) {
  // all background, nothing predicted
  const ConfusionCounts empty{0, 0, 10, 0};
  EXPECT_EQ(false_positive_rate(empty), 0.0);
  EXPECT_EQ(false_negative_rate(empty), 0.0);
  EXPECT_EQ(f1_score(empty), 1.0);
  EXPECT_EQ(precision(empty), 1.0);
  EXPECT_EQ(recall(empty), 1.0);
  // all foreground
  const ConfusionCounts full{4, 0, 0, 0};
  EXPECT_EQ(false_positive_rate(full), 0.0);
}

TEST(Metrics, MatchNaiveLoopOnRandomInstances) {
  Rng rng(101);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> p(256), g(256);
    const double fg = rng.uniform(0.0, 0.6);
    for (int i = 0; i < 256; ++i) {
      g[i] = rng.uniform() < fg ? 1.0 : 0.0;
      // float32-representable so both sides see the same values
      p[i] = static_cast<float>(rng.uniform());
    }
    const double t = trial % 3 == 0 ? 0.5 : static_cast<float>(rng.uniform(0.05, 0.95));
    const Tensor pt = map2d(16, 16, p), gt = map2d(16, 16, g);
    const Naive n = naive_counts(p, g, t);
    const ConfusionCounts c = confusion(pt, gt, t);
    ASSERT_EQ(c, (ConfusionCounts{n.tp, n.fp, n.tn, n.fn}));
    ASSERT_EQ(c.total(), 256);
    const MetricsReport r = scalar_metrics(c, pt, gt);
    const double fpr = n.fp + n.tn ? double(n.fp) / double(n.fp + n.tn) : 0.0;
    const double fnr = n.fn + n.tp ? double(n.fn) / double(n.fn + n.tp) : 0.0;
    const double acc = double(n.tp + n.tn) / double(n.n);
    const double f1 = 2 * n.tp + n.fp + n.fn ? 2.0 * n.tp / double(2 * n.tp + n.fp + n.fn) : 1.0;
    EXPECT_NEAR(r.fpr, fpr, 1e-12);
    EXPECT_NEAR(r.fnr, fnr, 1e-12);
    EXPECT_NEAR(r.acc, acc, 1e-12);
    EXPECT_NEAR(r.f1, f1, 1e-12);
    EXPECT_NEAR(r.mae, n.abs_sum / n.n, 1e-12);
    for (double v : {r.fpr, r.fnr, r.acc, r.f1, r.mae}) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
  }
}

TEST(CurveSweep, ThreePixelToyMatchesBruteForce) {
  const Tensor pred = map2d(1, 3, {0.2, 0.5, 0.8});
  const Tensor gt = map2d(1, 3, {0, 1, 1});
  const int n = 11;
  const auto curve = curve_sweep({{pred, gt}}, n);
  ASSERT_EQ(curve.size(), 11u);
  for (int k = 0; k < n; ++k) {
    const double t = k / 10.0;
    const Naive c = naive_counts({static_cast<float>(0.2), 0.5, static_cast<float>(0.8)}, {0, 1, 1}, t);
    const double prec = c.tp + c.fp ? double(c.tp) / double(c.tp + c.fp) : 1.0;
    const double rec = double(c.tp) / 2.0;
    const double f = 2 * c.tp + c.fp + c.fn ? 2.0 * c.tp / double(2 * c.tp + c.fp + c.fn) : 1.0;
    EXPECT_DOUBLE_EQ(curve[k].threshold, t);
    EXPECT_DOUBLE_EQ(curve[k].precision, prec) << t;
    EXPECT_DOUBLE_EQ(curve[k].recall, rec) << t;
    EXPECT_DOUBLE_EQ(curve[k].f_measure, f) << t;
  }
}

TEST(CurveSweep, RandomPairsMatchPerThresholdConfusion) {
  Rng rng(7);
  std::vector<PredGtPair> pairs;
  for (int i = 0; i < 3; ++i) {
    pairs.emplace_back(test::random_tensor(rng, {1, 8, 8}, DType::kFloat32, 0, 1),
                       Tensor::from_values({1, 8, 8}, std::vector<double>(64, i % 2), DType::kFloat32));
  }
  // include exact grid values
  pairs[0].first.mutable_data<float>()[0] = 0.5f;
  pairs[0].first.mutable_data<float>()[1] = 1.0f;
  const int n = 256;
  const auto curve = curve_sweep(pairs, n);
  for (int k = 0; k < n; ++k) {
    ConfusionCounts c;
    for (const auto& [p, g] : pairs) c += confusion(p, g, curve[k].threshold);
    EXPECT_EQ(curve[k].precision, precision(c)) << k;
    EXPECT_EQ(curve[k].recall, recall(c)) << k;
  }
}

TEST(CurveSweep, PerfectPairAndMonotoneRecall) {
  const Tensor gt = map2d(2, 2, {1, 0, 0, 1});
  const auto curve = curve_sweep({{gt, gt}}, 256);
  for (std::size_t k = 1; k + 1 < curve.size(); ++k) {
    EXPECT_EQ(curve[k].precision, 1.0);
    EXPECT_EQ(curve[k].recall, 1.0);
  }
  Rng rng(3);
  const Tensor p = test::random_tensor(rng, {1, 16, 16}, DType::kFloat32, 0, 1);
  const Tensor g = Tensor::from_values({1, 16, 16}, test::random_tensor(rng, {256}, DType::kFloat64, 0, 1).to_vector(),
                                       DType::kFloat32);
  std::vector<double> gb = g.to_vector();
  for (auto& v : gb) v = v > 0.5 ? 1 : 0;
  const auto c2 = curve_sweep({{p, map2d(16, 16, gb)}}, 64);
  for (std::size_t k = 1; k < c2.size(); ++k) EXPECT_LE(c2[k].recall, c2[k - 1].recall);
}

TEST(CurveSweep, HalfThresholdReproducesScalarF1) {
  Rng rng(12);
  std::vector<PredGtPair> pairs;
  for (int i = 0; i < 4; ++i) {
    std::vector<double> g(100);
    for (auto& v : g) v = rng.uniform() < 0.3 ? 1 : 0;
    pairs.emplace_back(test::random_tensor(rng, {1, 10, 10}, DType::kFloat32, 0, 1), map2d(10, 10, g));
  }
  const auto curve = curve_sweep(pairs, 3);  // thresholds 0, 0.5, 1
  const MetricsReport r = evaluate_pairs(pairs, {.threshold = 0.5, .n_thresholds = 0});
  EXPECT_EQ(curve[1].threshold, 0.5);
  EXPECT_NEAR(curve[1].f_measure, r.f1, 1e-15);
}

TEST(CurveSweep, Errors) {
  EXPECT_THROW(curve_sweep({}, 256), UsageError);
  const Tensor g = map2d(1, 1, {1});
  EXPECT_THROW(curve_sweep({{g, g}}, 1), UsageError);
}

TEST(Evaluate, MicroAveragingAndDuplicationInvariance) {
  Rng rng(13);
  std::vector<PredGtPair> pairs;
  for (int i = 0; i < 3; ++i) {
    std::vector<double> g(64);
    for (auto& v : g) v = rng.uniform() < 0.2 * (i + 1) ? 1 : 0;
    pairs.emplace_back(test::random_tensor(rng, {1, 8, 8}, DType::kFloat32, 0, 1), map2d(8, 8, g));
  }
  const MetricsReport a = evaluate_pairs(pairs);
  ConfusionCounts pooled;
  for (const auto& [p, g] : pairs) pooled += confusion(p, g);
  EXPECT_EQ(a.counts, pooled);
  EXPECT_EQ(a.f1, f1_score(pooled));
  auto doubled = pairs;
  doubled.insert(doubled.end(), pairs.begin(), pairs.end());
  const MetricsReport b = evaluate_pairs(doubled);
  EXPECT_DOUBLE_EQ(b.f1, a.f1);
  EXPECT_DOUBLE_EQ(b.fpr, a.fpr);
  EXPECT_DOUBLE_EQ(b.fnr, a.fnr);
  EXPECT_DOUBLE_EQ(b.acc, a.acc);
  EXPECT_NEAR(b.mae, a.mae, 1e-15);
  EXPECT_THROW(evaluate_pairs({}), UsageError);
}

TEST(Evaluate, OnePerfectSample) {
  const Tensor g = map2d(4, 4, {0, 1, 1, 0, 0, 1, 1, 0, 0, 0, 0, 0, 1, 1, 1, 1});
  const MetricsReport r = evaluate_pairs({{g, g}});
  EXPECT_EQ(r.fpr, 0.0);
  EXPECT_EQ(r.fnr, 0.0);
  EXPECT_EQ(r.acc, 1.0);
  EXPECT_EQ(r.f1, 1.0);
  EXPECT_EQ(r.mae, 0.0);
}

TEST(Evaluate, ModelOnSyntheticSamples) {
  DefTModel model(tiny_model_config(), 1);
  std::vector<Sample> data;
  Rng rng(2);
  for (int i = 0; i < 2; ++i) {
    data.push_back({test::random_tensor(rng, {3, 40, 40}, DType::kFloat32, 0, 1),
                    Tensor::zeros({1, 40, 40}), "s" + std::to_string(i)});
  }
  const MetricsReport r = evaluate(model, data, {.threshold = 0.5, .n_thresholds = 16, .eval_size = 64});
  EXPECT_EQ(r.counts.total(), 2 * 64 * 64);
  EXPECT_EQ(r.curves.size(), 16u);
  EXPECT_FALSE(model.training());
  // threshold propagates
  const MetricsReport hi = evaluate(model, data, {.threshold = 1.0, .n_thresholds = 0, .eval_size = 64});
  EXPECT_EQ(hi.counts.fp, 0);
}

TEST(Report, JsonAndCsv) {
  const MetricsReport r = report_from_counts({1, 1, 2, 0}, 0.25);
  const auto j = nlohmann::json::parse(report_json(r));
  EXPECT_NEAR(j["fpr"].get<double>(), 1.0 / 3.0, 1e-15);
  EXPECT_EQ(j["counts"]["tn"].get<int>(), 2);
  const auto path = std::filesystem::temp_directory_path() / "deft_curves.csv";
  write_curves_csv(path, {{0.0, 0.5, 1.0, 0.6}, {1.0, 1.0, 0.0, 0.0}});
  std::ifstream is(path);
  std::string line;
  std::getline(is, line);
  EXPECT_EQ(line, "threshold,precision,recall,f_measure");
  std::getline(is, line);
  EXPECT_EQ(line, "0,0.5,1,0.6");
}

}  // namespace
}  // namespace deft
