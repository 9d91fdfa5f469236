#include "deft/metrics/metrics.hpp"

#include <cmath>
#include <fstream>

#include "json.hpp"

#include "deft/core/errors.hpp"
#include "deft/core/kv_text.hpp"

namespace deft {

namespace {

void check_pair(const Tensor& pred, const Tensor& gt, const char* what) {
  if (pred.shape() != gt.shape()) {
    throw DimensionError(std::string(what) + ": prediction " + shape_str(pred.shape()) + " vs ground truth " +
                         shape_str(gt.shape()));
  }
}

// Largest k in [0, n-1] with k / (n - 1) <= p, or -1 when p < 0.
int threshold_bin(double p, int n) {
  const double steps = n - 1;
  if (p < 0) return -1;
  int k = static_cast<int>(std::min(steps, std::floor(p * steps)));
  while (k + 1 <= n - 1 && (k + 1) / steps <= p) ++k;
  while (k >= 0 && k / steps > p) --k;
  return k;
}

}  // namespace

ConfusionCounts& ConfusionCounts::operator+=(const ConfusionCounts& o) {
  tp += o.tp;
  fp += o.fp;
  tn += o.tn;
  fn += o.fn;
  return *this;
}

ConfusionCounts confusion(const Tensor& pred, const Tensor& gt, double threshold) {
  check_pair(pred, gt, "confusion");
  const auto p = pred.to_vector(), g = gt.to_vector();
  ConfusionCounts c;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const bool pos = p[i] >= threshold, truth = g[i] > 0.5;
    if (pos && truth) ++c.tp;
    else if (pos) ++c.fp;
    else if (truth) ++c.fn;
    else ++c.tn;
  }
  return c;
}

double false_positive_rate(const ConfusionCounts& c) {
  return c.fp + c.tn == 0 ? 0.0 : static_cast<double>(c.fp) / static_cast<double>(c.fp + c.tn);
}

double false_negative_rate(const ConfusionCounts& c) {
  return c.fn + c.tp == 0 ? 0.0 : static_cast<double>(c.fn) / static_cast<double>(c.fn + c.tp);
}

double accuracy(const ConfusionCounts& c) {
  if (c.total() == 0) throw UsageError("accuracy: no pixels");
  return static_cast<double>(c.tp + c.tn) / static_cast<double>(c.total());
}

double f1_score(const ConfusionCounts& c) {
  const auto den = 2 * c.tp + c.fp + c.fn;
  return den == 0 ? 1.0 : 2.0 * static_cast<double>(c.tp) / static_cast<double>(den);
}

double precision(const ConfusionCounts& c) {
  return c.tp + c.fp == 0 ? 1.0 : static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
}

double recall(const ConfusionCounts& c) {
  return c.tp + c.fn == 0 ? 1.0 : static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
}

double mean_absolute_error(const Tensor& pred, const Tensor& gt) {
  check_pair(pred, gt, "mean_absolute_error");
  const auto p = pred.to_vector(), g = gt.to_vector();
  if (p.empty()) throw UsageError("mean_absolute_error: no pixels");
  double acc = 0;
  for (std::size_t i = 0; i < p.size(); ++i) acc += std::abs(p[i] - g[i]);
  return acc / static_cast<double>(p.size());
}

MetricsReport report_from_counts(const ConfusionCounts& counts, double mae) {
  MetricsReport r;
  r.counts = counts;
  r.fpr = false_positive_rate(counts);
  r.fnr = false_negative_rate(counts);
  r.acc = accuracy(counts);
  r.f1 = f1_score(counts);
  r.mae = mae;
  return r;
}

MetricsReport scalar_metrics(const ConfusionCounts& counts, const Tensor& pred, const Tensor& gt) {
  if (counts.total() != pred.numel()) throw UsageError("scalar_metrics: counts do not match the pair");
  return report_from_counts(counts, mean_absolute_error(pred, gt));
}

std::vector<CurvePoint> curve_sweep(const std::vector<PredGtPair>& pairs, int n_thresholds) {
  if (pairs.empty()) throw UsageError("curve_sweep: no prediction/ground-truth pairs");
  if (n_thresholds < 2) throw UsageError("curve_sweep: need at least 2 thresholds");
  // pixels whose highest passed threshold is k, split by ground truth
  std::vector<std::int64_t> pos_hist(n_thresholds, 0), neg_hist(n_thresholds, 0);
  std::int64_t pos_total = 0, neg_total = 0;
  for (const auto& [pred, gt] : pairs) {
    check_pair(pred, gt, "curve_sweep");
    const auto p = pred.to_vector(), g = gt.to_vector();
    for (std::size_t i = 0; i < p.size(); ++i) {
      const bool truth = g[i] > 0.5;
      (truth ? pos_total : neg_total) += 1;
      const int k = threshold_bin(p[i], n_thresholds);
      if (k >= 0) (truth ? pos_hist : neg_hist)[k] += 1;
    }
  }
  std::vector<CurvePoint> out(n_thresholds);
  std::int64_t tp = 0, fp = 0;
  for (int k = n_thresholds - 1; k >= 0; --k) {
    tp += pos_hist[k];
    fp += neg_hist[k];
    const ConfusionCounts c{tp, fp, neg_total - fp, pos_total - tp};
    out[k] = {static_cast<double>(k) / (n_thresholds - 1), precision(c), recall(c), f1_score(c)};
  }
  return out;
}

std::string report_json(const MetricsReport& r) {
  nlohmann::ordered_json j;
  j["fpr"] = r.fpr;
  j["fnr"] = r.fnr;
  j["acc"] = r.acc;
  j["f1"] = r.f1;
  j["mae"] = r.mae;
  j["counts"] = {{"tp", r.counts.tp}, {"fp", r.counts.fp}, {"tn", r.counts.tn}, {"fn", r.counts.fn}};
  if (!r.curves.empty()) {
    double best = 0;
    for (const auto& c : r.curves) best = std::max(best, c.f_measure);
    j["max_f_measure"] = best;
  }
  return j.dump(2);
}

void write_report_json(const std::filesystem::path& path, const MetricsReport& r) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw IoError("cannot open '" + path.string() + "' for writing");
  os << report_json(r) << "\n";
}

void write_curves_csv(const std::filesystem::path& path, const std::vector<CurvePoint>& curves) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw IoError("cannot open '" + path.string() + "' for writing");
  os << "threshold,precision,recall,f_measure\n";
  for (const auto& c : curves) {
    os << format_double(c.threshold) << ',' << format_double(c.precision) << ',' << format_double(c.recall) << ','
       << format_double(c.f_measure) << '\n';
  }
}

}  // namespace deft
