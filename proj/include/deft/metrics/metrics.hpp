#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "deft/core/tensor.hpp"

namespace deft {

struct ConfusionCounts {
  std::int64_t tp = 0, fp = 0, tn = 0, fn = 0;
  std::int64_t total() const { return tp + fp + tn + fn; }
  ConfusionCounts& operator+=(const ConfusionCounts& o);
  bool operator==(const ConfusionCounts&) const = default;
};

struct CurvePoint {
  double threshold, precision, recall, f_measure;
};

struct MetricsReport {
  ConfusionCounts counts;
  double fpr = 0, fnr = 0, acc = 0, f1 = 0, mae = 0;
  std::vector<CurvePoint> curves;
};

// pred >= threshold counts as positive; gt > 0.5 is positive.
ConfusionCounts confusion(const Tensor& pred, const Tensor& gt, double threshold = 0.5);

// Zero denominators: fpr = 0, fnr = 0, f1 = 1 (nothing to find, nothing found).
double false_positive_rate(const ConfusionCounts& c);
double false_negative_rate(const ConfusionCounts& c);
double accuracy(const ConfusionCounts& c);
double f1_score(const ConfusionCounts& c);
// precision = 1 when nothing is predicted positive, recall = 1 when gt is empty.
double precision(const ConfusionCounts& c);
double recall(const ConfusionCounts& c);

// Mean |p - g| over continuous predictions.
double mean_absolute_error(const Tensor& pred, const Tensor& gt);

MetricsReport scalar_metrics(const ConfusionCounts& counts, const Tensor& pred, const Tensor& gt);
// Ratios from pooled counts with an already pooled MAE.
MetricsReport report_from_counts(const ConfusionCounts& counts, double mae);

using PredGtPair = std::pair<Tensor, Tensor>;

// Thresholds k / (n - 1), k = 0..n-1; counts are pooled over all pairs.
std::vector<CurvePoint> curve_sweep(const std::vector<PredGtPair>& pairs, int n_thresholds = 256);

std::string report_json(const MetricsReport& r);
void write_report_json(const std::filesystem::path& path, const MetricsReport& r);
// threshold,precision,recall,f_measure
void write_curves_csv(const std::filesystem::path& path, const std::vector<CurvePoint>& curves);

}  // namespace deft
