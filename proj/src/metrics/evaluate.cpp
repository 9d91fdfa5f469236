#include "deft/metrics/evaluate.hpp"

#include "deft/core/autograd.hpp"
#include "deft/core/errors.hpp"
#include "deft/core/ops.hpp"
#include "deft/data/transforms.hpp"

namespace deft {

MetricsReport evaluate_pairs(const std::vector<PredGtPair>& pairs, const EvalOptions& opt) {
  if (pairs.empty()) throw UsageError("evaluate: empty dataset");
  ConfusionCounts counts;
  double abs_err = 0;
  for (const auto& [pred, gt] : pairs) {
    counts += confusion(pred, gt, opt.threshold);
    abs_err += mean_absolute_error(pred, gt) * static_cast<double>(pred.numel());
  }
  MetricsReport r = report_from_counts(counts, abs_err / static_cast<double>(counts.total()));
  if (opt.n_thresholds > 0) r.curves = curve_sweep(pairs, opt.n_thresholds);
  return r;
}

MetricsReport evaluate(DefTModel& model, const std::vector<Sample>& dataset, const EvalOptions& opt) {
  if (dataset.empty()) throw UsageError("evaluate: empty dataset");
  const bool was_training = model.training();
  model.set_training(false);
  NoGradGuard no_grad;
  std::vector<PredGtPair> pairs;
  for (const auto& s : dataset) {
    const Sample e = prepare_eval(s, opt.eval_size);
    const Batch b = make_batch({e}, {0}, model.dtype());
    const Tensor pred = model.forward(b.images).pred;
    pairs.emplace_back(reshape(pred, e.mask.shape()), e.mask);
  }
  model.set_training(was_training);
  return evaluate_pairs(pairs, opt);
}

}  // namespace deft
