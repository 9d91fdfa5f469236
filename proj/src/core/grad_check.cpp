#include "deft/core/grad_check.hpp"

#include <algorithm>
#include <cmath>

#include "deft/core/autograd.hpp"
#include "deft/core/ops.hpp"
#include "deft/core/rng.hpp"

namespace deft {

namespace {

double project(const Tensor& out, const std::vector<double>& cotangent) {
  auto v = out.data<double>();
  double acc = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) acc += v[i] * cotangent[i];
  return acc;
}

}  // namespace

GradCheckResult grad_check(const GradCheckFn& fn, const std::vector<Tensor>& inputs,
                           const GradCheckOptions& options) {
  for (const auto& t : inputs) {
    if (!t.defined() || t.dtype() != DType::kFloat64) {
      throw UsageError("grad_check: inputs must be defined float64 tensors");
    }
    if (!t.is_leaf()) throw UsageError("grad_check: inputs must be leaf tensors");
  }
  std::vector<Tensor> leaves = inputs;
  for (auto& t : leaves) {
    t.set_requires_grad(true);
    t.zero_grad();
  }

  Rng rng(options.seed);
  Tensor out = fn(leaves);
  std::vector<double> cotangent(static_cast<std::size_t>(out.numel()));
  for (auto& c : cotangent) c = rng.uniform(-1.0, 1.0);
  Tensor weights = Tensor::from_values(out.shape(), cotangent, DType::kFloat64);
  backward(sum(mul(out, weights)));

  GradCheckResult result;
  for (std::size_t i = 0; i < leaves.size(); ++i) {
    Tensor& leaf = leaves[i];
    std::vector<double> analytic(static_cast<std::size_t>(leaf.numel()), 0.0);
    if (leaf.has_grad()) {
      auto g = leaf.grad_data<double>();
      analytic.assign(g.begin(), g.end());
    }
    std::vector<std::int64_t> probe;
    const std::int64_t n = leaf.numel();
    if (options.max_elements_per_input > 0 && options.max_elements_per_input < n) {
      auto perm = rng.permutation(n);
      probe.assign(perm.begin(), perm.begin() + options.max_elements_per_input);
      std::sort(probe.begin(), probe.end());
    } else {
      probe.resize(static_cast<std::size_t>(n));
      for (std::int64_t j = 0; j < n; ++j) probe[j] = j;
    }

    auto values = leaf.mutable_data<double>();
    NoGradGuard no_grad;
    for (std::int64_t j : probe) {
      const double orig = values[j];
      const double h = 1e-5 * (1.0 + std::abs(orig));
      values[j] = orig + h;
      const double plus = project(fn(leaves), cotangent);
      values[j] = orig - h;
      const double minus = project(fn(leaves), cotangent);
      values[j] = orig;
      const double numeric = (plus - minus) / (2.0 * h);
      const double err = std::abs(analytic[j] - numeric) / std::max(1.0, std::abs(numeric));
      if (err > result.max_rel_error || result.worst_input < 0) {
        result.max_rel_error = std::max(err, result.max_rel_error);
        if (err >= result.max_rel_error) {
          result.worst_input = static_cast<int>(i);
          result.worst_element = j;
        }
      }
      ++result.elements_checked;
    }
  }
  for (auto& t : leaves) t.zero_grad();
  result.passed = result.max_rel_error < options.tolerance;
  return result;
}

}  // namespace deft
