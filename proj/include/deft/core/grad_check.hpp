#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "deft/core/tensor.hpp"

namespace deft {

struct GradCheckOptions {
  // Upper bound on the reported error for `passed`.
  double tolerance = 1e-5;
  // Elements probed per input; <= 0 probes every element.
  std::int64_t max_elements_per_input = 0;
  std::uint64_t seed = 0x5eed;
};

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::int64_t elements_checked = 0;
  // Input index and flat element of the worst mismatch.
  int worst_input = -1;
  std::int64_t worst_element = -1;
  bool passed = false;
};

using GradCheckFn = std::function<Tensor(const std::vector<Tensor>&)>;

// Compares reverse-mode gradients of <fn(inputs), R> against central
// differences, where R is a fixed random cotangent. Inputs must be float64
// leaves; they are perturbed in place and restored. The step for element x is
// 1e-5 * (1 + |x|) and the error is |analytic - numeric| / max(1, |numeric|).
GradCheckResult grad_check(const GradCheckFn& fn, const std::vector<Tensor>& inputs,
                           const GradCheckOptions& options = {});

}  // namespace deft
