#pragma once

#include <vector>

#include "deft/core/rng.hpp"
#include "deft/core/tensor.hpp"

namespace deft::test {

inline Tensor random_tensor(Rng& rng, Shape shape, DType dtype = DType::kFloat64, double lo = -1.0,
                            double hi = 1.0) {
  std::vector<double> v(static_cast<std::size_t>(numel_of(shape)));
  for (auto& x : v) x = rng.uniform(lo, hi);
  return Tensor::from_values(std::move(shape), v, dtype);
}

inline double max_abs_diff(const Tensor& a, const Tensor& b) {
  auto x = a.to_vector(), y = b.to_vector();
  double m = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) m = std::max(m, std::abs(x[i] - y[i]));
  return m;
}

}  // namespace deft::test
