#pragma once

#include <string>
#include <string_view>

#include "deft/core/autograd.hpp"
#include "deft/core/tensor.hpp"

namespace deft::detail {

inline void require_rank(const Tensor& t, int rank, std::string_view op, std::string_view what) {
  if (t.rank() != rank) {
    throw DimensionError(std::string(op) + ": " + std::string(what) + " must have rank " +
                         std::to_string(rank) + ", got " + shape_str(t.shape()));
  }
}

inline void require_same_dtype(const Tensor& a, const Tensor& b, std::string_view op) {
  if (b.defined() && a.dtype() != b.dtype()) {
    throw DimensionError(std::string(op) + ": mixed dtypes " + std::string(dtype_name(a.dtype())) +
                         " and " + std::string(dtype_name(b.dtype())));
  }
}

inline void require_same_shape(const Tensor& a, const Tensor& b, std::string_view op) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) + " vs " +
                         shape_str(b.shape()));
  }
  require_same_dtype(a, b, op);
}

inline int normalize_axis(int axis, int rank, std::string_view op) {
  int a = axis < 0 ? axis + rank : axis;
  if (a < 0 || a >= rank) {
    throw DimensionError(std::string(op) + ": axis " + std::to_string(axis) +
                         " out of range for rank " + std::to_string(rank));
  }
  return a;
}

}  // namespace deft::detail
