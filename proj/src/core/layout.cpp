#include <numeric>

#include "deft/core/ops.hpp"
#include "op_util.hpp"

namespace deft {

namespace {

std::vector<std::int64_t> strides_of(const Shape& shape) {
  std::vector<std::int64_t> s(shape.size(), 1);
  for (int i = static_cast<int>(shape.size()) - 2; i >= 0; --i) s[i] = s[i + 1] * shape[i + 1];
  return s;
}

// For each output element (row-major order over out_shape) the flat index of
// its source element.
std::vector<std::int64_t> permute_index(const Shape& in_shape, const std::vector<int>& order) {
  const auto rank = in_shape.size();
  auto in_strides = strides_of(in_shape);
  Shape out_shape(rank);
  std::vector<std::int64_t> src_stride(rank);
  for (std::size_t i = 0; i < rank; ++i) {
    out_shape[i] = in_shape[order[i]];
    src_stride[i] = in_strides[order[i]];
  }
  std::vector<std::int64_t> index(static_cast<std::size_t>(numel_of(in_shape)));
  std::vector<std::int64_t> counter(rank, 0);
  std::int64_t src = 0;
  for (auto& slot : index) {
    slot = src;
    for (int d = static_cast<int>(rank) - 1; d >= 0; --d) {
      src += src_stride[d];
      if (++counter[d] < out_shape[d]) break;
      src -= src_stride[d] * out_shape[d];
      counter[d] = 0;
    }
  }
  return index;
}

}  // namespace

Tensor reshape(const Tensor& x, Shape shape) {
  if (numel_of(shape) != x.numel()) {
    throw DimensionError("reshape: cannot view " + shape_str(x.shape()) + " as " +
                         shape_str(shape));
  }
  return dispatch(x.dtype(), [&]<typename T>() {
    auto in = x.data<T>();
    return detail::record<T>("reshape", std::move(shape), std::vector<T>(in.begin(), in.end()), {x},
                             [x](const detail::TensorImpl& out) {
                               auto dy = detail::grad_of<T>(out);
                               auto dx = detail::grad_sink<T>(x);
                               for (std::size_t i = 0; i < dy.size(); ++i) dx[i] += dy[i];
                             });
  });
}

Tensor permute(const Tensor& x, const std::vector<int>& order) {
  constexpr std::string_view op = "permute";
  const int rank = x.rank();
  std::vector<int> seen(static_cast<std::size_t>(rank), 0);
  if (static_cast<int>(order.size()) != rank) throw DimensionError("permute: order length != rank");
  for (int o : order) {
    if (o < 0 || o >= rank || seen[o]++) throw DimensionError("permute: invalid axis order");
  }
  Shape out_shape(static_cast<std::size_t>(rank));
  for (int i = 0; i < rank; ++i) out_shape[i] = x.dim(order[i]);
  auto index = permute_index(x.shape(), order);

  return dispatch(x.dtype(), [&]<typename T>() {
    auto in = x.data<T>();
    std::vector<T> y(in.size());
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = in[index[i]];
    return detail::record<T>(op, std::move(out_shape), std::move(y), {x},
                             [x, index = std::move(index)](const detail::TensorImpl& out) {
                               auto dy = detail::grad_of<T>(out);
                               auto dx = detail::grad_sink<T>(x);
                               for (std::size_t i = 0; i < dy.size(); ++i) dx[index[i]] += dy[i];
                             });
  });
}

Tensor concat(const std::vector<Tensor>& xs, int axis) {
  constexpr std::string_view op = "concat";
  if (xs.empty()) throw UsageError("concat: no inputs");
  const Tensor& first = xs.front();
  const int a = detail::normalize_axis(axis, first.rank(), op);
  Shape out_shape = first.shape();
  out_shape[a] = 0;
  for (const auto& t : xs) {
    detail::require_same_dtype(first, t, op);
    if (t.rank() != first.rank()) throw DimensionError("concat: rank mismatch");
    for (int d = 0; d < first.rank(); ++d) {
      if (d != a && t.dim(d) != first.dim(d)) {
        throw DimensionError("concat: " + shape_str(t.shape()) + " vs " + shape_str(first.shape()) +
                             " differ off the concat axis");
      }
    }
    out_shape[a] += t.dim(a);
  }
  std::int64_t outer = 1, inner = 1;
  for (int d = 0; d < a; ++d) outer *= first.dim(d);
  for (int d = a + 1; d < first.rank(); ++d) inner *= first.dim(d);
  const std::int64_t out_row = out_shape[a] * inner;

  return dispatch(first.dtype(), [&]<typename T>() {
    std::vector<T> y(static_cast<std::size_t>(outer * out_row));
    std::int64_t offset = 0;
    for (const auto& t : xs) {
      auto in = t.data<T>();
      const std::int64_t row = t.dim(a) * inner;
      for (std::int64_t o = 0; o < outer; ++o) {
        std::copy_n(in.data() + o * row, row, y.data() + o * out_row + offset);
      }
      offset += row;
    }
    return detail::record<T>(op, std::move(out_shape), std::move(y), xs,
                             [xs, a, outer, inner, out_row](const detail::TensorImpl& out) {
                               auto dy = detail::grad_of<T>(out);
                               std::int64_t offset = 0;
                               for (const auto& t : xs) {
                                 const std::int64_t row = t.dim(a) * inner;
                                 auto dx = detail::grad_sink<T>(t);
                                 if (!dx.empty()) {
                                   for (std::int64_t o = 0; o < outer; ++o) {
                                     for (std::int64_t i = 0; i < row; ++i) {
                                       dx[o * row + i] += dy[o * out_row + offset + i];
                                     }
                                   }
                                 }
                                 offset += row;
                               }
                             });
  });
}

Tensor img2seq(const Tensor& x) {
  detail::require_rank(x, 4, "img2seq", "input");
  return reshape(permute(x, {0, 2, 3, 1}), {x.dim(0), x.dim(2) * x.dim(3), x.dim(1)});
}

Tensor seq2img(const Tensor& x, std::int64_t h, std::int64_t w) {
  detail::require_rank(x, 3, "seq2img", "input");
  if (x.dim(1) != h * w) {
    throw DimensionError("seq2img: " + std::to_string(x.dim(1)) + " tokens cannot form a " +
                         std::to_string(h) + "x" + std::to_string(w) + " map");
  }
  return permute(reshape(x, {x.dim(0), h, w, x.dim(2)}), {0, 3, 1, 2});
}

}  // namespace deft
