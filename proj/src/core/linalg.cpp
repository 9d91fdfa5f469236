#include <Eigen/Core>

#include "deft/core/ops.hpp"
#include "op_util.hpp"

namespace deft {

namespace {

template <class T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <class T>
using MapMat = Eigen::Map<RowMat<T>>;
template <class T>
using ConstMapMat = Eigen::Map<const RowMat<T>>;

}  // namespace

Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias) {
  constexpr std::string_view op = "linear";
  detail::require_rank(weight, 2, op, "weight");
  detail::require_same_dtype(x, weight, op);
  detail::require_same_dtype(x, bias, op);
  const std::int64_t d_in = weight.dim(0), d_out = weight.dim(1);
  if (x.rank() < 1 || x.dim(-1) != d_in) {
    throw DimensionError("linear: input " + shape_str(x.shape()) + " incompatible with weight " +
                         shape_str(weight.shape()));
  }
  if (bias.defined() && (bias.rank() != 1 || bias.dim(0) != d_out)) {
    throw DimensionError("linear: bias must have shape [" + std::to_string(d_out) + "]");
  }
  const std::int64_t m = x.numel() / d_in;
  Shape out_shape = x.shape();
  out_shape.back() = d_out;
  detail::add_flops(2 * m * d_in * d_out);

  return dispatch(x.dtype(), [&]<typename T>() {
    std::vector<T> y(static_cast<std::size_t>(m * d_out));
    ConstMapMat<T> xm(x.data<T>().data(), m, d_in);
    ConstMapMat<T> wm(weight.data<T>().data(), d_in, d_out);
    MapMat<T> ym(y.data(), m, d_out);
    ym.noalias() = xm * wm;
    if (bias.defined()) {
      Eigen::Map<const Eigen::Matrix<T, 1, Eigen::Dynamic>> bm(bias.data<T>().data(), d_out);
      ym.rowwise() += bm;
    }
    return detail::record<T>(
        op, std::move(out_shape), std::move(y), {x, weight, bias},
        [x, weight, bias, m, d_in, d_out](const detail::TensorImpl& out) {
          ConstMapMat<T> gm(detail::grad_of<T>(out).data(), m, d_out);
          if (auto dx = detail::grad_sink<T>(x); !dx.empty()) {
            MapMat<T> dxm(dx.data(), m, d_in);
            ConstMapMat<T> wm(weight.data<T>().data(), d_in, d_out);
            dxm.noalias() += gm * wm.transpose();
          }
          if (auto dw = detail::grad_sink<T>(weight); !dw.empty()) {
            MapMat<T> dwm(dw.data(), d_in, d_out);
            ConstMapMat<T> xm(x.data<T>().data(), m, d_in);
            dwm.noalias() += xm.transpose() * gm;
          }
          if (auto db = detail::grad_sink<T>(bias); !db.empty()) {
            // plain row-order loop: Eigen's vectorized column sum depends on alignment
            auto g = detail::grad_of<T>(out);
            for (std::int64_t r = 0; r < m; ++r)
              for (std::int64_t j = 0; j < d_out; ++j) db[j] += g[r * d_out + j];
          }
        });
  });
}

Tensor matmul(const Tensor& a, const Tensor& b, bool transpose_b) {
  constexpr std::string_view op = "matmul";
  detail::require_same_dtype(a, b, op);
  if (a.rank() < 2 || a.rank() != b.rank()) {
    throw DimensionError("matmul: operands " + shape_str(a.shape()) + " and " +
                         shape_str(b.shape()) + " need equal rank >= 2");
  }
  for (int i = 0; i < a.rank() - 2; ++i) {
    if (a.dim(i) != b.dim(i)) {
      throw DimensionError("matmul: batch dims differ: " + shape_str(a.shape()) + " vs " +
                           shape_str(b.shape()));
    }
  }
  const std::int64_t m = a.dim(-2), k = a.dim(-1);
  const std::int64_t kb = transpose_b ? b.dim(-1) : b.dim(-2);
  const std::int64_t n = transpose_b ? b.dim(-2) : b.dim(-1);
  if (k != kb) {
    throw DimensionError("matmul: inner dims differ: " + shape_str(a.shape()) + " vs " +
                         shape_str(b.shape()) + (transpose_b ? " (transposed)" : ""));
  }
  const std::int64_t batch = a.numel() / (m * k);
  Shape out_shape = a.shape();
  out_shape.back() = n;
  detail::add_flops(2 * batch * m * k * n);

  return dispatch(a.dtype(), [&]<typename T>() {
    std::vector<T> y(static_cast<std::size_t>(batch * m * n));
    for (std::int64_t i = 0; i < batch; ++i) {
      ConstMapMat<T> am(a.data<T>().data() + i * m * k, m, k);
      MapMat<T> ym(y.data() + i * m * n, m, n);
      if (transpose_b) {
        ConstMapMat<T> bm(b.data<T>().data() + i * n * k, n, k);
        ym.noalias() = am * bm.transpose();
      } else {
        ConstMapMat<T> bm(b.data<T>().data() + i * k * n, k, n);
        ym.noalias() = am * bm;
      }
    }
    return detail::record<T>(
        op, std::move(out_shape), std::move(y), {a, b},
        [a, b, transpose_b, batch, m, k, n](const detail::TensorImpl& out) {
          auto dy = detail::grad_of<T>(out);
          auto da = detail::grad_sink<T>(a);
          auto db = detail::grad_sink<T>(b);
          for (std::int64_t i = 0; i < batch; ++i) {
            ConstMapMat<T> gm(dy.data() + i * m * n, m, n);
            ConstMapMat<T> am(a.data<T>().data() + i * m * k, m, k);
            if (transpose_b) {
              ConstMapMat<T> bm(b.data<T>().data() + i * n * k, n, k);
              if (!da.empty()) MapMat<T>(da.data() + i * m * k, m, k).noalias() += gm * bm;
              if (!db.empty()) MapMat<T>(db.data() + i * n * k, n, k).noalias() += gm.transpose() * am;
            } else {
              ConstMapMat<T> bm(b.data<T>().data() + i * k * n, k, n);
              if (!da.empty()) MapMat<T>(da.data() + i * m * k, m, k).noalias() += gm * bm.transpose();
              if (!db.empty()) MapMat<T>(db.data() + i * k * n, k, n).noalias() += am.transpose() * gm;
            }
          }
        });
  });
}

}  // namespace deft
