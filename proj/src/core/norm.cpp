#include <algorithm>
#include <cmath>

#include "deft/core/ops.hpp"
#include "op_util.hpp"

namespace deft {

Tensor softmax(const Tensor& x, int axis) {
  constexpr std::string_view op = "softmax";
  const int a = detail::normalize_axis(axis, x.rank(), op);
  std::int64_t outer = 1, inner = 1;
  for (int i = 0; i < a; ++i) outer *= x.dim(i);
  for (int i = a + 1; i < x.rank(); ++i) inner *= x.dim(i);
  const std::int64_t len = x.dim(a);

  return dispatch(x.dtype(), [&]<typename T>() {
    auto in = x.data<T>();
    detail::ensure_finite<T>(in, op);
    std::vector<T> y(in.size());
    for (std::int64_t o = 0; o < outer; ++o) {
      for (std::int64_t i = 0; i < inner; ++i) {
        const std::int64_t base = o * len * inner + i;
        T peak = in[base];
        for (std::int64_t j = 1; j < len; ++j) peak = std::max(peak, in[base + j * inner]);
        T total = 0;
        for (std::int64_t j = 0; j < len; ++j) {
          T e = std::exp(in[base + j * inner] - peak);
          y[base + j * inner] = e;
          total += e;
        }
        for (std::int64_t j = 0; j < len; ++j) y[base + j * inner] /= total;
      }
    }
    return detail::record<T>(
        op, x.shape(), std::move(y), {x},
        [x, outer, inner, len](const detail::TensorImpl& out) {
          auto dy = detail::grad_of<T>(out);
          const auto& yv = std::get<std::vector<T>>(out.data);
          auto dx = detail::grad_sink<T>(x);
          for (std::int64_t o = 0; o < outer; ++o) {
            for (std::int64_t i = 0; i < inner; ++i) {
              const std::int64_t base = o * len * inner + i;
              T dot = 0;
              for (std::int64_t j = 0; j < len; ++j) {
                dot += dy[base + j * inner] * yv[base + j * inner];
              }
              for (std::int64_t j = 0; j < len; ++j) {
                const auto idx = base + j * inner;
                dx[idx] += yv[idx] * (dy[idx] - dot);
              }
            }
          }
        });
  });
}

Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps) {
  constexpr std::string_view op = "layer_norm";
  detail::require_rank(gamma, 1, op, "gamma");
  detail::require_rank(beta, 1, op, "beta");
  detail::require_same_dtype(x, gamma, op);
  detail::require_same_dtype(x, beta, op);
  const std::int64_t c = gamma.dim(0);
  if (x.rank() < 1 || x.dim(-1) != c || beta.dim(0) != c) {
    throw DimensionError("layer_norm: input " + shape_str(x.shape()) + " vs gamma " +
                         shape_str(gamma.shape()) + " and beta " + shape_str(beta.shape()));
  }
  const std::int64_t rows = x.numel() / c;

  return dispatch(x.dtype(), [&]<typename T>() {
    auto in = x.data<T>();
    auto g = gamma.data<T>();
    auto b = beta.data<T>();
    std::vector<T> y(in.size());
    std::vector<T> mean(static_cast<std::size_t>(rows)), rstd(static_cast<std::size_t>(rows));
    for (std::int64_t r = 0; r < rows; ++r) {
      const T* row = in.data() + r * c;
      T mu = 0;
      for (std::int64_t j = 0; j < c; ++j) mu += row[j];
      mu /= static_cast<T>(c);
      T var = 0;
      for (std::int64_t j = 0; j < c; ++j) var += (row[j] - mu) * (row[j] - mu);
      var /= static_cast<T>(c);
      const T rs = T(1) / std::sqrt(var + static_cast<T>(eps));
      mean[r] = mu;
      rstd[r] = rs;
      for (std::int64_t j = 0; j < c; ++j) y[r * c + j] = (row[j] - mu) * rs * g[j] + b[j];
    }
    return detail::record<T>(
        op, x.shape(), std::move(y), {x, gamma, beta},
        [x, gamma, beta, rows, c, mean = std::move(mean),
         rstd = std::move(rstd)](const detail::TensorImpl& out) {
          auto dy = detail::grad_of<T>(out);
          auto in = x.data<T>();
          auto g = gamma.data<T>();
          auto dx = detail::grad_sink<T>(x);
          auto dg = detail::grad_sink<T>(gamma);
          auto db = detail::grad_sink<T>(beta);
          for (std::int64_t r = 0; r < rows; ++r) {
            const T* row = in.data() + r * c;
            const T* grow = dy.data() + r * c;
            T sum_d = 0, sum_dx = 0;
            for (std::int64_t j = 0; j < c; ++j) {
              const T xhat = (row[j] - mean[r]) * rstd[r];
              const T d = grow[j] * g[j];
              sum_d += d;
              sum_dx += d * xhat;
              if (!dg.empty()) dg[j] += grow[j] * xhat;
              if (!db.empty()) db[j] += grow[j];
            }
            if (dx.empty()) continue;
            const T inv_c = T(1) / static_cast<T>(c);
            for (std::int64_t j = 0; j < c; ++j) {
              const T xhat = (row[j] - mean[r]) * rstd[r];
              const T d = grow[j] * g[j];
              dx[r * c + j] += rstd[r] * (d - sum_d * inv_c - xhat * sum_dx * inv_c);
            }
          }
        });
  });
}

Tensor batch_norm2d(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                    Tensor& running_mean, Tensor& running_var, bool training, double momentum,
                    double eps) {
  constexpr std::string_view op = "batch_norm2d";
  detail::require_rank(x, 4, op, "input");
  detail::require_same_dtype(x, gamma, op);
  detail::require_same_dtype(x, beta, op);
  const std::int64_t n = x.dim(0), c = x.dim(1), hw = x.dim(2) * x.dim(3);
  for (const Tensor* t : {&gamma, &beta, static_cast<const Tensor*>(&running_mean),
                          static_cast<const Tensor*>(&running_var)}) {
    if (t->rank() != 1 || t->dim(0) != c) {
      throw DimensionError("batch_norm2d: per-channel tensors must have shape [" +
                           std::to_string(c) + "]");
    }
  }
  const std::int64_t count = n * hw;
  if (training && count < 2) throw UsageError("batch_norm2d: training needs more than one value per channel");

  return dispatch(x.dtype(), [&]<typename T>() {
    auto in = x.data<T>();
    auto g = gamma.data<T>();
    auto b = beta.data<T>();
    auto rm = running_mean.mutable_data<T>();
    auto rv = running_var.mutable_data<T>();
    std::vector<T> mean(static_cast<std::size_t>(c)), rstd(static_cast<std::size_t>(c));
    for (std::int64_t ch = 0; ch < c; ++ch) {
      if (training) {
        T mu = 0;
        for (std::int64_t s = 0; s < n; ++s) {
          const T* p = in.data() + (s * c + ch) * hw;
          for (std::int64_t i = 0; i < hw; ++i) mu += p[i];
        }
        mu /= static_cast<T>(count);
        T var = 0;
        for (std::int64_t s = 0; s < n; ++s) {
          const T* p = in.data() + (s * c + ch) * hw;
          for (std::int64_t i = 0; i < hw; ++i) var += (p[i] - mu) * (p[i] - mu);
        }
        const T unbiased = var / static_cast<T>(count - 1);
        var /= static_cast<T>(count);
        mean[ch] = mu;
        rstd[ch] = T(1) / std::sqrt(var + static_cast<T>(eps));
        const T mom = static_cast<T>(momentum);
        rm[ch] = (T(1) - mom) * rm[ch] + mom * mu;
        rv[ch] = (T(1) - mom) * rv[ch] + mom * unbiased;
      } else {
        mean[ch] = rm[ch];
        rstd[ch] = T(1) / std::sqrt(rv[ch] + static_cast<T>(eps));
      }
    }
    std::vector<T> y(in.size());
    for (std::int64_t s = 0; s < n; ++s) {
      for (std::int64_t ch = 0; ch < c; ++ch) {
        const auto off = (s * c + ch) * hw;
        const T sc = rstd[ch] * g[ch];
        for (std::int64_t i = 0; i < hw; ++i) y[off + i] = (in[off + i] - mean[ch]) * sc + b[ch];
      }
    }
    return detail::record<T>(
        op, x.shape(), std::move(y), {x, gamma, beta},
        [x, gamma, beta, n, c, hw, count, training, mean = std::move(mean),
         rstd = std::move(rstd)](const detail::TensorImpl& out) {
          auto dy = detail::grad_of<T>(out);
          auto in = x.data<T>();
          auto g = gamma.data<T>();
          auto dx = detail::grad_sink<T>(x);
          auto dg = detail::grad_sink<T>(gamma);
          auto db = detail::grad_sink<T>(beta);
          for (std::int64_t ch = 0; ch < c; ++ch) {
            T sum_g = 0, sum_gx = 0;
            for (std::int64_t s = 0; s < n; ++s) {
              const auto off = (s * c + ch) * hw;
              for (std::int64_t i = 0; i < hw; ++i) {
                sum_g += dy[off + i];
                sum_gx += dy[off + i] * (in[off + i] - mean[ch]) * rstd[ch];
              }
            }
            if (!dg.empty()) dg[ch] += sum_gx;
            if (!db.empty()) db[ch] += sum_g;
            if (dx.empty()) continue;
            const T k = g[ch] * rstd[ch];
            const T inv = T(1) / static_cast<T>(count);
            for (std::int64_t s = 0; s < n; ++s) {
              const auto off = (s * c + ch) * hw;
              for (std::int64_t i = 0; i < hw; ++i) {
                if (training) {
                  const T xhat = (in[off + i] - mean[ch]) * rstd[ch];
                  dx[off + i] += k * (dy[off + i] - sum_g * inv - xhat * sum_gx * inv);
                } else {
                  dx[off + i] += k * dy[off + i];
                }
              }
            }
          }
        });
  });
}

}  // namespace deft
