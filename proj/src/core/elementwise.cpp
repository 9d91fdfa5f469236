#include <algorithm>
#include <cmath>
#include <numbers>

#include "deft/core/ops.hpp"
#include "op_util.hpp"

namespace deft {

namespace {

// y = f(x); dx += dy * df(x, y)
template <class Fwd, class Deriv>
Tensor unary(std::string_view op, const Tensor& x, Fwd fwd, Deriv deriv) {
  return dispatch(x.dtype(), [&]<typename T>() {
    auto in = x.data<T>();
    std::vector<T> y(in.size());
    for (std::size_t i = 0; i < in.size(); ++i) y[i] = fwd(in[i]);
    return detail::record<T>(op, x.shape(), std::move(y), {x},
                             [x, deriv](const detail::TensorImpl& out) {
                               auto dy = detail::grad_of<T>(out);
                               const auto& yv = std::get<std::vector<T>>(out.data);
                               auto in = x.data<T>();
                               auto dx = detail::grad_sink<T>(x);
                               for (std::size_t i = 0; i < in.size(); ++i) {
                                 dx[i] += dy[i] * deriv(in[i], yv[i]);
                               }
                             });
  });
}

// y = f(a, b); da += dy * dfa(a, b); db += dy * dfb(a, b)
template <class Fwd, class DA, class DB>
Tensor binary(std::string_view op, const Tensor& a, const Tensor& b, Fwd fwd, DA da_fn, DB db_fn) {
  detail::require_same_shape(a, b, op);
  return dispatch(a.dtype(), [&]<typename T>() {
    auto av = a.data<T>();
    auto bv = b.data<T>();
    std::vector<T> y(av.size());
    for (std::size_t i = 0; i < av.size(); ++i) y[i] = fwd(av[i], bv[i]);
    return detail::record<T>(op, a.shape(), std::move(y), {a, b},
                             [a, b, da_fn, db_fn](const detail::TensorImpl& out) {
                               auto dy = detail::grad_of<T>(out);
                               auto av = a.data<T>();
                               auto bv = b.data<T>();
                               auto da = detail::grad_sink<T>(a);
                               auto db = detail::grad_sink<T>(b);
                               for (std::size_t i = 0; i < dy.size(); ++i) {
                                 if (!da.empty()) da[i] += dy[i] * da_fn(av[i], bv[i]);
                                 if (!db.empty()) db[i] += dy[i] * db_fn(av[i], bv[i]);
                               }
                             });
  });
}

}  // namespace

Tensor relu(const Tensor& x) {
  return unary(
      "relu", x, [](auto v) { return v > 0 ? v : decltype(v)(0); },
      [](auto v, auto) { return v > 0 ? decltype(v)(1) : decltype(v)(0); });
}

Tensor gelu(const Tensor& x) {
  return unary(
      "gelu", x,
      [](auto v) {
        using T = decltype(v);
        return T(0.5) * v * (T(1) + std::erf(v * static_cast<T>(std::numbers::sqrt2 / 2)));
      },
      [](auto v, auto) {
        using T = decltype(v);
        const T cdf = T(0.5) * (T(1) + std::erf(v * static_cast<T>(std::numbers::sqrt2 / 2)));
        const T pdf = std::exp(T(-0.5) * v * v) * static_cast<T>(std::numbers::inv_sqrtpi / std::numbers::sqrt2);
        return cdf + v * pdf;
      });
}

Tensor sigmoid(const Tensor& x) {
  return unary(
      "sigmoid", x,
      [](auto v) {
        using T = decltype(v);
        if (v >= 0) return T(1) / (T(1) + std::exp(-v));
        const T e = std::exp(v);
        return e / (T(1) + e);
      },
      [](auto, auto y) { return y * (decltype(y)(1) - y); });
}

Tensor softplus(const Tensor& x) {
  return unary(
      "softplus", x,
      [](auto v) {
        using T = decltype(v);
        return std::max(v, T(0)) + std::log1p(std::exp(-std::abs(v)));
      },
      [](auto v, auto) {
        using T = decltype(v);
        if (v >= 0) return T(1) / (T(1) + std::exp(-v));
        const T e = std::exp(v);
        return e / (T(1) + e);
      });
}

Tensor add(const Tensor& a, const Tensor& b) {
  return binary(
      "add", a, b, [](auto p, auto q) { return p + q; },
      [](auto p, auto) { return decltype(p)(1); }, [](auto p, auto) { return decltype(p)(1); });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  return binary(
      "sub", a, b, [](auto p, auto q) { return p - q; },
      [](auto p, auto) { return decltype(p)(1); }, [](auto p, auto) { return decltype(p)(-1); });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  return binary(
      "mul", a, b, [](auto p, auto q) { return p * q; }, [](auto, auto q) { return q; },
      [](auto p, auto) { return p; });
}

Tensor div(const Tensor& a, const Tensor& b) {
  return binary(
      "div", a, b, [](auto p, auto q) { return p / q; },
      [](auto, auto q) { return decltype(q)(1) / q; }, [](auto p, auto q) { return -p / (q * q); });
}

Tensor scale(const Tensor& x, double factor) {
  return unary(
      "scale", x, [factor](auto v) { return v * static_cast<decltype(v)>(factor); },
      [factor](auto v, auto) { return static_cast<decltype(v)>(factor); });
}

Tensor add_scalar(const Tensor& x, double value) {
  return unary(
      "add_scalar", x, [value](auto v) { return v + static_cast<decltype(v)>(value); },
      [](auto v, auto) { return decltype(v)(1); });
}

Tensor square(const Tensor& x) {
  return unary(
      "square", x, [](auto v) { return v * v; }, [](auto v, auto) { return decltype(v)(2) * v; });
}

Tensor log(const Tensor& x) {
  return dispatch(x.dtype(), [&]<typename T>() {
    for (T v : x.data<T>()) {
      if (!(v > 0)) throw NumericError("log: non-positive input " + std::to_string(v));
    }
    return unary(
        "log", x, [](auto v) { return std::log(v); },
        [](auto v, auto) { return decltype(v)(1) / v; });
  });
}

Tensor clamp(const Tensor& x, double lo, double hi) {
  if (lo > hi) throw UsageError("clamp: lo > hi");
  return unary(
      "clamp", x,
      [lo, hi](auto v) {
        using T = decltype(v);
        return std::min(std::max(v, static_cast<T>(lo)), static_cast<T>(hi));
      },
      [lo, hi](auto v, auto) {
        using T = decltype(v);
        return (v >= static_cast<T>(lo) && v <= static_cast<T>(hi)) ? T(1) : T(0);
      });
}

Tensor sum(const Tensor& x) {
  return dispatch(x.dtype(), [&]<typename T>() {
    T acc = 0;
    for (T v : x.data<T>()) acc += v;
    return detail::record<T>("sum", {1}, std::vector<T>{acc}, {x},
                             [x](const detail::TensorImpl& out) {
                               const T g = detail::grad_of<T>(out)[0];
                               for (auto& d : detail::grad_sink<T>(x)) d += g;
                             });
  });
}

Tensor mean(const Tensor& x) { return scale(sum(x), 1.0 / static_cast<double>(x.numel())); }

Tensor sum(const Tensor& x, int axis) {
  constexpr std::string_view op = "sum_axis";
  const int a = detail::normalize_axis(axis, x.rank(), op);
  std::int64_t outer = 1, inner = 1;
  for (int i = 0; i < a; ++i) outer *= x.dim(i);
  for (int i = a + 1; i < x.rank(); ++i) inner *= x.dim(i);
  const std::int64_t len = x.dim(a);
  Shape out_shape = x.shape();
  out_shape.erase(out_shape.begin() + a);
  if (out_shape.empty()) out_shape = {1};

  return dispatch(x.dtype(), [&]<typename T>() {
    auto in = x.data<T>();
    std::vector<T> y(static_cast<std::size_t>(outer * inner), T(0));
    for (std::int64_t o = 0; o < outer; ++o) {
      for (std::int64_t j = 0; j < len; ++j) {
        for (std::int64_t i = 0; i < inner; ++i) y[o * inner + i] += in[(o * len + j) * inner + i];
      }
    }
    return detail::record<T>(op, std::move(out_shape), std::move(y), {x},
                             [x, outer, inner, len](const detail::TensorImpl& out) {
                               auto dy = detail::grad_of<T>(out);
                               auto dx = detail::grad_sink<T>(x);
                               for (std::int64_t o = 0; o < outer; ++o) {
                                 for (std::int64_t j = 0; j < len; ++j) {
                                   for (std::int64_t i = 0; i < inner; ++i) {
                                     dx[(o * len + j) * inner + i] += dy[o * inner + i];
                                   }
                                 }
                               }
                             });
  });
}

}  // namespace deft
