#include <algorithm>
#include <cmath>

#include "deft/core/ops.hpp"
#include "deft/core/parallel.hpp"
#include "op_util.hpp"

namespace deft {

namespace {

struct Bin {
  std::int64_t begin, end;
};

std::vector<Bin> adaptive_bins(std::int64_t in, std::int64_t out) {
  std::vector<Bin> bins(static_cast<std::size_t>(out));
  for (std::int64_t b = 0; b < out; ++b) {
    bins[b].begin = (b * in) / out;
    bins[b].end = ((b + 1) * in + out - 1) / out;
  }
  return bins;
}

// Two-tap linear interpolation stencil along one axis.
struct Tap {
  std::int64_t lo, hi;
  double w_lo, w_hi;
};

std::vector<Tap> bilinear_taps(std::int64_t in, std::int64_t out) {
  std::vector<Tap> taps(static_cast<std::size_t>(out));
  const double scale = static_cast<double>(in) / static_cast<double>(out);
  for (std::int64_t o = 0; o < out; ++o) {
    double src = (static_cast<double>(o) + 0.5) * scale - 0.5;
    if (src < 0) src = 0;
    auto lo = std::min(static_cast<std::int64_t>(std::floor(src)), in - 1);
    auto hi = std::min(lo + 1, in - 1);
    double frac = src - static_cast<double>(lo);
    if (lo == hi) frac = 0;
    taps[o] = {lo, hi, 1.0 - frac, frac};
  }
  return taps;
}

}  // namespace

Tensor adaptive_avg_pool2d(const Tensor& x, std::int64_t out_h, std::int64_t out_w) {
  constexpr std::string_view op = "adaptive_avg_pool2d";
  detail::require_rank(x, 4, op, "input");
  const std::int64_t n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  if (out_h < 1 || out_w < 1 || out_h > h || out_w > w) {
    throw DimensionError("adaptive_avg_pool2d: output " + std::to_string(out_h) + "x" +
                         std::to_string(out_w) + " invalid for input " + shape_str(x.shape()));
  }
  auto rows = adaptive_bins(h, out_h);
  auto cols = adaptive_bins(w, out_w);

  return dispatch(x.dtype(), [&]<typename T>() {
    auto in = x.data<T>();
    std::vector<T> y(static_cast<std::size_t>(n * c * out_h * out_w));
    for (std::int64_t p = 0; p < n * c; ++p) {
      const T* plane = in.data() + p * h * w;
      T* dst = y.data() + p * out_h * out_w;
      for (std::int64_t by = 0; by < out_h; ++by) {
        for (std::int64_t bx = 0; bx < out_w; ++bx) {
          const auto [y0, y1] = rows[by];
          const auto [x0, x1] = cols[bx];
          T acc = 0;
          for (std::int64_t iy = y0; iy < y1; ++iy) {
            for (std::int64_t ix = x0; ix < x1; ++ix) acc += plane[iy * w + ix];
          }
          dst[by * out_w + bx] = acc / static_cast<T>((y1 - y0) * (x1 - x0));
        }
      }
    }
    return detail::record<T>(
        op, {n, c, out_h, out_w}, std::move(y), {x},
        [x, rows, cols, n, c, h, w, out_h, out_w](const detail::TensorImpl& out) {
          auto dy = detail::grad_of<T>(out);
          auto dx = detail::grad_sink<T>(x);
          for (std::int64_t p = 0; p < n * c; ++p) {
            T* plane = dx.data() + p * h * w;
            const T* src = dy.data() + p * out_h * out_w;
            for (std::int64_t by = 0; by < out_h; ++by) {
              for (std::int64_t bx = 0; bx < out_w; ++bx) {
                const auto [y0, y1] = rows[by];
                const auto [x0, x1] = cols[bx];
                T share = src[by * out_w + bx] / static_cast<T>((y1 - y0) * (x1 - x0));
                for (std::int64_t iy = y0; iy < y1; ++iy) {
                  for (std::int64_t ix = x0; ix < x1; ++ix) plane[iy * w + ix] += share;
                }
              }
            }
          }
        });
  });
}

Tensor resize_bilinear(const Tensor& x, std::int64_t out_h, std::int64_t out_w) {
  constexpr std::string_view op = "resize_bilinear";
  detail::require_rank(x, 4, op, "input");
  if (out_h < 1 || out_w < 1) throw DimensionError("resize_bilinear: empty output size");
  const std::int64_t n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  auto ty = bilinear_taps(h, out_h);
  auto tx = bilinear_taps(w, out_w);

  return dispatch(x.dtype(), [&]<typename T>() {
    auto in = x.data<T>();
    std::vector<T> y(static_cast<std::size_t>(n * c * out_h * out_w));
    for (std::int64_t p = 0; p < n * c; ++p) {
      const T* plane = in.data() + p * h * w;
      T* dst = y.data() + p * out_h * out_w;
      for (std::int64_t oy = 0; oy < out_h; ++oy) {
        const Tap& a = ty[oy];
        const T* r0 = plane + a.lo * w;
        const T* r1 = plane + a.hi * w;
        for (std::int64_t ox = 0; ox < out_w; ++ox) {
          const Tap& b = tx[ox];
          // Lerp form reproduces constant inputs exactly.
          const T fx = static_cast<T>(b.w_hi);
          T top = r0[b.lo] + fx * (r0[b.hi] - r0[b.lo]);
          T bot = r1[b.lo] + fx * (r1[b.hi] - r1[b.lo]);
          dst[oy * out_w + ox] = top + static_cast<T>(a.w_hi) * (bot - top);
        }
      }
    }
    return detail::record<T>(
        op, {n, c, out_h, out_w}, std::move(y), {x},
        [x, ty, tx, n, c, h, w, out_h, out_w](const detail::TensorImpl& out) {
          auto dy = detail::grad_of<T>(out);
          auto dx = detail::grad_sink<T>(x);
          for (std::int64_t p = 0; p < n * c; ++p) {
            T* plane = dx.data() + p * h * w;
            const T* src = dy.data() + p * out_h * out_w;
            for (std::int64_t oy = 0; oy < out_h; ++oy) {
              const Tap& a = ty[oy];
              T* r0 = plane + a.lo * w;
              T* r1 = plane + a.hi * w;
              for (std::int64_t ox = 0; ox < out_w; ++ox) {
                const Tap& b = tx[ox];
                T g = src[oy * out_w + ox];
                T g0 = static_cast<T>(a.w_lo) * g, g1 = static_cast<T>(a.w_hi) * g;
                r0[b.lo] += static_cast<T>(b.w_lo) * g0;
                r0[b.hi] += static_cast<T>(b.w_hi) * g0;
                r1[b.lo] += static_cast<T>(b.w_lo) * g1;
                r1[b.hi] += static_cast<T>(b.w_hi) * g1;
              }
            }
          }
        });
  });
}

Tensor bilinear_upsample(const Tensor& x, int factor) {
  if (factor < 1) throw UsageError("bilinear_upsample: factor must be >= 1");
  detail::require_rank(x, 4, "bilinear_upsample", "input");
  return resize_bilinear(x, x.dim(2) * factor, x.dim(3) * factor);
}

namespace {

// One zero-padded pass of a symmetric kernel over every plane; `stride` is the
// distance between neighbouring taps (1 for rows, w for columns).
template <class T>
void blur_pass(const T* in, T* out, std::int64_t planes, std::int64_t h, std::int64_t w,
               const std::vector<T>& k, bool vertical) {
  const std::int64_t r = static_cast<std::int64_t>(k.size()) / 2;
  parallel_for(planes, [&](std::int64_t p) {
    const T* src = in + p * h * w;
    T* dst = out + p * h * w;
    for (std::int64_t y = 0; y < h; ++y) {
      for (std::int64_t x = 0; x < w; ++x) {
        T acc = 0;
        if (vertical) {
          const std::int64_t lo = std::max<std::int64_t>(-r, -y), hi = std::min<std::int64_t>(r, h - 1 - y);
          for (std::int64_t d = lo; d <= hi; ++d) acc += k[d + r] * src[(y + d) * w + x];
        } else {
          const std::int64_t lo = std::max<std::int64_t>(-r, -x), hi = std::min<std::int64_t>(r, w - 1 - x);
          for (std::int64_t d = lo; d <= hi; ++d) acc += k[d + r] * src[y * w + x + d];
        }
        dst[y * w + x] = acc;
      }
    }
  });
}

template <class T>
std::vector<T> blur2d(std::span<const T> in, std::int64_t planes, std::int64_t h, std::int64_t w,
                      const std::vector<T>& k) {
  std::vector<T> tmp(in.size()), out(in.size());
  blur_pass(in.data(), tmp.data(), planes, h, w, k, false);
  blur_pass(tmp.data(), out.data(), planes, h, w, k, true);
  return out;
}

}  // namespace

Tensor separable_blur(const Tensor& x, const std::vector<double>& taps) {
  constexpr std::string_view op = "separable_blur";
  detail::require_rank(x, 4, op, "input");
  if (taps.size() % 2 != 1) throw DimensionError("separable_blur: kernel length must be odd");
  for (std::size_t i = 0; i < taps.size(); ++i) {
    if (taps[i] != taps[taps.size() - 1 - i]) throw UsageError("separable_blur: kernel must be symmetric");
  }
  const std::int64_t planes = x.dim(0) * x.dim(1), h = x.dim(2), w = x.dim(3);
  const auto r = static_cast<std::int64_t>(taps.size()) / 2;

  return dispatch(x.dtype(), [&]<typename T>() {
    std::vector<T> k(taps.begin(), taps.end());
    std::vector<T> y = blur2d<T>(x.data<T>(), planes, h, w, k);
    // zero-padded correlation with a symmetric kernel is self-adjoint
    return detail::record<T>(op, x.shape(), std::move(y), {x},
                             [x, planes, h, w, k](const detail::TensorImpl& out) {
                               auto dy = detail::grad_of<T>(out);
                               auto dx = detail::grad_sink<T>(x);
                               if (dx.empty()) return;
                               std::vector<T> g = blur2d<T>(dy, planes, h, w, k);
                               for (std::size_t i = 0; i < g.size(); ++i) dx[i] += g[i];
                             });
  });
}

}  // namespace deft
