#include <Eigen/Core>
#include <algorithm>

#include "deft/core/ops.hpp"
#include "deft/core/parallel.hpp"
#include "op_util.hpp"

namespace deft {

namespace {

template <class T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <class T>
using MapMat = Eigen::Map<RowMat<T>>;
template <class T>
using ConstMapMat = Eigen::Map<const RowMat<T>>;

struct ConvGeometry {
  std::int64_t n, c_in, h, w;
  std::int64_t c_out, k, ho, wo;
  int stride, pad, groups;
  std::int64_t cin_g() const { return c_in / groups; }
  std::int64_t cout_g() const { return c_out / groups; }
  std::int64_t col_rows() const { return cin_g() * k * k; }
  std::int64_t pixels() const { return ho * wo; }
  bool pointwise() const { return k == 1 && stride == 1 && pad == 0; }
  bool depthwise() const { return groups == c_in && c_out == c_in; }
};

// col: [channels * k * k, ho * wo]
template <class T>
void im2col(const T* img, std::int64_t channels, const ConvGeometry& g, T* col) {
  const std::int64_t p = g.pixels();
  for (std::int64_t c = 0; c < channels; ++c) {
    const T* plane = img + c * g.h * g.w;
    for (std::int64_t ky = 0; ky < g.k; ++ky) {
      for (std::int64_t kx = 0; kx < g.k; ++kx) {
        T* row = col + ((c * g.k + ky) * g.k + kx) * p;
        for (std::int64_t oy = 0; oy < g.ho; ++oy) {
          std::int64_t iy = oy * g.stride - g.pad + ky;
          T* dst = row + oy * g.wo;
          if (iy < 0 || iy >= g.h) {
            std::fill(dst, dst + g.wo, T(0));
            continue;
          }
          const T* src = plane + iy * g.w;
          for (std::int64_t ox = 0; ox < g.wo; ++ox) {
            std::int64_t ix = ox * g.stride - g.pad + kx;
            dst[ox] = (ix >= 0 && ix < g.w) ? src[ix] : T(0);
          }
        }
      }
    }
  }
}

template <class T>
void col2im(const T* col, std::int64_t channels, const ConvGeometry& g, T* img) {
  const std::int64_t p = g.pixels();
  for (std::int64_t c = 0; c < channels; ++c) {
    T* plane = img + c * g.h * g.w;
    for (std::int64_t ky = 0; ky < g.k; ++ky) {
      for (std::int64_t kx = 0; kx < g.k; ++kx) {
        const T* row = col + ((c * g.k + ky) * g.k + kx) * p;
        for (std::int64_t oy = 0; oy < g.ho; ++oy) {
          std::int64_t iy = oy * g.stride - g.pad + ky;
          if (iy < 0 || iy >= g.h) continue;
          const T* src = row + oy * g.wo;
          T* dst = plane + iy * g.w;
          for (std::int64_t ox = 0; ox < g.wo; ++ox) {
            std::int64_t ix = ox * g.stride - g.pad + kx;
            if (ix >= 0 && ix < g.w) dst[ix] += src[ox];
          }
        }
      }
    }
  }
}

template <class T>
void depthwise_forward(const T* x, const T* w, const T* b, const ConvGeometry& g, T* y) {
  parallel_for(g.n * g.c_in, [&](std::int64_t nc) {
    std::int64_t c = nc % g.c_in;
    const T* plane = x + nc * g.h * g.w;
    const T* kern = w + c * g.k * g.k;
    T* out = y + nc * g.pixels();
    T bias = b ? b[c] : T(0);
    for (std::int64_t oy = 0; oy < g.ho; ++oy) {
      for (std::int64_t ox = 0; ox < g.wo; ++ox) {
        T acc = bias;
        for (std::int64_t ky = 0; ky < g.k; ++ky) {
          std::int64_t iy = oy * g.stride - g.pad + ky;
          if (iy < 0 || iy >= g.h) continue;
          for (std::int64_t kx = 0; kx < g.k; ++kx) {
            std::int64_t ix = ox * g.stride - g.pad + kx;
            if (ix < 0 || ix >= g.w) continue;
            acc += kern[ky * g.k + kx] * plane[iy * g.w + ix];
          }
        }
        out[oy * g.wo + ox] = acc;
      }
    }
  });
}

// Weight gradients are accumulated per sample and reduced in sample order so
// the result does not depend on the thread count.
template <class T>
void depthwise_backward(const T* x, const T* w, const T* dy, const ConvGeometry& g, T* dx,
                        T* dw) {
  const std::int64_t kk = g.k * g.k;
  std::vector<T> dw_parts(dw ? static_cast<std::size_t>(g.n * g.c_in * kk) : 0, T(0));
  parallel_for(g.n * g.c_in, [&](std::int64_t nc) {
    std::int64_t c = nc % g.c_in;
    const T* plane = x + nc * g.h * g.w;
    const T* kern = w + c * kk;
    const T* grad = dy + nc * g.pixels();
    T* dplane = dx ? dx + nc * g.h * g.w : nullptr;
    T* dkern = dw ? dw_parts.data() + nc * kk : nullptr;
    for (std::int64_t oy = 0; oy < g.ho; ++oy) {
      for (std::int64_t ox = 0; ox < g.wo; ++ox) {
        T go = grad[oy * g.wo + ox];
        for (std::int64_t ky = 0; ky < g.k; ++ky) {
          std::int64_t iy = oy * g.stride - g.pad + ky;
          if (iy < 0 || iy >= g.h) continue;
          for (std::int64_t kx = 0; kx < g.k; ++kx) {
            std::int64_t ix = ox * g.stride - g.pad + kx;
            if (ix < 0 || ix >= g.w) continue;
            if (dplane) dplane[iy * g.w + ix] += kern[ky * g.k + kx] * go;
            if (dkern) dkern[ky * g.k + kx] += plane[iy * g.w + ix] * go;
          }
        }
      }
    }
  });
  if (dw) {
    for (std::int64_t n = 0; n < g.n; ++n) {
      for (std::int64_t i = 0; i < g.c_in * kk; ++i) dw[i] += dw_parts[n * g.c_in * kk + i];
    }
  }
}

template <class T>
void dense_forward(const T* x, const T* w, const T* b, const ConvGeometry& g, T* y) {
  const std::int64_t rows = g.col_rows(), p = g.pixels();
  parallel_for(g.n, [&](std::int64_t n) {
    std::vector<T> col(g.pointwise() ? 0 : static_cast<std::size_t>(rows * p));
    for (int grp = 0; grp < g.groups; ++grp) {
      const T* img = x + (n * g.c_in + grp * g.cin_g()) * g.h * g.w;
      const T* src = img;
      if (!g.pointwise()) {
        im2col(img, g.cin_g(), g, col.data());
        src = col.data();
      }
      ConstMapMat<T> wm(w + grp * g.cout_g() * rows, g.cout_g(), rows);
      ConstMapMat<T> cm(src, rows, p);
      MapMat<T> ym(y + (n * g.c_out + grp * g.cout_g()) * p, g.cout_g(), p);
      ym.noalias() = wm * cm;
      if (b) {
        for (std::int64_t o = 0; o < g.cout_g(); ++o) ym.row(o).array() += b[grp * g.cout_g() + o];
      }
    }
  });
}

template <class T>
void dense_backward(const T* x, const T* w, const T* dy, const ConvGeometry& g, T* dx, T* dw) {
  const std::int64_t rows = g.col_rows(), p = g.pixels();
  const std::int64_t wsize = g.c_out * rows;
  std::vector<T> dw_parts(dw ? static_cast<std::size_t>(g.n * wsize) : 0, T(0));
  parallel_for(g.n, [&](std::int64_t n) {
    std::vector<T> col(g.pointwise() ? 0 : static_cast<std::size_t>(rows * p));
    for (int grp = 0; grp < g.groups; ++grp) {
      const std::int64_t in_off = (n * g.c_in + grp * g.cin_g()) * g.h * g.w;
      ConstMapMat<T> wm(w + grp * g.cout_g() * rows, g.cout_g(), rows);
      ConstMapMat<T> gm(dy + (n * g.c_out + grp * g.cout_g()) * p, g.cout_g(), p);
      if (dw) {
        const T* src = x + in_off;
        if (!g.pointwise()) {
          im2col(x + in_off, g.cin_g(), g, col.data());
          src = col.data();
        }
        ConstMapMat<T> cm(src, rows, p);
        MapMat<T> dwm(dw_parts.data() + n * wsize + grp * g.cout_g() * rows, g.cout_g(), rows);
        dwm.noalias() = gm * cm.transpose();
      }
      if (dx) {
        if (g.pointwise()) {
          MapMat<T> dxm(dx + in_off, rows, p);
          dxm.noalias() += wm.transpose() * gm;
        } else {
          MapMat<T> cm(col.data(), rows, p);
          cm.noalias() = wm.transpose() * gm;
          col2im(col.data(), g.cin_g(), g, dx + in_off);
        }
      }
    }
  });
  if (dw) {
    for (std::int64_t n = 0; n < g.n; ++n) {
      for (std::int64_t i = 0; i < wsize; ++i) dw[i] += dw_parts[n * wsize + i];
    }
  }
}

}  // namespace

std::int64_t conv_output_size(std::int64_t in, int kernel, int stride, int padding) {
  std::int64_t span = in - kernel + 2 * padding;
  if (span < 0) return 0;
  return span / stride + 1;
}

Tensor conv2d(const Tensor& x, const Tensor& weight, const Tensor& bias, Conv2dOptions opt) {
  constexpr std::string_view op = "conv2d";
  detail::require_rank(x, 4, op, "input");
  detail::require_rank(weight, 4, op, "weight");
  detail::require_same_dtype(x, weight, op);
  detail::require_same_dtype(x, bias, op);
  if (opt.stride < 1 || opt.padding < 0 || opt.groups < 1) {
    throw UsageError("conv2d: stride must be >= 1, padding >= 0, groups >= 1");
  }
  ConvGeometry g{x.dim(0), x.dim(1), x.dim(2), x.dim(3), weight.dim(0), weight.dim(2), 0, 0,
                 opt.stride, opt.padding, opt.groups};
  if (weight.dim(3) != g.k) throw DimensionError("conv2d: only square kernels are supported");
  if (g.c_in % g.groups != 0 || g.c_out % g.groups != 0) {
    throw DimensionError("conv2d: channels " + std::to_string(g.c_in) + "->" +
                         std::to_string(g.c_out) + " not divisible by groups " +
                         std::to_string(g.groups));
  }
  if (weight.dim(1) != g.cin_g()) {
    throw DimensionError("conv2d: weight " + shape_str(weight.shape()) + " does not match input " +
                         shape_str(x.shape()) + " with groups " + std::to_string(g.groups));
  }
  if (bias.defined() && (bias.rank() != 1 || bias.dim(0) != g.c_out)) {
    throw DimensionError("conv2d: bias must have shape [" + std::to_string(g.c_out) + "]");
  }
  g.ho = conv_output_size(g.h, static_cast<int>(g.k), g.stride, g.pad);
  g.wo = conv_output_size(g.w, static_cast<int>(g.k), g.stride, g.pad);
  if (g.ho < 1 || g.wo < 1) {
    throw DegenerateOutputError("conv2d: input " + shape_str(x.shape()) + " with kernel " +
                                std::to_string(g.k) + " yields an empty output");
  }
  detail::add_flops(2 * g.n * g.c_out * g.pixels() * g.col_rows());

  return dispatch(x.dtype(), [&]<typename T>() {
    std::vector<T> y(static_cast<std::size_t>(g.n * g.c_out * g.pixels()));
    const T* bptr = bias.defined() ? bias.data<T>().data() : nullptr;
    if (g.depthwise()) {
      depthwise_forward(x.data<T>().data(), weight.data<T>().data(), bptr, g, y.data());
    } else {
      dense_forward(x.data<T>().data(), weight.data<T>().data(), bptr, g, y.data());
    }
    return detail::record<T>(
        op, {g.n, g.c_out, g.ho, g.wo}, std::move(y), {x, weight, bias},
        [x, weight, bias, g](const detail::TensorImpl& out) {
          auto dy = detail::grad_of<T>(out);
          auto dx = detail::grad_sink<T>(x);
          auto dw = detail::grad_sink<T>(weight);
          auto db = detail::grad_sink<T>(bias);
          T* dxp = dx.empty() ? nullptr : dx.data();
          T* dwp = dw.empty() ? nullptr : dw.data();
          if (dxp || dwp) {
            if (g.depthwise()) {
              depthwise_backward(x.data<T>().data(), weight.data<T>().data(), dy.data(), g, dxp, dwp);
            } else {
              dense_backward(x.data<T>().data(), weight.data<T>().data(), dy.data(), g, dxp, dwp);
            }
          }
          if (!db.empty()) {
            for (std::int64_t n = 0; n < g.n; ++n) {
              for (std::int64_t c = 0; c < g.c_out; ++c) {
                const T* row = dy.data() + (n * g.c_out + c) * g.pixels();
                T acc = 0;
                for (std::int64_t i = 0; i < g.pixels(); ++i) acc += row[i];
                db[c] += acc;
              }
            }
          }
        });
  });
}

}  // namespace deft
