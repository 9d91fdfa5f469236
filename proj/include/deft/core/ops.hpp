#pragma once

#include <cstdint>
#include <vector>

#include "deft/core/tensor.hpp"

namespace deft {

// ---- convolution, pooling, resampling ------------------------------------

struct Conv2dOptions {
  int stride = 1;
  int padding = 0;
  int groups = 1;
};

// floor((in - kernel + 2 * padding) / stride) + 1; may be < 1 for degenerate
// geometries, which conv2d rejects.
std::int64_t conv_output_size(std::int64_t in, int kernel, int stride, int padding);

// x: [N, C_in, H, W]; weight: [C_out, C_in / groups, k, k]; bias: [C_out] or
// undefined. Zero padding.
Tensor conv2d(const Tensor& x, const Tensor& weight, const Tensor& bias,
              Conv2dOptions options = {});

// Bin b along an axis of length n covers [floor(b n / out), ceil((b + 1) n / out)).
Tensor adaptive_avg_pool2d(const Tensor& x, std::int64_t out_h, std::int64_t out_w);

// Half-pixel (align_corners = false) bilinear resampling of [N, C, H, W].
Tensor resize_bilinear(const Tensor& x, std::int64_t out_h, std::int64_t out_w);
Tensor bilinear_upsample(const Tensor& x, int factor);

// Per-channel separable smoothing of [N, C, H, W] with zero padding: rows and
// then columns are correlated with `taps` (odd length, symmetric), output
// size equals input size.
Tensor separable_blur(const Tensor& x, const std::vector<double>& taps);

// ---- dense algebra --------------------------------------------------------

// x: [..., D_in]; weight: [D_in, D_out]; bias: [D_out] or undefined.
Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias);

// Batched product over identical leading dims: [..., M, K] x [..., K, N].
// With transpose_b, b is laid out as [..., N, K].
Tensor matmul(const Tensor& a, const Tensor& b, bool transpose_b = false);

// ---- normalization --------------------------------------------------------

Tensor softmax(const Tensor& x, int axis);

// Normalizes over the last dimension.
Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps = 1e-5);

// Per-channel normalization of [N, C, H, W]. In training mode batch statistics
// are used and the running estimates are updated in place (unbiased variance);
// otherwise the running estimates are used.
Tensor batch_norm2d(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                    Tensor& running_mean, Tensor& running_var, bool training,
                    double momentum = 0.1, double eps = 1e-5);

// ---- activations ----------------------------------------------------------

Tensor relu(const Tensor& x);
// Exact form x * Phi(x).
Tensor gelu(const Tensor& x);
Tensor sigmoid(const Tensor& x);
// log(1 + e^x), evaluated without overflow.
Tensor softplus(const Tensor& x);

// ---- layout ---------------------------------------------------------------

Tensor reshape(const Tensor& x, Shape shape);
Tensor permute(const Tensor& x, const std::vector<int>& order);
Tensor concat(const std::vector<Tensor>& xs, int axis);
// [N, C, H, W] -> [N, H*W, C]
Tensor img2seq(const Tensor& x);
// [N, h*w, C] -> [N, C, h, w]
Tensor seq2img(const Tensor& x, std::int64_t h, std::int64_t w);

// ---- elementwise ----------------------------------------------------------

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor div(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& x, double factor);
Tensor add_scalar(const Tensor& x, double value);
Tensor square(const Tensor& x);
Tensor log(const Tensor& x);
// Gradient passes where lo <= x <= hi.
Tensor clamp(const Tensor& x, double lo, double hi);

// ---- reductions -----------------------------------------------------------

Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);
// Reduces one axis, removing it from the shape.
Tensor sum(const Tensor& x, int axis);

inline Tensor operator+(const Tensor& a, const Tensor& b) { return add(a, b); }
inline Tensor operator-(const Tensor& a, const Tensor& b) { return sub(a, b); }
inline Tensor operator*(const Tensor& a, const Tensor& b) { return mul(a, b); }
inline Tensor operator/(const Tensor& a, const Tensor& b) { return div(a, b); }
inline Tensor operator*(const Tensor& a, double s) { return scale(a, s); }
inline Tensor operator*(double s, const Tensor& a) { return scale(a, s); }
inline Tensor operator+(const Tensor& a, double s) { return add_scalar(a, s); }
inline Tensor operator+(double s, const Tensor& a) { return add_scalar(a, s); }

}  // namespace deft
