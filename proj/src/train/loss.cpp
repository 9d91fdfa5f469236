#include "deft/train/loss.hpp"

#include <cmath>

#include "deft/core/autograd.hpp"
#include "deft/core/errors.hpp"
#include "deft/core/ops.hpp"

namespace deft {

namespace {

constexpr int kWindow = 11;
constexpr double kSigma = 1.5;
constexpr double kC1 = 0.01 * 0.01;
constexpr double kC2 = 0.03 * 0.03;

void check_pair(const Tensor& pred, const Tensor& target, const char* what) {
  if (pred.rank() != 4 || pred.dim(1) != 1) {
    throw DimensionError(std::string(what) + ": prediction must be [N, 1, H, W], got " + shape_str(pred.shape()));
  }
  if (pred.shape() != target.shape()) {
    throw DimensionError(std::string(what) + ": prediction " + shape_str(pred.shape()) + " vs target " +
                         shape_str(target.shape()));
  }
  if (pred.dtype() != target.dtype()) throw DimensionError(std::string(what) + ": dtype mismatch");
}

std::vector<double> gaussian_taps() {
  std::vector<double> g(kWindow);
  double total = 0;
  for (int i = 0; i < kWindow; ++i) {
    const double d = i - kWindow / 2;
    g[i] = std::exp(-d * d / (2 * kSigma * kSigma));
    total += g[i];
  }
  for (double& v : g) v /= total;
  return g;
}

// The 2D window is the outer product of the 1D taps, so blurring separably
// equals correlating with the full 11x11 window.
Tensor blur(const Tensor& x) {
  static const std::vector<double> taps = gaussian_taps();
  return separable_blur(x, taps);
}

}  // namespace

std::vector<double> ssim_window() {
  const auto g = gaussian_taps();
  std::vector<double> w(kWindow * kWindow);
  for (int i = 0; i < kWindow; ++i)
    for (int j = 0; j < kWindow; ++j) w[i * kWindow + j] = g[i] * g[j];
  return w;
}

Tensor bce_loss(const Tensor& pred, const Tensor& target) {
  check_pair(pred, target, "bce_loss");
  const Tensor p = clamp(pred, kBceEpsilon, 1 - kBceEpsilon);
  const Tensor one_minus_t = add_scalar(scale(target, -1), 1);
  const Tensor one_minus_p = add_scalar(scale(p, -1), 1);
  return scale(mean(target * log(p) + one_minus_t * log(one_minus_p)), -1);
}

Tensor bce_with_logits(const Tensor& logits, const Tensor& target) {
  check_pair(logits, target, "bce_with_logits");
  return mean(softplus(logits) - logits * target);
}

Tensor ssim_loss(const Tensor& pred, const Tensor& target) {
  check_pair(pred, target, "ssim_loss");
  const Tensor mu_x = blur(pred);
  Tensor mu_y, sigma_y2;
  {
    NoGradGuard no_grad;  // target statistics are constants
    mu_y = blur(target);
    sigma_y2 = blur(square(target)) - square(mu_y);
  }
  const Tensor sigma_x2 = blur(square(pred)) - square(mu_x);
  const Tensor sigma_xy = blur(pred * target) - mu_x * mu_y;
  const Tensor num = (2 * (mu_x * mu_y) + kC1) * (2 * sigma_xy + kC2);
  const Tensor den = (square(mu_x) + square(mu_y) + kC1) * (sigma_x2 + sigma_y2 + kC2);
  return add_scalar(scale(mean(num / den), -1), 1);
}

Tensor iou_loss(const Tensor& pred, const Tensor& target) {
  check_pair(pred, target, "iou_loss");
  const std::int64_t n = pred.dim(0);
  const std::int64_t hw = pred.dim(2) * pred.dim(3);
  const Tensor p = reshape(pred, {n, hw});
  const Tensor g = reshape(target, {n, hw});
  const Tensor inter = sum(p * g, 1);
  const Tensor uni = sum(p, 1) + sum(g, 1) - inter;
  return add_scalar(scale(mean(inter / add_scalar(uni, kIouEpsilon)), -1), 1);
}

namespace {

LossTerms hybrid_impl(const Tensor& pred, const Tensor& logits, const Tensor& target, const LossWeights& w) {
  check_pair(pred, target, "hybrid_loss");
  dispatch(pred.dtype(), [&]<typename T>() {
    for (T v : pred.data<T>()) {
      if (!(v >= 0 && v <= 1)) throw NumericError("hybrid_loss: prediction outside [0, 1]");
    }
  });
  LossTerms t;
  t.bce = logits.defined() ? bce_with_logits(logits, target) : bce_loss(pred, target);
  t.ssim = ssim_loss(pred, target);
  t.iou = iou_loss(pred, target);
  t.total = scale(t.bce, w.bce) + scale(t.ssim, w.ssim) + scale(t.iou, w.iou);
  return t;
}

}  // namespace

LossTerms hybrid_loss(const Tensor& pred, const Tensor& target, const LossWeights& w) {
  return hybrid_impl(pred, Tensor{}, target, w);
}

LossTerms hybrid_loss(const Tensor& pred, const Tensor& logits, const Tensor& target, const LossWeights& w) {
  if (!logits.defined()) throw UsageError("hybrid_loss: logits undefined");
  return hybrid_impl(pred, logits, target, w);
}

LossTerms deep_supervised_loss(const ModelOutput& out, const Tensor& target, const LossWeights& w) {
  LossTerms acc = hybrid_impl(out.pred, out.logits, target, w);
  for (int i = 0; i < 4; ++i) {
    const LossTerms t = hybrid_impl(out.side_outputs[i], out.side_logits[i], target, w);
    acc.total = acc.total + t.total;
    acc.bce = acc.bce + t.bce;
    acc.ssim = acc.ssim + t.ssim;
    acc.iou = acc.iou + t.iou;
  }
  return acc;
}

}  // namespace deft
