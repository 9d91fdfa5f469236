#pragma once

#include "deft/model/deft_model.hpp"
#include "deft/train/train_config.hpp"

namespace deft {

inline constexpr double kBceEpsilon = 1e-7;
// Added to the IoU denominator so an empty prediction on an empty mask stays finite.
inline constexpr double kIouEpsilon = 1e-7;

// Scalar graph tensors; `total` is the weighted sum of the unweighted terms.
struct LossTerms {
  Tensor total, bce, ssim, iou;
};

// Mean BCE over all pixels, prediction clamped to [eps, 1 - eps].
Tensor bce_loss(const Tensor& pred, const Tensor& target);
// The same quantity from pre-sigmoid values, mean(softplus(z) - t z). No clamp
// is needed, and the gradient sigmoid(z) - t survives saturated pixels.
Tensor bce_with_logits(const Tensor& logits, const Tensor& target);
// 1 - mean SSIM map; 11x11 Gaussian window (sigma 1.5), zero padding,
// C1 = 0.01^2, C2 = 0.03^2.
Tensor ssim_loss(const Tensor& pred, const Tensor& target);
// Batch mean of 1 - sum(PG) / (sum(P) + sum(G) - sum(PG)) per image.
Tensor iou_loss(const Tensor& pred, const Tensor& target);

// pred, target: [N, 1, H, W]; pred must lie in [0, 1].
LossTerms hybrid_loss(const Tensor& pred, const Tensor& target, const LossWeights& w = {});
// As above with the BCE term taken from `logits`, where pred = sigmoid(logits).
LossTerms hybrid_loss(const Tensor& pred, const Tensor& logits, const Tensor& target, const LossWeights& w);

// Sum of hybrid losses over the final prediction and every side output, using
// the logits when the output carries them; the term fields are summed the
// same way.
LossTerms deep_supervised_loss(const ModelOutput& out, const Tensor& target, const LossWeights& w = {});

// The normalized 11x11 window, row-major.
std::vector<double> ssim_window();

}  // namespace deft
