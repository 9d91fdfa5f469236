#pragma once

#include "deft/core/rng.hpp"
#include "deft/data/sample.hpp"

namespace deft {

// [C, H, W] resampling without graph tracking.
Tensor resize_image(const Tensor& chw, std::int64_t out_h, std::int64_t out_w);
// Nearest neighbour: source index floor((d + 0.5) * in / out).
Tensor resize_nearest(const Tensor& chw, std::int64_t out_h, std::int64_t out_w);
Tensor crop(const Tensor& chw, std::int64_t top, std::int64_t left, std::int64_t h, std::int64_t w);

// Bilinear image / nearest mask resize to resize_to, then one random
// crop_to x crop_to window applied to both.
Sample augment_train(const Sample& s, Rng& rng, int resize_to = 256, int crop_to = 224);

// Deterministic resize to size x size.
Sample prepare_eval(const Sample& s, int size = 256);

}  // namespace deft
