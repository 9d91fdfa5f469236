#include "deft/data/transforms.hpp"

#include <algorithm>

#include "deft/core/autograd.hpp"
#include "deft/core/errors.hpp"
#include "deft/core/ops.hpp"

namespace deft {

namespace {

void require_chw(const Tensor& t, const char* what) {
  if (t.rank() != 3) throw DimensionError(std::string(what) + ": expected [C, H, W], got " + shape_str(t.shape()));
}

}  // namespace

Tensor resize_image(const Tensor& chw, std::int64_t out_h, std::int64_t out_w) {
  require_chw(chw, "resize_image");
  if (chw.dim(1) == out_h && chw.dim(2) == out_w) return chw;
  NoGradGuard no_grad;
  Tensor x = reshape(chw, {1, chw.dim(0), chw.dim(1), chw.dim(2)});
  return reshape(resize_bilinear(x, out_h, out_w), {chw.dim(0), out_h, out_w});
}

Tensor resize_nearest(const Tensor& chw, std::int64_t out_h, std::int64_t out_w) {
  require_chw(chw, "resize_nearest");
  const std::int64_t c = chw.dim(0), h = chw.dim(1), w = chw.dim(2);
  return dispatch(chw.dtype(), [&]<typename T>() {
    auto in = chw.data<T>();
    std::vector<T> out(static_cast<std::size_t>(c * out_h * out_w));
    for (std::int64_t ch = 0; ch < c; ++ch)
      for (std::int64_t y = 0; y < out_h; ++y) {
        const std::int64_t sy = std::min(h - 1, (2 * y + 1) * h / (2 * out_h));
        for (std::int64_t x = 0; x < out_w; ++x) {
          const std::int64_t sx = std::min(w - 1, (2 * x + 1) * w / (2 * out_w));
          out[(ch * out_h + y) * out_w + x] = in[(ch * h + sy) * w + sx];
        }
      }
    return Tensor::from_buffer<T>({c, out_h, out_w}, std::move(out));
  });
}

Tensor crop(const Tensor& chw, std::int64_t top, std::int64_t left, std::int64_t h, std::int64_t w) {
  require_chw(chw, "crop");
  const std::int64_t c = chw.dim(0), H = chw.dim(1), W = chw.dim(2);
  if (top < 0 || left < 0 || top + h > H || left + w > W || h < 1 || w < 1) {
    throw DimensionError("crop window outside " + shape_str(chw.shape()));
  }
  return dispatch(chw.dtype(), [&]<typename T>() {
    auto in = chw.data<T>();
    std::vector<T> out(static_cast<std::size_t>(c * h * w));
    for (std::int64_t ch = 0; ch < c; ++ch)
      for (std::int64_t y = 0; y < h; ++y)
        std::copy_n(in.begin() + ((ch * H + top + y) * W + left), w, out.begin() + (ch * h + y) * w);
    return Tensor::from_buffer<T>({c, h, w}, std::move(out));
  });
}

Sample augment_train(const Sample& s, Rng& rng, int resize_to, int crop_to) {
  if (crop_to < 1 || crop_to > resize_to) throw UsageError("augment_train: need 1 <= crop_to <= resize_to");
  Tensor img = resize_image(s.image, resize_to, resize_to);
  Tensor mask = resize_nearest(s.mask, resize_to, resize_to);
  const std::int64_t top = rng.uniform_int(0, resize_to - crop_to);
  const std::int64_t left = rng.uniform_int(0, resize_to - crop_to);
  return {crop(img, top, left, crop_to, crop_to), crop(mask, top, left, crop_to, crop_to), s.id};
}

Sample prepare_eval(const Sample& s, int size) {
  return {resize_image(s.image, size, size), resize_nearest(s.mask, size, size), s.id};
}

Batch make_batch(const std::vector<Sample>& samples, const std::vector<std::size_t>& indices, DType dtype) {
  if (indices.empty()) throw UsageError("make_batch: no samples");
  const Sample& first = samples.at(indices[0]);
  const std::int64_t h = first.image.dim(1), w = first.image.dim(2);
  const auto n = static_cast<std::int64_t>(indices.size());
  std::vector<double> img, msk;
  img.reserve(static_cast<std::size_t>(n * 3 * h * w));
  msk.reserve(static_cast<std::size_t>(n * h * w));
  for (auto i : indices) {
    const Sample& s = samples.at(i);
    if (s.image.shape() != Shape{3, h, w} || s.mask.shape() != Shape{1, h, w}) {
      throw DimensionError("make_batch: sample '" + s.id + "' has a different size");
    }
    auto a = s.image.to_vector(), b = s.mask.to_vector();
    img.insert(img.end(), a.begin(), a.end());
    msk.insert(msk.end(), b.begin(), b.end());
  }
  return {Tensor::from_values({n, 3, h, w}, img, dtype), Tensor::from_values({n, 1, h, w}, msk, dtype)};
}

}  // namespace deft
