#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "deft/core/tensor.hpp"

namespace deft {

// 8-bit interleaved image, 1 (gray) or 3 (RGB) channels.
struct Image8 {
  int width = 0, height = 0, channels = 0;
  std::vector<std::uint8_t> pixels;
};

// PNG (libpng), binary PGM (P5) or PPM (P6), chosen by extension. Alpha is
// dropped. Throws IoError on unreadable input.
Image8 read_image(const std::filesystem::path& path);
void write_image(const std::filesystem::path& path, const Image8& image);

bool is_supported_image(const std::filesystem::path& path);

// [C, H, W] float32 in [0, 1]; gray is replicated when `channels` is 3.
Tensor image_to_tensor(const Image8& image, int channels);
// Values are clamped to [0, 1] and rounded to 8 bits.
Image8 tensor_to_image(const Tensor& chw);

}  // namespace deft
