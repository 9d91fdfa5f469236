#pragma once

#include <string>
#include <vector>

#include "deft/core/tensor.hpp"

namespace deft {

struct Sample {
  Tensor image;  // [3, H, W] float32 in [0, 1]
  Tensor mask;   // [1, H, W] float32 in {0, 1}
  std::string id;
};

struct Batch {
  Tensor images;  // [N, 3, H, W]
  Tensor masks;   // [N, 1, H, W]
};

// Stacks samples[indices] into a batch; all must share one spatial size.
Batch make_batch(const std::vector<Sample>& samples, const std::vector<std::size_t>& indices,
                 DType dtype = DType::kFloat32);

}  // namespace deft
