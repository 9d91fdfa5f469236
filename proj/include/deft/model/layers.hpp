#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "deft/core/ops.hpp"
#include "deft/core/rng.hpp"
#include "deft/core/tensor.hpp"

namespace deft {

struct NamedTensor {
  std::string name;
  Tensor tensor;
};

// Registry of trainable parameters and non-trainable buffers (BatchNorm
// running statistics), in construction order.
class ParamStore {
 public:
  Tensor add_param(std::string name, Tensor value);
  Tensor add_buffer(std::string name, Tensor value);

  const std::vector<NamedTensor>& params() const { return params_; }
  const std::vector<NamedTensor>& buffers() const { return buffers_; }
  // Parameter or buffer by name; undefined tensor when absent.
  Tensor find(const std::string& name) const;

  std::int64_t param_count() const;
  void zero_grad();

 private:
  std::vector<NamedTensor> params_;
  std::vector<NamedTensor> buffers_;
};

// Creates parameters in a ParamStore with the project's initialization rules.
class Initializer {
 public:
  Initializer(ParamStore& store, std::uint64_t seed, DType dtype)
      : store_(store), rng_(seed), dtype_(dtype) {}

  // Normal(0, sqrt(2 / fan_out)), fan_out = k * k * out / groups.
  Tensor conv_weight(const std::string& name, int out, int in_per_group, int k, int groups);
  // Truncated normal, std 0.02. Used for the 1-channel prediction heads, where
  // the fan-out rule saturates the sigmoid at init, and for the LPB depthwise
  // conv, which sits on the residual stream and would otherwise roughly
  // triple the activation variance in every block.
  Tensor small_conv_weight(const std::string& name, int out, int in_per_group, int k);
  // Truncated normal, std 0.02. Laid out [in, out].
  Tensor linear_weight(const std::string& name, int in, int out);
  Tensor constant(const std::string& name, std::int64_t size, double value);
  Tensor buffer(const std::string& name, std::int64_t size, double value);

  DType dtype() const { return dtype_; }

 private:
  ParamStore& store_;
  Rng rng_;
  DType dtype_;
};

struct Conv2d {
  Tensor weight, bias;
  Conv2dOptions options;

  Conv2d() = default;
  Conv2d(Initializer& init, const std::string& name, int in, int out, int k, int stride,
         int padding, int groups = 1);
  // Stride-1 same-padding conv with small_conv_weight init.
  static Conv2d small(Initializer& init, const std::string& name, int in, int out, int k, int groups = 1);
  // 3x3 conv to one channel.
  static Conv2d head(Initializer& init, const std::string& name, int in);
  Tensor operator()(const Tensor& x) const { return conv2d(x, weight, bias, options); }
};

struct Linear {
  Tensor weight, bias;

  Linear() = default;
  Linear(Initializer& init, const std::string& name, int in, int out);
  Tensor operator()(const Tensor& x) const { return linear(x, weight, bias); }
};

struct LayerNorm {
  Tensor gamma, beta;

  LayerNorm() = default;
  LayerNorm(Initializer& init, const std::string& name, int channels);
  Tensor operator()(const Tensor& x) const { return layer_norm(x, gamma, beta); }
};

struct BatchNorm2d {
  Tensor gamma, beta, running_mean, running_var;

  BatchNorm2d() = default;
  BatchNorm2d(Initializer& init, const std::string& name, int channels);
  Tensor operator()(const Tensor& x, bool training) {
    return batch_norm2d(x, gamma, beta, running_mean, running_var, training);
  }
};

}  // namespace deft
