#include "deft/model/layers.hpp"

#include <cmath>

#include "deft/core/errors.hpp"

namespace deft {

Tensor ParamStore::add_param(std::string name, Tensor value) {
  if (find(name).defined()) throw UsageError("duplicate parameter name '" + name + "'");
  value.set_requires_grad(true);
  params_.push_back({std::move(name), value});
  return value;
}

Tensor ParamStore::add_buffer(std::string name, Tensor value) {
  if (find(name).defined()) throw UsageError("duplicate buffer name '" + name + "'");
  buffers_.push_back({std::move(name), value});
  return value;
}

Tensor ParamStore::find(const std::string& name) const {
  for (const auto* list : {&params_, &buffers_}) {
    for (const auto& p : *list) {
      if (p.name == name) return p.tensor;
    }
  }
  return {};
}

std::int64_t ParamStore::param_count() const {
  std::int64_t n = 0;
  for (const auto& p : params_) n += p.tensor.numel();
  return n;
}

void ParamStore::zero_grad() {
  for (auto& p : params_) p.tensor.zero_grad();
}

Tensor Initializer::conv_weight(const std::string& name, int out, int in_per_group, int k,
                                int groups) {
  const double fan_out = static_cast<double>(k) * k * out / groups;
  const double std = std::sqrt(2.0 / fan_out);
  const std::int64_t n = static_cast<std::int64_t>(out) * in_per_group * k * k;
  std::vector<double> v(static_cast<std::size_t>(n));
  for (auto& x : v) x = rng_.normal(0.0, std);
  return store_.add_param(name, Tensor::from_values({out, in_per_group, k, k}, v, dtype_));
}

Tensor Initializer::small_conv_weight(const std::string& name, int out, int in_per_group, int k) {
  std::vector<double> v(static_cast<std::size_t>(out) * in_per_group * k * k);
  for (auto& x : v) x = rng_.truncated_normal(0.02);
  return store_.add_param(name, Tensor::from_values({out, in_per_group, k, k}, v, dtype_));
}

Tensor Initializer::linear_weight(const std::string& name, int in, int out) {
  std::vector<double> v(static_cast<std::size_t>(in) * out);
  for (auto& x : v) x = rng_.truncated_normal(0.02);
  return store_.add_param(name, Tensor::from_values({in, out}, v, dtype_));
}

Tensor Initializer::constant(const std::string& name, std::int64_t size, double value) {
  return store_.add_param(name, Tensor::full({size}, value, dtype_));
}

Tensor Initializer::buffer(const std::string& name, std::int64_t size, double value) {
  return store_.add_buffer(name, Tensor::full({size}, value, dtype_));
}

Conv2d::Conv2d(Initializer& init, const std::string& name, int in, int out, int k, int stride,
               int padding, int groups)
    : options{stride, padding, groups} {
  if (in % groups != 0 || out % groups != 0) {
    throw ConfigError(name + ": channels not divisible by groups");
  }
  weight = init.conv_weight(name + ".weight", out, in / groups, k, groups);
  bias = init.constant(name + ".bias", out, 0.0);
}

Conv2d Conv2d::small(Initializer& init, const std::string& name, int in, int out, int k, int groups) {
  if (in % groups != 0 || out % groups != 0) {
    throw ConfigError(name + ": channels not divisible by groups");
  }
  Conv2d c;
  c.options = {1, k / 2, groups};
  c.weight = init.small_conv_weight(name + ".weight", out, in / groups, k);
  c.bias = init.constant(name + ".bias", out, 0.0);
  return c;
}

Conv2d Conv2d::head(Initializer& init, const std::string& name, int in) { return small(init, name, in, 1, 3); }

Linear::Linear(Initializer& init, const std::string& name, int in, int out) {
  weight = init.linear_weight(name + ".weight", in, out);
  bias = init.constant(name + ".bias", out, 0.0);
}

LayerNorm::LayerNorm(Initializer& init, const std::string& name, int channels) {
  gamma = init.constant(name + ".gamma", channels, 1.0);
  beta = init.constant(name + ".beta", channels, 0.0);
}

BatchNorm2d::BatchNorm2d(Initializer& init, const std::string& name, int channels) {
  gamma = init.constant(name + ".gamma", channels, 1.0);
  beta = init.constant(name + ".beta", channels, 0.0);
  running_mean = init.buffer(name + ".running_mean", channels, 0.0);
  running_var = init.buffer(name + ".running_var", channels, 1.0);
}

}  // namespace deft
