#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "deft/core/tensor.hpp"

namespace deft {

// Runs reverse-mode differentiation from a scalar loss. Gradients accumulate
// into every requires_grad leaf reachable from the loss; intermediate
// gradients are released as soon as their node has been processed.
void backward(const Tensor& loss);

bool grad_enabled();

class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

// Multiply-accumulate accounting used by the FLOPs estimator. Only convs,
// linear layers and matmuls report; each MAC counts as two FLOPs.
class FlopCounter {
 public:
  FlopCounter();
  ~FlopCounter();
  FlopCounter(const FlopCounter&) = delete;
  FlopCounter& operator=(const FlopCounter&) = delete;

  std::int64_t total() const;

 private:
  std::int64_t start_;
  bool previous_;
};

namespace testing {
// Scales the upstream gradient fed to every node with the given op name.
// Negative control for the gradient checker; pass an empty name to clear.
void set_gradient_corruption(std::string op_name, double factor = 1.5);
}  // namespace testing

namespace detail {

using BackwardFn = std::function<void(const TensorImpl& out)>;

void add_flops(std::int64_t flops);

// True when grad mode is on and any input requires a gradient.
bool needs_grad(const std::vector<Tensor>& inputs);

// Wraps op output values into a tensor, checks they are finite and, when
// needed, attaches a graph node.
template <class T>
Tensor record(std::string_view op, Shape shape, std::vector<T> values,
              const std::vector<Tensor>& inputs, BackwardFn backward);

// Gradient buffer of an input, allocated as zeros on first use. Returns an
// empty span when the input does not take part in differentiation.
template <class T>
std::span<T> grad_sink(const Tensor& input);

template <class T>
std::span<const T> grad_of(const TensorImpl& out);

template <class T>
void ensure_finite(std::span<const T> values, std::string_view op);

}  // namespace detail
}  // namespace deft
