#pragma once

#include <cstdint>
#include <vector>

#include "deft/model/layers.hpp"

namespace deft {

// base_lr * (1 - iter / max_iter)^power for 0 <= iter <= max_iter.
double poly_lr(double base_lr, std::int64_t iter, std::int64_t max_iter, double power);

struct OptimizerState {
  std::vector<Tensor> velocity;  // one per parameter, created on the first step
  std::int64_t step = 0;
  double lr = 0.0;
};

// v <- momentum * v + (g + weight_decay * p); p <- p - lr * v.
// Parameters are updated in place; an undefined gradient counts as zero.
void sgd_step(std::vector<Tensor>& params, const std::vector<Tensor>& grads, OptimizerState& state,
              double lr, double momentum, double weight_decay);

// Same update using the gradients accumulated on the store's parameters.
void sgd_step(ParamStore& store, OptimizerState& state, double lr, double momentum, double weight_decay);

}  // namespace deft
