#include "deft/train/optim.hpp"

#include <cmath>

#include "deft/core/errors.hpp"

namespace deft {

double poly_lr(double base_lr, std::int64_t iter, std::int64_t max_iter, double power) {
  if (max_iter < 1) throw UsageError("poly_lr: max_iter must be >= 1");
  if (iter < 0 || iter > max_iter) {
    throw UsageError("poly_lr: iteration " + std::to_string(iter) + " outside [0, " + std::to_string(max_iter) + "]");
  }
  return base_lr * std::pow(1.0 - static_cast<double>(iter) / static_cast<double>(max_iter), power);
}

void sgd_step(std::vector<Tensor>& params, const std::vector<Tensor>& grads, OptimizerState& state,
              double lr, double momentum, double weight_decay) {
  if (grads.size() != params.size()) throw DimensionError("sgd_step: parameter and gradient counts differ");
  if (state.velocity.empty()) {
    for (const auto& p : params) state.velocity.push_back(Tensor::zeros(p.shape(), p.dtype()));
  }
  if (state.velocity.size() != params.size()) throw DimensionError("sgd_step: optimizer state does not match parameters");
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor& p = params[i];
    Tensor& v = state.velocity[i];
    const Tensor& g = grads[i];
    if (v.shape() != p.shape() || v.dtype() != p.dtype() ||
        (g.defined() && (g.shape() != p.shape() || g.dtype() != p.dtype()))) {
      throw DimensionError("sgd_step: shape mismatch at parameter " + std::to_string(i) + " " +
                           shape_str(p.shape()));
    }
    dispatch(p.dtype(), [&]<typename T>() {
      auto pv = p.mutable_data<T>();
      auto vv = v.mutable_data<T>();
      std::span<const T> gv;
      if (g.defined()) gv = g.data<T>();
      const T mom = static_cast<T>(momentum), wd = static_cast<T>(weight_decay), step = static_cast<T>(lr);
      for (std::size_t j = 0; j < pv.size(); ++j) {
        const T grad = (gv.empty() ? T(0) : gv[j]) + wd * pv[j];
        vv[j] = mom * vv[j] + grad;
        pv[j] -= step * vv[j];
      }
    });
  }
  ++state.step;
  state.lr = lr;
}

void sgd_step(ParamStore& store, OptimizerState& state, double lr, double momentum, double weight_decay) {
  std::vector<Tensor> params, grads;
  for (const auto& np : store.params()) {
    params.push_back(np.tensor);
    grads.push_back(np.tensor.has_grad() ? np.tensor.grad() : Tensor{});
  }
  sgd_step(params, grads, state, lr, momentum, weight_decay);
}

}  // namespace deft
