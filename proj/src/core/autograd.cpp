#include "deft/core/autograd.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>
#include <utility>

namespace deft {

namespace {

thread_local bool g_grad_enabled = true;
thread_local std::int64_t g_flops = 0;
thread_local bool g_counting = false;

std::string g_corrupt_op;
double g_corrupt_factor = 1.0;

}  // namespace

bool grad_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

FlopCounter::FlopCounter() : start_(g_flops), previous_(g_counting) { g_counting = true; }
FlopCounter::~FlopCounter() { g_counting = previous_; }
std::int64_t FlopCounter::total() const { return g_flops - start_; }

namespace testing {
void set_gradient_corruption(std::string op_name, double factor) {
  g_corrupt_op = std::move(op_name);
  g_corrupt_factor = factor;
}
}  // namespace testing

namespace detail {

void add_flops(std::int64_t flops) {
  if (g_counting) g_flops += flops;
}

bool needs_grad(const std::vector<Tensor>& inputs) {
  if (!g_grad_enabled) return false;
  return std::any_of(inputs.begin(), inputs.end(),
                     [](const Tensor& t) { return t.defined() && t.requires_grad(); });
}

template <class T>
void ensure_finite(std::span<const T> values, std::string_view op) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) {
      throw NumericError("non-finite value produced by " + std::string(op) + " at element " +
                         std::to_string(i));
    }
  }
}

template <class T>
Tensor record(std::string_view op, Shape shape, std::vector<T> values,
              const std::vector<Tensor>& inputs, BackwardFn backward) {
  ensure_finite<T>(values, op);
  auto impl = std::make_shared<TensorImpl>();
  impl->shape = std::move(shape);
  impl->data = std::move(values);
  if (needs_grad(inputs)) {
    auto node = std::make_shared<Node>();
    node->name = op;
    for (const auto& t : inputs) {
      if (t.defined() && t.requires_grad()) node->inputs.push_back(t.impl());
    }
    node->backward = std::move(backward);
    impl->grad_fn = std::move(node);
    impl->requires_grad = true;
  }
  return Tensor(std::move(impl));
}

template <class T>
std::span<T> grad_sink(const Tensor& input) {
  if (!input.defined() || !input.requires_grad()) return {};
  auto& impl = *input.impl();
  if (!impl.grad) impl.grad = std::vector<T>(static_cast<std::size_t>(input.numel()), T(0));
  auto& v = std::get<std::vector<T>>(*impl.grad);
  return {v.data(), v.size()};
}

template <class T>
std::span<const T> grad_of(const TensorImpl& out) {
  const auto& v = std::get<std::vector<T>>(*out.grad);
  return {v.data(), v.size()};
}

template void ensure_finite<float>(std::span<const float>, std::string_view);
template void ensure_finite<double>(std::span<const double>, std::string_view);
template Tensor record<float>(std::string_view, Shape, std::vector<float>,
                              const std::vector<Tensor>&, BackwardFn);
template Tensor record<double>(std::string_view, Shape, std::vector<double>,
                               const std::vector<Tensor>&, BackwardFn);
template std::span<float> grad_sink<float>(const Tensor&);
template std::span<double> grad_sink<double>(const Tensor&);
template std::span<const float> grad_of<float>(const TensorImpl&);
template std::span<const double> grad_of<double>(const TensorImpl&);

}  // namespace detail

namespace {

// Post-order DFS over grad_fn edges; the reverse of the result is a valid
// processing order for backward.
std::vector<detail::TensorImpl*> topological_order(detail::TensorImpl* root) {
  std::vector<detail::TensorImpl*> order;
  std::unordered_set<detail::TensorImpl*> visited;
  std::vector<std::pair<detail::TensorImpl*, std::size_t>> stack;
  stack.emplace_back(root, 0);
  visited.insert(root);
  while (!stack.empty()) {
    auto& [impl, next] = stack.back();
    const auto* inputs = impl->grad_fn ? &impl->grad_fn->inputs : nullptr;
    if (inputs != nullptr && next < inputs->size()) {
      auto* child = (*inputs)[next++].get();
      if (visited.insert(child).second) stack.emplace_back(child, 0);
      continue;
    }
    order.push_back(impl);
    stack.pop_back();
  }
  return order;
}

}  // namespace

void backward(const Tensor& loss) {
  if (!loss.defined() || loss.numel() != 1) {
    throw UsageError("backward() needs a scalar loss, got shape " +
                     (loss.defined() ? shape_str(loss.shape()) : std::string("<undefined>")));
  }
  if (!loss.requires_grad()) throw UsageError("loss does not depend on any tensor requiring grad");

  auto* root = loss.impl().get();
  auto order = topological_order(root);
  dispatch(loss.dtype(), [&]<typename T>() { root->grad = std::vector<T>(1, T(1)); });

  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    detail::TensorImpl* impl = *it;
    if (!impl->grad_fn || !impl->grad) continue;
    if (!g_corrupt_op.empty() && impl->grad_fn->name == g_corrupt_op) {
      std::visit([](auto& g) {
        for (auto& x : g) x *= static_cast<std::decay_t<decltype(x)>>(g_corrupt_factor);
      }, *impl->grad);
    }
    impl->grad_fn->backward(*impl);
    impl->grad.reset();
  }

  for (auto* impl : order) {
    if (impl->grad_fn || !impl->grad) continue;
    std::visit([](const auto& g) {
      using T = typename std::decay_t<decltype(g)>::value_type;
      for (T x : g) {
        if (!std::isfinite(x)) throw NumericError("non-finite gradient reached a leaf tensor");
      }
    }, *impl->grad);
  }
}

}  // namespace deft
