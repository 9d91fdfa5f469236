#pragma once

#include <cstdint>
#include <functional>
#include <initializer_list>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <type_traits>
#include <variant>
#include <vector>

#include "deft/core/errors.hpp"

namespace deft {

enum class DType : std::uint8_t { kFloat32 = 0, kFloat64 = 1 };

std::string_view dtype_name(DType dtype);

using Shape = std::vector<std::int64_t>;

std::int64_t numel_of(const Shape& shape);
std::string shape_str(const Shape& shape);

template <class T>
constexpr DType dtype_of() {
  static_assert(std::is_same_v<T, float> || std::is_same_v<T, double>);
  return std::is_same_v<T, float> ? DType::kFloat32 : DType::kFloat64;
}

// Invokes f.template operator()<T>() with T matching the runtime dtype.
template <class F>
decltype(auto) dispatch(DType dtype, F&& f) {
  if (dtype == DType::kFloat32) return f.template operator()<float>();
  return f.template operator()<double>();
}

class Tensor;

namespace detail {

using Buffer = std::variant<std::vector<float>, std::vector<double>>;

struct TensorImpl;

struct Node {
  std::string_view name;
  std::vector<std::shared_ptr<TensorImpl>> inputs;
  // Reads out.grad and accumulates into the gradients of the inputs.
  std::function<void(const TensorImpl& out)> backward;
};

struct TensorImpl {
  Shape shape;
  Buffer data;
  bool requires_grad = false;
  std::optional<Buffer> grad;
  std::shared_ptr<Node> grad_fn;
};

}  // namespace detail

// Dense row-major N-d array with optional reverse-mode gradient tracking.
//
// A Tensor is a handle: copies share storage and graph history. Ops never
// mutate their inputs; only optimizers and explicit mutable_data() callers
// write into existing storage.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::shared_ptr<detail::TensorImpl> impl) : impl_(std::move(impl)) {}

  static Tensor zeros(Shape shape, DType dtype = DType::kFloat32);
  static Tensor full(Shape shape, double value, DType dtype = DType::kFloat32);
  static Tensor from_values(Shape shape, std::span<const double> values,
                            DType dtype = DType::kFloat32);
  static Tensor from_values(Shape shape, std::initializer_list<double> values,
                            DType dtype = DType::kFloat32);
  template <class T>
  static Tensor from_buffer(Shape shape, std::vector<T> values);

  bool defined() const { return impl_ != nullptr; }
  const Shape& shape() const;
  // Negative axes count from the back.
  std::int64_t dim(int axis) const;
  int rank() const;
  std::int64_t numel() const;
  DType dtype() const;

  template <class T>
  std::span<const T> data() const;
  template <class T>
  std::span<T> mutable_data();

  double item() const;
  double at(std::int64_t flat_index) const;
  std::vector<double> to_vector() const;

  bool requires_grad() const;
  Tensor& set_requires_grad(bool value);
  bool is_leaf() const;
  bool has_grad() const;
  // Detached copy of the accumulated gradient.
  Tensor grad() const;
  template <class T>
  std::span<const T> grad_data() const;
  template <class T>
  std::span<T> mutable_grad_data();
  void zero_grad();

  // Copy of the values with no graph history.
  Tensor detach() const;
  Tensor to(DType dtype) const;

  const std::shared_ptr<detail::TensorImpl>& impl() const { return impl_; }

 private:
  const detail::TensorImpl& checked() const;
  detail::TensorImpl& checked();

  std::shared_ptr<detail::TensorImpl> impl_;
};

template <class T>
Tensor Tensor::from_buffer(Shape shape, std::vector<T> values) {
  if (numel_of(shape) != static_cast<std::int64_t>(values.size())) {
    throw DimensionError("buffer of " + std::to_string(values.size()) +
                         " values does not fill shape " + shape_str(shape));
  }
  auto impl = std::make_shared<detail::TensorImpl>();
  impl->shape = std::move(shape);
  impl->data = std::move(values);
  return Tensor(std::move(impl));
}

template <class T>
std::span<const T> Tensor::data() const {
  const auto* v = std::get_if<std::vector<T>>(&checked().data);
  if (v == nullptr) throw UsageError("tensor data requested with the wrong dtype");
  return {v->data(), v->size()};
}

template <class T>
std::span<T> Tensor::mutable_data() {
  auto* v = std::get_if<std::vector<T>>(&checked().data);
  if (v == nullptr) throw UsageError("tensor data requested with the wrong dtype");
  return {v->data(), v->size()};
}

template <class T>
std::span<const T> Tensor::grad_data() const {
  const auto& impl = checked();
  if (!impl.grad) throw UsageError("tensor has no gradient");
  const auto* v = std::get_if<std::vector<T>>(&*impl.grad);
  if (v == nullptr) throw UsageError("gradient requested with the wrong dtype");
  return {v->data(), v->size()};
}

template <class T>
std::span<T> Tensor::mutable_grad_data() {
  auto& impl = checked();
  if (!impl.grad) throw UsageError("tensor has no gradient");
  auto* v = std::get_if<std::vector<T>>(&*impl.grad);
  if (v == nullptr) throw UsageError("gradient requested with the wrong dtype");
  return {v->data(), v->size()};
}

}  // namespace deft
