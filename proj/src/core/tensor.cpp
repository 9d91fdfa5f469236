#include "deft/core/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace deft {

std::string_view dtype_name(DType dtype) {
  return dtype == DType::kFloat32 ? "float32" : "float64";
}

std::int64_t numel_of(const Shape& shape) {
  std::int64_t n = 1;
  for (auto d : shape) {
    if (d < 1) throw DimensionError("non-positive dimension in shape " + shape_str(shape));
    n *= d;
  }
  return n;
}

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ',';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

namespace {

detail::Buffer make_buffer(DType dtype, std::size_t n, double value) {
  if (dtype == DType::kFloat32) return std::vector<float>(n, static_cast<float>(value));
  return std::vector<double>(n, value);
}

}  // namespace

Tensor Tensor::zeros(Shape shape, DType dtype) { return full(std::move(shape), 0.0, dtype); }

Tensor Tensor::full(Shape shape, double value, DType dtype) {
  auto impl = std::make_shared<detail::TensorImpl>();
  auto n = static_cast<std::size_t>(numel_of(shape));
  impl->shape = std::move(shape);
  impl->data = make_buffer(dtype, n, value);
  return Tensor(std::move(impl));
}

Tensor Tensor::from_values(Shape shape, std::span<const double> values, DType dtype) {
  if (numel_of(shape) != static_cast<std::int64_t>(values.size())) {
    throw DimensionError(std::to_string(values.size()) + " values do not fill shape " +
                         shape_str(shape));
  }
  for (double x : values) {
    if (!std::isfinite(x)) throw NumericError("non-finite value in tensor constructor");
  }
  if (dtype == DType::kFloat64) {
    return from_buffer(std::move(shape), std::vector<double>(values.begin(), values.end()));
  }
  std::vector<float> v(values.size());
  std::transform(values.begin(), values.end(), v.begin(),
                 [](double x) { return static_cast<float>(x); });
  return from_buffer(std::move(shape), std::move(v));
}

Tensor Tensor::from_values(Shape shape, std::initializer_list<double> values, DType dtype) {
  return from_values(std::move(shape), std::span<const double>(values.begin(), values.size()),
                     dtype);
}

const detail::TensorImpl& Tensor::checked() const {
  if (!impl_) throw UsageError("use of an undefined tensor");
  return *impl_;
}

detail::TensorImpl& Tensor::checked() {
  if (!impl_) throw UsageError("use of an undefined tensor");
  return *impl_;
}

const Shape& Tensor::shape() const { return checked().shape; }

std::int64_t Tensor::dim(int axis) const {
  const auto& s = shape();
  int r = static_cast<int>(s.size());
  int a = axis < 0 ? axis + r : axis;
  if (a < 0 || a >= r) {
    throw DimensionError("axis " + std::to_string(axis) + " out of range for shape " +
                         shape_str(s));
  }
  return s[static_cast<std::size_t>(a)];
}

int Tensor::rank() const { return static_cast<int>(shape().size()); }

std::int64_t Tensor::numel() const {
  return std::visit([](const auto& v) { return static_cast<std::int64_t>(v.size()); },
                    checked().data);
}

DType Tensor::dtype() const {
  return std::holds_alternative<std::vector<float>>(checked().data) ? DType::kFloat32
                                                                     : DType::kFloat64;
}

double Tensor::item() const {
  if (numel() != 1) throw UsageError("item() on a tensor of shape " + shape_str(shape()));
  return at(0);
}

double Tensor::at(std::int64_t flat_index) const {
  return std::visit(
      [&](const auto& v) { return static_cast<double>(v.at(static_cast<std::size_t>(flat_index))); },
      checked().data);
}

std::vector<double> Tensor::to_vector() const {
  return std::visit([](const auto& v) { return std::vector<double>(v.begin(), v.end()); },
                    checked().data);
}

bool Tensor::requires_grad() const { return checked().requires_grad; }

Tensor& Tensor::set_requires_grad(bool value) {
  auto& impl = checked();
  if (impl.grad_fn) throw UsageError("requires_grad can only be set on leaf tensors");
  impl.requires_grad = value;
  return *this;
}

bool Tensor::is_leaf() const { return checked().grad_fn == nullptr; }

bool Tensor::has_grad() const { return checked().grad.has_value(); }

Tensor Tensor::grad() const {
  const auto& impl = checked();
  if (!impl.grad) throw UsageError("tensor has no gradient");
  auto out = std::make_shared<detail::TensorImpl>();
  out->shape = impl.shape;
  out->data = *impl.grad;
  return Tensor(std::move(out));
}

void Tensor::zero_grad() { checked().grad.reset(); }

Tensor Tensor::detach() const {
  const auto& impl = checked();
  auto out = std::make_shared<detail::TensorImpl>();
  out->shape = impl.shape;
  out->data = impl.data;
  return Tensor(std::move(out));
}

Tensor Tensor::to(DType dtype) const {
  if (dtype == this->dtype()) return detach();
  return dispatch(dtype, [&]<typename T>() {
    std::vector<T> out(static_cast<std::size_t>(numel()));
    std::visit(
        [&](const auto& v) {
          std::transform(v.begin(), v.end(), out.begin(), [](auto x) { return static_cast<T>(x); });
        },
        checked().data);
    return from_buffer(shape(), std::move(out));
  });
}

}  // namespace deft
