#include <gtest/gtest.h>

#include <algorithm>
#include <set>

#include "deft/cli/gradcheck_suite.hpp"
#include "deft/core/autograd.hpp"
#include "deft/core/errors.hpp"
#include "deft/core/grad_check.hpp"
#include "deft/core/ops.hpp"
#include "support.hpp"

using namespace deft;

constexpr DType f64 = DType::kFloat64;

TEST(Backward, SumGivesOnes) {
  Tensor x = Tensor::from_values({2, 3}, {1, 2, 3, 4, 5, 6}, f64);
  x.set_requires_grad(true);
  backward(sum(x));
  for (double g : x.grad().to_vector()) EXPECT_EQ(g, 1.0);
}

TEST(Backward, HalfSquareGivesX) {
  Rng rng(1);
  Tensor x = test::random_tensor(rng, {5});
  x.set_requires_grad(true);
  backward(scale(sum(square(x)), 0.5));
  EXPECT_EQ(x.grad().to_vector(), x.to_vector());
}

TEST(Backward, SharedSubexpressionAccumulates) {
  Tensor x = Tensor::full({1}, 3.0, f64);
  x.set_requires_grad(true);
  Tensor y = mul(x, x);
  backward(sum(add(y, y)));  // d(2x^2)/dx = 4x
  EXPECT_EQ(x.grad().item(), 12.0);
}

TEST(Backward, GradsAccumulateAcrossCalls) {
  Tensor x = Tensor::full({2}, 1.0, f64);
  x.set_requires_grad(true);
  backward(sum(x));
  backward(sum(x));
  EXPECT_EQ(x.grad().at(0), 2.0);
  x.zero_grad();
  EXPECT_FALSE(x.has_grad());
}

TEST(Backward, NonScalarLossIsUsageError) {
  Tensor x = Tensor::full({2}, 1.0, f64);
  x.set_requires_grad(true);
  EXPECT_THROW(backward(scale(x, 2.0)), UsageError);
}

TEST(Backward, NonFiniteGradientIsNumericError) {
  Tensor x = Tensor::full({1}, 1e-200, f64);
  x.set_requires_grad(true);
  // forward 1e200 is finite, d/dx = -1e400 is not
  EXPECT_THROW(backward(sum(div(Tensor::full({1}, 1.0, f64), x))), NumericError);
}

TEST(Backward, NoGradGuardSkipsGraph) {
  Tensor x = Tensor::full({2}, 1.0, f64);
  x.set_requires_grad(true);
  NoGradGuard guard;
  Tensor y = sum(x);
  EXPECT_TRUE(y.is_leaf());
  EXPECT_FALSE(y.requires_grad());
}

TEST(Backward, ConcatRoutesSlices) {
  Tensor a = Tensor::zeros({1, 2, 2}, f64), b = Tensor::zeros({1, 3, 2}, f64);
  a.set_requires_grad(true);
  b.set_requires_grad(true);
  std::vector<double> w(10);
  for (int i = 0; i < 10; ++i) w[i] = i + 1;
  backward(sum(mul(concat({a, b}, 1), Tensor::from_values({1, 5, 2}, w, f64))));
  EXPECT_EQ(a.grad().to_vector(), (std::vector<double>{1, 2, 3, 4}));
  EXPECT_EQ(b.grad().to_vector(), (std::vector<double>{5, 6, 7, 8, 9, 10}));
}

TEST(GradCheck, RejectsFloat32) {
  EXPECT_THROW(grad_check([](const std::vector<Tensor>& in) { return in[0]; }, {Tensor::zeros({2})}),
               UsageError);
}

TEST(GradCheck, CorruptedRuleIsDetected) {
  Rng rng(2);
  std::vector<Tensor> in{test::random_tensor(rng, {6}, f64, -2, 2)};
  auto fn = [](const std::vector<Tensor>& v) { return gelu(v[0]); };
  EXPECT_LT(grad_check(fn, in).max_rel_error, 1e-6);
  deft::testing::set_gradient_corruption("gelu", 1.5);
  auto bad = grad_check(fn, in);
  deft::testing::set_gradient_corruption("");
  EXPECT_GT(bad.max_rel_error, 1e-2);
  EXPECT_FALSE(bad.passed);
}

TEST(GradCheckSuite, OpScopeCoversEveryOpAndPasses) {
  const std::set<std::string> required = {
      "conv2d", "adaptive_avg_pool2d", "resize_bilinear", "bilinear_upsample", "linear", "matmul",
      "softmax", "layer_norm", "batch_norm2d_train", "relu", "gelu", "sigmoid", "reshape", "permute",
      "concat", "img2seq", "seq2img", "add", "sub", "mul", "div", "scale", "add_scalar", "square",
      "log", "clamp", "sum", "mean", "sum_axis", "softplus", "separable_blur"};
  auto names = gradcheck_op_names();
  for (const auto& r : required) {
    EXPECT_NE(std::find(names.begin(), names.end(), r), names.end()) << r;
  }
  for (const auto& c : run_gradcheck_suite("op")) {
    EXPECT_TRUE(c.passed()) << c.name << " " << c.result.max_rel_error;
    EXPECT_LT(c.result.max_rel_error, 1e-5) << c.name;
  }
}

TEST(GradCheckSuite, CorruptedConvFailsOpScope) {
  deft::testing::set_gradient_corruption("conv2d", 1.5);
  auto cases = run_gradcheck_suite("op");
  deft::testing::set_gradient_corruption("");
  bool conv_failed = false;
  for (const auto& c : cases) {
    if (c.name.rfind("conv2d", 0) == 0) conv_failed |= !c.passed();
    else EXPECT_TRUE(c.passed()) << c.name;
  }
  EXPECT_TRUE(conv_failed);
}
