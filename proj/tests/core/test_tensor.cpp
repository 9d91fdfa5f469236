#include <gtest/gtest.h>

#include "deft/core/errors.hpp"
#include "deft/core/kv_text.hpp"
#include "deft/core/ops.hpp"
#include "deft/core/rng.hpp"
#include "support.hpp"

using namespace deft;

TEST(Tensor, ShapeAndNumel) {
  Tensor t = Tensor::zeros({2, 3, 4});
  EXPECT_EQ(t.rank(), 3);
  EXPECT_EQ(t.numel(), 24);
  EXPECT_EQ(t.dim(-1), 4);
  EXPECT_EQ(t.dtype(), DType::kFloat32);
  EXPECT_EQ(static_cast<std::int64_t>(t.data<float>().size()), t.numel());
}

TEST(Tensor, FromValuesRejectsWrongLength) {
  EXPECT_THROW(Tensor::from_values({2, 2}, {1.0, 2.0, 3.0}), DimensionError);
}

TEST(Tensor, NonPositiveDimsRejected) {
  EXPECT_THROW(Tensor::zeros({2, 0}), DimensionError);
}

TEST(Tensor, RejectsNonFiniteConstruction) {
  EXPECT_THROW(Tensor::from_values({1}, {std::nan("")}), NumericError);
}

TEST(Tensor, DtypeConversionRoundTrip) {
  Tensor d = Tensor::from_values({3}, {0.5, -1.25, 3.0}, DType::kFloat64);
  Tensor f = d.to(DType::kFloat32);
  EXPECT_EQ(f.dtype(), DType::kFloat32);
  EXPECT_EQ(f.to(DType::kFloat64).to_vector(), d.to_vector());
}

TEST(Tensor, HandlesShareStorage) {
  Tensor a = Tensor::zeros({2});
  Tensor b = a;
  b.mutable_data<float>()[1] = 7.0f;
  EXPECT_EQ(a.at(1), 7.0);
  Tensor c = a.detach();
  c.mutable_data<float>()[1] = 1.0f;
  EXPECT_EQ(a.at(1), 7.0);
}

TEST(Tensor, GradStateOnlyOnLeaves) {
  Tensor x = Tensor::full({2}, 1.0);
  x.set_requires_grad(true);
  Tensor y = scale(x, 2.0);
  EXPECT_FALSE(y.is_leaf());
  EXPECT_THROW(y.set_requires_grad(false), UsageError);
}

TEST(Layout, Img2SeqRoundTripIsBitExact) {
  Rng rng(3);
  Tensor x = test::random_tensor(rng, {2, 3, 4, 5}, DType::kFloat32);
  Tensor t = img2seq(x);
  EXPECT_EQ(t.shape(), (Shape{2, 20, 3}));
  Tensor back = seq2img(t, 4, 5);
  auto a = x.data<float>(), b = back.data<float>();
  EXPECT_TRUE(std::equal(a.begin(), a.end(), b.begin()));
}

TEST(Layout, Img2SeqPlacesChannelsLast) {
  // element (n, c, h, w) -> token h*W + w, channel c
  Rng rng(4);
  Tensor x = test::random_tensor(rng, {1, 2, 3, 2});
  Tensor t = img2seq(x);
  for (int c = 0; c < 2; ++c)
    for (int h = 0; h < 3; ++h)
      for (int w = 0; w < 2; ++w) EXPECT_EQ(t.at((h * 2 + w) * 2 + c), x.at((c * 3 + h) * 2 + w));
}

TEST(Layout, ConcatTokenAxis) {
  Tensor a = Tensor::full({1, 4, 3}, 1.0), b = Tensor::full({1, 4, 3}, 2.0);
  Tensor c = concat({a, b}, 1);
  EXPECT_EQ(c.shape(), (Shape{1, 8, 3}));
  EXPECT_EQ(c.at(11), 1.0);
  EXPECT_EQ(c.at(12), 2.0);
}

TEST(Layout, ConcatMismatchThrows) {
  EXPECT_THROW(concat({Tensor::zeros({1, 4, 3}), Tensor::zeros({1, 4, 2})}, 1), DimensionError);
}

TEST(Layout, ReshapeMustPreserveCount) {
  EXPECT_THROW(reshape(Tensor::zeros({2, 3}), {4, 2}), DimensionError);
  EXPECT_EQ(reshape(Tensor::zeros({2, 3}), {3, 2}).shape(), (Shape{3, 2}));
}

TEST(Layout, PermuteMatchesIndexOracle) {
  Rng rng(5);
  Tensor x = test::random_tensor(rng, {2, 3, 4});
  Tensor y = permute(x, {2, 0, 1});  // y[k][i][j] = x[i][j][k]
  ASSERT_EQ(y.shape(), (Shape{4, 2, 3}));
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 4; ++k) EXPECT_EQ(y.at((k * 2 + i) * 3 + j), x.at((i * 3 + j) * 4 + k));
}

TEST(Rng, SameSeedSameStream) {
  Rng a(11), b(11);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a.normal(), b.normal());
  EXPECT_EQ(a.permutation(10), b.permutation(10));
}

TEST(Rng, TruncatedNormalStaysInTwoSigma) {
  Rng r(2);
  for (int i = 0; i < 10000; ++i) EXPECT_LE(std::abs(r.truncated_normal(0.02)), 0.04);
}

TEST(KeyValueText, ParseAndReadTyped) {
  auto kv = KeyValueText::parse("# comment\n a = 3\nb=0.25 # trailing\nlist = 1, 2,3\nflag = false\n");
  int a = 0;
  double b = 0;
  std::vector<int> list;
  bool flag = true;
  kv.read("a", a);
  kv.read("b", b);
  kv.read("list", list);
  kv.read("flag", flag);
  EXPECT_EQ(a, 3);
  EXPECT_EQ(b, 0.25);
  EXPECT_EQ(list, (std::vector<int>{1, 2, 3}));
  EXPECT_FALSE(flag);
  EXPECT_NO_THROW(kv.reject_unconsumed());
}

TEST(KeyValueText, Errors) {
  EXPECT_THROW(KeyValueText::parse("novalue\n"), ConfigError);
  EXPECT_THROW(KeyValueText::parse("a = 1\na = 2\n"), ConfigError);
  auto kv = KeyValueText::parse("a = x1\nb = 2\n");
  int a = 0;
  EXPECT_THROW(kv.read("a", a), ConfigError);
  EXPECT_THROW(kv.reject_unconsumed(), ConfigError);
}

TEST(KeyValueText, DoublesRoundTripExactly) {
  for (double v : {0.1, 1.0 / 3.0, 3e-3, 1e-300, 123456.789}) {
    auto kv = KeyValueText::parse("x = " + format_double(v));
    double back = 0;
    kv.read("x", back);
    EXPECT_EQ(back, v);
  }
}
