#include <gtest/gtest.h>

#include <cmath>

#include "deft/core/autograd.hpp"
#include "deft/core/errors.hpp"
#include "deft/core/grad_check.hpp"
#include "deft/core/ops.hpp"
#include "deft/core/parallel.hpp"
#include "support.hpp"

using namespace deft;

namespace {

// Direct nested-loop convolution with zero padding.
std::vector<double> naive_conv(const Tensor& x, const Tensor& w, const Tensor& b, int s, int p,
                               int g, std::int64_t& oh, std::int64_t& ow) {
  const auto n = x.dim(0), ci = x.dim(1), h = x.dim(2), wd = x.dim(3);
  const auto co = w.dim(0), k = w.dim(2);
  const auto cig = ci / g, cog = co / g;
  oh = (h - k + 2 * p) / s + 1;
  ow = (wd - k + 2 * p) / s + 1;
  auto xv = x.to_vector(), wv = w.to_vector(), bv = b.to_vector();
  std::vector<double> out(n * co * oh * ow, 0.0);
  for (int in = 0; in < n; ++in)
    for (int o = 0; o < co; ++o)
      for (int y = 0; y < oh; ++y)
        for (int xx = 0; xx < ow; ++xx) {
          double acc = bv[o];
          const int grp = o / cog;
          for (int c = 0; c < cig; ++c)
            for (int ky = 0; ky < k; ++ky)
              for (int kx = 0; kx < k; ++kx) {
                const int iy = y * s - p + ky, ix = xx * s - p + kx;
                if (iy < 0 || iy >= h || ix < 0 || ix >= wd) continue;
                const int cin = grp * cig + c;
                acc += xv[((in * ci + cin) * h + iy) * wd + ix] * wv[((o * cig + c) * k + ky) * k + kx];
              }
          out[((in * co + o) * oh + y) * ow + xx] = acc;
        }
  return out;
}

}  // namespace

TEST(Conv2d, StemShape224) {
  Tensor x = Tensor::zeros({1, 3, 224, 224});
  Tensor w = Tensor::zeros({16, 3, 3, 3});
  EXPECT_EQ(conv2d(x, w, Tensor(), {2, 1, 1}).shape(), (Shape{1, 16, 112, 112}));
}

TEST(Conv2d, SevenToFourStrided) {
  Tensor y = conv2d(Tensor::zeros({1, 8, 7, 7}), Tensor::zeros({8, 8, 3, 3}), Tensor(), {2, 1, 1});
  EXPECT_EQ(y.dim(2), 4);
  EXPECT_EQ(y.dim(3), 4);
}

TEST(Conv2d, OneByOneIdentity) {
  Rng rng(1);
  Tensor x = test::random_tensor(rng, {1, 1, 5, 5});
  Tensor y = conv2d(x, Tensor::full({1, 1, 1, 1}, 1.0, DType::kFloat64), Tensor());
  EXPECT_EQ(y.to_vector(), x.to_vector());
}

TEST(Conv2d, MatchesNaiveLoopOracle) {
  Rng rng(2);
  struct Case { Shape x, w; int s, p, g; };
  const Case cases[] = {
      {{2, 3, 7, 6}, {4, 3, 3, 3}, 1, 1, 1}, {{1, 4, 9, 9}, {6, 2, 3, 3}, 2, 1, 2},
      {{2, 5, 6, 6}, {5, 1, 3, 3}, 1, 1, 5}, {{1, 3, 8, 8}, {4, 3, 4, 4}, 4, 0, 1},
      {{2, 6, 5, 4}, {3, 6, 1, 1}, 1, 0, 1}, {{1, 2, 5, 5}, {2, 2, 2, 2}, 2, 0, 1},
  };
  for (const auto& c : cases) {
    Tensor x = test::random_tensor(rng, c.x), w = test::random_tensor(rng, c.w);
    Tensor b = test::random_tensor(rng, {c.w[0]});
    std::int64_t oh, ow;
    auto ref = naive_conv(x, w, b, c.s, c.p, c.g, oh, ow);
    Tensor y = conv2d(x, w, b, {c.s, c.p, c.g});
    ASSERT_EQ(y.shape(), (Shape{c.x[0], c.w[0], oh, ow}));
    auto got = y.to_vector();
    for (std::size_t i = 0; i < ref.size(); ++i) EXPECT_NEAR(got[i], ref[i], 1e-12);
  }
}

TEST(Conv2d, OutputShapeFormulaProperty) {
  Rng rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    const int h = static_cast<int>(rng.uniform_int(1, 12)), w = static_cast<int>(rng.uniform_int(1, 12));
    const int k = static_cast<int>(rng.uniform_int(1, 5)), s = static_cast<int>(rng.uniform_int(1, 3));
    const int p = static_cast<int>(rng.uniform_int(0, 2));
    const int eh = (h - k + 2 * p) / s + 1, ew = (w - k + 2 * p) / s + 1;
    Tensor x = Tensor::zeros({1, 2, h, w}), wt = Tensor::zeros({3, 2, k, k});
    if (h - k + 2 * p < 0 || w - k + 2 * p < 0) {
      EXPECT_THROW(conv2d(x, wt, Tensor(), {s, p, 1}), DegenerateOutputError);
      continue;
    }
    Tensor y = conv2d(x, wt, Tensor(), {s, p, 1});
    EXPECT_EQ(y.dim(2), eh);
    EXPECT_EQ(y.dim(3), ew);
  }
}

TEST(Conv2d, Errors) {
  EXPECT_THROW(conv2d(Tensor::zeros({1, 3, 4, 4}), Tensor::zeros({2, 2, 3, 3}), Tensor()), DimensionError);
  EXPECT_THROW(conv2d(Tensor::zeros({1, 3, 4, 4}), Tensor::zeros({2, 1, 3, 3}), Tensor(), {1, 1, 2}),
               DimensionError);
  EXPECT_THROW(conv2d(Tensor::zeros({1, 1, 2, 2}), Tensor::zeros({1, 1, 3, 3}), Tensor()),
               DegenerateOutputError);
}

TEST(Conv2d, ThreadCountDoesNotChangeBits) {
  Rng rng(4);
  Tensor x = test::random_tensor(rng, {4, 6, 10, 10}, DType::kFloat32);
  Tensor w = test::random_tensor(rng, {8, 6, 3, 3}, DType::kFloat32);
  auto run = [&](int threads) {
    set_num_threads(threads);
    Tensor xi = x.detach(), wi = w.detach();
    xi.set_requires_grad(true);
    wi.set_requires_grad(true);
    Tensor y = conv2d(xi, wi, Tensor(), {1, 1, 1});
    backward(sum(square(y)));
    auto out = y.to_vector();
    auto gw = wi.grad().to_vector();
    out.insert(out.end(), gw.begin(), gw.end());
    return out;
  };
  auto one = run(1);
  auto four = run(4);
  set_num_threads(1);
  EXPECT_EQ(one, four);
}

TEST(AdaptivePool, ConstantStaysConstant) {
  Tensor y = adaptive_avg_pool2d(Tensor::full({1, 1, 4, 4}, 1.0), 2, 2);
  for (double v : y.to_vector()) EXPECT_EQ(v, 1.0);
}

TEST(AdaptivePool, FullSizeIsIdentity) {
  Rng rng(5);
  Tensor x = test::random_tensor(rng, {2, 3, 7, 7});
  EXPECT_EQ(adaptive_avg_pool2d(x, 7, 7).to_vector(), x.to_vector());
}

TEST(AdaptivePool, SevenToFourMatchesBinOracle) {
  Rng rng(6);
  Tensor x = test::random_tensor(rng, {1, 1, 7, 7});
  auto xv = x.to_vector();
  Tensor y = adaptive_avg_pool2d(x, 4, 4);
  // bin b spans [floor(7b/4), ceil(7(b+1)/4))
  auto lo = [](int b) { return (7 * b) / 4; };
  auto hi = [](int b) { return (7 * (b + 1) + 3) / 4; };
  for (int by = 0; by < 4; ++by)
    for (int bx = 0; bx < 4; ++bx) {
      double acc = 0;
      int cnt = 0;
      for (int i = lo(by); i < hi(by); ++i)
        for (int j = lo(bx); j < hi(bx); ++j) {
          acc += xv[i * 7 + j];
          ++cnt;
        }
      EXPECT_NEAR(y.at(by * 4 + bx), acc / cnt, 1e-15);
    }
}

TEST(AdaptivePool, LargerOutputRejected) {
  EXPECT_THROW(adaptive_avg_pool2d(Tensor::zeros({1, 1, 3, 3}), 4, 2), DimensionError);
}

TEST(AdaptivePool, GradientSpreadsOneOverBinSize) {
  Tensor x = Tensor::zeros({1, 1, 4, 4}, DType::kFloat64);
  x.set_requires_grad(true);
  backward(sum(adaptive_avg_pool2d(x, 2, 2)));
  for (double g : x.grad().to_vector()) EXPECT_DOUBLE_EQ(g, 0.25);
}

TEST(Bilinear, ConstantPreserved) {
  Tensor y = bilinear_upsample(Tensor::full({1, 2, 3, 5}, 0.7, DType::kFloat64), 3);
  EXPECT_EQ(y.shape(), (Shape{1, 2, 9, 15}));
  for (double v : y.to_vector()) EXPECT_DOUBLE_EQ(v, 0.7);
}

TEST(Bilinear, FactorOneIsIdentity) {
  Rng rng(7);
  Tensor x = test::random_tensor(rng, {1, 2, 3, 4});
  EXPECT_EQ(bilinear_upsample(x, 1).to_vector(), x.to_vector());
}

TEST(Bilinear, RampMatchesKernelOracle) {
  Tensor x = Tensor::from_values({1, 1, 2, 2}, {0.0, 1.0, 2.0, 3.0}, DType::kFloat64);
  Tensor y = bilinear_upsample(x, 2);
  auto src = [](int d) { return std::clamp((d + 0.5) / 2.0 - 0.5, 0.0, 1.0); };
  const double v[2][2] = {{0, 1}, {2, 3}};
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) {
      // triangle kernel weights against the two source rows/cols
      const double sy = src(i), sx = src(j);
      double acc = 0;
      for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) acc += (1 - std::abs(sy - a)) * (1 - std::abs(sx - b)) * v[a][b];
      EXPECT_NEAR(y.at(i * 4 + j), acc, 1e-15);
    }
  EXPECT_DOUBLE_EQ(y.at(0), 0.0);
  EXPECT_DOUBLE_EQ(y.at(1), 0.25);
  EXPECT_DOUBLE_EQ(y.at(5), 0.75);
}

TEST(Bilinear, ResizeDownMatchesKernelOracle) {
  Rng rng(8);
  Tensor x = test::random_tensor(rng, {1, 1, 5, 7});
  auto xv = x.to_vector();
  Tensor y = resize_bilinear(x, 3, 4);
  auto taps = [](int d, int in, int out, int& i0, int& i1, double& f) {
    double s = (d + 0.5) * in / out - 0.5;
    s = std::max(s, 0.0);
    i0 = std::min(static_cast<int>(s), in - 1);
    i1 = std::min(i0 + 1, in - 1);
    f = s - i0;
  };
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 4; ++j) {
      int y0, y1, x0, x1;
      double fy, fx;
      taps(i, 5, 3, y0, y1, fy);
      taps(j, 7, 4, x0, x1, fx);
      double top = xv[y0 * 7 + x0] * (1 - fx) + xv[y0 * 7 + x1] * fx;
      double bot = xv[y1 * 7 + x0] * (1 - fx) + xv[y1 * 7 + x1] * fx;
      EXPECT_NEAR(y.at(i * 4 + j), top * (1 - fy) + bot * fy, 1e-14);
    }
}

TEST(GradCheck, ConvAndPoolWithinTolerance) {
  Rng rng(9);
  auto r = grad_check([](const std::vector<Tensor>& in) { return conv2d(in[0], in[1], in[2], {2, 1, 1}); },
                      {test::random_tensor(rng, {1, 2, 5, 5}), test::random_tensor(rng, {3, 2, 3, 3}),
                       test::random_tensor(rng, {3})});
  EXPECT_LT(r.max_rel_error, 1e-6);
  auto p = grad_check([](const std::vector<Tensor>& in) { return adaptive_avg_pool2d(in[0], 3, 2); },
                      {test::random_tensor(rng, {1, 2, 7, 5})});
  EXPECT_LT(p.max_rel_error, 1e-6);
}

TEST(SeparableBlur, MatchesConvWithOuterProductWindow) {
  Rng rng(17);
  const std::vector<double> taps{0.1, 0.25, 0.3, 0.25, 0.1};
  const Tensor x = test::random_tensor(rng, {2, 3, 6, 9});
  std::vector<double> w(3 * 25);
  for (int c = 0; c < 3; ++c)
    for (int i = 0; i < 5; ++i)
      for (int j = 0; j < 5; ++j) w[c * 25 + i * 5 + j] = taps[i] * taps[j];
  const Tensor window = Tensor::from_values({3, 1, 5, 5}, w, DType::kFloat64);
  const Tensor ref = conv2d(x, window, Tensor{}, {.stride = 1, .padding = 2, .groups = 3});
  EXPECT_LT(test::max_abs_diff(separable_blur(x, taps), ref), 1e-14);
}

TEST(SeparableBlur, KernelLongerThanImage) {
  // only in-bounds taps contribute: 1 x 1 image keeps the centre weight squared
  const Tensor x = Tensor::from_values({1, 1, 1, 1}, {2.0}, DType::kFloat64);
  EXPECT_DOUBLE_EQ(separable_blur(x, {0.25, 0.5, 0.25}).item(), 2.0 * 0.25);
}

TEST(SeparableBlur, RejectsBadKernels) {
  const Tensor x = Tensor::zeros({1, 1, 4, 4});
  EXPECT_THROW(separable_blur(x, {0.5, 0.5}), DimensionError);
  EXPECT_THROW(separable_blur(x, {0.2, 0.5, 0.3}), UsageError);
}
