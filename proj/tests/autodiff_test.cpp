// Copyright 2026 The TMO Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <cmath>

#include <gtest/gtest.h>

#include "grad_check.hpp"
#include "test_util.hpp"
#include "tmo/ad/ops.hpp"

namespace tmo::ad {
namespace {

using testing::check_gradient;
using testing::random_buffer;
using V = Var<double>;

V reduce(const V& y) { return sum(square(add_scalar(y, 0.3))); }

double naive_conv(const V& x, const V& w, const V& b, const ConvOptions& o, int n, int oc, int oy, int ox) {
  const Shape xs = x.shape(), ws = w.shape();
  double acc = b.defined() ? b.value()[oc] : 0.0;
  for (int c = 0; c < xs.c; ++c)
    for (int ky = 0; ky < ws.h; ++ky)
      for (int kx = 0; kx < ws.w; ++kx) {
        int iy = oy * o.stride_h - o.pad_h + ky, ix = ox * o.stride_w - o.pad_w + kx;
        if (iy < 0 || iy >= xs.h || ix < 0 || ix >= xs.w) {
          if (o.pad_mode == PadMode::kZero) continue;
          iy = reflect_index(iy, xs.h);
          ix = reflect_index(ix, xs.w);
        }
        acc += w.at(oc, c, ky, kx) * x.at(n, c, iy, ix);
      }
  return acc;
}

struct ConvCase {
  Shape x, w;
  ConvOptions opt;
};

class ConvTest : public ::testing::TestWithParam<ConvCase> {};

TEST_P(ConvTest, ForwardMatchesNaiveLoops) {
  const auto& p = GetParam();
  const V x = V::constant(p.x, random_buffer(p.x.numel(), 1));
  const V w = V::constant(p.w, random_buffer(p.w.numel(), 2));
  const V b = V::constant({1, p.w.n, 1, 1}, random_buffer(p.w.n, 3));
  const V y = conv2d(x, w, b, p.opt);
  const Shape s = y.shape();
  for (int n = 0; n < s.n; ++n)
    for (int c = 0; c < s.c; ++c)
      for (int oy = 0; oy < s.h; ++oy)
        for (int ox = 0; ox < s.w; ++ox) EXPECT_NEAR(y.at(n, c, oy, ox), naive_conv(x, w, b, p.opt, n, c, oy, ox), 1e-12);
}

TEST_P(ConvTest, GradientsMatchFiniteDifferences) {
  const auto& p = GetParam();
  const auto xv = random_buffer(p.x.numel(), 4);
  const auto wv = random_buffer(p.w.numel(), 5);
  const V b = V::constant({1, p.w.n, 1, 1}, random_buffer(p.w.n, 6));
  const auto gx = check_gradient([&](const V& x) { return reduce(conv2d(x, V::constant(p.w, wv), b, p.opt)); }, p.x,
                                 xv, 1e-5, 40, 1);
  EXPECT_LT(gx.max_rel_error, 1e-5);
  const auto gw = check_gradient([&](const V& w) { return reduce(conv2d(V::constant(p.x, xv), w, b, p.opt)); }, p.w,
                                 wv, 1e-5, 40, 2);
  EXPECT_LT(gw.max_rel_error, 1e-5);
  const auto gb = check_gradient(
      [&](const V& bb) { return reduce(conv2d(V::constant(p.x, xv), V::constant(p.w, wv), bb, p.opt)); },
      {1, p.w.n, 1, 1}, b.value(), 1e-5, 0, 3);
  EXPECT_LT(gb.max_rel_error, 1e-5);
}

INSTANTIATE_TEST_SUITE_P(Shapes, ConvTest,
                         ::testing::Values(ConvCase{{2, 3, 7, 6}, {4, 3, 3, 3}, {1, 1, 1, 1, PadMode::kReflect}},
                                           ConvCase{{1, 2, 9, 8}, {3, 2, 4, 4}, {2, 2, 1, 1, PadMode::kReflect}},
                                           ConvCase{{1, 2, 6, 6}, {2, 2, 1, 1}, {1, 1, 0, 0, PadMode::kZero}},
                                           ConvCase{{1, 3, 8, 9}, {2, 3, 1, 7}, {1, 1, 0, 3, PadMode::kZero}},
                                           ConvCase{{2, 2, 9, 9}, {3, 2, 3, 3}, {2, 2, 0, 0, PadMode::kZero}}));

TEST(ConvTransposeTest, ForwardAndGradient) {
  const Shape xs{2, 3, 3, 4}, ws{3, 2, 2, 2};
  const V x = V::constant(xs, random_buffer(xs.numel(), 1));
  const V w = V::constant(ws, random_buffer(ws.numel(), 2));
  const V b = V::constant({1, 2, 1, 1}, random_buffer(2, 3));
  const V y = conv_transpose2x2(x, w, b);
  ASSERT_EQ(y.shape(), (Shape{2, 2, 6, 8}));
  for (int n = 0; n < 2; ++n)
    for (int o = 0; o < 2; ++o)
      for (int yy = 0; yy < 6; ++yy)
        for (int xx = 0; xx < 8; ++xx) {
          double want = b.value()[o];
          for (int c = 0; c < 3; ++c) want += x.at(n, c, yy / 2, xx / 2) * w.at(c, o, yy % 2, xx % 2);
          EXPECT_NEAR(y.at(n, o, yy, xx), want, 1e-12);
        }
  EXPECT_LT(check_gradient([&](const V& v) { return reduce(conv_transpose2x2(v, w, b)); }, xs, x.value(), 1e-5, 0, 1)
                .max_rel_error,
            1e-6);
  EXPECT_LT(check_gradient([&](const V& v) { return reduce(conv_transpose2x2(x, v, b)); }, ws, w.value(), 1e-5, 0, 1)
                .max_rel_error,
            1e-6);
}

TEST(PoolTest, ForwardAndGradient) {
  const Shape s{2, 2, 7, 6};
  const auto xv = random_buffer(s.numel(), 9);
  const V x = V::constant(s, xv);
  const V mp = max_pool2d(x, 2, 2);
  ASSERT_EQ(mp.shape(), (Shape{2, 2, 3, 3}));
  EXPECT_EQ(mp.at(1, 1, 2, 2), std::max({x.at(1, 1, 4, 4), x.at(1, 1, 4, 5), x.at(1, 1, 5, 4), x.at(1, 1, 5, 5)}));
  const V ap = avg_pool2d(x, 3, 1, 1);
  ASSERT_EQ(ap.shape(), s);
  EXPECT_NEAR(ap.at(0, 0, 0, 0), (x.at(0, 0, 0, 0) + x.at(0, 0, 0, 1) + x.at(0, 0, 1, 0) + x.at(0, 0, 1, 1)) / 9, 1e-15);
  const V gp = global_avg_pool(x);
  EXPECT_NEAR(gp.at(1, 0, 0, 0), xv.segment(2 * 42, 42).mean(), 1e-15);

  for (auto f : std::vector<std::function<V(const V&)>>{
           [](const V& v) { return reduce(max_pool2d(v, 2, 2)); },
           [](const V& v) { return reduce(max_pool2d(v, 3, 2)); },
           [](const V& v) { return reduce(avg_pool2d(v, 3, 1, 1)); },
           [](const V& v) { return reduce(avg_pool2d(v, 3, 2, 0)); },
           [](const V& v) { return reduce(global_avg_pool(v)); },
       }) {
    EXPECT_LT(check_gradient(f, s, xv, 1e-5, 0, 1).max_rel_error, 1e-5);
  }
}

TEST(ElementwiseTest, Gradients) {
  const Shape s{2, 3, 4, 5};
  const auto xv = random_buffer(s.numel(), 10);
  const auto pos = random_buffer(s.numel(), 11, 0.1, 2.0);
  const V other = V::constant(s, random_buffer(s.numel(), 12));
  std::vector<std::function<V(const V&)>> fs = {
      [](const V& v) { return reduce(relu(v)); },
      [](const V& v) { return reduce(leaky_relu(v, 0.2)); },
      [](const V& v) { return reduce(sigmoid(scale(v, 4.0))); },
      [&](const V& v) { return reduce(add(v, other)); },
      [&](const V& v) { return reduce(sub(other, v)); },
      [](const V& v) { return mean(square(v)); },
      [&](const V& v) { return reduce(concat_channels<double>({other, v, relu(v)})); },
  };
  for (std::size_t i = 0; i < fs.size(); ++i) {
    EXPECT_LT(check_gradient(fs[i], s, xv, 1e-5, 0, 1).max_rel_error, 1e-5) << i;
  }
  EXPECT_LT(check_gradient([](const V& v) { return reduce(sqrt_guarded(v, 1e-6)); }, s, pos, 1e-7, 0, 1).max_rel_error,
            1e-6);
}

TEST(ElementwiseTest, ValuesAndStability) {
  ad::Buffer<double> v(4);
  v << -1000, -1, 0, 1000;
  const V x = V::constant({1, 1, 1, 4}, v);
  const V s = sigmoid(x);
  EXPECT_EQ(s.value()[0], std::exp(-1000.0) / (1 + std::exp(-1000.0)));
  EXPECT_EQ(s.value()[3], 1.0);
  EXPECT_TRUE(s.value().allFinite());
  EXPECT_DOUBLE_EQ(leaky_relu(x, 0.2).value()[1], -0.2);
  EXPECT_EQ(sqrt_guarded(relu(x), 1e-6).value()[2], std::sqrt(1e-6));
}

TEST(DownscaleOpTest, MatchesPlaneDownscaleAndGradient) {
  const Shape s{2, 1, 16, 12};
  const auto xv = random_buffer(s.numel(), 13, 0, 1);
  const V x = V::constant(s, xv);
  for (int k = 0; k <= 2; ++k) {
    const V y = downscale(x, k);
    for (int n = 0; n < 2; ++n) {
      Plane<double> p(16, 12);
      p = Eigen::Map<const Plane<double>>(xv.data() + n * 192, 16, 12);
      const Plane<double> want = tmo::downscale(p, k);
      for (int yy = 0; yy < want.rows(); ++yy)
        for (int xx = 0; xx < want.cols(); ++xx) EXPECT_NEAR(y.at(n, 0, yy, xx), want(yy, xx), 1e-12);
    }
    EXPECT_LT(check_gradient([k](const V& v) { return reduce(downscale(v, k)); }, s, xv, 1e-5, 30, 2).max_rel_error,
              1e-6);
  }
}

TEST(PearsonOpTest, GradientBothArguments) {
  const Shape s{2, 1, 9, 8};
  const auto av = random_buffer(s.numel(), 14);
  const auto bv = random_buffer(s.numel(), 15);
  EXPECT_LT(check_gradient([&](const V& a) { return sum(patch_pearson(a, V::constant(s, bv))); }, s, av, 1e-5, 0, 1)
                .max_rel_error,
            1e-5);
  EXPECT_LT(check_gradient([&](const V& b) { return sum(patch_pearson(V::constant(s, av), b)); }, s, bv, 1e-5, 0, 1)
                .max_rel_error,
            1e-5);
}

TEST(TapeTest, NoGradGuardAndAccumulation) {
  const Shape s{1, 1, 2, 2};
  V p = V::parameter(s, random_buffer(4, 1));
  {
    NoGradGuard guard;
    EXPECT_FALSE(grad_enabled());
    const V y = sum(square(p));
    EXPECT_FALSE(y.requires_grad());
  }
  EXPECT_TRUE(grad_enabled());
  const V y = add(sum(p), sum(p));
  backward(y);
  for (int i = 0; i < 4; ++i) EXPECT_EQ(p.grad()[i], 2.0);
  p.zero_grad();
  EXPECT_FALSE(p.has_grad());
}

}  // namespace
}  // namespace tmo::ad
