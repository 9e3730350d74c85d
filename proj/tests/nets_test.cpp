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
#include "tmo/nets.hpp"

namespace tmo {
namespace {

using ad::Shape;
using testing::random_buffer;

std::size_t generator_count_oracle(int base, int bottleneck, int dec, bool sqrt_skips) {
  std::size_t total = 0;
  auto conv = [&](std::size_t o, std::size_t i, std::size_t k) { total += o * i * k * k + o; };
  std::size_t in = 1;
  std::vector<std::size_t> widths;
  for (int l = 0; l < 4; ++l) {
    const std::size_t c = static_cast<std::size_t>(base) << l;
    conv(c, in, 3);
    conv(c, c, 3);
    widths.push_back(c);
    in = c;
  }
  conv(bottleneck, in, 3);
  conv(bottleneck, bottleneck, 3);
  in = bottleneck;
  for (int l = 3; l >= 0; --l) {
    total += in * dec * 4 + dec;
    conv(dec, dec + widths[l] * (sqrt_skips ? 2 : 1), 3);
    conv(dec, dec, 3);
    in = dec;
  }
  conv(1, in, 1);
  return total;
}

ad::Var<float> input(Shape s, std::uint64_t seed) {
  return ad::Var<float>::constant(s, random_buffer(s.numel(), seed, 0, 1).cast<float>());
}

TEST(GeneratorTest, ParameterCount) {
  Generator<float> g(GeneratorSpec{}, 1);
  const std::size_t n = g.parameters().count();
  EXPECT_EQ(n, generator_count_oracle(32, 512, 32, true));
  EXPECT_GE(n, 3'500'000u);
  EXPECT_LE(n, 5'500'000u);
}

TEST(GeneratorTest, ShapeAndRange) {
  Generator<float> g(GeneratorSpec{}, 1);
  ad::NoGradGuard guard;
  const auto y = g.forward(input({2, 1, 256, 256}, 3));
  EXPECT_EQ(y.shape(), (Shape{2, 1, 256, 256}));
  EXPECT_GT(y.value().minCoeff(), 0.0f);
  EXPECT_LT(y.value().maxCoeff(), 1.0f);
}

TEST(GeneratorTest, InputErrors) {
  GeneratorSpec small;
  small.base_filters = 2;
  small.bottleneck_filters = 4;
  small.decoder_filters = 2;
  Generator<float> g(small, 1);
  EXPECT_THROW(g.forward(input({1, 1, 100, 100}, 1)), std::invalid_argument);
  EXPECT_THROW(g.forward(input({1, 2, 32, 32}, 1)), std::invalid_argument);
  auto bad = input({1, 1, 32, 32}, 1);
  bad.mutable_value()[5] = NAN;
  EXPECT_THROW(g.forward(bad), std::invalid_argument);
}

TEST(GeneratorTest, SqrtSkipsDoubleSkipChannels) {
  GeneratorSpec with, without;
  without.sqrt_skips = false;
  const auto a = Generator<float>(with, 1).skip_channels();
  const auto b = Generator<float>(without, 1).skip_channels();
  ASSERT_EQ(a.size(), 4u);
  for (std::size_t l = 0; l < a.size(); ++l) {
    EXPECT_EQ(a[l], 2 * b[l]);
    EXPECT_EQ(b[l], 32 << l);
  }
  EXPECT_EQ(Generator<float>(without, 1).parameters().count(), generator_count_oracle(32, 512, 32, false));
  const auto& w = Generator<float>(with, 1).parameters().get("gen.dec0.conv0.weight");
  EXPECT_EQ(w.shape().c, 32 + 64);
}

TEST(GeneratorTest, Deterministic) {
  const auto x = input({1, 1, 32, 32}, 4);
  ad::NoGradGuard guard;
  const auto a = Generator<float>(GeneratorSpec{}, 7).forward(x);
  const auto b = Generator<float>(GeneratorSpec{}, 7).forward(x);
  const auto c = Generator<float>(GeneratorSpec{}, 8).forward(x);
  EXPECT_TRUE((a.value() == b.value()).all());
  EXPECT_FALSE((a.value() == c.value()).all());
}

TEST(GeneratorTest, InputGradientMatchesFiniteDifferences) {
  Generator<double> g(GeneratorSpec{}, 5);
  const Shape s{1, 1, 32, 32};
  const auto r = testing::check_gradient([&](const ad::Var<double>& x) { return ad::sum(ad::square(g.forward(x))); },
                                         s, random_buffer(s.numel(), 6, 0, 1), 1e-5, 20, 7);
  EXPECT_EQ(r.checked, 20);
  EXPECT_LT(r.max_rel_error, 1e-3);
}

TEST(GeneratorTest, TranslationCovariantInInterior) {
  GeneratorSpec spec;
  spec.base_filters = 4;
  spec.bottleneck_filters = 16;
  spec.decoder_filters = 4;
  Generator<double> g(spec, 9);
  const int h = 32, w = 512, shift = 16;
  const Shape s{1, 1, h, w + shift};
  const auto wide = random_buffer(s.numel(), 10, 0, 1);
  ad::Buffer<double> a(h * w), b(h * w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      a[y * w + x] = wide[y * (w + shift) + x];
      b[y * w + x] = wide[y * (w + shift) + x + shift];
    }
  ad::NoGradGuard guard;
  const auto ya = g.forward(ad::Var<double>::constant({1, 1, h, w}, a));
  const auto yb = g.forward(ad::Var<double>::constant({1, 1, h, w}, b));
  double worst = 0;
  for (int y = 0; y < h; ++y)
    for (int x = 160; x < w - 160 - shift; ++x) worst = std::max(worst, std::abs(yb.at(0, 0, y, x) - ya.at(0, 0, y, x + shift)));
  EXPECT_LT(worst, 1e-4);
}

TEST(DiscriminatorTest, ParameterCounts) {
  DiscriminatorEnsemble<float> d(DiscriminatorSpec{}, 1);
  const std::size_t one = 16 * 16 + 16 + 32 * 16 * 16 + 32 + 48 * 32 + 48 + 48 + 1;
  ASSERT_EQ(d.size(), 3);
  for (int k = 0; k < 3; ++k) EXPECT_EQ(d.member(k).parameters().count(), one);
  EXPECT_EQ(d.parameter_count(), 3 * one);
  EXPECT_GE(d.parameter_count(), 25'000u);
  EXPECT_LE(d.parameter_count(), 40'000u);
}

TEST(DiscriminatorTest, ScoresInUnitInterval) {
  DiscriminatorEnsemble<float> d(DiscriminatorSpec{}, 2);
  ad::NoGradGuard guard;
  const auto x = input({4, 1, 256, 256}, 5);
  for (int k = 0; k < 3; ++k) {
    const auto s = d.score(k, x);
    EXPECT_EQ(s.shape(), (Shape{4, 1, 1, 1}));
    EXPECT_GT(s.value().minCoeff(), 0.0f);
    EXPECT_LT(s.value().maxCoeff(), 1.0f);
  }
  EXPECT_THROW(d.score(3, x), std::out_of_range);
  EXPECT_THROW(d.forward(0, input({1, 1, 8, 8}, 1)), std::invalid_argument);
}

TEST(DiscriminatorTest, MembersDoNotShareWeights) {
  DiscriminatorEnsemble<float> d(DiscriminatorSpec{}, 3);
  ad::NoGradGuard guard;
  const auto x = input({2, 1, 64, 64}, 6);
  const auto s1 = d.score(1, x).value(), s2 = d.score(2, x).value(), s0 = d.score(0, x).value();
  for (auto& [name, v] : d.member(0).parameters().entries()) v.mutable_value() += 0.5f;
  EXPECT_TRUE((d.score(1, x).value() == s1).all());
  EXPECT_TRUE((d.score(2, x).value() == s2).all());
  EXPECT_FALSE((d.score(0, x).value() == s0).all());
}

TEST(ParameterListTest, RequiresGradToggle) {
  Discriminator<float> d(DiscriminatorSpec{}, 1, "disc0");
  d.parameters().set_requires_grad(false);
  for (const auto& [name, v] : d.parameters().entries()) EXPECT_FALSE(v.requires_grad()) << name;
  EXPECT_THROW(d.parameters().get("nope"), std::out_of_range);
}

}  // namespace
}  // namespace tmo
