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
#include "tmo/losses.hpp"

namespace tmo {
namespace {

using testing::random_plane;
using P = LuminanceMapT<double>;

ad::Var<double> as_var(const P& p) {
  ad::Buffer<double> b = Eigen::Map<const ad::Buffer<double>>(p.data(), p.size());
  return ad::Var<double>::constant({1, 1, static_cast<int>(p.rows()), static_cast<int>(p.cols())}, b);
}

TEST(PatchPearsonTest, SelfAffineAndAntiCorrelation) {
  for (int t = 0; t < 20; ++t) {
    const P i = random_plane(32, 32, 100 + t);
    EXPECT_NEAR(patch_pearson(i, i), 1.0, 1e-4);
    EXPECT_NEAR(patch_pearson<double>(i, 2 * i + 3), 1.0, 1e-4);
    EXPECT_NEAR(patch_pearson<double>(i, -i), -1.0, 1e-4);
  }
}

TEST(PatchPearsonTest, SymmetryAndAffineInvariance) {
  const P i = random_plane(20, 24, 1), j = random_plane(20, 24, 2);
  const double r = patch_pearson(i, j);
  EXPECT_NEAR(patch_pearson(j, i), r, 1e-9);
  for (auto [a, b, c, d] : {std::array<double, 4>{2, 1, 3, -1}, {-0.5, 0, 4, 2}, {1.5, -2, -2, 0.5}}) {
    const double sign = (a * c > 0) ? 1.0 : -1.0;
    EXPECT_NEAR(patch_pearson<double>(a * i + b, c * j + d), sign * r, 1e-4);
  }
}

TEST(PatchPearsonTest, ConstantPatchesGiveZero) {
  const P c = P::Constant(12, 12, 0.4);
  const P i = random_plane(12, 12, 3);
  EXPECT_NEAR(patch_pearson(c, i), 0.0, 1e-12);
  EXPECT_NEAR(patch_pearson(i, c), 0.0, 1e-12);
  EXPECT_NEAR(patch_pearson(c, c), 0.0, 1e-12);
}

TEST(PatchPearsonTest, MatchesDirectComputation) {
  const P i = random_plane(7, 9, 4), j = random_plane(7, 9, 5);
  double total = 0;
  int count = 0;
  for (int y = 0; y + 5 <= 7; ++y)
    for (int x = 0; x + 5 <= 9; ++x) {
      const Eigen::ArrayXXd a = i.block(y, x, 5, 5), b = j.block(y, x, 5, 5);
      const double ma = a.mean(), mb = b.mean();
      const double cov = ((a - ma) * (b - mb)).mean();
      const double sa = std::sqrt((a - ma).square().mean()), sb = std::sqrt((b - mb).square().mean());
      total += cov / ((sa + 1e-6) * (sb + 1e-6));
      ++count;
    }
  EXPECT_NEAR(patch_pearson(i, j), total / count, 1e-12);
}

TEST(PatchPearsonTest, Errors) {
  EXPECT_THROW(patch_pearson(P(P::Zero(8, 8)), P(P::Zero(8, 9))), std::invalid_argument);
  EXPECT_THROW(patch_pearson(P(P::Zero(0, 8)), P(P::Zero(0, 8))), std::invalid_argument);
}

TEST(PatchPearsonTest, SmallMapsUseClippedWindow) {
  const P i = random_plane(4, 3, 6), j = random_plane(4, 3, 7);
  const double ma = i.mean(), mb = j.mean();
  const double cov = ((i - ma) * (j - mb)).mean();
  const double sa = std::sqrt((i - ma).square().mean()), sb = std::sqrt((j - mb).square().mean());
  EXPECT_NEAR(patch_pearson(i, j), cov / ((sa + 1e-6) * (sb + 1e-6)), 1e-12);
  EXPECT_NEAR(patch_pearson(i, i), 1.0, 1e-4);
}

TEST(StructuralLossTest, Extremes) {
  for (int t = 0; t < 5; ++t) {
    const P y = random_plane(32, 32, 200 + t);
    EXPECT_NEAR(structural_loss(y, y), 0.0, 3e-4);
    EXPECT_NEAR(structural_loss<double>(y, 1.0 - y), 6.0, 1e-3);
    const P other = random_plane(32, 32, 300 + t);
    const double l = structural_loss(y, other);
    EXPECT_GE(l, -3e-4);
    EXPECT_LE(l, 6.0 + 3e-4);
  }
}

TEST(StructuralLossTest, BatchedFormMatchesPlanes) {
  const P a0 = random_plane(20, 24, 1), a1 = random_plane(20, 24, 2);
  const P b0 = random_plane(20, 24, 3), b1 = random_plane(20, 24, 4);
  ad::Buffer<double> a(960), b(960);
  a << Eigen::Map<const ad::Buffer<double>>(a0.data(), 480), Eigen::Map<const ad::Buffer<double>>(a1.data(), 480);
  b << Eigen::Map<const ad::Buffer<double>>(b0.data(), 480), Eigen::Map<const ad::Buffer<double>>(b1.data(), 480);
  const auto l = structural_loss(ad::Var<double>::constant({2, 1, 20, 24}, a), ad::Var<double>::constant({2, 1, 20, 24}, b));
  EXPECT_NEAR(l.item(), 0.5 * (structural_loss(a0, b0) + structural_loss(a1, b1)), 1e-12);
}

TEST(StructuralLossTest, GradientMatchesFiniteDifferences) {
  const P y = random_plane(16, 16, 7);
  const auto yv = as_var(y);
  const auto out0 = random_plane(16, 16, 8);
  const auto r = testing::check_gradient([&](const ad::Var<double>& out) { return structural_loss(yv, out); },
                                         {1, 1, 16, 16}, Eigen::Map<const ad::Buffer<double>>(out0.data(), 256), 1e-4,
                                         20, 9);
  EXPECT_EQ(r.checked, 20);
  EXPECT_LT(r.max_rel_error, 1e-3);
}

TEST(LsganTest, DiscriminatorLoss) {
  auto set = [](double v) { return ScoreSet(3, std::vector<double>(4, v)); };
  EXPECT_EQ(lsgan_discriminator_loss(set(1), set(0)), 0.0);
  EXPECT_DOUBLE_EQ(lsgan_discriminator_loss(set(0.5), set(0.5)), 1.5);
  EXPECT_DOUBLE_EQ(lsgan_discriminator_loss(set(0), set(1)), 6.0);
  EXPECT_THROW(lsgan_discriminator_loss(ScoreSet(2, {0.5}), set(0.5)), std::invalid_argument);
  EXPECT_THROW(lsgan_discriminator_loss(ScoreSet(3, std::vector<double>{}), ScoreSet(3, std::vector<double>{})),
               std::invalid_argument);
}

TEST(LsganTest, GeneratorLoss) {
  auto set = [](double v) { return ScoreSet(3, std::vector<double>(2, v)); };
  EXPECT_EQ(lsgan_generator_loss(set(1)), 0.0);
  EXPECT_DOUBLE_EQ(lsgan_generator_loss(set(0.5)), 0.75);
  EXPECT_DOUBLE_EQ(lsgan_generator_loss(set(0)), 3.0);
  EXPECT_THROW(lsgan_generator_loss(ScoreSet(1, {0.5})), std::invalid_argument);
}

TEST(LsganTest, DifferentiableFormsAgree) {
  std::vector<ad::Var<double>> real, fake;
  ScoreSet rs, fs;
  for (int k = 0; k < 3; ++k) {
    const auto r = testing::random_buffer(4, 10 + k, 0, 1), f = testing::random_buffer(4, 20 + k, 0, 1);
    real.push_back(ad::Var<double>::constant({4, 1, 1, 1}, r));
    fake.push_back(ad::Var<double>::constant({4, 1, 1, 1}, f));
    rs.emplace_back(r.data(), r.data() + 4);
    fs.emplace_back(f.data(), f.data() + 4);
  }
  EXPECT_NEAR(lsgan_discriminator_loss(real, fake).item(), lsgan_discriminator_loss(rs, fs), 1e-14);
  EXPECT_NEAR(lsgan_generator_loss(fake).item(), lsgan_generator_loss(fs), 1e-14);
  EXPECT_GE(lsgan_discriminator_loss(rs, fs), 0.0);
  EXPECT_GE(lsgan_generator_loss(fs), 0.0);
  const auto g = testing::check_gradient(
      [&](const ad::Var<double>& f0) {
        auto f = fake;
        f[0] = f0;
        return ad::add(lsgan_generator_loss(f), lsgan_discriminator_loss(real, f));
      },
      {4, 1, 1, 1}, fake[0].value(), 1e-6, 0, 1);
  EXPECT_LT(g.max_rel_error, 1e-6);
}

}  // namespace
}  // namespace tmo
