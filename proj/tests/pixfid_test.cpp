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

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "test_util.hpp"
#include "tmo/checkpoint.hpp"
#include "tmo/datasets.hpp"
#include "tmo/pixfid.hpp"

namespace tmo {
namespace {

FeatureStats diag_stats(std::vector<double> mean, std::vector<double> var) {
  FeatureStats s;
  s.mean = Eigen::Map<Eigen::VectorXd>(mean.data(), static_cast<Eigen::Index>(mean.size()));
  s.cov = Eigen::Map<Eigen::VectorXd>(var.data(), static_cast<Eigen::Index>(var.size())).asDiagonal();
  s.n_samples = 2;
  return s;
}

FeatureStats random_stats(int d, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::MatrixXd samples(3 * d, d);
  for (Eigen::Index i = 0; i < samples.size(); ++i) samples.data()[i] = n(rng);
  Eigen::MatrixXd mix(d, d);
  for (Eigen::Index i = 0; i < mix.size(); ++i) mix.data()[i] = n(rng);
  return gaussian_stats(samples * mix);
}

std::vector<LdrImage> ldr_set(int n, int size, std::uint64_t seed) {
  std::vector<LdrImage> out;
  for (int i = 0; i < n; ++i) out.push_back(synth_ldr(seed + static_cast<std::uint64_t>(i), size, size));
  return out;
}

TEST(GaussianStatsTest, HandExample) {
  Eigen::MatrixXd s(2, 2);
  s << 0, 0, 2, 2;
  const auto st = gaussian_stats(s);
  EXPECT_EQ(st.n_samples, 2);
  EXPECT_TRUE(st.mean.isApprox(Eigen::Vector2d(1, 1)));
  Eigen::Matrix2d expected;
  expected << 2, 2, 2, 2;
  EXPECT_TRUE(st.cov.isApprox(expected));
}

TEST(GaussianStatsTest, Errors) {
  EXPECT_THROW(gaussian_stats(Eigen::MatrixXd::Zero(1, 3)), std::invalid_argument);
  Eigen::MatrixXd bad = Eigen::MatrixXd::Zero(3, 2);
  bad(1, 1) = std::nan("");
  EXPECT_THROW(gaussian_stats(bad), std::invalid_argument);
}

TEST(FrechetTest, IdentityIsZero) {
  for (int t = 0; t < 5; ++t) {
    const auto a = random_stats(16, 10 + t);
    EXPECT_NEAR(frechet_distance(a, a), 0.0, 1e-8);
  }
}

TEST(FrechetTest, OneDimensionalClosedForm) {
  EXPECT_NEAR(frechet_distance(diag_stats({0}, {1}), diag_stats({1}, {4})), 2.0, 1e-6);
}

TEST(FrechetTest, DiagonalOracle) {
  const std::vector<double> ma{0.5, -1, 2, 0}, va{1, 0.25, 3, 2}, mb{1, 0, 0, 0.5}, vb{4, 1, 0.5, 2};
  double expected = 0;
  for (std::size_t i = 0; i < ma.size(); ++i) {
    expected += (ma[i] - mb[i]) * (ma[i] - mb[i]) + std::pow(std::sqrt(va[i]) - std::sqrt(vb[i]), 2);
  }
  EXPECT_NEAR(frechet_distance(diag_stats(ma, va), diag_stats(mb, vb), 0.0), expected, 1e-10);
}

TEST(FrechetTest, SymmetricOnRandomPsdPairs) {
  for (int t = 0; t < 5; ++t) {
    const auto a = random_stats(12, 100 + t), b = random_stats(12, 200 + t);
    const double ab = frechet_distance(a, b), ba = frechet_distance(b, a);
    EXPECT_GT(ab, 0.0);
    EXPECT_NEAR(ab, ba, 1e-8);
  }
}

TEST(FrechetTest, RankDeficientCovarianceStaysFinite) {
  const auto a = diag_stats({0, 0, 0}, {1, 0, 0}), b = diag_stats({0, 1, 0}, {0, 0, 1});
  const double d = frechet_distance(a, b);
  EXPECT_TRUE(std::isfinite(d));
  EXPECT_NEAR(d, 3.0, 1e-2);
}

TEST(FrechetTest, Errors) {
  EXPECT_THROW(frechet_distance(diag_stats({0}, {1}), diag_stats({0, 1}, {1, 1})), std::invalid_argument);
  EXPECT_THROW(frechet_distance(diag_stats({std::nan("")}, {1}), diag_stats({0}, {1})), std::invalid_argument);
}

TEST(StubExtractorTest, ShapeDeterminismAndRange) {
  const StubExtractor ex;
  const auto img = synth_ldr(1, 96, 80);
  const auto f1 = ex.extract(img), f2 = StubExtractor().extract(img);
  EXPECT_EQ(f1.rows(), 64);
  EXPECT_EQ(f1.cols(), 64);
  EXPECT_TRUE(f1 == f2);
  EXPECT_GE(f1.minCoeff(), 0.0);
  EXPECT_GT(f1.maxCoeff(), 0.0);
  EXPECT_FALSE(StubExtractor(7).extract(img) == f1);
}

TEST(ExtractFeaturesTest, StacksRowsPerImage) {
  const StubExtractor ex;
  const auto set = ldr_set(5, 64, 3);
  const auto f = extract_features(ex, set);
  EXPECT_EQ(f.rows(), 320);
  EXPECT_EQ(f.cols(), 64);
  EXPECT_TRUE(f.middleRows(128, 64) == ex.extract(set[2]));
  EXPECT_THROW(extract_features(ex, std::span<const LdrImage>()), std::invalid_argument);
}

TEST(PixfidTest, OrderInvariantAndZeroOnSelf) {
  const StubExtractor ex;
  const auto a = ldr_set(4, 64, 10), b = ldr_set(4, 64, 20);
  auto b_rev = b;
  std::reverse(b_rev.begin(), b_rev.end());
  const double s = pixfid_score(a, b, ex);
  EXPECT_NEAR(pixfid_score(a, b_rev, ex), s, 1e-9 * std::max(1.0, s));
  EXPECT_NEAR(pixfid_score(a, a, ex), 0.0, 1e-8);
  EXPECT_THROW(pixfid_score(std::span<const LdrImage>(a.data(), 1), b, ex), std::invalid_argument);
}

TEST(PixfidTest, IncreasesWithBlurAndNoise) {
  const StubExtractor ex;
  const auto ref = ldr_set(8, 128, 40);
  auto degrade = [&](auto fn) {
    std::vector<LdrImage> out;
    for (std::size_t i = 0; i < ref.size(); ++i) out.push_back(fn(ref[i], i));
    return pixfid_score(ref, out, ex);
  };
  double prev = 0.0;
  for (double r : {1.0, 2.0, 4.0}) {
    const double s = degrade([&](const LdrImage& im, std::size_t) { return gaussian_blur(im, r); });
    EXPECT_GT(s, prev) << "blur " << r;
    prev = s;
  }
  prev = 0.0;
  for (double sigma : {0.02, 0.05, 0.1}) {
    const double s = degrade([&](const LdrImage& im, std::size_t i) { return add_gaussian_noise(im, sigma, i); });
    EXPECT_GT(s, prev) << "noise " << sigma;
    prev = s;
  }
}

TEST(DegradationTest, BlurAndNoiseBasics) {
  LdrImage flat(32, 32);
  for (int c = 0; c < 3; ++c) flat.channel(c).setConstant(0.5f);
  const auto b = gaussian_blur(flat, 2.0);
  for (int c = 0; c < 3; ++c) EXPECT_LT((b.channel(c) - 0.5f).abs().maxCoeff(), 1e-6f);
  const auto n = add_gaussian_noise(flat, 0.0, 1);
  for (int c = 0; c < 3; ++c) EXPECT_TRUE((n.channel(c) == 0.5f).all());
  const auto n2 = add_gaussian_noise(flat, 0.3, 1);
  EXPECT_GE(n2.channel(0).minCoeff(), 0.0f);
  EXPECT_LE(n2.channel(0).maxCoeff(), 1.0f);
  EXPECT_THROW(gaussian_blur(flat, 0.0), std::invalid_argument);
  EXPECT_THROW(add_gaussian_noise(flat, -1.0, 1), std::invalid_argument);
}

TEST(InceptionExtractorTest, MissingWeightsError) {
  EXPECT_ANY_THROW(InceptionExtractor("/nonexistent/tmo_inception"));
}

TEST(InceptionReference, MatchesExportedActivations) {
  const char* dir = std::getenv("TMO_INCEPTION_REFERENCE");
  if (dir == nullptr) GTEST_SKIP() << "TMO_INCEPTION_REFERENCE not set";
  const std::filesystem::path root(dir);
  const InceptionExtractor ex(root);
  const auto input = read_f32_file(root / "input.f32", 3 * 299 * 299);
  const auto expected = read_f32_file(root / "features.f32", 768 * 64);
  const Eigen::ArrayXf chw = Eigen::Map<const Eigen::ArrayXf>(input.data(), static_cast<Eigen::Index>(input.size()));
  const Eigen::MatrixXd f = ex.extract_prepared(chw);
  ASSERT_EQ(f.rows(), 64);
  ASSERT_EQ(f.cols(), 768);
  double max_abs = 0.0, max_err = 0.0;
  for (int c = 0; c < 768; ++c)
    for (int cell = 0; cell < 64; ++cell) {
      const double e = expected[static_cast<std::size_t>(c * 64 + cell)];
      max_abs = std::max(max_abs, std::abs(e));
      max_err = std::max(max_err, std::abs(f(cell, c) - e));
    }
  EXPECT_GT(max_abs, 0.0);
  std::printf("inception max abs error %.3g, scale %.3g\n", max_err, max_abs);
  EXPECT_LT(max_err, 1e-3 * max_abs) << "max abs error " << max_err << " vs scale " << max_abs;
}

}  // namespace
}  // namespace tmo
