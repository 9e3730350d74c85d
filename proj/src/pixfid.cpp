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

#include "tmo/pixfid.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

#include <Eigen/Eigenvalues>

#include "tmo/ad/ops.hpp"
#include "tmo/resample.hpp"

namespace tmo {

namespace {

LdrImage resized(const LdrImage& img, int size) {
  if (img.width() == size && img.height() == size) return img;
  LdrImage out(size, size);
  for (int c = 0; c < 3; ++c) out.channel(c) = resize_bicubic(img.channel(c), size, size).cwiseMax(0.f).cwiseMin(1.f);
  return out;
}

}  // namespace

StubExtractor::StubExtractor(std::uint64_t seed) {
  constexpr int taps = 3 * kKernel * kKernel;
  weights_.resize(kFilters * taps);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0 / std::sqrt(static_cast<double>(taps)));
  for (int f = 0; f < kFilters; ++f) {
    auto w = weights_.segment(f * taps, taps);
    for (int i = 0; i < taps; ++i) w[i] = static_cast<float>(normal(rng));
    if (f % 2 == 0) w -= w.mean();
  }
}

Eigen::MatrixXd StubExtractor::extract(const LdrImage& img) const {
  img.validate();
  const LdrImage x = resized(img, kInputSize);
  const ad::Shape s{1, 3, kInputSize, kInputSize};
  ad::Buffer<float> buf(s.numel());
  for (int c = 0; c < 3; ++c) {
    buf.segment(c * s.plane(), s.plane()) = Eigen::Map<const ad::Buffer<float>>(x.channel(c).data(), s.plane());
  }
  ad::NoGradGuard guard;
  const auto input = ad::Var<float>::constant(s, std::move(buf));
  const auto w = ad::Var<float>::constant({kFilters, 3, kKernel, kKernel}, weights_);
  const auto b = ad::Var<float>::zeros({1, kFilters, 1, 1});
  ad::ConvOptions opt;
  opt.pad_h = opt.pad_w = kKernel / 2;
  opt.pad_mode = ad::PadMode::kReflect;
  const int tile = kInputSize / kGrid;
  const auto pooled = ad::avg_pool2d(ad::relu(ad::conv2d(input, w, b, opt)), tile, tile, 0);
  // pooled: 1 x filters x grid x grid
  Eigen::MatrixXd out(kGrid * kGrid, kFilters);
  for (int f = 0; f < kFilters; ++f) {
    for (int cell = 0; cell < kGrid * kGrid; ++cell) out(cell, f) = pooled.value()[f * kGrid * kGrid + cell];
  }
  return out;
}

Eigen::MatrixXd extract_features(const FeatureExtractor& extractor, std::span<const LdrImage> images) {
  if (images.empty()) throw std::invalid_argument("extract_features: no images");
  const Eigen::Index per = static_cast<Eigen::Index>(extractor.grid()) * extractor.grid();
  Eigen::MatrixXd out(per * static_cast<Eigen::Index>(images.size()), extractor.feature_dim());
  for (std::size_t i = 0; i < images.size(); ++i) {
    const Eigen::MatrixXd f = extractor.extract(images[i]);
    if (f.rows() != per || f.cols() != extractor.feature_dim() || !f.allFinite()) {
      throw std::runtime_error("extractor " + extractor.name() + " returned malformed features");
    }
    out.middleRows(static_cast<Eigen::Index>(i) * per, per) = f;
  }
  return out;
}

FeatureStats gaussian_stats(const Eigen::MatrixXd& samples) {
  if (samples.rows() < 2) throw std::invalid_argument("gaussian_stats: need at least 2 samples");
  if (!samples.allFinite()) throw std::invalid_argument("gaussian_stats: non-finite samples");
  FeatureStats s;
  s.n_samples = samples.rows();
  s.mean = samples.colwise().mean().transpose();
  const Eigen::MatrixXd centered = samples.rowwise() - s.mean.transpose();
  s.cov = (centered.transpose() * centered) / static_cast<double>(samples.rows() - 1);
  s.cov = 0.5 * (s.cov + s.cov.transpose()).eval();
  return s;
}

namespace {

Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
  if (es.info() != Eigen::Success) throw std::runtime_error("eigendecomposition failed");
  const Eigen::VectorXd root = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * root.asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace

double frechet_distance(const FeatureStats& a, const FeatureStats& b, double eps) {
  const Eigen::Index d = a.mean.size();
  if (b.mean.size() != d || a.cov.rows() != d || a.cov.cols() != d || b.cov.rows() != d || b.cov.cols() != d) {
    throw std::invalid_argument("frechet_distance: dimension mismatch");
  }
  if (!a.mean.allFinite() || !b.mean.allFinite() || !a.cov.allFinite() || !b.cov.allFinite()) {
    throw std::invalid_argument("frechet_distance: non-finite statistics");
  }
  const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(d, d);
  const Eigen::MatrixXd ca = a.cov + eps * eye, cb = b.cov + eps * eye;
  const Eigen::MatrixXd ra = psd_sqrt(ca);
  Eigen::MatrixXd inner = ra * cb * ra;
  inner = 0.5 * (inner + inner.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(inner, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw std::runtime_error("eigendecomposition failed");
  const double tr_sqrt = es.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();
  const double dist = (a.mean - b.mean).squaredNorm() + ca.trace() + cb.trace() - 2.0 * tr_sqrt;
  return std::max(dist, 0.0);
}

double pixfid_score(std::span<const LdrImage> set_a, std::span<const LdrImage> set_b,
                    const FeatureExtractor& extractor) {
  if (set_a.size() < 2 || set_b.size() < 2) throw std::invalid_argument("pixfid: each set needs at least 2 images");
  const FeatureStats a = gaussian_stats(extract_features(extractor, set_a));
  const FeatureStats b = gaussian_stats(extract_features(extractor, set_b));
  return frechet_distance(a, b);
}

LdrImage gaussian_blur(const LdrImage& img, double sigma) {
  if (!(sigma > 0.0)) throw std::invalid_argument("blur sigma must be positive");
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> k(static_cast<std::size_t>(2 * radius + 1));
  double total = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    k[static_cast<std::size_t>(i + radius)] = std::exp(-0.5 * i * i / (sigma * sigma));
    total += k[static_cast<std::size_t>(i + radius)];
  }
  for (auto& v : k) v /= total;
  const int w = img.width(), h = img.height();
  LdrImage out(w, h);
  for (int c = 0; c < 3; ++c) {
    const auto& src = img.channel(c);
    Plane<double> tmp(h, w);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        double acc = 0.0;
        for (int i = -radius; i <= radius; ++i) acc += k[static_cast<std::size_t>(i + radius)] * src(y, reflect_index(x + i, w));
        tmp(y, x) = acc;
      }
    }
    auto& dst = out.channel(c);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        double acc = 0.0;
        for (int i = -radius; i <= radius; ++i) acc += k[static_cast<std::size_t>(i + radius)] * tmp(reflect_index(y + i, h), x);
        dst(y, x) = static_cast<float>(std::clamp(acc, 0.0, 1.0));
      }
    }
  }
  return out;
}

LdrImage add_gaussian_noise(const LdrImage& img, double sigma, std::uint64_t seed) {
  if (!(sigma >= 0.0)) throw std::invalid_argument("noise sigma must be non-negative");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, sigma);
  LdrImage out = img;
  for (int c = 0; c < 3; ++c) {
    auto& ch = out.channel(c);
    for (Eigen::Index i = 0; i < ch.size(); ++i) {
      ch.data()[i] = static_cast<float>(std::clamp(ch.data()[i] + normal(rng), 0.0, 1.0));
    }
  }
  return out;
}

}  // namespace tmo
