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

#ifndef TMO_PIXFID_HPP_
#define TMO_PIXFID_HPP_

#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>

#include <Eigen/Core>

#include "tmo/image.hpp"

namespace tmo {

/// Maps an image to grid()^2 feature vectors, one per spatial cell.
class FeatureExtractor {
 public:
  virtual ~FeatureExtractor() = default;
  virtual std::string name() const = 0;
  virtual int feature_dim() const = 0;
  virtual int grid() const = 0;
  /// grid()^2 x feature_dim(); cells in row-major order.
  virtual Eigen::MatrixXd extract(const LdrImage& img) const = 0;
};

/// Seeded random 5x5 filter bank over RGB (half the filters zero-mean),
/// ReLU, then mean-pooled over 32x32 tiles of the image resized to 256x256.
class StubExtractor : public FeatureExtractor {
 public:
  static constexpr int kInputSize = 256;
  static constexpr int kGrid = 8;
  static constexpr int kFilters = 64;
  static constexpr int kKernel = 5;

  explicit StubExtractor(std::uint64_t seed = 0x5eed);

  std::string name() const override { return "stub"; }
  int feature_dim() const override { return kFilters; }
  int grid() const override { return kGrid; }
  Eigen::MatrixXd extract(const LdrImage& img) const override;

 private:
  Eigen::ArrayXf weights_;
};

/// Inception-v3 activations after block Mixed_6e (17x17x768), average-pooled
/// with a 3x3 stride-2 window to 8x8x768. The image is resized to 299x299 and
/// mapped to [-1,1]. Weights come from a directory written by
/// tools/export_inception_weights.py.
class InceptionExtractor : public FeatureExtractor {
 public:
  static constexpr int kInputSize = 299;
  static constexpr int kGrid = 8;
  static constexpr int kFeatures = 768;

  explicit InceptionExtractor(const std::filesystem::path& weights_dir);
  ~InceptionExtractor() override;

  std::string name() const override { return "inception"; }
  int feature_dim() const override { return kFeatures; }
  int grid() const override { return kGrid; }
  Eigen::MatrixXd extract(const LdrImage& img) const override;
  /// Same network on an already prepared 3 x 299 x 299 input in [-1,1].
  Eigen::MatrixXd extract_prepared(const Eigen::ArrayXf& chw) const;

 private:
  struct Network;
  std::unique_ptr<Network> net_;
};

/// Rows are samples: image-major, then cells in row-major order.
Eigen::MatrixXd extract_features(const FeatureExtractor& extractor, std::span<const LdrImage> images);

struct FeatureStats {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
  Eigen::Index n_samples = 0;
};

inline constexpr double kPsdEpsilon = 1e-6;

/// Sample mean and unbiased covariance of the rows.
FeatureStats gaussian_stats(const Eigen::MatrixXd& samples);

/// |mu_a - mu_b|^2 + Tr(A + B - 2 (A^1/2 B A^1/2)^1/2) with A, B the
/// covariances plus eps * I. Negative eigenvalues are clipped and the result
/// is clamped at 0.
double frechet_distance(const FeatureStats& a, const FeatureStats& b, double eps = kPsdEpsilon);

double pixfid_score(std::span<const LdrImage> set_a, std::span<const LdrImage> set_b,
                    const FeatureExtractor& extractor);

/// Separable Gaussian blur with standard deviation `sigma`, reflected borders.
LdrImage gaussian_blur(const LdrImage& img, double sigma);
/// Additive i.i.d. Gaussian noise, clipped to [0,1].
LdrImage add_gaussian_noise(const LdrImage& img, double sigma, std::uint64_t seed);

}  // namespace tmo

#endif  // TMO_PIXFID_HPP_
