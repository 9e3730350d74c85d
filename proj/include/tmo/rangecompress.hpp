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

#ifndef TMO_RANGECOMPRESS_HPP_
#define TMO_RANGECOMPRESS_HPP_

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>

#include "tmo/image.hpp"

namespace tmo {

inline constexpr int kHistogramBins = 20;
inline constexpr double kCurveEpsilon = 0.05;
inline constexpr double kHistogramFloor = 1e-6;

/// Normalized 20-bin luminance distribution over [0,1].
class Histogram {
 public:
  using Bins = std::array<double, kHistogramBins>;

  Histogram() { bins_.fill(0.0); }
  /// Normalizes `bins` to unit sum. Throws on negative or all-zero input.
  explicit Histogram(const Bins& bins);

  double operator[](int l) const { return bins_.at(l); }
  const Bins& bins() const { return bins_; }
  double sum() const;

 private:
  Bins bins_;
};

struct CompressionParams {
  double lambda = 1000.0;
  double epsilon = kCurveEpsilon;
  bool clamp = true;
};

/// Differential evolution (DE/rand/1/bin) over log10(lambda).
struct SearchConfig {
  double log10_lo = 0.0;
  double log10_hi = 6.0;
  int population = 20;
  int generations = 50;
  double mutation = 0.8;   // F
  double crossover = 0.9;  // CR
  std::uint64_t seed = 0;
};

/// Y_c = log(lambda * Y / max(Y) + eps) / log(lambda + eps), optionally
/// clamped to [0,1]. Throws on all-zero, negative or non-finite input.
template <typename Scalar>
LuminanceMapT<Scalar> compress(const LuminanceMapT<Scalar>& y, const CompressionParams& p);

/// Bins [l/20, (l+1)/20); the value 1.0 falls in the last bin.
/// Throws on values outside [0,1].
template <typename Scalar>
Histogram histogram20(const LuminanceMapT<Scalar>& y_c);

/// -sum_l h[l] * ln(h_ldr[l] + 1e-6).
double cross_entropy_objective(const Histogram& h, const Histogram& h_ldr);

struct LambdaEstimate {
  double lambda = 1.0;
  double objective = 0.0;
  /// Constant luminance: every lambda gives the same histogram.
  bool degenerate = false;
  int evaluations = 0;
};

template <typename Scalar>
LambdaEstimate estimate_lambda(const LuminanceMapT<Scalar>& y, const Histogram& h_ldr, const SearchConfig& cfg);

/// Objective of a single lambda, exposed for grid scans and diagnostics.
template <typename Scalar>
double lambda_objective(const LuminanceMapT<Scalar>& y, const Histogram& h_ldr, double lambda);

/// Mean of the per-image luminance histograms, renormalized.
Histogram build_canonical_histogram(std::span<const LdrImage> images);

/// Plain text: 20 lines, one float per line.
void save_histogram(const std::filesystem::path& path, const Histogram& h);
Histogram load_histogram(const std::filesystem::path& path);
std::string format_histogram(const Histogram& h, char sep = '\n');
Histogram parse_histogram(const std::string& text);

}  // namespace tmo

#endif  // TMO_RANGECOMPRESS_HPP_
