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

#include "tmo/rangecompress.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "tmo/fs_util.hpp"

namespace tmo {

Histogram::Histogram(const Bins& bins) {
  double total = 0.0;
  for (double b : bins) {
    if (!(b >= 0.0) || !std::isfinite(b)) throw std::invalid_argument("histogram bins must be finite and >= 0");
    total += b;
  }
  if (!(total > 0.0)) throw std::invalid_argument("histogram has no mass");
  for (int l = 0; l < kHistogramBins; ++l) bins_[l] = bins[l] / total;
}

double Histogram::sum() const { return std::accumulate(bins_.begin(), bins_.end(), 0.0); }

namespace {

template <typename Scalar>
Scalar checked_max(const LuminanceMapT<Scalar>& y) {
  if (y.size() == 0) throw std::invalid_argument("compress: empty luminance map");
  if (!y.allFinite()) throw std::invalid_argument("compress: non-finite luminance");
  if ((y < Scalar(0)).any()) throw std::invalid_argument("compress: negative luminance");
  const Scalar m = y.maxCoeff();
  if (!(m > Scalar(0))) throw std::invalid_argument("compress: all-zero luminance map");
  return m;
}

inline int bin_of(double v) { return std::min(static_cast<int>(v * kHistogramBins), kHistogramBins - 1); }

/// Y / max(Y), computed once per search.
template <typename Scalar>
std::vector<Scalar> normalized_ratios(const LuminanceMapT<Scalar>& y) {
  const Scalar m = checked_max(y);
  std::vector<Scalar> x(static_cast<std::size_t>(y.size()));
  const Scalar* p = y.data();
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = p[i] / m;
  return x;
}

// Same arithmetic as compress() so the objective equals
// cross_entropy_objective(histogram20(compress(y, lambda)), h_ldr) bit for bit.
template <typename Scalar>
inline Scalar curve(Scalar ratio, Scalar lambda, Scalar eps, Scalar denom) {
  return std::log(lambda * ratio + eps) / denom;
}

template <typename Scalar>
double objective_from_ratios(const std::vector<Scalar>& ratios, const Histogram& h_ldr, double lambda) {
  const Scalar l = static_cast<Scalar>(lambda);
  const Scalar eps = static_cast<Scalar>(kCurveEpsilon);
  const Scalar denom = std::log(l + eps);
  Histogram::Bins counts{};
  for (Scalar x : ratios) {
    const Scalar yc = std::clamp(curve(x, l, eps, denom), Scalar(0), Scalar(1));
    counts[bin_of(static_cast<double>(yc))] += 1.0;
  }
  return cross_entropy_objective(Histogram(counts), h_ldr);
}

}  // namespace

template <typename Scalar>
LuminanceMapT<Scalar> compress(const LuminanceMapT<Scalar>& y, const CompressionParams& p) {
  if (!(p.lambda > 0.0) || !std::isfinite(p.lambda)) throw std::invalid_argument("compress: lambda must be > 0");
  if (!(p.epsilon > 0.0)) throw std::invalid_argument("compress: epsilon must be > 0");
  const Scalar m = checked_max(y);
  const Scalar lambda = static_cast<Scalar>(p.lambda);
  const Scalar eps = static_cast<Scalar>(p.epsilon);
  const Scalar denom = std::log(lambda + eps);
  LuminanceMapT<Scalar> out =
      (y / m).unaryExpr([&](Scalar r) { return curve(r, lambda, eps, denom); });
  if (p.clamp) out = out.unaryExpr([](Scalar v) { return std::clamp(v, Scalar(0), Scalar(1)); });
  return out;
}

template <typename Scalar>
Histogram histogram20(const LuminanceMapT<Scalar>& y_c) {
  if (y_c.size() == 0) throw std::invalid_argument("histogram20: empty map");
  Histogram::Bins counts{};
  const Scalar* p = y_c.data();
  for (Eigen::Index i = 0; i < y_c.size(); ++i) {
    const double v = static_cast<double>(p[i]);
    if (!(v >= 0.0 && v <= 1.0)) throw std::invalid_argument("histogram20: value outside [0,1]");
    counts[bin_of(v)] += 1.0;
  }
  return Histogram(counts);
}

double cross_entropy_objective(const Histogram& h, const Histogram& h_ldr) {
  double ce = 0.0;
  for (int l = 0; l < kHistogramBins; ++l) ce -= h[l] * std::log(h_ldr[l] + kHistogramFloor);
  return ce;
}

template <typename Scalar>
double lambda_objective(const LuminanceMapT<Scalar>& y, const Histogram& h_ldr, double lambda) {
  return objective_from_ratios(normalized_ratios(y), h_ldr, lambda);
}

template <typename Scalar>
LambdaEstimate estimate_lambda(const LuminanceMapT<Scalar>& y, const Histogram& h_ldr, const SearchConfig& cfg) {
  if (cfg.population < 4) throw std::invalid_argument("estimate_lambda: population must be >= 4");
  if (!(cfg.log10_lo < cfg.log10_hi)) throw std::invalid_argument("estimate_lambda: empty search range");
  if (cfg.generations < 0) throw std::invalid_argument("estimate_lambda: negative generation count");

  const auto ratios = normalized_ratios(y);
  LambdaEstimate result;
  if (y.maxCoeff() == y.minCoeff()) {
    result.lambda = std::pow(10.0, cfg.log10_lo);
    result.objective = objective_from_ratios(ratios, h_ldr, result.lambda);
    result.degenerate = true;
    result.evaluations = 1;
    return result;
  }

  constexpr int kDims = 1;
  using Member = std::array<double, kDims>;
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto fitness = [&](const Member& m) {
    ++result.evaluations;
    return objective_from_ratios(ratios, h_ldr, std::pow(10.0, m[0]));
  };

  const int np = cfg.population;
  std::vector<Member> pop(np);
  std::vector<double> score(np);
  for (int i = 0; i < np; ++i) {
    for (auto& g : pop[i]) g = cfg.log10_lo + unit(rng) * (cfg.log10_hi - cfg.log10_lo);
    score[i] = fitness(pop[i]);
  }

  std::uniform_int_distribution<int> pick(0, np - 1);
  std::uniform_int_distribution<int> pick_dim(0, kDims - 1);
  for (int gen = 0; gen < cfg.generations; ++gen) {
    for (int i = 0; i < np; ++i) {
      int r1, r2, r3;
      do r1 = pick(rng); while (r1 == i);
      do r2 = pick(rng); while (r2 == i || r2 == r1);
      do r3 = pick(rng); while (r3 == i || r3 == r1 || r3 == r2);
      const int forced = pick_dim(rng);
      Member trial = pop[i];
      for (int j = 0; j < kDims; ++j) {
        if (j == forced || unit(rng) < cfg.crossover) {
          const double v = pop[r1][j] + cfg.mutation * (pop[r2][j] - pop[r3][j]);
          trial[j] = std::clamp(v, cfg.log10_lo, cfg.log10_hi);
        }
      }
      const double s = fitness(trial);
      if (s <= score[i]) {
        pop[i] = trial;
        score[i] = s;
      }
    }
  }

  const auto best = static_cast<std::size_t>(std::min_element(score.begin(), score.end()) - score.begin());
  result.lambda = std::pow(10.0, pop[best][0]);
  result.objective = score[best];
  return result;
}

Histogram build_canonical_histogram(std::span<const LdrImage> images) {
  if (images.empty()) throw std::invalid_argument("build_canonical_histogram: no images");
  Histogram::Bins acc{};
  for (const auto& img : images) {
    const auto h = histogram20(luminance(img).template cast<double>().eval());
    for (int l = 0; l < kHistogramBins; ++l) acc[l] += h[l];
  }
  for (auto& b : acc) b /= static_cast<double>(images.size());
  return Histogram(acc);
}

std::string format_histogram(const Histogram& h, char sep) {
  std::ostringstream ss;
  ss.precision(17);
  for (int l = 0; l < kHistogramBins; ++l) {
    ss << h[l];
    if (l + 1 < kHistogramBins || sep == '\n') ss << sep;
  }
  return ss.str();
}

Histogram parse_histogram(const std::string& text) {
  std::string normalized = text;
  std::replace(normalized.begin(), normalized.end(), ',', ' ');
  std::istringstream ss(normalized);
  Histogram::Bins bins{};
  int n = 0;
  double v;
  while (ss >> v) {
    if (n >= kHistogramBins) throw std::invalid_argument("histogram: more than 20 values");
    bins[n++] = v;
  }
  if (!ss.eof()) throw std::invalid_argument("histogram: non-numeric entry");
  if (n != kHistogramBins) throw std::invalid_argument("histogram: expected 20 values, got " + std::to_string(n));
  return Histogram(bins);
}

void save_histogram(const std::filesystem::path& path, const Histogram& h) {
  atomic_write(path, [&](std::ostream& out) { out << format_histogram(h); }, false);
}

Histogram load_histogram(const std::filesystem::path& path) { return parse_histogram(read_text_file(path)); }

template LuminanceMapT<float> compress(const LuminanceMapT<float>&, const CompressionParams&);
template LuminanceMapT<double> compress(const LuminanceMapT<double>&, const CompressionParams&);
template Histogram histogram20(const LuminanceMapT<float>&);
template Histogram histogram20(const LuminanceMapT<double>&);
template double lambda_objective(const LuminanceMapT<float>&, const Histogram&, double);
template double lambda_objective(const LuminanceMapT<double>&, const Histogram&, double);
template LambdaEstimate estimate_lambda(const LuminanceMapT<float>&, const Histogram&, const SearchConfig&);
template LambdaEstimate estimate_lambda(const LuminanceMapT<double>&, const Histogram&, const SearchConfig&);

}  // namespace tmo
