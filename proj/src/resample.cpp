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

#include "tmo/resample.hpp"

#include <cmath>
#include <map>
#include <stdexcept>

namespace tmo {

double cubic_kernel(double x) {
  constexpr double a = -0.5;
  x = std::abs(x);
  if (x <= 1.0) return ((a + 2.0) * x - (a + 3.0)) * x * x + 1.0;
  if (x < 2.0) return ((a * x - 5.0 * a) * x + 8.0 * a) * x - 4.0 * a;
  return 0.0;
}

int reflect_index(int i, int n) {
  if (n == 1) return 0;
  const int period = 2 * (n - 1);
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - i;
}

ResampleTaps bicubic_taps(int in_size, int out_size) {
  if (in_size < 1 || out_size < 1) throw std::invalid_argument("bicubic_taps: empty axis");
  ResampleTaps r;
  r.in_size = in_size;
  r.out_size = out_size;
  r.taps.resize(out_size);
  const double scale = static_cast<double>(out_size) / in_size;
  const double stretch = scale < 1.0 ? 1.0 / scale : 1.0;
  const double support = 2.0 * stretch;
  for (int i = 0; i < out_size; ++i) {
    const double center = (i + 0.5) / scale - 0.5;
    const int lo = static_cast<int>(std::floor(center - support)) + 1;
    const int hi = static_cast<int>(std::ceil(center + support)) - 1;
    std::map<int, double> merged;
    double total = 0.0;
    for (int j = lo; j <= hi; ++j) {
      const double w = cubic_kernel((j - center) / stretch);
      if (w == 0.0) continue;
      merged[reflect_index(j, in_size)] += w;
      total += w;
    }
    auto& row = r.taps[i];
    row.reserve(merged.size());
    for (const auto& [j, w] : merged) row.emplace_back(j, w / total);
  }
  return r;
}

namespace {

template <typename Scalar>
Plane<Scalar> resample_rows(const Plane<Scalar>& src, const ResampleTaps& t) {
  Plane<Scalar> out = Plane<Scalar>::Zero(t.out_size, src.cols());
  for (int i = 0; i < t.out_size; ++i) {
    for (const auto& [j, w] : t.taps[i]) out.row(i) += Scalar(w) * src.row(j);
  }
  return out;
}

template <typename Scalar>
Plane<Scalar> resample_cols(const Plane<Scalar>& src, const ResampleTaps& t) {
  Plane<Scalar> out = Plane<Scalar>::Zero(src.rows(), t.out_size);
  for (int i = 0; i < t.out_size; ++i) {
    for (const auto& [j, w] : t.taps[i]) out.col(i) += Scalar(w) * src.col(j);
  }
  return out;
}

}  // namespace

template <typename Scalar>
Plane<Scalar> resize_bicubic(const Plane<Scalar>& src, int out_height, int out_width) {
  if (src.size() == 0) throw std::invalid_argument("resize_bicubic: empty plane");
  const auto rows = bicubic_taps(static_cast<int>(src.rows()), out_height);
  const auto cols = bicubic_taps(static_cast<int>(src.cols()), out_width);
  return resample_cols(resample_rows(src, rows), cols);
}

template <typename Scalar>
Plane<Scalar> downscale(const Plane<Scalar>& map, int k) {
  if (k < 0 || k > 2) throw std::invalid_argument("downscale: level must be 0, 1 or 2");
  const int f = 1 << k;
  if (map.rows() % f != 0 || map.cols() % f != 0) {
    throw std::invalid_argument("downscale: dimensions not divisible by 2^k");
  }
  Plane<Scalar> out = map;
  for (int s = 0; s < k; ++s) {
    out = resize_bicubic(out, static_cast<int>(out.rows() / 2), static_cast<int>(out.cols() / 2));
  }
  return out;
}

template Plane<float> resize_bicubic(const Plane<float>&, int, int);
template Plane<double> resize_bicubic(const Plane<double>&, int, int);
template Plane<float> downscale(const Plane<float>&, int);
template Plane<double> downscale(const Plane<double>&, int);

}  // namespace tmo
