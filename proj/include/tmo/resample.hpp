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

#ifndef TMO_RESAMPLE_HPP_
#define TMO_RESAMPLE_HPP_

#include <vector>

#include "tmo/image.hpp"

namespace tmo {

/// Catmull-Rom cubic (a = -0.5).
double cubic_kernel(double x);

/// Mirror index into [0, n) without repeating the edge sample ("reflect-101").
int reflect_index(int i, int n);

/// Sparse 1-D resampling operator: output sample i is
/// sum_k weights[i][k].second * input[weights[i][k].first].
struct ResampleTaps {
  int in_size = 0;
  int out_size = 0;
  std::vector<std::vector<std::pair<int, double>>> taps;
};

/// Bicubic resampling from `in_size` to `out_size` samples with pixel-center
/// alignment. When shrinking, the kernel is stretched by the inverse scale so
/// the filter band-limits before decimation.
ResampleTaps bicubic_taps(int in_size, int out_size);

/// Separable bicubic resize of a plane.
template <typename Scalar>
Plane<Scalar> resize_bicubic(const Plane<Scalar>& src, int out_height, int out_width);

/// Bicubic x2^k decimation, k in {0,1,2}, applied as k successive halvings.
/// Throws std::invalid_argument for other k or non-divisible dimensions.
template <typename Scalar>
Plane<Scalar> downscale(const Plane<Scalar>& map, int k);

}  // namespace tmo

#endif  // TMO_RESAMPLE_HPP_
