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

#ifndef TMO_AD_OPS_HPP_
#define TMO_AD_OPS_HPP_

#include <vector>

#include "tmo/ad/tensor.hpp"
#include "tmo/resample.hpp"

namespace tmo::ad {

enum class PadMode { kZero, kReflect };

struct ConvOptions {
  int stride_h = 1, stride_w = 1;
  int pad_h = 0, pad_w = 0;
  PadMode pad_mode = PadMode::kZero;
};

/// x: N x C x H x W, weight: O x C x kh x kw, bias: 1 x O x 1 x 1 (optional).
template <typename T>
Var<T> conv2d(const Var<T>& x, const Var<T>& weight, const Var<T>& bias, const ConvOptions& opt);

/// Kernel-2 stride-2 transposed convolution. weight: C x O x 2 x 2.
template <typename T>
Var<T> conv_transpose2x2(const Var<T>& x, const Var<T>& weight, const Var<T>& bias);

/// Unpadded max pooling; output extent floor((H - k) / s) + 1.
template <typename T>
Var<T> max_pool2d(const Var<T>& x, int kernel, int stride);

/// Zero-padded average pooling, padding counted in the divisor.
template <typename T>
Var<T> avg_pool2d(const Var<T>& x, int kernel, int stride, int pad);

/// Mean over H x W: N x C x 1 x 1.
template <typename T>
Var<T> global_avg_pool(const Var<T>& x);

template <typename T>
Var<T> relu(const Var<T>& x);
template <typename T>
Var<T> leaky_relu(const Var<T>& x, T slope);
template <typename T>
Var<T> sigmoid(const Var<T>& x);
/// sqrt(x + delta); x must be >= -delta.
template <typename T>
Var<T> sqrt_guarded(const Var<T>& x, T delta);
template <typename T>
Var<T> square(const Var<T>& x);

template <typename T>
Var<T> add(const Var<T>& a, const Var<T>& b);
template <typename T>
Var<T> sub(const Var<T>& a, const Var<T>& b);
template <typename T>
Var<T> scale(const Var<T>& x, T s);
template <typename T>
Var<T> add_scalar(const Var<T>& x, T s);

/// Scalar mean / sum of all elements: 1 x 1 x 1 x 1.
template <typename T>
Var<T> mean(const Var<T>& x);
template <typename T>
Var<T> sum(const Var<T>& x);

/// Concatenation along C; all inputs share N, H, W.
template <typename T>
Var<T> concat_channels(const std::vector<Var<T>>& xs);

/// Separable linear resampling of every plane.
template <typename T>
Var<T> resample(const Var<T>& x, const ResampleTaps& rows, const ResampleTaps& cols);

/// Bicubic x2^k downscaling, the autodiff counterpart of tmo::downscale.
template <typename T>
Var<T> downscale(const Var<T>& x, int k);

inline constexpr double kPearsonGuard = 1e-6;
inline constexpr int kPearsonPatch = 5;

/// Mean over all valid 5x5 patches of cov / ((sigma_a + d)(sigma_b + d)),
/// population statistics. Maps narrower than 5 use a window clipped to the map.
/// a, b: N x 1 x H x W. Result: N x 1 x 1 x 1.
template <typename T>
Var<T> patch_pearson(const Var<T>& a, const Var<T>& b, T guard = T(kPearsonGuard));

}  // namespace tmo::ad

#endif  // TMO_AD_OPS_HPP_
