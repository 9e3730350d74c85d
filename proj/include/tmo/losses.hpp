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

#ifndef TMO_LOSSES_HPP_
#define TMO_LOSSES_HPP_

#include <vector>

#include "tmo/ad/ops.hpp"
#include "tmo/image.hpp"

namespace tmo {

/// Losses reported for one training step.
struct LossBreakdown {
  double l_disc = 0.0;
  double l_natural = 0.0;
  double l_struct = 0.0;
  double w_struct = 1.0;

  double total_gen() const { return l_natural + w_struct * l_struct; }
};

inline constexpr int kStructScales = 3;

/// Mean dense 5x5 patch Pearson correlation of two equally sized maps.
template <typename T>
T patch_pearson(const LuminanceMapT<T>& i, const LuminanceMapT<T>& j);

/// sum_k (1 - rho(down^k y_c, down^k out)), k = 0..2.
template <typename T>
T structural_loss(const LuminanceMapT<T>& y_c, const LuminanceMapT<T>& out);

/// Batched, differentiable form: mean over the batch of the per-image loss.
/// Both inputs N x 1 x H x W with H, W divisible by 4.
template <typename T>
ad::Var<T> structural_loss(const ad::Var<T>& y_c, const ad::Var<T>& out);

/// sum_k ( mean[(D_k(real) - 1)^2] + mean[D_k(fake)^2] ). One entry per
/// scale; `scales` is the required number of entries.
template <typename T>
ad::Var<T> lsgan_discriminator_loss(const std::vector<ad::Var<T>>& real, const std::vector<ad::Var<T>>& fake,
                                    int scales = kStructScales);

/// sum_k mean[(D_k(fake) - 1)^2].
template <typename T>
ad::Var<T> lsgan_generator_loss(const std::vector<ad::Var<T>>& fake, int scales = kStructScales);

/// Score-level conveniences: one vector of per-image scores per scale.
using ScoreSet = std::vector<std::vector<double>>;
double lsgan_discriminator_loss(const ScoreSet& real, const ScoreSet& fake, int scales = kStructScales);
double lsgan_generator_loss(const ScoreSet& fake, int scales = kStructScales);

}  // namespace tmo

#endif  // TMO_LOSSES_HPP_
