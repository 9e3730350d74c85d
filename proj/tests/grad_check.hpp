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

#ifndef TMO_TESTS_GRAD_CHECK_HPP_
#define TMO_TESTS_GRAD_CHECK_HPP_

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "tmo/ad/tensor.hpp"

namespace tmo::testing {

struct GradCheck {
  double max_rel_error = 0.0;
  int checked = 0;
};

/// Compares d loss / d x from backward() against central differences at
/// `count` random coordinates of x (all coordinates when count <= 0).
inline GradCheck check_gradient(const std::function<ad::Var<double>(const ad::Var<double>&)>& loss,
                                const ad::Shape& shape, const ad::Buffer<double>& x0, double step, int count,
                                std::uint64_t seed, double abs_floor = 1e-4) {
  auto x = ad::Var<double>::parameter(shape, x0);
  auto out = loss(x);
  ad::backward(out);
  const ad::Buffer<double> analytic = x.grad();

  std::vector<Eigen::Index> coords(static_cast<std::size_t>(x0.size()));
  for (Eigen::Index i = 0; i < x0.size(); ++i) coords[static_cast<std::size_t>(i)] = i;
  if (count > 0 && count < x0.size()) {
    std::mt19937_64 rng(seed);
    std::shuffle(coords.begin(), coords.end(), rng);
    coords.resize(static_cast<std::size_t>(count));
  }
  GradCheck r;
  for (Eigen::Index i : coords) {
    ad::Buffer<double> plus = x0, minus = x0;
    plus[i] += step;
    minus[i] -= step;
    const double fp = loss(ad::Var<double>::constant(shape, plus)).item();
    const double fm = loss(ad::Var<double>::constant(shape, minus)).item();
    const double numeric = (fp - fm) / (2 * step);
    const double err = std::abs(numeric - analytic[i]) / std::max({std::abs(numeric), std::abs(analytic[i]), abs_floor});
    r.max_rel_error = std::max(r.max_rel_error, err);
    ++r.checked;
  }
  return r;
}

inline ad::Buffer<double> random_buffer(Eigen::Index n, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  ad::Buffer<double> b(n);
  for (Eigen::Index i = 0; i < n; ++i) b[i] = u(rng);
  return b;
}

}  // namespace tmo::testing

#endif  // TMO_TESTS_GRAD_CHECK_HPP_
