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

#include "tmo/losses.hpp"

#include <stdexcept>

namespace tmo {

using ad::Var;

namespace {

template <typename T>
Var<T> as_var(const LuminanceMapT<T>& m, bool requires_grad = false) {
  const ad::Shape s{1, 1, static_cast<int>(m.rows()), static_cast<int>(m.cols())};
  ad::Buffer<T> b = Eigen::Map<const ad::Buffer<T>>(m.data(), m.size());
  return requires_grad ? Var<T>::parameter(s, std::move(b)) : Var<T>::constant(s, std::move(b));
}

template <typename T>
void check_scales(const std::vector<Var<T>>& scores, int scales, const char* what) {
  if (scales < 1) throw std::invalid_argument("lsgan: scale count must be >= 1");
  if (static_cast<int>(scores.size()) != scales) {
    throw std::invalid_argument(std::string("lsgan: ") + what + " scores for " + std::to_string(scores.size()) +
                                " scales, expected " + std::to_string(scales));
  }
  for (const auto& s : scores) {
    if (!s.defined() || s.shape().numel() == 0) throw std::invalid_argument(std::string("lsgan: empty ") + what + " batch");
  }
}

template <typename T>
std::vector<Var<T>> to_vars(const ScoreSet& scores) {
  std::vector<Var<T>> out;
  for (const auto& s : scores) {
    ad::Buffer<T> b(static_cast<Eigen::Index>(s.size()));
    for (std::size_t i = 0; i < s.size(); ++i) b[static_cast<Eigen::Index>(i)] = static_cast<T>(s[i]);
    out.push_back(Var<T>::constant(ad::Shape{static_cast<int>(s.size()), 1, 1, 1}, std::move(b)));
  }
  return out;
}

}  // namespace

template <typename T>
T patch_pearson(const LuminanceMapT<T>& i, const LuminanceMapT<T>& j) {
  if (i.rows() != j.rows() || i.cols() != j.cols()) throw std::invalid_argument("patch_pearson: dimension mismatch");
  return ad::patch_pearson(as_var(i), as_var(j)).item();
}

template <typename T>
Var<T> structural_loss(const Var<T>& y_c, const Var<T>& out) {
  if (y_c.shape() != out.shape()) throw std::invalid_argument("structural_loss: dimension mismatch");
  if (y_c.shape().h % 4 != 0 || y_c.shape().w % 4 != 0) {
    throw std::invalid_argument("structural_loss: dimensions must be divisible by 4");
  }
  Var<T> total;
  for (int k = 0; k < kStructScales; ++k) {
    const Var<T> rho = ad::mean(ad::patch_pearson(ad::downscale(y_c, k), ad::downscale(out, k)));
    const Var<T> term = ad::add_scalar(ad::scale(rho, T(-1)), T(1));
    total = total.defined() ? ad::add(total, term) : term;
  }
  return total;
}

template <typename T>
T structural_loss(const LuminanceMapT<T>& y_c, const LuminanceMapT<T>& out) {
  if (y_c.rows() != out.rows() || y_c.cols() != out.cols()) {
    throw std::invalid_argument("structural_loss: dimension mismatch");
  }
  return structural_loss(as_var(y_c), as_var(out)).item();
}

template <typename T>
Var<T> lsgan_discriminator_loss(const std::vector<Var<T>>& real, const std::vector<Var<T>>& fake, int scales) {
  check_scales(real, scales, "real");
  check_scales(fake, scales, "fake");
  Var<T> total;
  for (int k = 0; k < scales; ++k) {
    const Var<T> term = ad::add(ad::mean(ad::square(ad::add_scalar(real[k], T(-1)))), ad::mean(ad::square(fake[k])));
    total = total.defined() ? ad::add(total, term) : term;
  }
  return total;
}

template <typename T>
Var<T> lsgan_generator_loss(const std::vector<Var<T>>& fake, int scales) {
  check_scales(fake, scales, "fake");
  Var<T> total;
  for (int k = 0; k < scales; ++k) {
    const Var<T> term = ad::mean(ad::square(ad::add_scalar(fake[k], T(-1))));
    total = total.defined() ? ad::add(total, term) : term;
  }
  return total;
}

double lsgan_discriminator_loss(const ScoreSet& real, const ScoreSet& fake, int scales) {
  return lsgan_discriminator_loss(to_vars<double>(real), to_vars<double>(fake), scales).item();
}

double lsgan_generator_loss(const ScoreSet& fake, int scales) {
  return lsgan_generator_loss(to_vars<double>(fake), scales).item();
}

template float patch_pearson(const LuminanceMapT<float>&, const LuminanceMapT<float>&);
template double patch_pearson(const LuminanceMapT<double>&, const LuminanceMapT<double>&);
template float structural_loss(const LuminanceMapT<float>&, const LuminanceMapT<float>&);
template double structural_loss(const LuminanceMapT<double>&, const LuminanceMapT<double>&);
template Var<float> structural_loss(const Var<float>&, const Var<float>&);
template Var<double> structural_loss(const Var<double>&, const Var<double>&);
template Var<float> lsgan_discriminator_loss(const std::vector<Var<float>>&, const std::vector<Var<float>>&, int);
template Var<double> lsgan_discriminator_loss(const std::vector<Var<double>>&, const std::vector<Var<double>>&, int);
template Var<float> lsgan_generator_loss(const std::vector<Var<float>>&, int);
template Var<double> lsgan_generator_loss(const std::vector<Var<double>>&, int);

}  // namespace tmo
