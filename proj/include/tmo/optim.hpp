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

#ifndef TMO_OPTIM_HPP_
#define TMO_OPTIM_HPP_

#include <cmath>
#include <vector>

#include "tmo/nets.hpp"

namespace tmo {

/// base * factor^floor(epoch / period).
inline double scheduled_lr(double base, int epoch, int period, double factor) {
  return base * std::pow(factor, epoch / period);
}

template <typename T>
class Adam {
 public:
  Adam(std::vector<ParameterList<T>*> lists, double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
    for (auto* l : lists) {
      for (auto& [name, v] : l->entries()) {
        params_.push_back(v);
        m_.push_back(ad::Buffer<T>::Zero(v.shape().numel()));
        v_.push_back(ad::Buffer<T>::Zero(v.shape().numel()));
      }
    }
  }

  void set_lr(double lr) { lr_ = lr; }
  double lr() const { return lr_; }
  long steps() const { return t_; }

  /// Parameters without a gradient are left untouched.
  void step() {
    ++t_;
    const T b1 = static_cast<T>(beta1_), b2 = static_cast<T>(beta2_);
    const T c1 = static_cast<T>(1.0 - std::pow(beta1_, static_cast<double>(t_)));
    const T c2 = static_cast<T>(1.0 - std::pow(beta2_, static_cast<double>(t_)));
    const T lr = static_cast<T>(lr_), eps = static_cast<T>(eps_);
    for (std::size_t i = 0; i < params_.size(); ++i) {
      auto& p = params_[i];
      if (!p.has_grad()) continue;
      const auto& g = p.grad();
      m_[i] = b1 * m_[i] + (T(1) - b1) * g;
      v_[i] = b2 * v_[i] + (T(1) - b2) * g.square();
      p.mutable_value() -= lr * (m_[i] / c1) / ((v_[i] / c2).sqrt() + eps);
    }
  }

  void zero_grad() {
    for (auto& p : params_) p.zero_grad();
  }

 private:
  double lr_, beta1_, beta2_, eps_;
  long t_ = 0;
  std::vector<ad::Var<T>> params_;
  std::vector<ad::Buffer<T>> m_, v_;
};

}  // namespace tmo

#endif  // TMO_OPTIM_HPP_
