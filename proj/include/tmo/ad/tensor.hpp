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

#ifndef TMO_AD_TENSOR_HPP_
#define TMO_AD_TENSOR_HPP_

#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace tmo::ad {

/// NCHW extents. Scalars are {1,1,1,1}.
struct Shape {
  int n = 0, c = 0, h = 0, w = 0;

  Eigen::Index numel() const {
    return static_cast<Eigen::Index>(n) * c * h * w;
  }
  Eigen::Index plane() const { return static_cast<Eigen::Index>(h) * w; }
  bool operator==(const Shape&) const = default;
  std::string str() const {
    return std::to_string(n) + "x" + std::to_string(c) + "x" + std::to_string(h) + "x" + std::to_string(w);
  }
};

template <typename T>
using Buffer = Eigen::Array<T, Eigen::Dynamic, 1>;

template <typename T>
struct Node {
  Shape shape;
  Buffer<T> value;
  Buffer<T> grad;  // allocated on first accumulation
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  /// Pushes this node's gradient into its parents.
  std::function<void(Node&)> backward;

  Buffer<T>& grad_buffer() {
    if (grad.size() != value.size()) grad = Buffer<T>::Zero(value.size());
    return grad;
  }
};

/// Handle to a node in the computation graph. Copies share the node.
template <typename T>
class Var {
 public:
  Var() = default;
  explicit Var(std::shared_ptr<Node<T>> node) : node_(std::move(node)) {}

  static Var constant(const Shape& shape, Buffer<T> value) { return make(shape, std::move(value), false); }
  static Var parameter(const Shape& shape, Buffer<T> value) { return make(shape, std::move(value), true); }
  static Var zeros(const Shape& shape, bool requires_grad = false) {
    return make(shape, Buffer<T>::Zero(shape.numel()), requires_grad);
  }

  bool defined() const { return static_cast<bool>(node_); }
  const Shape& shape() const { return node_->shape; }
  const Buffer<T>& value() const { return node_->value; }
  /// Direct write access, for parameter updates and loading.
  Buffer<T>& mutable_value() { return node_->value; }
  const Buffer<T>& grad() const { return node_->grad; }
  bool has_grad() const { return node_->grad.size() == node_->value.size(); }
  void zero_grad() { node_->grad.resize(0); }
  bool requires_grad() const { return node_->requires_grad; }
  T item() const {
    if (node_->value.size() != 1) throw std::logic_error("item() on non-scalar " + shape().str());
    return node_->value[0];
  }
  /// Element access at (n, c, y, x).
  T at(int n, int c, int y, int x) const {
    const auto& s = shape();
    return value()[((static_cast<Eigen::Index>(n) * s.c + c) * s.h + y) * s.w + x];
  }

  Node<T>* node() const { return node_.get(); }
  const std::shared_ptr<Node<T>>& node_ptr() const { return node_; }

 private:
  static Var make(const Shape& shape, Buffer<T> value, bool requires_grad) {
    if (value.size() != shape.numel()) throw std::invalid_argument("Var: value size does not match " + shape.str());
    auto n = std::make_shared<Node<T>>();
    n->shape = shape;
    n->value = std::move(value);
    n->requires_grad = requires_grad;
    return Var(std::move(n));
  }

  std::shared_ptr<Node<T>> node_;
};

bool grad_enabled();

/// Disables graph recording in its scope (inference).
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

/// Builds an op result. Parents and the backward closure are attached only
/// when recording is enabled and some parent requires a gradient.
template <typename T>
Var<T> make_result(const Shape& shape, Buffer<T> value, std::vector<Var<T>> parents,
                   std::function<void(Node<T>&)> backward) {
  auto out = std::make_shared<Node<T>>();
  out->shape = shape;
  out->value = std::move(value);
  bool track = false;
  if (grad_enabled()) {
    for (const auto& p : parents) track = track || (p.defined() && p.requires_grad());
  }
  if (track) {
    out->requires_grad = true;
    out->parents.reserve(parents.size());
    for (auto& p : parents) out->parents.push_back(p.node_ptr());
    out->backward = std::move(backward);
  }
  return Var<T>(std::move(out));
}

/// Reverse sweep from a scalar. Gradients accumulate into every reachable
/// node that requires them.
template <typename T>
void backward(const Var<T>& root);

}  // namespace tmo::ad

#endif  // TMO_AD_TENSOR_HPP_
