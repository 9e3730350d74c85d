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

#ifndef TMO_NETS_HPP_
#define TMO_NETS_HPP_

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "tmo/ad/ops.hpp"

namespace tmo {

/// Named trainable tensors of one network, in registration order.
template <typename T>
class ParameterList {
 public:
  using Entry = std::pair<std::string, ad::Var<T>>;

  ad::Var<T> add(const std::string& name, const ad::Shape& shape, ad::Buffer<T> init);
  const std::vector<Entry>& entries() const { return entries_; }
  std::vector<Entry>& entries() { return entries_; }
  const ad::Var<T>& get(const std::string& name) const;
  std::size_t count() const;
  void zero_grad();
  void set_requires_grad(bool on);

 private:
  std::vector<Entry> entries_;
};

struct GeneratorSpec {
  int levels = 4;
  int base_filters = 32;
  int bottleneck_filters = 512;
  int decoder_filters = 32;
  bool sqrt_skips = true;
  double sqrt_guard = 1e-6;
};

/// U-Net tone-mapping network. Encoder level l runs two 3x3 conv + ReLU
/// blocks with base_filters * 2^l filters then a 2x max-pool; a double-conv
/// bottleneck follows; each decoder level unpools with a 2x2 stride-2
/// transposed convolution, concatenates the skip activations a (and
/// sqrt(a + guard) when sqrt_skips is set) and applies two 3x3 conv + ReLU.
/// A 1x1 convolution and a sigmoid produce the output. 3x3 convolutions use
/// reflect padding.
template <typename T>
class Generator {
 public:
  Generator(const GeneratorSpec& spec, std::uint64_t seed);

  /// x: N x 1 x H x W with H, W divisible by 2^levels.
  ad::Var<T> forward(const ad::Var<T>& x) const;

  const GeneratorSpec& spec() const { return spec_; }
  ParameterList<T>& parameters() { return params_; }
  const ParameterList<T>& parameters() const { return params_; }
  /// Channels entering the decoder from each skip connection, level 0 first.
  std::vector<int> skip_channels() const;
  int divisor() const { return 1 << spec_.levels; }

 private:
  struct Conv {
    ad::Var<T> weight, bias;
  };
  struct Level {
    Conv a, b;
  };
  struct DecoderLevel {
    Conv up, a, b;
  };

  GeneratorSpec spec_;
  ParameterList<T> params_;
  std::vector<Level> encoder_;
  Level bottleneck_;
  std::vector<DecoderLevel> decoder_;
  Conv head_;
};

struct DiscriminatorSpec {
  int count = 3;
  int filters1 = 16;
  int filters2 = 32;
  int pointwise_filters = 48;
  double leaky_slope = 0.2;
  int min_input = 16;
};

/// Shallow critic: 4x4/2 conv (16) -> 4x4/2 conv (32) -> 1x1 conv, each
/// with LeakyReLU, then global average pooling and a sigmoid scalar.
template <typename T>
class Discriminator {
 public:
  Discriminator(const DiscriminatorSpec& spec, std::uint64_t seed, const std::string& prefix);

  /// x: N x 1 x H x W, H, W >= spec.min_input. Returns N x 1 x 1 x 1 in (0,1).
  ad::Var<T> forward(const ad::Var<T>& x) const;

  ParameterList<T>& parameters() { return params_; }
  const ParameterList<T>& parameters() const { return params_; }

 private:
  DiscriminatorSpec spec_;
  ParameterList<T> params_;
  ad::Var<T> w1_, b1_, w2_, b2_, w3_, b3_, wf_, bf_;
};

/// One independent discriminator per scale k (input downscaled by 2^k).
template <typename T>
class DiscriminatorEnsemble {
 public:
  DiscriminatorEnsemble(const DiscriminatorSpec& spec, std::uint64_t seed);

  int size() const { return static_cast<int>(members_.size()); }
  /// `x` must already be at scale k.
  ad::Var<T> forward(int k, const ad::Var<T>& x) const;
  /// Downscales the full-resolution batch to scale k, then scores it.
  ad::Var<T> score(int k, const ad::Var<T>& full_res) const;

  Discriminator<T>& member(int k) { return members_.at(k); }
  const Discriminator<T>& member(int k) const { return members_.at(k); }
  std::size_t parameter_count() const;
  std::vector<ParameterList<T>*> parameter_lists();

 private:
  DiscriminatorSpec spec_;
  std::vector<Discriminator<T>> members_;
};

extern template class ParameterList<float>;
extern template class ParameterList<double>;
extern template class Generator<float>;
extern template class Generator<double>;
extern template class Discriminator<float>;
extern template class Discriminator<double>;
extern template class DiscriminatorEnsemble<float>;
extern template class DiscriminatorEnsemble<double>;

}  // namespace tmo

#endif  // TMO_NETS_HPP_
