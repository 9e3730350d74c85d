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

#include "tmo/nets.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace tmo {

using ad::Buffer;
using ad::Shape;
using ad::Var;

template <typename T>
Var<T> ParameterList<T>::add(const std::string& name, const Shape& shape, Buffer<T> init) {
  for (const auto& [n, v] : entries_) {
    if (n == name) throw std::logic_error("duplicate parameter " + name);
  }
  auto v = Var<T>::parameter(shape, std::move(init));
  entries_.emplace_back(name, v);
  return v;
}

template <typename T>
const Var<T>& ParameterList<T>::get(const std::string& name) const {
  for (const auto& [n, v] : entries_) {
    if (n == name) return v;
  }
  throw std::out_of_range("no parameter named " + name);
}

template <typename T>
std::size_t ParameterList<T>::count() const {
  std::size_t total = 0;
  for (const auto& [n, v] : entries_) total += static_cast<std::size_t>(v.shape().numel());
  return total;
}

template <typename T>
void ParameterList<T>::zero_grad() {
  for (auto& [n, v] : entries_) v.zero_grad();
}

template <typename T>
void ParameterList<T>::set_requires_grad(bool on) {
  for (auto& [n, v] : entries_) v.node()->requires_grad = on;
}

namespace {

/// Fan-in normal: N(0, 2 / fan_in).
template <typename T>
Buffer<T> kaiming(std::mt19937_64& rng, Eigen::Index n, Eigen::Index fan_in) {
  std::normal_distribution<double> normal(0.0, std::sqrt(2.0 / static_cast<double>(fan_in)));
  Buffer<T> b(n);
  for (Eigen::Index i = 0; i < n; ++i) b[i] = static_cast<T>(normal(rng));
  return b;
}

template <typename T>
std::pair<Var<T>, Var<T>> make_conv(ParameterList<T>& params, std::mt19937_64& rng, const std::string& name,
                                    int out_c, int in_c, int kh, int kw) {
  const Shape ws{out_c, in_c, kh, kw};
  auto w = params.add(name + ".weight", ws, kaiming<T>(rng, ws.numel(), static_cast<Eigen::Index>(in_c) * kh * kw));
  auto b = params.add(name + ".bias", Shape{1, out_c, 1, 1}, Buffer<T>::Zero(out_c));
  return {w, b};
}

constexpr ad::ConvOptions kSame3x3{1, 1, 1, 1, ad::PadMode::kReflect};
constexpr ad::ConvOptions kPointwise{};

}  // namespace

template <typename T>
Generator<T>::Generator(const GeneratorSpec& spec, std::uint64_t seed) : spec_(spec) {
  if (spec.levels < 1 || spec.base_filters < 1 || spec.bottleneck_filters < 1 || spec.decoder_filters < 1) {
    throw std::invalid_argument("GeneratorSpec: non-positive size");
  }
  std::mt19937_64 rng(seed);
  auto conv = [&](const std::string& name, int out_c, int in_c, int k) {
    auto [w, b] = make_conv(params_, rng, name, out_c, in_c, k, k);
    return Conv{w, b};
  };
  int in_c = 1;
  for (int l = 0; l < spec.levels; ++l) {
    const int c = spec.base_filters << l;
    const auto p = "gen.enc" + std::to_string(l);
    Level lv;
    lv.a = conv(p + ".conv0", c, in_c, 3);
    lv.b = conv(p + ".conv1", c, c, 3);
    encoder_.push_back(lv);
    in_c = c;
  }
  bottleneck_.a = conv("gen.bottleneck.conv0", spec.bottleneck_filters, in_c, 3);
  bottleneck_.b = conv("gen.bottleneck.conv1", spec.bottleneck_filters, spec.bottleneck_filters, 3);
  in_c = spec.bottleneck_filters;

  const auto skips = skip_channels();
  decoder_.resize(spec.levels);
  for (int l = spec.levels - 1; l >= 0; --l) {
    const auto p = "gen.dec" + std::to_string(l);
    const int d = spec.decoder_filters;
    DecoderLevel& dl = decoder_[l];
    // transposed conv weight layout: in x out x 2 x 2, fan-in = in channels
    const Shape us{in_c, d, 2, 2};
    dl.up.weight = params_.add(p + ".up.weight", us, kaiming<T>(rng, us.numel(), in_c));
    dl.up.bias = params_.add(p + ".up.bias", Shape{1, d, 1, 1}, Buffer<T>::Zero(d));
    dl.a = conv(p + ".conv0", d, d + skips[l], 3);
    dl.b = conv(p + ".conv1", d, d, 3);
    in_c = d;
  }
  head_ = conv("gen.head", 1, in_c, 1);
}

template <typename T>
std::vector<int> Generator<T>::skip_channels() const {
  std::vector<int> out;
  for (int l = 0; l < spec_.levels; ++l) out.push_back((spec_.base_filters << l) * (spec_.sqrt_skips ? 2 : 1));
  return out;
}

template <typename T>
Var<T> Generator<T>::forward(const Var<T>& x) const {
  const Shape s = x.shape();
  if (s.c != 1) throw std::invalid_argument("generator: expected a single luminance channel");
  if (s.h % divisor() != 0 || s.w % divisor() != 0 || s.h < divisor() || s.w < divisor()) {
    throw std::invalid_argument("generator: spatial dims " + std::to_string(s.h) + "x" + std::to_string(s.w) +
                                " not divisible by " + std::to_string(divisor()));
  }
  if (!x.value().allFinite()) throw std::invalid_argument("generator: non-finite input");

  auto block = [](const Var<T>& in, const Conv& c) { return ad::relu(ad::conv2d(in, c.weight, c.bias, kSame3x3)); };
  std::vector<Var<T>> skips;
  Var<T> h = x;
  for (const auto& lv : encoder_) {
    h = block(block(h, lv.a), lv.b);
    skips.push_back(h);
    h = ad::max_pool2d(h, 2, 2);
  }
  h = block(block(h, bottleneck_.a), bottleneck_.b);
  const T guard = static_cast<T>(spec_.sqrt_guard);
  for (int l = spec_.levels - 1; l >= 0; --l) {
    const auto& dl = decoder_[l];
    Var<T> up = ad::conv_transpose2x2(h, dl.up.weight, dl.up.bias);
    std::vector<Var<T>> parts{up, skips[l]};
    if (spec_.sqrt_skips) parts.push_back(ad::sqrt_guarded(skips[l], guard));
    skips[l] = Var<T>();
    h = block(block(ad::concat_channels(parts), dl.a), dl.b);
  }
  return ad::sigmoid(ad::conv2d(h, head_.weight, head_.bias, kPointwise));
}

template <typename T>
Discriminator<T>::Discriminator(const DiscriminatorSpec& spec, std::uint64_t seed, const std::string& prefix)
    : spec_(spec) {
  std::mt19937_64 rng(seed);
  std::tie(w1_, b1_) = make_conv(params_, rng, prefix + ".conv1", spec.filters1, 1, 4, 4);
  std::tie(w2_, b2_) = make_conv(params_, rng, prefix + ".conv2", spec.filters2, spec.filters1, 4, 4);
  std::tie(w3_, b3_) = make_conv(params_, rng, prefix + ".conv3", spec.pointwise_filters, spec.filters2, 1, 1);
  std::tie(wf_, bf_) = make_conv(params_, rng, prefix + ".fc", 1, spec.pointwise_filters, 1, 1);
}

template <typename T>
Var<T> Discriminator<T>::forward(const Var<T>& x) const {
  const Shape s = x.shape();
  if (s.c != 1) throw std::invalid_argument("discriminator: expected a single luminance channel");
  if (s.h < spec_.min_input || s.w < spec_.min_input) {
    throw std::invalid_argument("discriminator: input " + s.str() + " too small for two stride-2 layers");
  }
  constexpr ad::ConvOptions kDown{2, 2, 1, 1, ad::PadMode::kReflect};
  const T slope = static_cast<T>(spec_.leaky_slope);
  Var<T> h = ad::leaky_relu(ad::conv2d(x, w1_, b1_, kDown), slope);
  h = ad::leaky_relu(ad::conv2d(h, w2_, b2_, kDown), slope);
  h = ad::leaky_relu(ad::conv2d(h, w3_, b3_, kPointwise), slope);
  return ad::sigmoid(ad::conv2d(ad::global_avg_pool(h), wf_, bf_, kPointwise));
}

template <typename T>
DiscriminatorEnsemble<T>::DiscriminatorEnsemble(const DiscriminatorSpec& spec, std::uint64_t seed) : spec_(spec) {
  if (spec.count < 1 || spec.count > 3) throw std::invalid_argument("discriminator count must be 1..3");
  for (int k = 0; k < spec.count; ++k) {
    members_.emplace_back(spec, seed + 0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(k + 1),
                          "disc" + std::to_string(k));
  }
}

template <typename T>
Var<T> DiscriminatorEnsemble<T>::forward(int k, const Var<T>& x) const {
  if (k < 0 || k >= size()) throw std::out_of_range("discriminator scale index " + std::to_string(k));
  return members_[k].forward(x);
}

template <typename T>
Var<T> DiscriminatorEnsemble<T>::score(int k, const Var<T>& full_res) const {
  if (k < 0 || k >= size()) throw std::out_of_range("discriminator scale index " + std::to_string(k));
  return members_[k].forward(ad::downscale(full_res, k));
}

template <typename T>
std::size_t DiscriminatorEnsemble<T>::parameter_count() const {
  std::size_t total = 0;
  for (const auto& m : members_) total += m.parameters().count();
  return total;
}

template <typename T>
std::vector<ParameterList<T>*> DiscriminatorEnsemble<T>::parameter_lists() {
  std::vector<ParameterList<T>*> out;
  for (auto& m : members_) out.push_back(&m.parameters());
  return out;
}

template class ParameterList<float>;
template class ParameterList<double>;
template class Generator<float>;
template class Generator<double>;
template class Discriminator<float>;
template class Discriminator<double>;
template class DiscriminatorEnsemble<float>;
template class DiscriminatorEnsemble<double>;

}  // namespace tmo
