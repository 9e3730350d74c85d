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

#ifndef TMO_CONFIG_HPP_
#define TMO_CONFIG_HPP_

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>

#include "tmo/nets.hpp"

namespace tmo {

/// Component switches used for ablation runs.
struct Ablations {
  /// Use this compression level for every image instead of estimating it.
  std::optional<double> fixed_lambda;
  /// Feed Y / max(Y) directly, skipping the compression curve.
  bool raw_luminance = false;
  bool sqrt_skips = true;
  bool single_discriminator = false;
};

struct TrainConfig {
  int epochs = 300;
  int pretrain_epochs = 50;
  double lr_gen = 1e-4;
  double lr_disc = 1.5e-4;
  int lr_decay_period = 50;
  double lr_decay_factor = 0.5;
  int batch_size = 4;
  double w_struct = 1.0;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  std::uint64_t seed = 0;
  int checkpoint_every = 50;
  /// Side length of the square training crops.
  int image_size = 256;
  double saturation = 0.5;
  Ablations ablations;

  /// Throws std::invalid_argument describing the first violated constraint.
  void validate() const;
  double gen_lr_at(int epoch) const;
  double disc_lr_at(int epoch) const;
  GeneratorSpec generator_spec() const;
  DiscriminatorSpec discriminator_spec() const;
};

using KeyValues = std::map<std::string, std::string>;

/// `key=value` per line; blank lines and lines starting with '#' ignored.
KeyValues parse_key_values(const std::string& text);
KeyValues load_key_values(const std::filesystem::path& path);
std::string format_key_values(const KeyValues& kv);

KeyValues to_key_values(const TrainConfig& cfg);
/// Applies known keys onto `cfg`; unknown keys throw.
void apply_key_values(TrainConfig& cfg, const KeyValues& kv);

KeyValues to_key_values(const GeneratorSpec& spec);
GeneratorSpec generator_spec_from(const KeyValues& kv);
KeyValues to_key_values(const DiscriminatorSpec& spec);
DiscriminatorSpec discriminator_spec_from(const KeyValues& kv);

}  // namespace tmo

#endif  // TMO_CONFIG_HPP_
