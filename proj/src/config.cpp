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

#include "tmo/config.hpp"

#include <charconv>
#include <sstream>
#include <stdexcept>

#include "tmo/fs_util.hpp"
#include "tmo/optim.hpp"

namespace tmo {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string fmt(double v) {
  std::ostringstream ss;
  ss.precision(17);
  ss << v;
  return ss.str();
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument("");
    return d;
  } catch (const std::exception&) {
    throw std::invalid_argument("config: " + key + " expects a number, got '" + v + "'");
  }
}

long long to_int(const std::string& key, const std::string& v) {
  long long out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) {
    throw std::invalid_argument("config: " + key + " expects an integer, got '" + v + "'");
  }
  return out;
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) {
    throw std::invalid_argument("config: " + key + " expects an unsigned integer, got '" + v + "'");
  }
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw std::invalid_argument("config: " + key + " expects true/false, got '" + v + "'");
}

const char* b(bool v) { return v ? "true" : "false"; }

}  // namespace

void TrainConfig::validate() const {
  auto check = [](bool ok, const std::string& msg) {
    if (!ok) throw std::invalid_argument("TrainConfig: " + msg);
  };
  check(epochs >= 0, "epochs must be >= 0");
  check(pretrain_epochs >= 0, "pretrain_epochs must be >= 0");
  check(lr_gen > 0 && lr_disc > 0, "learning rates must be > 0");
  check(lr_decay_period >= 1, "lr_decay_period must be >= 1");
  check(lr_decay_factor > 0 && lr_decay_factor <= 1, "lr_decay_factor must lie in (0,1]");
  check(batch_size >= 1, "batch_size must be >= 1");
  check(w_struct >= 0, "w_struct must be >= 0");
  check(adam_beta1 >= 0 && adam_beta1 < 1 && adam_beta2 >= 0 && adam_beta2 < 1, "Adam betas must lie in [0,1)");
  check(checkpoint_every >= 1, "checkpoint_every must be >= 1");
  check(checkpoint_every % lr_decay_period == 0 || lr_decay_period % checkpoint_every == 0,
        "decay period and checkpoint period must divide one another");
  check(image_size >= 16 && image_size % 16 == 0, "image_size must be a positive multiple of 16");
  check(saturation > 0 && saturation <= 1, "saturation must lie in (0,1]");
  check(!ablations.fixed_lambda || *ablations.fixed_lambda >= 1.0, "fixed_lambda must be >= 1");
}

double TrainConfig::gen_lr_at(int epoch) const {
  return scheduled_lr(lr_gen, epoch, lr_decay_period, lr_decay_factor);
}

double TrainConfig::disc_lr_at(int epoch) const {
  return scheduled_lr(lr_disc, epoch, lr_decay_period, lr_decay_factor);
}

GeneratorSpec TrainConfig::generator_spec() const {
  GeneratorSpec s;
  s.sqrt_skips = ablations.sqrt_skips;
  return s;
}

DiscriminatorSpec TrainConfig::discriminator_spec() const {
  DiscriminatorSpec s;
  s.count = ablations.single_discriminator ? 1 : 3;
  return s;
}

KeyValues parse_key_values(const std::string& text) {
  KeyValues kv;
  std::istringstream ss(text);
  std::string line;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw std::invalid_argument("config line " + std::to_string(lineno) + ": expected key=value");
    }
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return kv;
}

KeyValues load_key_values(const std::filesystem::path& path) { return parse_key_values(read_text_file(path)); }

std::string format_key_values(const KeyValues& kv) {
  std::string out;
  for (const auto& [k, v] : kv) out += k + "=" + v + "\n";
  return out;
}

KeyValues to_key_values(const TrainConfig& c) {
  return {
      {"epochs", std::to_string(c.epochs)},
      {"pretrain_epochs", std::to_string(c.pretrain_epochs)},
      {"lr_gen", fmt(c.lr_gen)},
      {"lr_disc", fmt(c.lr_disc)},
      {"lr_decay_period", std::to_string(c.lr_decay_period)},
      {"lr_decay_factor", fmt(c.lr_decay_factor)},
      {"batch_size", std::to_string(c.batch_size)},
      {"w_struct", fmt(c.w_struct)},
      {"adam_beta1", fmt(c.adam_beta1)},
      {"adam_beta2", fmt(c.adam_beta2)},
      {"seed", std::to_string(c.seed)},
      {"checkpoint_every", std::to_string(c.checkpoint_every)},
      {"image_size", std::to_string(c.image_size)},
      {"saturation", fmt(c.saturation)},
      {"fixed_lambda", c.ablations.fixed_lambda ? fmt(*c.ablations.fixed_lambda) : "none"},
      {"raw_luminance", b(c.ablations.raw_luminance)},
      {"sqrt_skips", b(c.ablations.sqrt_skips)},
      {"single_discriminator", b(c.ablations.single_discriminator)},
  };
}

void apply_key_values(TrainConfig& c, const KeyValues& kv) {
  for (const auto& [k, v] : kv) {
    if (k == "epochs") c.epochs = static_cast<int>(to_int(k, v));
    else if (k == "pretrain_epochs") c.pretrain_epochs = static_cast<int>(to_int(k, v));
    else if (k == "lr_gen") c.lr_gen = to_double(k, v);
    else if (k == "lr_disc") c.lr_disc = to_double(k, v);
    else if (k == "lr_decay_period") c.lr_decay_period = static_cast<int>(to_int(k, v));
    else if (k == "lr_decay_factor") c.lr_decay_factor = to_double(k, v);
    else if (k == "batch_size") c.batch_size = static_cast<int>(to_int(k, v));
    else if (k == "w_struct") c.w_struct = to_double(k, v);
    else if (k == "adam_beta1") c.adam_beta1 = to_double(k, v);
    else if (k == "adam_beta2") c.adam_beta2 = to_double(k, v);
    else if (k == "seed") c.seed = to_u64(k, v);
    else if (k == "checkpoint_every") c.checkpoint_every = static_cast<int>(to_int(k, v));
    else if (k == "image_size") c.image_size = static_cast<int>(to_int(k, v));
    else if (k == "saturation") c.saturation = to_double(k, v);
    else if (k == "fixed_lambda") {
      if (v == "none" || v.empty()) c.ablations.fixed_lambda.reset();
      else c.ablations.fixed_lambda = to_double(k, v);
    } else if (k == "raw_luminance") c.ablations.raw_luminance = to_bool(k, v);
    else if (k == "sqrt_skips") c.ablations.sqrt_skips = to_bool(k, v);
    else if (k == "single_discriminator") c.ablations.single_discriminator = to_bool(k, v);
    else throw std::invalid_argument("config: unknown key '" + k + "'");
  }
}

KeyValues to_key_values(const GeneratorSpec& s) {
  return {
      {"gen.levels", std::to_string(s.levels)},
      {"gen.base_filters", std::to_string(s.base_filters)},
      {"gen.bottleneck_filters", std::to_string(s.bottleneck_filters)},
      {"gen.decoder_filters", std::to_string(s.decoder_filters)},
      {"gen.sqrt_skips", b(s.sqrt_skips)},
      {"gen.sqrt_guard", fmt(s.sqrt_guard)},
      {"gen.unpool", "convtranspose_k2s2"},
      {"gen.padding", "reflect"},
  };
}

GeneratorSpec generator_spec_from(const KeyValues& kv) {
  GeneratorSpec s;
  auto get = [&](const std::string& k) -> const std::string& {
    const auto it = kv.find(k);
    if (it == kv.end()) throw std::invalid_argument("missing key " + k);
    return it->second;
  };
  s.levels = static_cast<int>(to_int("gen.levels", get("gen.levels")));
  s.base_filters = static_cast<int>(to_int("gen.base_filters", get("gen.base_filters")));
  s.bottleneck_filters = static_cast<int>(to_int("gen.bottleneck_filters", get("gen.bottleneck_filters")));
  s.decoder_filters = static_cast<int>(to_int("gen.decoder_filters", get("gen.decoder_filters")));
  s.sqrt_skips = to_bool("gen.sqrt_skips", get("gen.sqrt_skips"));
  s.sqrt_guard = to_double("gen.sqrt_guard", get("gen.sqrt_guard"));
  if (get("gen.unpool") != "convtranspose_k2s2") throw std::invalid_argument("unsupported gen.unpool");
  return s;
}

KeyValues to_key_values(const DiscriminatorSpec& s) {
  return {
      {"disc.count", std::to_string(s.count)},
      {"disc.filters1", std::to_string(s.filters1)},
      {"disc.filters2", std::to_string(s.filters2)},
      {"disc.pointwise_filters", std::to_string(s.pointwise_filters)},
      {"disc.leaky_slope", fmt(s.leaky_slope)},
  };
}

DiscriminatorSpec discriminator_spec_from(const KeyValues& kv) {
  DiscriminatorSpec s;
  auto get = [&](const std::string& k) -> const std::string& {
    const auto it = kv.find(k);
    if (it == kv.end()) throw std::invalid_argument("missing key " + k);
    return it->second;
  };
  s.count = static_cast<int>(to_int("disc.count", get("disc.count")));
  s.filters1 = static_cast<int>(to_int("disc.filters1", get("disc.filters1")));
  s.filters2 = static_cast<int>(to_int("disc.filters2", get("disc.filters2")));
  s.pointwise_filters = static_cast<int>(to_int("disc.pointwise_filters", get("disc.pointwise_filters")));
  s.leaky_slope = to_double("disc.leaky_slope", get("disc.leaky_slope"));
  return s;
}

}  // namespace tmo
