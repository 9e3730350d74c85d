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

#ifndef TMO_TRAIN_HPP_
#define TMO_TRAIN_HPP_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "tmo/checkpoint.hpp"
#include "tmo/config.hpp"
#include "tmo/image.hpp"
#include "tmo/losses.hpp"
#include "tmo/nets.hpp"
#include "tmo/optim.hpp"
#include "tmo/rangecompress.hpp"

namespace tmo {

class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Network inputs derived from an HDR image: Y / max(Y) when raw_luminance is
/// set, otherwise the log compression curve with the fixed or estimated lambda.
struct PreparedInput {
  LuminanceMap y_c;
  double lambda = 0.0;
  bool degenerate = false;
};

/// Per-image lambda is resolved once here and cached in the result.
PreparedInput prepare_input(const HdrImage& hdr, const Ablations& ablations, const std::optional<Histogram>& hist,
                            std::uint64_t seed, std::optional<double> lambda_override = std::nullopt);

struct TrainingData {
  std::vector<PreparedInput> hdr;
  std::vector<LuminanceMap> ldr;
  int size = 0;
};

/// All images must be cfg.image_size square. When no histogram is given and
/// lambda is not fixed, the canonical histogram is built from `ldr`.
TrainingData prepare_training_data(const std::vector<HdrImage>& hdr, const std::vector<LdrImage>& ldr,
                                   const TrainConfig& cfg, std::optional<Histogram>& hist);

struct EpochLog {
  std::string phase;
  int epoch = 0;
  LossBreakdown losses;
  double lr_gen = 0.0;
  double lr_disc = 0.0;
};

using EpochCallback = std::function<void(const EpochLog&)>;

/// Networks and optimizer state for one training run.
class TrainingState {
 public:
  TrainingState(const TrainConfig& cfg, std::optional<Histogram> hist);

  const TrainConfig& config() const { return cfg_; }
  const std::optional<Histogram>& histogram() const { return hist_; }
  Generator<float>& generator() { return gen_; }
  const Generator<float>& generator() const { return gen_; }
  DiscriminatorEnsemble<float>& discriminators() { return disc_; }
  const DiscriminatorEnsemble<float>& discriminators() const { return disc_; }
  Adam<float>& gen_optimizer() { return gen_opt_; }
  Adam<float>& disc_optimizer() { return disc_opt_; }
  int epoch() const { return epoch_; }
  void set_epoch(int e) { epoch_ = e; }

  Checkpoint checkpoint() const;

 private:
  TrainConfig cfg_;
  std::optional<Histogram> hist_;
  Generator<float> gen_;
  DiscriminatorEnsemble<float> disc_;
  Adam<float> gen_opt_;
  Adam<float> disc_opt_;
  int epoch_ = 0;
};

/// Trains the discriminators with fake = Y_c for cfg.pretrain_epochs epochs.
/// The generator is not touched.
void pretrain_discriminators(TrainingState& state, const TrainingData& data, const EpochCallback& log = {});

struct TrainOptions {
  /// Checkpoints are written here every cfg.checkpoint_every epochs and at
  /// the end; empty disables writing.
  std::filesystem::path checkpoint_dir;
  EpochCallback log;
};

/// cfg.epochs epochs of alternating discriminator / generator updates.
Checkpoint train(TrainingState& state, const TrainingData& data, const TrainOptions& opts = {});

/// Mean patch Pearson correlation between inputs and generator outputs.
double mean_structure_correlation(const Generator<float>& gen, const std::vector<LuminanceMap>& inputs);

struct TonemapOptions {
  /// Overrides both the checkpoint's fixed lambda and the estimate.
  std::optional<double> lambda;
  std::uint64_t seed = 0;
};

struct TonemapResult {
  LdrImage image;
  double lambda = 0.0;
  bool degenerate = false;
};

TonemapResult tonemap(const HdrImage& hdr, const Generator<float>& gen, const TrainConfig& cfg,
                      const std::optional<Histogram>& hist, const TonemapOptions& opts = {});
TonemapResult tonemap(const HdrImage& hdr, const Checkpoint& ck, const TonemapOptions& opts = {});

}  // namespace tmo

#endif  // TMO_TRAIN_HPP_
