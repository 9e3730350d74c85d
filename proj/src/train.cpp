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

#include "tmo/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "tmo/fs_util.hpp"
#include "tmo/resample.hpp"

namespace tmo {

namespace {

/// Divides every channel by the largest channel value. The result depends on
/// the input only up to a positive scale factor.
HdrImageT<double> normalized(const HdrImage& hdr) {
  hdr.validate();
  double peak = 0.0;
  for (int c = 0; c < 3; ++c) peak = std::max(peak, static_cast<double>(hdr.channel(c).maxCoeff()));
  if (!(peak > 0.0)) throw std::invalid_argument("HDR image is entirely black");
  HdrImageT<double> out(hdr.width(), hdr.height());
  for (int c = 0; c < 3; ++c) out.channel(c) = hdr.channel(c).cast<double>() / peak;
  return out;
}

struct ResolvedInput {
  HdrImageT<double> image;
  LuminanceMapT<double> y;
  LuminanceMapT<double> y_c;
  double lambda = 0.0;
  bool degenerate = false;
};

ResolvedInput resolve(const HdrImage& hdr, const Ablations& ablations, const std::optional<Histogram>& hist,
                      std::uint64_t seed, std::optional<double> lambda_override) {
  ResolvedInput r;
  r.image = normalized(hdr);
  r.y = luminance(r.image);
  if (ablations.raw_luminance && !lambda_override) {
    const double peak = r.y.maxCoeff();
    if (!(peak > 0.0)) throw std::invalid_argument("HDR image has zero luminance");
    r.y_c = r.y / peak;
    return r;
  }
  if (lambda_override || ablations.fixed_lambda) {
    r.lambda = lambda_override ? *lambda_override : *ablations.fixed_lambda;
  } else {
    if (!hist) throw std::invalid_argument("no canonical histogram available for lambda estimation");
    SearchConfig sc;
    sc.seed = seed;
    const LambdaEstimate est = estimate_lambda(r.y, *hist, sc);
    r.lambda = est.lambda;
    r.degenerate = est.degenerate;
  }
  CompressionParams p;
  p.lambda = r.lambda;
  r.y_c = compress(r.y, p);
  return r;
}

ad::Var<float> stack(const std::vector<const LuminanceMap*>& maps) {
  const int h = static_cast<int>(maps.front()->rows()), w = static_cast<int>(maps.front()->cols());
  ad::Shape s{static_cast<int>(maps.size()), 1, h, w};
  ad::Buffer<float> buf(s.numel());
  for (std::size_t i = 0; i < maps.size(); ++i) {
    buf.segment(static_cast<Eigen::Index>(i) * s.plane(), s.plane()) =
        Eigen::Map<const ad::Buffer<float>>(maps[i]->data(), s.plane());
  }
  return ad::Var<float>::constant(s, std::move(buf));
}

LuminanceMap unstack(const ad::Var<float>& x, int n) {
  const auto& s = x.shape();
  LuminanceMap out(s.h, s.w);
  Eigen::Map<ad::Buffer<float>>(out.data(), s.plane()) = x.value().segment(n * s.plane(), s.plane());
  return out;
}

void check_finite(double v, const char* term, const std::string& phase, int epoch, int batch) {
  if (!std::isfinite(v)) {
    throw TrainingError("non-finite " + std::string(term) + " during " + phase + " epoch " + std::to_string(epoch) +
                        " batch " + std::to_string(batch));
  }
}

struct Batches {
  std::vector<std::vector<int>> hdr;
  std::vector<std::vector<int>> ldr;
};

Batches epoch_batches(const TrainingData& data, int batch_size, std::mt19937_64& rng) {
  std::vector<int> hi(data.hdr.size()), li(data.ldr.size());
  std::iota(hi.begin(), hi.end(), 0);
  std::iota(li.begin(), li.end(), 0);
  std::shuffle(hi.begin(), hi.end(), rng);
  std::shuffle(li.begin(), li.end(), rng);
  Batches b;
  for (std::size_t start = 0; start < hi.size(); start += static_cast<std::size_t>(batch_size)) {
    const std::size_t end = std::min(hi.size(), start + static_cast<std::size_t>(batch_size));
    std::vector<int> hb(hi.begin() + static_cast<long>(start), hi.begin() + static_cast<long>(end));
    std::vector<int> lb;
    for (std::size_t i = start; i < end; ++i) lb.push_back(li[i % li.size()]);
    b.hdr.push_back(std::move(hb));
    b.ldr.push_back(std::move(lb));
  }
  return b;
}

ad::Var<float> hdr_batch(const TrainingData& data, const std::vector<int>& idx) {
  std::vector<const LuminanceMap*> maps;
  for (int i : idx) maps.push_back(&data.hdr[static_cast<std::size_t>(i)].y_c);
  return stack(maps);
}

ad::Var<float> ldr_batch(const TrainingData& data, const std::vector<int>& idx) {
  std::vector<const LuminanceMap*> maps;
  for (int i : idx) maps.push_back(&data.ldr[static_cast<std::size_t>(i)]);
  return stack(maps);
}

std::vector<ad::Var<float>> scores(const DiscriminatorEnsemble<float>& disc, const ad::Var<float>& x) {
  std::vector<ad::Var<float>> out;
  for (int k = 0; k < disc.size(); ++k) out.push_back(disc.score(k, x));
  return out;
}

/// One discriminator update; returns L_D.
double disc_step(TrainingState& state, const ad::Var<float>& real, const ad::Var<float>& fake) {
  auto& disc = state.discriminators();
  state.disc_optimizer().zero_grad();
  auto loss = lsgan_discriminator_loss(scores(disc, real), scores(disc, fake), disc.size());
  const double v = loss.item();
  if (std::isfinite(v)) {
    ad::backward(loss);
    state.disc_optimizer().step();
  }
  return v;
}

void validate_data(const TrainingData& data) {
  if (data.hdr.empty()) throw TrainingError("empty HDR training set");
  if (data.ldr.empty()) throw TrainingError("empty LDR training set");
}

}  // namespace

PreparedInput prepare_input(const HdrImage& hdr, const Ablations& ablations, const std::optional<Histogram>& hist,
                            std::uint64_t seed, std::optional<double> lambda_override) {
  ResolvedInput r = resolve(hdr, ablations, hist, seed, lambda_override);
  PreparedInput p;
  p.y_c = r.y_c.cast<float>();
  p.lambda = r.lambda;
  p.degenerate = r.degenerate;
  return p;
}

TrainingData prepare_training_data(const std::vector<HdrImage>& hdr, const std::vector<LdrImage>& ldr,
                                   const TrainConfig& cfg, std::optional<Histogram>& hist) {
  cfg.validate();
  if (hdr.empty()) throw TrainingError("empty HDR training set");
  if (ldr.empty()) throw TrainingError("empty LDR training set");
  const int size = cfg.image_size;
  auto check = [&](int w, int h, const char* kind, std::size_t i) {
    if (w != size || h != size) {
      throw TrainingError(std::string(kind) + " image " + std::to_string(i) + " is " + std::to_string(w) + "x" +
                          std::to_string(h) + ", expected " + std::to_string(size) + "x" + std::to_string(size));
    }
  };
  const bool needs_hist = !cfg.ablations.fixed_lambda && !cfg.ablations.raw_luminance;
  if (needs_hist && !hist) hist = build_canonical_histogram(ldr);

  TrainingData data;
  data.size = size;
  for (std::size_t i = 0; i < ldr.size(); ++i) {
    check(ldr[i].width(), ldr[i].height(), "LDR", i);
    data.ldr.push_back(luminance(ldr[i]));
  }
  for (std::size_t i = 0; i < hdr.size(); ++i) {
    check(hdr[i].width(), hdr[i].height(), "HDR", i);
    data.hdr.push_back(prepare_input(hdr[i], cfg.ablations, hist, cfg.seed + i));
  }
  return data;
}

TrainingState::TrainingState(const TrainConfig& cfg, std::optional<Histogram> hist)
    : cfg_(cfg),
      hist_(std::move(hist)),
      gen_(cfg.generator_spec(), cfg.seed),
      disc_(cfg.discriminator_spec(), cfg.seed + 1),
      gen_opt_({&gen_.parameters()}, cfg.lr_gen, cfg.adam_beta1, cfg.adam_beta2),
      disc_opt_(disc_.parameter_lists(), cfg.lr_disc, cfg.adam_beta1, cfg.adam_beta2) {
  cfg_.validate();
}

Checkpoint TrainingState::checkpoint() const {
  Checkpoint ck;
  ck.epoch = epoch_;
  ck.config = cfg_;
  ck.generator = gen_.spec();
  ck.discriminator = cfg_.discriminator_spec();
  ck.canonical_histogram = hist_;
  append_arrays(ck, gen_.parameters());
  for (int k = 0; k < disc_.size(); ++k) append_arrays(ck, disc_.member(k).parameters());
  return ck;
}

void pretrain_discriminators(TrainingState& state, const TrainingData& data, const EpochCallback& log) {
  validate_data(data);
  const TrainConfig& cfg = state.config();
  std::mt19937_64 rng(cfg.seed ^ 0x70726574726169ULL);
  state.disc_optimizer().set_lr(cfg.lr_disc);
  for (int epoch = 0; epoch < cfg.pretrain_epochs; ++epoch) {
    const Batches batches = epoch_batches(data, cfg.batch_size, rng);
    double total = 0.0;
    for (std::size_t b = 0; b < batches.hdr.size(); ++b) {
      const double v = disc_step(state, ldr_batch(data, batches.ldr[b]), hdr_batch(data, batches.hdr[b]));
      check_finite(v, "L_D", "pretraining", epoch, static_cast<int>(b));
      total += v;
    }
    if (log) {
      EpochLog e;
      e.phase = "pretrain";
      e.epoch = epoch;
      e.losses.l_disc = total / static_cast<double>(batches.hdr.size());
      e.losses.w_struct = cfg.w_struct;
      e.lr_disc = cfg.lr_disc;
      log(e);
    }
  }
}

Checkpoint train(TrainingState& state, const TrainingData& data, const TrainOptions& opts) {
  validate_data(data);
  const TrainConfig& cfg = state.config();
  auto& gen = state.generator();
  auto& disc = state.discriminators();
  std::mt19937_64 rng(cfg.seed ^ 0x747261696eULL);
  const float w_struct = static_cast<float>(cfg.w_struct);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    state.gen_optimizer().set_lr(cfg.gen_lr_at(epoch));
    state.disc_optimizer().set_lr(cfg.disc_lr_at(epoch));
    const Batches batches = epoch_batches(data, cfg.batch_size, rng);
    LossBreakdown sum;
    for (std::size_t b = 0; b < batches.hdr.size(); ++b) {
      const int bi = static_cast<int>(b);
      const auto x = hdr_batch(data, batches.hdr[b]);
      const auto real = ldr_batch(data, batches.ldr[b]);

      ad::Var<float> detached;
      {
        ad::NoGradGuard guard;
        detached = gen.forward(x);
      }
      const double l_disc = disc_step(state, real, detached);
      check_finite(l_disc, "L_D", "training", epoch, bi);

      for (auto* list : disc.parameter_lists()) list->set_requires_grad(false);
      state.gen_optimizer().zero_grad();
      const auto fake = gen.forward(x);
      const auto l_nat = lsgan_generator_loss(scores(disc, fake), disc.size());
      const auto l_struct = structural_loss(x, fake);
      const auto total = add(l_nat, scale(l_struct, w_struct));
      for (auto* list : disc.parameter_lists()) list->set_requires_grad(true);
      check_finite(l_nat.item(), "L_natural", "training", epoch, bi);
      check_finite(l_struct.item(), "L_struct", "training", epoch, bi);
      ad::backward(total);
      state.gen_optimizer().step();

      sum.l_disc += l_disc;
      sum.l_natural += l_nat.item();
      sum.l_struct += l_struct.item();
    }
    state.set_epoch(epoch + 1);
    if (opts.log) {
      const double n = static_cast<double>(batches.hdr.size());
      EpochLog e;
      e.phase = "train";
      e.epoch = epoch;
      e.losses.l_disc = sum.l_disc / n;
      e.losses.l_natural = sum.l_natural / n;
      e.losses.l_struct = sum.l_struct / n;
      e.losses.w_struct = cfg.w_struct;
      e.lr_gen = cfg.gen_lr_at(epoch);
      e.lr_disc = cfg.disc_lr_at(epoch);
      opts.log(e);
    }
    const bool last = epoch + 1 == cfg.epochs;
    if (!opts.checkpoint_dir.empty() && (last || (epoch + 1) % cfg.checkpoint_every == 0)) {
      save_checkpoint(opts.checkpoint_dir, state.checkpoint());
    }
  }
  return state.checkpoint();
}

double mean_structure_correlation(const Generator<float>& gen, const std::vector<LuminanceMap>& inputs) {
  if (inputs.empty()) throw std::invalid_argument("no inputs");
  ad::NoGradGuard guard;
  double total = 0.0;
  for (const auto& y_c : inputs) {
    const auto x = stack({&y_c});
    const LuminanceMap out = unstack(gen.forward(x), 0);
    total += static_cast<double>(patch_pearson(y_c, out));
  }
  return total / static_cast<double>(inputs.size());
}

TonemapResult tonemap(const HdrImage& hdr, const Generator<float>& gen, const TrainConfig& cfg,
                      const std::optional<Histogram>& hist, const TonemapOptions& opts) {
  const ResolvedInput r = resolve(hdr, cfg.ablations, hist, opts.seed, opts.lambda);
  const int h = static_cast<int>(r.y_c.rows()), w = static_cast<int>(r.y_c.cols());
  const int d = gen.divisor();
  const int ph = (h + d - 1) / d * d, pw = (w + d - 1) / d * d;
  LuminanceMap padded(ph, pw);
  for (int y = 0; y < ph; ++y) {
    const int sy = reflect_index(y, h);
    for (int x = 0; x < pw; ++x) padded(y, x) = static_cast<float>(r.y_c(sy, reflect_index(x, w)));
  }
  LuminanceMapT<double> out;
  {
    ad::NoGradGuard guard;
    const LuminanceMap net = unstack(gen.forward(stack({&padded})), 0);
    out = net.topLeftCorner(h, w).cast<double>();
  }
  TonemapResult result;
  result.image = reproduce_color(r.image, r.y, out, cfg.saturation).cast<float>();
  result.lambda = r.lambda;
  result.degenerate = r.degenerate;
  return result;
}

TonemapResult tonemap(const HdrImage& hdr, const Checkpoint& ck, const TonemapOptions& opts) {
  const Generator<float> gen = generator_from(ck);
  return tonemap(hdr, gen, ck.config, ck.canonical_histogram, opts);
}

}  // namespace tmo
