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

#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "tmo/checkpoint.hpp"
#include "tmo/config.hpp"
#include "tmo/datasets.hpp"
#include "tmo/image_io.hpp"
#include "tmo/pixfid.hpp"
#include "tmo/rangecompress.hpp"
#include "tmo/train.hpp"

namespace fs = std::filesystem;

namespace {

class StageError : public std::runtime_error {
 public:
  StageError(std::string stage, const std::string& what) : std::runtime_error(what), stage_(std::move(stage)) {}
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

template <typename F>
auto stage(const std::string& name, F&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(name, e.what());
  }
}

std::string format_double(double v) {
  std::ostringstream out;
  out << std::setprecision(17) << v;
  return out.str();
}

std::vector<fs::path> image_files(const fs::path& input, tmo::ImageKind kind) {
  if (fs::is_regular_file(input)) return {input};
  if (!fs::is_directory(input)) throw std::runtime_error("no such file or directory: " + input.string());
  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(input)) {
    if (e.is_regular_file() && tmo::has_extension(e.path(), kind)) files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw std::runtime_error("no images under " + input.string());
  return files;
}

std::vector<tmo::LdrImage> load_ldr_set(const std::vector<fs::path>& files) {
  std::vector<tmo::LdrImage> out;
  for (const auto& f : files) out.push_back(tmo::load_ldr(f));
  return out;
}

template <typename Img>
void add_training_crops(std::vector<Img>& out, const Img& img, int size) {
  if (img.width() == size && img.height() == size) {
    out.push_back(img);
    return;
  }
  auto [a, b] = tmo::augment_crop_pair(img, size);
  out.push_back(std::move(a));
  out.push_back(std::move(b));
}

struct MakeHistArgs {
  std::vector<std::string> inputs;
  std::string output;
};

int run_make_hist(const MakeHistArgs& a) {
  std::vector<fs::path> files;
  stage("scan", [&] {
    for (const auto& in : a.inputs) {
      auto f = image_files(in, tmo::ImageKind::kLdr);
      files.insert(files.end(), f.begin(), f.end());
    }
  });
  const auto images = stage("load", [&] { return load_ldr_set(files); });
  const auto hist = stage("histogram", [&] { return tmo::build_canonical_histogram(images); });
  stage("write", [&] { tmo::save_histogram(a.output, hist); });
  return 0;
}

struct LambdaArgs {
  std::string input;
  std::string hist;
  std::optional<std::uint64_t> seed;
};

int run_estimate_lambda(const LambdaArgs& a) {
  const auto hdr = stage("load", [&] { return tmo::load_hdr(a.input); });
  const auto hist = stage("histogram", [&] { return tmo::load_histogram(a.hist); });
  const auto p = stage("estimate", [&] { return tmo::prepare_input(hdr, {}, hist, *a.seed); });
  if (p.degenerate) std::cerr << "tmo: warning: constant luminance, lambda is arbitrary\n";
  std::cout << format_double(p.lambda) << "\n";
  return 0;
}

struct CompressArgs {
  std::string input, output, hist;
  std::optional<double> lambda;
  std::optional<std::uint64_t> seed;
};

int run_compress(const CompressArgs& a) {
  if (!a.lambda && (a.hist.empty() || !a.seed)) throw UsageError("compress needs --lambda, or --hist with --seed");
  const auto hdr = stage("load", [&] { return tmo::load_hdr(a.input); });
  std::optional<tmo::Histogram> hist;
  if (!a.lambda) hist = stage("histogram", [&] { return tmo::load_histogram(a.hist); });
  const auto p = stage("compress", [&] { return tmo::prepare_input(hdr, {}, hist, a.seed.value_or(0), a.lambda); });
  stage("write", [&] { tmo::save_png16(a.output, p.y_c); });
  std::cout << format_double(p.lambda) << "\n";
  return 0;
}

struct TrainArgs {
  std::string hdr_dir, ldr_dir, out, config, hist;
  std::optional<std::uint64_t> seed;
  std::optional<int> epochs, pretrain_epochs, batch_size, image_size, checkpoint_every;
  std::optional<double> lr_gen, lr_disc, w_struct, fixed_lambda;
  bool raw_luminance = false, no_sqrt_skips = false, single_discriminator = false, quiet = false;
};

int run_train(const TrainArgs& a) {
  tmo::TrainConfig cfg = stage("config", [&] {
    tmo::TrainConfig c;
    if (!a.config.empty()) tmo::apply_key_values(c, tmo::load_key_values(a.config));
    c.seed = *a.seed;
    if (a.epochs) c.epochs = *a.epochs;
    if (a.pretrain_epochs) c.pretrain_epochs = *a.pretrain_epochs;
    if (a.batch_size) c.batch_size = *a.batch_size;
    if (a.image_size) c.image_size = *a.image_size;
    if (a.checkpoint_every) c.checkpoint_every = *a.checkpoint_every;
    if (a.lr_gen) c.lr_gen = *a.lr_gen;
    if (a.lr_disc) c.lr_disc = *a.lr_disc;
    if (a.w_struct) c.w_struct = *a.w_struct;
    if (a.fixed_lambda) c.ablations.fixed_lambda = *a.fixed_lambda;
    if (a.raw_luminance) c.ablations.raw_luminance = true;
    if (a.no_sqrt_skips) c.ablations.sqrt_skips = false;
    if (a.single_discriminator) c.ablations.single_discriminator = true;
    c.validate();
    return c;
  });

  std::vector<tmo::HdrImage> hdr;
  std::vector<tmo::LdrImage> ldr;
  stage("dataset", [&] {
    const auto hm = tmo::scan_dataset(a.hdr_dir, tmo::ImageKind::kHdr, cfg.seed);
    const auto lm = tmo::scan_dataset(a.ldr_dir, tmo::ImageKind::kLdr, cfg.seed);
    for (const auto* m : {&hm, &lm}) {
      for (const auto& w : m->warnings) std::cerr << "tmo: warning: " << w << "\n";
    }
    for (const auto& p : hm.paths(tmo::Split::kTrain)) add_training_crops(hdr, tmo::load_hdr(p), cfg.image_size);
    for (const auto& p : lm.paths(tmo::Split::kTrain)) add_training_crops(ldr, tmo::load_ldr(p), cfg.image_size);
  });

  std::optional<tmo::Histogram> hist;
  if (!a.hist.empty()) hist = stage("histogram", [&] { return tmo::load_histogram(a.hist); });
  const auto data = stage("prepare", [&] { return tmo::prepare_training_data(hdr, ldr, cfg, hist); });

  tmo::TrainingState state(cfg, hist);
  auto log = [&](const tmo::EpochLog& e) {
    if (a.quiet) return;
    std::cerr << e.phase << " epoch " << e.epoch << " L_D=" << e.losses.l_disc;
    if (e.phase == "train") {
      std::cerr << " L_natural=" << e.losses.l_natural << " L_struct=" << e.losses.l_struct << " lr_gen=" << e.lr_gen;
    }
    std::cerr << " lr_disc=" << e.lr_disc << "\n";
  };
  stage("pretrain", [&] { tmo::pretrain_discriminators(state, data, log); });
  tmo::TrainOptions opts;
  opts.checkpoint_dir = a.out;
  opts.log = log;
  stage("train", [&] { tmo::train(state, data, opts); });
  return 0;
}

struct TonemapArgs {
  std::string input, output, checkpoint;
  std::optional<double> lambda;
  std::optional<std::uint64_t> seed;
};

int run_tonemap(const TonemapArgs& a) {
  const auto ck = stage("checkpoint", [&] { return tmo::load_checkpoint(a.checkpoint); });
  const bool fixed = a.lambda || ck.config.ablations.fixed_lambda || ck.config.ablations.raw_luminance;
  if (!fixed && !a.seed) throw UsageError("tonemap needs --seed unless a fixed lambda is in use");
  const auto hdr = stage("load", [&] { return tmo::load_hdr(a.input); });
  tmo::TonemapOptions opts;
  opts.lambda = a.lambda;
  opts.seed = a.seed.value_or(0);
  const auto result = stage("tonemap", [&] { return tmo::tonemap(hdr, ck, opts); });
  stage("write", [&] { tmo::save_png(a.output, result.image); });
  return 0;
}

struct PixfidArgs {
  std::string dir_a, dir_b, extractor = "stub", weights;
};

int run_pixfid(const PixfidArgs& a) {
  std::unique_ptr<tmo::FeatureExtractor> ex;
  if (a.extractor == "stub") {
    ex = std::make_unique<tmo::StubExtractor>();
  } else {
    std::string dir = a.weights;
    if (dir.empty()) {
      const char* env = std::getenv("TMO_INCEPTION_WEIGHTS");
      if (env) dir = env;
    }
    if (dir.empty()) throw UsageError("inception extractor needs --weights or TMO_INCEPTION_WEIGHTS");
    ex = stage("weights", [&] { return std::make_unique<tmo::InceptionExtractor>(dir); });
  }
  const auto set_a = stage("load", [&] { return load_ldr_set(image_files(a.dir_a, tmo::ImageKind::kLdr)); });
  const auto set_b = stage("load", [&] { return load_ldr_set(image_files(a.dir_b, tmo::ImageKind::kLdr)); });
  const double score = stage("pixfid", [&] { return tmo::pixfid_score(set_a, set_b, *ex); });
  std::cout << format_double(score) << "\n";
  return 0;
}

struct SynthArgs {
  std::string kind = "hdr", out;
  int count = 1, width = 256, height = 256;
  double dynamic_range = 1e5;
  std::optional<std::uint64_t> seed;
};

int run_synth(const SynthArgs& a) {
  if (a.count < 1) throw UsageError("--count must be positive");
  stage("write", [&] { fs::create_directories(a.out); });
  for (int i = 0; i < a.count; ++i) {
    std::ostringstream name;
    name << a.kind << "_" << std::setw(4) << std::setfill('0') << i;
    const std::uint64_t seed = *a.seed + static_cast<std::uint64_t>(i);
    if (a.kind == "hdr") {
      const auto img = stage("synth", [&] { return tmo::synth_hdr(seed, a.width, a.height, a.dynamic_range); });
      stage("write", [&] { tmo::save_rgbe(fs::path(a.out) / (name.str() + ".hdr"), img); });
    } else {
      const auto img = stage("synth", [&] { return tmo::synth_ldr(seed, a.width, a.height); });
      stage("write", [&] { tmo::save_png(fs::path(a.out) / (name.str() + ".png"), img); });
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"HDR tone mapping toolkit"};
  app.require_subcommand(1);
  std::function<int()> action;

  MakeHistArgs mh;
  auto* c_mh = app.add_subcommand("make-hist", "Average LDR luminance histogram");
  c_mh->add_option("inputs", mh.inputs, "PNG files or directories")->required();
  c_mh->add_option("-o,--output", mh.output, "Histogram file")->required();
  c_mh->callback([&] { action = [&] { return run_make_hist(mh); }; });

  LambdaArgs la;
  auto* c_la = app.add_subcommand("estimate-lambda", "Estimate the compression level of an HDR image");
  c_la->add_option("input", la.input, "HDR image")->required();
  c_la->add_option("--hist", la.hist, "Canonical histogram file")->required();
  c_la->add_option("--seed", la.seed, "Search seed")->required();
  c_la->callback([&] { action = [&] { return run_estimate_lambda(la); }; });

  CompressArgs ca;
  auto* c_ca = app.add_subcommand("compress", "Write the compressed luminance as a 16-bit PNG");
  c_ca->add_option("input", ca.input, "HDR image")->required();
  c_ca->add_option("output", ca.output, "Output PNG")->required();
  c_ca->add_option("--lambda", ca.lambda, "Fixed compression level");
  c_ca->add_option("--hist", ca.hist, "Canonical histogram file");
  c_ca->add_option("--seed", ca.seed, "Search seed");
  c_ca->callback([&] { action = [&] { return run_compress(ca); }; });

  TrainArgs ta;
  auto* c_ta = app.add_subcommand("train", "Pretrain the discriminators and train the generator");
  c_ta->add_option("--hdr", ta.hdr_dir, "HDR image directory")->required();
  c_ta->add_option("--ldr", ta.ldr_dir, "LDR image directory")->required();
  c_ta->add_option("--out", ta.out, "Checkpoint directory")->required();
  c_ta->add_option("--seed", ta.seed, "Seed")->required();
  c_ta->add_option("--config", ta.config, "key=value configuration file");
  c_ta->add_option("--hist", ta.hist, "Canonical histogram (default: from the LDR set)");
  c_ta->add_option("--epochs", ta.epochs, "Training epochs");
  c_ta->add_option("--pretrain-epochs", ta.pretrain_epochs, "Discriminator pretraining epochs");
  c_ta->add_option("--batch-size", ta.batch_size, "Images per batch");
  c_ta->add_option("--image-size", ta.image_size, "Training crop side length");
  c_ta->add_option("--checkpoint-every", ta.checkpoint_every, "Epochs between checkpoints");
  c_ta->add_option("--lr-gen", ta.lr_gen, "Generator learning rate");
  c_ta->add_option("--lr-disc", ta.lr_disc, "Discriminator learning rate");
  c_ta->add_option("--w-struct", ta.w_struct, "Structural loss weight");
  c_ta->add_option("--fixed-lambda", ta.fixed_lambda, "Use one compression level for every image");
  c_ta->add_flag("--raw-luminance", ta.raw_luminance, "Feed Y / max(Y) without the compression curve");
  c_ta->add_flag("--no-sqrt-skips", ta.no_sqrt_skips, "Disable the square-root skip channels");
  c_ta->add_flag("--single-discriminator", ta.single_discriminator, "Use only the full-resolution discriminator");
  c_ta->add_flag("-q,--quiet", ta.quiet, "Suppress per-epoch logging");
  c_ta->callback([&] { action = [&] { return run_train(ta); }; });

  TonemapArgs tm;
  auto* c_tm = app.add_subcommand("tonemap", "Tone map an HDR image with a trained checkpoint");
  c_tm->add_option("input", tm.input, "HDR image")->required();
  c_tm->add_option("output", tm.output, "Output PNG")->required();
  c_tm->add_option("--checkpoint", tm.checkpoint, "Checkpoint directory")->required();
  c_tm->add_option("--lambda", tm.lambda, "Fixed compression level");
  c_tm->add_option("--seed", tm.seed, "Search seed");
  c_tm->callback([&] { action = [&] { return run_tonemap(tm); }; });

  PixfidArgs pf;
  auto* c_pf = app.add_subcommand("pixfid", "pixFID between two LDR image sets");
  c_pf->add_option("dir_a", pf.dir_a)->required();
  c_pf->add_option("dir_b", pf.dir_b)->required();
  c_pf->add_option("--extractor", pf.extractor)->check(CLI::IsMember({"stub", "inception"}));
  c_pf->add_option("--weights", pf.weights, "Inception weight directory (or TMO_INCEPTION_WEIGHTS)");
  c_pf->callback([&] { action = [&] { return run_pixfid(pf); }; });

  SynthArgs sy;
  auto* c_sy = app.add_subcommand("synth", "Write synthetic HDR or LDR images");
  c_sy->add_option("--kind", sy.kind)->check(CLI::IsMember({"hdr", "ldr"}));
  c_sy->add_option("--out", sy.out, "Output directory")->required();
  c_sy->add_option("--count", sy.count);
  c_sy->add_option("--width", sy.width);
  c_sy->add_option("--height", sy.height);
  c_sy->add_option("--dynamic-range", sy.dynamic_range);
  c_sy->add_option("--seed", sy.seed)->required();
  c_sy->callback([&] { action = [&] { return run_synth(sy); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cerr << "tmo: " << e.what() << "\n\n" << app.help();
    return 2;
  }

  try {
    return action();
  } catch (const UsageError& e) {
    std::cerr << "tmo: " << e.what() << "\n";
    return 2;
  } catch (const StageError& e) {
    std::cerr << "tmo: " << app.get_subcommands().front()->get_name() << ": " << e.stage() << ": " << e.what()
              << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "tmo: " << e.what() << "\n";
    return 1;
  }
}
