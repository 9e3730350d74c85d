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

#include "tmo/datasets.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <set>
#include <sstream>

#include "tmo/fs_util.hpp"
#include "tmo/resample.hpp"

namespace tmo {

namespace fs = std::filesystem;

std::vector<fs::path> DatasetManifest::paths(Split split) const {
  std::vector<fs::path> out;
  for (const auto& e : entries) {
    if (e.split == split) out.push_back(root / fs::path(e.path));
  }
  return out;
}

DatasetManifest scan_dataset(const fs::path& root, ImageKind kind, std::uint64_t seed) {
  if (!fs::is_directory(root)) throw std::invalid_argument("not a directory: " + root.string());
  DatasetManifest m;
  m.root = root;
  m.seed = seed;
  std::vector<std::string> files;
  for (auto it = fs::recursive_directory_iterator(root, fs::directory_options::skip_permission_denied);
       it != fs::recursive_directory_iterator(); ++it) {
    if (!it->is_regular_file() || !has_extension(it->path(), kind)) continue;
    const std::string rel = fs::relative(it->path(), root).generic_string();
    std::ifstream probe(it->path(), std::ios::binary);
    if (!probe || probe.peek() == std::ifstream::traits_type::eof()) {
      m.warnings.push_back("skipping unreadable file " + rel);
      continue;
    }
    files.push_back(rel);
  }
  if (files.empty()) throw std::invalid_argument("no images found under " + root.string());
  std::sort(files.begin(), files.end());

  std::vector<std::string> order = files;
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  const std::size_t n_train = (order.size() + 1) / 2;
  const std::set<std::string> train(order.begin(), order.begin() + static_cast<long>(n_train));
  for (const auto& f : files) m.entries.push_back({f, kind, train.count(f) ? Split::kTrain : Split::kTest});
  return m;
}

std::string format_manifest(const DatasetManifest& m) {
  std::ostringstream out;
  out << "# seed=" << m.seed << "\n";
  for (const auto& e : m.entries) {
    out << e.path << '\t' << (e.kind == ImageKind::kHdr ? "hdr" : "ldr") << '\t'
        << (e.split == Split::kTrain ? "train" : "test") << "\n";
  }
  return out.str();
}

DatasetManifest parse_manifest(const std::string& text, const fs::path& root) {
  DatasetManifest m;
  m.root = root;
  std::istringstream in(text);
  std::string line;
  bool have_seed = false;
  std::set<std::string> seen;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line.rfind("# seed=", 0) == 0) {
      m.seed = std::stoull(line.substr(7));
      have_seed = true;
      continue;
    }
    if (line[0] == '#') continue;
    std::istringstream ls(line);
    std::string path, kind, split;
    if (!std::getline(ls, path, '\t') || !std::getline(ls, kind, '\t') || !std::getline(ls, split)) {
      throw std::invalid_argument("manifest: bad line '" + line + "'");
    }
    DatasetEntry e;
    e.path = path;
    if (kind == "hdr") e.kind = ImageKind::kHdr;
    else if (kind == "ldr") e.kind = ImageKind::kLdr;
    else throw std::invalid_argument("manifest: bad kind '" + kind + "'");
    if (split == "train") e.split = Split::kTrain;
    else if (split == "test") e.split = Split::kTest;
    else throw std::invalid_argument("manifest: bad split '" + split + "'");
    if (!seen.insert(path).second) throw std::invalid_argument("manifest: duplicate path " + path);
    m.entries.push_back(e);
  }
  if (!have_seed) throw std::invalid_argument("manifest: missing seed header");
  return m;
}

void save_manifest(const fs::path& file, const DatasetManifest& m) {
  const std::string text = format_manifest(m);
  atomic_write(file, [&](std::ostream& out) { out << text; }, false);
}

DatasetManifest load_manifest(const fs::path& file, const fs::path& root) {
  return parse_manifest(read_text_file(file), root);
}

template <typename Scalar, Range R>
std::pair<RgbImage<Scalar, R>, RgbImage<Scalar, R>> augment_crop_pair(const RgbImage<Scalar, R>& img, int target) {
  if (target < 1) throw std::invalid_argument("target size must be positive");
  const int w = img.width(), h = img.height();
  if (w < target || h < target) {
    throw std::invalid_argument("image " + std::to_string(w) + "x" + std::to_string(h) + " is smaller than " +
                                std::to_string(target));
  }
  const bool landscape = w >= h;
  const int hw = landscape ? w / 2 : w;
  const int hh = landscape ? h : h / 2;
  const int side = std::min(hw, hh);
  auto make = [&](int half) {
    const int ox = (landscape ? half * hw : 0) + (hw - side) / 2;
    const int oy = (landscape ? 0 : half * hh) + (hh - side) / 2;
    const int hx = landscape ? half * hw : 0, hy = landscape ? 0 : half * hh;
    RgbImage<Scalar, R> out(target, target);
    for (int c = 0; c < 3; ++c) {
      const auto source = img.channel(c).block(hy, hx, hh, hw);
      const Plane<Scalar> crop = img.channel(c).block(oy, ox, side, side);
      out.channel(c) = resize_bicubic(crop, target, target).cwiseMax(source.minCoeff()).cwiseMin(source.maxCoeff());
    }
    return out;
  };
  return {make(0), make(1)};
}

template std::pair<HdrImage, HdrImage> augment_crop_pair(const HdrImage&, int);
template std::pair<LdrImage, LdrImage> augment_crop_pair(const LdrImage&, int);
template std::pair<HdrImageT<double>, HdrImageT<double>> augment_crop_pair(const HdrImageT<double>&, int);
template std::pair<LdrImageT<double>, LdrImageT<double>> augment_crop_pair(const LdrImageT<double>&, int);

namespace {

struct Scene {
  Plane<double> base;
  std::array<Plane<double>, 3> chroma;
};

std::array<double, 3> random_chroma(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.6, 1.4);
  std::array<double, 3> c{u(rng), u(rng), u(rng)};
  const double luma = kLumaR * c[0] + kLumaG * c[1] + kLumaB * c[2];
  for (auto& v : c) v /= luma;
  return c;
}

Scene synth_scene(std::mt19937_64& rng, int width, int height) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double two_pi = 2.0 * std::numbers::pi;

  Plane<double> log_illum = Plane<double>::Zero(height, width);
  const int waves = 4;
  for (int i = 0; i < waves; ++i) {
    const double amp = 0.3 + 1.2 * u(rng);
    const double fx = 2.0 * u(rng), fy = 2.0 * u(rng), phase = two_pi * u(rng);
    for (int y = 0; y < height; ++y) {
      for (int x = 0; x < width; ++x) {
        log_illum(y, x) += amp * std::cos(two_pi * (fx * x / width + fy * y / height) + phase);
      }
    }
  }

  Plane<double> refl = Plane<double>::Constant(height, width, 0.3 + 0.4 * u(rng));
  Scene s;
  const auto bg = random_chroma(rng);
  for (int c = 0; c < 3; ++c) s.chroma[c] = Plane<double>::Constant(height, width, bg[c]);
  const int patches = 6 + static_cast<int>(u(rng) * 7);
  for (int p = 0; p < patches; ++p) {
    const double cx = u(rng) * width, cy = u(rng) * height;
    const double rx = (0.05 + 0.25 * u(rng)) * width, ry = (0.05 + 0.25 * u(rng)) * height;
    const bool ellipse = u(rng) < 0.5;
    const double value = 0.05 + 0.9 * u(rng);
    const auto chroma = random_chroma(rng);
    for (int y = 0; y < height; ++y) {
      for (int x = 0; x < width; ++x) {
        const double dx = (x + 0.5 - cx) / rx, dy = (y + 0.5 - cy) / ry;
        const bool inside = ellipse ? dx * dx + dy * dy <= 1.0 : std::abs(dx) <= 1.0 && std::abs(dy) <= 1.0;
        if (!inside) continue;
        refl(y, x) = value;
        for (int c = 0; c < 3; ++c) s.chroma[c](y, x) = chroma[c];
      }
    }
  }

  s.base = log_illum.exp() * refl;
  const double peak = s.base.maxCoeff();
  const int emitters = 1 + static_cast<int>(u(rng) * 4);
  for (int e = 0; e < emitters; ++e) {
    const double cx = u(rng) * width, cy = u(rng) * height;
    const double radius = 1.5 + 2.5 * u(rng);
    const double amp = peak * (50.0 + 150.0 * u(rng));
    for (int y = 0; y < height; ++y) {
      for (int x = 0; x < width; ++x) {
        const double dx = x + 0.5 - cx, dy = y + 0.5 - cy;
        const double g = std::exp(-(dx * dx + dy * dy) / (2.0 * radius * radius));
        if (g < 1e-3) continue;
        s.base(y, x) += amp * g;
        for (int c = 0; c < 3; ++c) s.chroma[c](y, x) = s.chroma[c](y, x) * (1.0 - g) + g;
      }
    }
  }
  return s;
}

/// Stretches the scene's base field so that max/min equals `dynamic_range`,
/// with the minimum at `floor`.
Plane<double> with_range(const Plane<double>& base, double dynamic_range, double floor) {
  const double lo = base.minCoeff(), hi = base.maxCoeff();
  const double gamma = hi > lo ? std::log(dynamic_range) / std::log(hi / lo) : 1.0;
  return floor * (base / lo).pow(gamma);
}

}  // namespace

HdrImage synth_hdr(std::uint64_t seed, int width, int height, double dynamic_range) {
  if (width < 32 || height < 32) throw std::invalid_argument("synthetic images must be at least 32x32");
  if (!(dynamic_range > 1.0)) throw std::invalid_argument("dynamic range must exceed 1");
  std::mt19937_64 rng(seed);
  const Scene s = synth_scene(rng, width, height);
  const Plane<double> y = with_range(s.base, dynamic_range, 1e-2);
  HdrImage out(width, height);
  for (int c = 0; c < 3; ++c) out.channel(c) = (y * s.chroma[c]).cast<float>();
  return out;
}

LdrImage synth_ldr(std::uint64_t seed, int width, int height) {
  if (width < 32 || height < 32) throw std::invalid_argument("synthetic images must be at least 32x32");
  std::mt19937_64 rng(seed ^ 0x6c6472ULL);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double range = std::pow(10.0, 1.5 + u(rng));
  const Scene s = synth_scene(rng, width, height);
  const Plane<double> y = with_range(s.base, range, 1.0);

  std::vector<double> sorted(y.data(), y.data() + y.size());
  const auto nth = sorted.begin() + static_cast<long>(0.99 * static_cast<double>(sorted.size() - 1));
  std::nth_element(sorted.begin(), nth, sorted.end());
  const double exposure = *nth;

  LdrImage out(width, height);
  for (int c = 0; c < 3; ++c) {
    const Plane<double> v = (y * s.chroma[c] / exposure).pow(1.0 / 2.2).min(1.0);
    out.channel(c) = ((v * 255.0 + 0.5).floor() / 255.0).cast<float>();
  }
  return out;
}

}  // namespace tmo
