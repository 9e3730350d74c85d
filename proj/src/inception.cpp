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

#include <cmath>
#include <map>
#include <sstream>

#include "tmo/ad/ops.hpp"
#include "tmo/checkpoint.hpp"
#include "tmo/fs_util.hpp"
#include "tmo/pixfid.hpp"
#include "tmo/resample.hpp"

namespace tmo {

namespace fs = std::filesystem;
using ad::Var;

namespace {

constexpr const char* kMagic = "# tmo inception v1";
constexpr double kBatchNormEps = 1e-3;

struct Raw {
  ad::Shape shape;
  std::vector<float> data;
};

std::map<std::string, Raw> read_weights(const fs::path& dir) {
  const fs::path manifest = dir / "manifest.txt";
  if (!fs::is_regular_file(manifest)) throw std::runtime_error("no manifest.txt in " + dir.string());
  std::istringstream in(read_text_file(manifest));
  std::string line;
  if (!std::getline(in, line) || line != kMagic) throw std::runtime_error("not an inception weight directory");
  std::map<std::string, Raw> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string name, shape, dtype;
    char x1 = 0, x2 = 0, x3 = 0;
    Raw r;
    if (!(ls >> name >> shape >> dtype) || dtype != "f32") throw std::runtime_error("bad weight line '" + line + "'");
    std::istringstream ss(shape);
    if (!(ss >> r.shape.n >> x1 >> r.shape.c >> x2 >> r.shape.h >> x3 >> r.shape.w) || x1 != 'x' || x2 != 'x' ||
        x3 != 'x') {
      throw std::runtime_error("bad shape in '" + line + "'");
    }
    r.data = read_f32_file(dir / (name + ".f32"), r.shape.numel());
    out.emplace(name, std::move(r));
  }
  return out;
}

}  // namespace

struct InceptionExtractor::Network {
  struct Conv {
    Var<float> weight, bias;
    ad::ConvOptions opt;
  };
  std::map<std::string, Conv> convs;

  void add(const std::map<std::string, Raw>& raw, const std::string& name, int stride = 1, int pad_h = 0,
           int pad_w = 0) {
    auto get = [&](const std::string& key) -> const Raw& {
      auto it = raw.find(name + key);
      if (it == raw.end()) throw std::runtime_error("inception weights lack " + name + key);
      return it->second;
    };
    const Raw& w = get(".conv.weight");
    const Raw& gamma = get(".bn.weight");
    const Raw& beta = get(".bn.bias");
    const Raw& mean = get(".bn.running_mean");
    const Raw& var = get(".bn.running_var");
    const int o = w.shape.n;
    for (const Raw* r : {&gamma, &beta, &mean, &var}) {
      if (r->shape.numel() != o) throw std::runtime_error("batch-norm size mismatch in " + name);
    }
    const Eigen::Index per = w.shape.numel() / o;
    ad::Buffer<float> wf(w.shape.numel()), bf(o);
    for (int i = 0; i < o; ++i) {
      const double s = gamma.data[i] / std::sqrt(static_cast<double>(var.data[i]) + kBatchNormEps);
      for (Eigen::Index k = 0; k < per; ++k) wf[i * per + k] = static_cast<float>(w.data[i * per + k] * s);
      bf[i] = static_cast<float>(beta.data[i] - mean.data[i] * s);
    }
    Conv c;
    c.weight = Var<float>::constant(w.shape, std::move(wf));
    c.bias = Var<float>::constant({1, o, 1, 1}, std::move(bf));
    c.opt.stride_h = c.opt.stride_w = stride;
    c.opt.pad_h = pad_h;
    c.opt.pad_w = pad_w;
    c.opt.pad_mode = ad::PadMode::kZero;
    convs.emplace(name, std::move(c));
  }

  Var<float> conv(const std::string& name, const Var<float>& x) const {
    const Conv& c = convs.at(name);
    return ad::relu(ad::conv2d(x, c.weight, c.bias, c.opt));
  }

  void add_a(const std::map<std::string, Raw>& raw, const std::string& p) {
    add(raw, p + ".branch1x1");
    add(raw, p + ".branch5x5_1");
    add(raw, p + ".branch5x5_2", 1, 2, 2);
    add(raw, p + ".branch3x3dbl_1");
    add(raw, p + ".branch3x3dbl_2", 1, 1, 1);
    add(raw, p + ".branch3x3dbl_3", 1, 1, 1);
    add(raw, p + ".branch_pool");
  }
  Var<float> block_a(const std::string& p, const Var<float>& x) const {
    return ad::concat_channels<float>({
        conv(p + ".branch1x1", x),
        conv(p + ".branch5x5_2", conv(p + ".branch5x5_1", x)),
        conv(p + ".branch3x3dbl_3", conv(p + ".branch3x3dbl_2", conv(p + ".branch3x3dbl_1", x))),
        conv(p + ".branch_pool", ad::avg_pool2d(x, 3, 1, 1)),
    });
  }

  void add_b(const std::map<std::string, Raw>& raw, const std::string& p) {
    add(raw, p + ".branch3x3", 2);
    add(raw, p + ".branch3x3dbl_1");
    add(raw, p + ".branch3x3dbl_2", 1, 1, 1);
    add(raw, p + ".branch3x3dbl_3", 2);
  }
  Var<float> block_b(const std::string& p, const Var<float>& x) const {
    return ad::concat_channels<float>({
        conv(p + ".branch3x3", x),
        conv(p + ".branch3x3dbl_3", conv(p + ".branch3x3dbl_2", conv(p + ".branch3x3dbl_1", x))),
        ad::max_pool2d(x, 3, 2),
    });
  }

  void add_c(const std::map<std::string, Raw>& raw, const std::string& p) {
    add(raw, p + ".branch1x1");
    add(raw, p + ".branch7x7_1");
    add(raw, p + ".branch7x7_2", 1, 0, 3);
    add(raw, p + ".branch7x7_3", 1, 3, 0);
    add(raw, p + ".branch7x7dbl_1");
    add(raw, p + ".branch7x7dbl_2", 1, 3, 0);
    add(raw, p + ".branch7x7dbl_3", 1, 0, 3);
    add(raw, p + ".branch7x7dbl_4", 1, 3, 0);
    add(raw, p + ".branch7x7dbl_5", 1, 0, 3);
    add(raw, p + ".branch_pool");
  }
  Var<float> block_c(const std::string& p, const Var<float>& x) const {
    Var<float> dbl = x;
    for (int i = 1; i <= 5; ++i) dbl = conv(p + ".branch7x7dbl_" + std::to_string(i), dbl);
    return ad::concat_channels<float>({
        conv(p + ".branch1x1", x),
        conv(p + ".branch7x7_3", conv(p + ".branch7x7_2", conv(p + ".branch7x7_1", x))),
        dbl,
        conv(p + ".branch_pool", ad::avg_pool2d(x, 3, 1, 1)),
    });
  }

  Var<float> forward(const Var<float>& input) const {
    Var<float> x = conv("Conv2d_1a_3x3", input);
    x = conv("Conv2d_2a_3x3", x);
    x = conv("Conv2d_2b_3x3", x);
    x = ad::max_pool2d(x, 3, 2);
    x = conv("Conv2d_3b_1x1", x);
    x = conv("Conv2d_4a_3x3", x);
    x = ad::max_pool2d(x, 3, 2);
    for (const char* p : {"Mixed_5b", "Mixed_5c", "Mixed_5d"}) x = block_a(p, x);
    x = block_b("Mixed_6a", x);
    for (const char* p : {"Mixed_6b", "Mixed_6c", "Mixed_6d", "Mixed_6e"}) x = block_c(p, x);
    return ad::avg_pool2d(x, 3, 2, 0);
  }
};

InceptionExtractor::InceptionExtractor(const fs::path& weights_dir) : net_(std::make_unique<Network>()) {
  const auto raw = read_weights(weights_dir);
  net_->add(raw, "Conv2d_1a_3x3", 2);
  net_->add(raw, "Conv2d_2a_3x3");
  net_->add(raw, "Conv2d_2b_3x3", 1, 1, 1);
  net_->add(raw, "Conv2d_3b_1x1");
  net_->add(raw, "Conv2d_4a_3x3");
  for (const char* p : {"Mixed_5b", "Mixed_5c", "Mixed_5d"}) net_->add_a(raw, p);
  net_->add_b(raw, "Mixed_6a");
  for (const char* p : {"Mixed_6b", "Mixed_6c", "Mixed_6d", "Mixed_6e"}) net_->add_c(raw, p);
}

InceptionExtractor::~InceptionExtractor() = default;

Eigen::MatrixXd InceptionExtractor::extract_prepared(const Eigen::ArrayXf& chw) const {
  const ad::Shape s{1, 3, kInputSize, kInputSize};
  if (chw.size() != s.numel()) throw std::invalid_argument("inception input must be 3x299x299");
  ad::NoGradGuard guard;
  const auto out = net_->forward(Var<float>::constant(s, chw));
  const auto& os = out.shape();
  if (os.c != kFeatures || os.h != kGrid || os.w != kGrid) {
    throw std::runtime_error("inception output has shape " + os.str());
  }
  Eigen::MatrixXd f(kGrid * kGrid, kFeatures);
  for (int c = 0; c < kFeatures; ++c) {
    for (int cell = 0; cell < kGrid * kGrid; ++cell) f(cell, c) = out.value()[c * kGrid * kGrid + cell];
  }
  return f;
}

Eigen::MatrixXd InceptionExtractor::extract(const LdrImage& img) const {
  img.validate();
  const Eigen::Index plane = static_cast<Eigen::Index>(kInputSize) * kInputSize;
  Eigen::ArrayXf chw(3 * plane);
  for (int c = 0; c < 3; ++c) {
    const Plane<float> r = resize_bicubic(img.channel(c), kInputSize, kInputSize).cwiseMax(0.f).cwiseMin(1.f);
    chw.segment(c * plane, plane) = Eigen::Map<const Eigen::ArrayXf>(r.data(), plane) * 2.f - 1.f;
  }
  return extract_prepared(chw);
}

}  // namespace tmo
