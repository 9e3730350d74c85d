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

#include "tmo/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "tmo/fs_util.hpp"

namespace tmo {

namespace fs = std::filesystem;

const NamedArray* Checkpoint::find(const std::string& name) const {
  for (const auto& a : arrays) {
    if (a.name == name) return &a;
  }
  return nullptr;
}

namespace {

constexpr const char* kMagic = "# tmo checkpoint v1";

std::string shape_str(const ad::Shape& s) { return s.str(); }

ad::Shape parse_shape(const std::string& text) {
  ad::Shape s;
  char x1, x2, x3;
  std::istringstream ss(text);
  if (!(ss >> s.n >> x1 >> s.c >> x2 >> s.h >> x3 >> s.w) || x1 != 'x' || x2 != 'x' || x3 != 'x' || s.numel() <= 0) {
    throw CheckpointError("bad shape '" + text + "'");
  }
  return s;
}

void write_blob(const fs::path& path, const std::vector<float>& data) {
  atomic_write(path, [&](std::ostream& out) {
    for (float v : data) {
      unsigned char b[4];
      std::memcpy(b, &v, 4);
      if constexpr (std::endian::native == std::endian::big) std::swap(b[0], b[3]), std::swap(b[1], b[2]);
      out.write(reinterpret_cast<const char*>(b), 4);
    }
  });
}

}  // namespace

std::vector<float> read_f32_file(const fs::path& path, Eigen::Index count) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("missing array file " + path.string());
  in.seekg(0, std::ios::end);
  const auto size = static_cast<Eigen::Index>(in.tellg());
  if (size != count * 4) {
    throw CheckpointError(path.string() + ": expected " + std::to_string(count * 4) + " bytes, found " +
                          std::to_string(size));
  }
  in.seekg(0);
  std::vector<float> out(static_cast<std::size_t>(count));
  for (auto& v : out) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    if constexpr (std::endian::native == std::endian::big) std::swap(b[0], b[3]), std::swap(b[1], b[2]);
    std::memcpy(&v, b, 4);
  }
  if (!in) throw CheckpointError("read error in " + path.string());
  return out;
}

void save_checkpoint(const fs::path& dir, const Checkpoint& ck) {
  const fs::path tmp = temp_sibling(dir);
  try {
    fs::create_directories(tmp);
    std::ostringstream manifest;
    manifest << kMagic << "\n[arrays]\n";
    for (const auto& a : ck.arrays) {
      if (static_cast<Eigen::Index>(a.data.size()) != a.shape.numel()) {
        throw CheckpointError("array " + a.name + " size does not match its shape");
      }
      manifest << a.name << " " << shape_str(a.shape) << " f32\n";
      write_blob(tmp / (a.name + ".f32"), a.data);
    }
    KeyValues kv = to_key_values(ck.config);
    kv.merge(to_key_values(ck.generator));
    kv.merge(to_key_values(ck.discriminator));
    kv["epoch"] = std::to_string(ck.epoch);
    if (ck.canonical_histogram) kv["canonical_histogram"] = format_histogram(*ck.canonical_histogram, ',');
    manifest << "[config]\n" << format_key_values(kv);
    atomic_write(tmp / "manifest.txt", [&](std::ostream& out) { out << manifest.str(); }, false);

    if (fs::exists(dir)) {
      const fs::path old = temp_sibling(dir);
      fs::rename(dir, old);
      fs::rename(tmp, dir);
      fs::remove_all(old);
    } else {
      if (dir.has_parent_path()) fs::create_directories(dir.parent_path());
      fs::rename(tmp, dir);
    }
  } catch (...) {
    std::error_code ec;
    fs::remove_all(tmp, ec);
    throw;
  }
}

Checkpoint load_checkpoint(const fs::path& dir) {
  const fs::path manifest_path = dir / "manifest.txt";
  if (!fs::is_regular_file(manifest_path)) throw CheckpointError("no manifest.txt in " + dir.string());
  std::istringstream in(read_text_file(manifest_path));
  std::string line;
  if (!std::getline(in, line) || line != kMagic) throw CheckpointError("unrecognised checkpoint manifest");
  if (!std::getline(in, line) || line != "[arrays]") throw CheckpointError("manifest: missing [arrays] section");

  Checkpoint ck;
  std::string config_text;
  bool in_config = false;
  while (std::getline(in, line)) {
    if (in_config) {
      config_text += line + "\n";
      continue;
    }
    if (line == "[config]") {
      in_config = true;
      continue;
    }
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string name, shape, dtype;
    if (!(ls >> name >> shape >> dtype)) throw CheckpointError("manifest: bad array line '" + line + "'");
    if (dtype != "f32") throw CheckpointError("manifest: unsupported dtype " + dtype);
    NamedArray a;
    a.name = name;
    a.shape = parse_shape(shape);
    a.data = read_f32_file(dir / (name + ".f32"), a.shape.numel());
    ck.arrays.push_back(std::move(a));
  }
  if (!in_config) throw CheckpointError("manifest: missing [config] section");

  try {
    KeyValues kv = parse_key_values(config_text);
    const auto epoch_it = kv.find("epoch");
    if (epoch_it == kv.end()) throw CheckpointError("manifest: missing epoch");
    ck.epoch = std::stoi(epoch_it->second);
    kv.erase(epoch_it);
    if (auto it = kv.find("canonical_histogram"); it != kv.end()) {
      ck.canonical_histogram = parse_histogram(it->second);
      kv.erase(it);
    }
    ck.generator = generator_spec_from(kv);
    ck.discriminator = discriminator_spec_from(kv);
    for (auto it = kv.begin(); it != kv.end();) {
      if (it->first.rfind("gen.", 0) == 0 || it->first.rfind("disc.", 0) == 0) it = kv.erase(it);
      else ++it;
    }
    apply_key_values(ck.config, kv);
  } catch (const CheckpointError&) {
    throw;
  } catch (const std::exception& e) {
    throw CheckpointError(std::string("manifest config: ") + e.what());
  }
  return ck;
}

template <typename T>
void append_arrays(Checkpoint& ck, const ParameterList<T>& params) {
  for (const auto& [name, v] : params.entries()) {
    NamedArray a;
    a.name = name;
    a.shape = v.shape();
    a.data.resize(static_cast<std::size_t>(v.shape().numel()));
    for (Eigen::Index i = 0; i < v.shape().numel(); ++i) a.data[static_cast<std::size_t>(i)] = static_cast<float>(v.value()[i]);
    ck.arrays.push_back(std::move(a));
  }
}

template <typename T>
void load_arrays(const Checkpoint& ck, ParameterList<T>& params) {
  for (auto& [name, v] : params.entries()) {
    const NamedArray* a = ck.find(name);
    if (!a) throw CheckpointError("checkpoint lacks array " + name);
    if (!(a->shape == v.shape())) {
      throw CheckpointError("array " + name + " has shape " + a->shape.str() + ", expected " + v.shape().str());
    }
    auto& dst = v.mutable_value();
    for (Eigen::Index i = 0; i < dst.size(); ++i) dst[i] = static_cast<T>(a->data[static_cast<std::size_t>(i)]);
  }
}

Generator<float> generator_from(const Checkpoint& ck) {
  Generator<float> g(ck.generator, 0);
  load_arrays(ck, g.parameters());
  return g;
}

template void append_arrays(Checkpoint&, const ParameterList<float>&);
template void append_arrays(Checkpoint&, const ParameterList<double>&);
template void load_arrays(const Checkpoint&, ParameterList<float>&);
template void load_arrays(const Checkpoint&, ParameterList<double>&);

}  // namespace tmo
