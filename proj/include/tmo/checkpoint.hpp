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

#ifndef TMO_CHECKPOINT_HPP_
#define TMO_CHECKPOINT_HPP_

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "tmo/config.hpp"
#include "tmo/nets.hpp"
#include "tmo/rangecompress.hpp"

namespace tmo {

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct NamedArray {
  std::string name;
  ad::Shape shape;
  std::vector<float> data;
};

/// Serializable training state. On disk: a directory holding manifest.txt
/// (one "name shape f32" line per array, then a key=value block) and one
/// little-endian float32 blob "<name>.f32" per array.
struct Checkpoint {
  int epoch = 0;
  TrainConfig config;
  GeneratorSpec generator;
  DiscriminatorSpec discriminator;
  std::optional<Histogram> canonical_histogram;
  std::vector<NamedArray> arrays;

  const NamedArray* find(const std::string& name) const;
};

/// Little-endian float32 file holding exactly `count` values.
std::vector<float> read_f32_file(const std::filesystem::path& path, Eigen::Index count);

/// Written into a temporary sibling directory and renamed into place.
void save_checkpoint(const std::filesystem::path& dir, const Checkpoint& ck);
Checkpoint load_checkpoint(const std::filesystem::path& dir);

template <typename T>
void append_arrays(Checkpoint& ck, const ParameterList<T>& params);
/// Copies the named arrays into `params`; shapes must match exactly.
template <typename T>
void load_arrays(const Checkpoint& ck, ParameterList<T>& params);

/// Generator rebuilt from the checkpoint's spec and arrays.
Generator<float> generator_from(const Checkpoint& ck);

}  // namespace tmo

#endif  // TMO_CHECKPOINT_HPP_
