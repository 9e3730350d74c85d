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

#ifndef TMO_DATASETS_HPP_
#define TMO_DATASETS_HPP_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "tmo/image.hpp"
#include "tmo/image_io.hpp"

namespace tmo {

enum class Split { kTrain, kTest };

struct DatasetEntry {
  /// Relative to the manifest root, '/'-separated.
  std::string path;
  ImageKind kind = ImageKind::kHdr;
  Split split = Split::kTrain;
};

struct DatasetManifest {
  std::filesystem::path root;
  std::uint64_t seed = 0;
  std::vector<DatasetEntry> entries;
  /// Files skipped during the scan, with the reason.
  std::vector<std::string> warnings;

  std::vector<std::filesystem::path> paths(Split split) const;
};

/// Recursive scan filtered by extension. The shuffled file list is split in
/// half, the odd file going to the training split. Entries are sorted by path.
DatasetManifest scan_dataset(const std::filesystem::path& root, ImageKind kind, std::uint64_t seed);

/// "# seed=<n>" then one "path<TAB>kind<TAB>split" line per entry.
std::string format_manifest(const DatasetManifest& m);
DatasetManifest parse_manifest(const std::string& text, const std::filesystem::path& root);
void save_manifest(const std::filesystem::path& file, const DatasetManifest& m);
DatasetManifest load_manifest(const std::filesystem::path& file, const std::filesystem::path& root);

/// Splits the image into halves along its longer axis, center-crops each half
/// to a square and resizes it to target x target. Values are clamped to the
/// per-channel range of the source half.
template <typename Scalar, Range R>
std::pair<RgbImage<Scalar, R>, RgbImage<Scalar, R>> augment_crop_pair(const RgbImage<Scalar, R>& img, int target);

/// Smooth illumination times patchwork reflectance plus a few emitters, with
/// max/min luminance equal to `dynamic_range`.
HdrImage synth_hdr(std::uint64_t seed, int width, int height, double dynamic_range = 1e5);

/// Moderate-range synthetic scene, exposed at its 99th luminance percentile,
/// gamma-encoded (1/2.2), clipped and quantized to 8 bits.
LdrImage synth_ldr(std::uint64_t seed, int width, int height);

}  // namespace tmo

#endif  // TMO_DATASETS_HPP_
