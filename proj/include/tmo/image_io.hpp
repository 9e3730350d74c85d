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

#ifndef TMO_IMAGE_IO_HPP_
#define TMO_IMAGE_IO_HPP_

#include <filesystem>
#include <stdexcept>
#include <string>
#include <variant>

#include "tmo/image.hpp"

namespace tmo {

enum class IoErrorKind {
  kUnreadable,       // cannot open / read the file at all
  kMalformedHeader,  // header present but not parseable
  kTruncated,        // pixel payload ends early
  kCorruptData,      // payload present but inconsistent (e.g. bad RLE run)
  kUnsupported,      // recognised or unknown format we do not handle
  kWriteFailed,
};

const char* to_string(IoErrorKind kind);

class ImageIoError : public std::runtime_error {
 public:
  ImageIoError(IoErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}
  IoErrorKind kind() const { return kind_; }

 private:
  IoErrorKind kind_;
};

enum class ImageKind { kHdr, kLdr };

/// Radiance RGBE (.hdr) or PFM, detected from the file magic.
HdrImage load_hdr(const std::filesystem::path& path);
/// 8- or 16-bit PNG, normalized to [0,1].
LdrImage load_ldr(const std::filesystem::path& path);
std::variant<HdrImage, LdrImage> load_image(const std::filesystem::path& path, ImageKind kind);

/// Writers replace the destination atomically (temp file + rename).
void save_rgbe(const std::filesystem::path& path, const HdrImage& img);
void save_pfm(const std::filesystem::path& path, const HdrImage& img);
/// 8-bit RGB PNG; values quantized as floor(255 v + 0.5).
void save_png(const std::filesystem::path& path, const LdrImage& img);
/// 16-bit grayscale PNG of a [0,1] map; floor(65535 v + 0.5).
void save_png16(const std::filesystem::path& path, const LuminanceMap& map);

/// RGBE shared-exponent codec for one pixel.
struct Rgbe {
  unsigned char r = 0, g = 0, b = 0, e = 0;
};
Rgbe float_to_rgbe(float r, float g, float b);
void rgbe_to_float(const Rgbe& p, float& r, float& g, float& b);

bool has_extension(const std::filesystem::path& p, ImageKind kind);

}  // namespace tmo

#endif  // TMO_IMAGE_IO_HPP_
