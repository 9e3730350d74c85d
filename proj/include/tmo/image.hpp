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

#ifndef TMO_IMAGE_HPP_
#define TMO_IMAGE_HPP_

#include <array>
#include <stdexcept>

#include <Eigen/Core>

namespace tmo {

/// Single-channel raster, row-major (rows = height, cols = width).
template <typename Scalar>
using Plane = Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename Scalar>
using LuminanceMapT = Plane<Scalar>;
using LuminanceMap = LuminanceMapT<float>;

enum class Range { kHdr, kLdr };

/// Planar RGB raster. `R` selects the value-range invariant: HDR images hold
/// non-negative linear-light values of arbitrary scale, LDR images hold
/// display-referred values in [0,1].
template <typename Scalar, Range R>
class RgbImage {
 public:
  using ScalarType = Scalar;
  static constexpr Range kRange = R;

  RgbImage() = default;
  RgbImage(int width, int height) {
    if (width < 1 || height < 1) {
      throw std::invalid_argument("image dimensions must be >= 1");
    }
    for (auto& c : channels_) c = Plane<Scalar>::Zero(height, width);
  }

  int width() const { return static_cast<int>(channels_[0].cols()); }
  int height() const { return static_cast<int>(channels_[0].rows()); }
  bool empty() const { return channels_[0].size() == 0; }

  Plane<Scalar>& channel(int c) { return channels_.at(c); }
  const Plane<Scalar>& channel(int c) const { return channels_.at(c); }

  /// Throws std::invalid_argument when the range invariant is violated.
  void validate() const {
    if (empty()) throw std::invalid_argument("empty image");
    for (const auto& c : channels_) {
      if (!c.allFinite()) throw std::invalid_argument("non-finite pixel value");
      if ((c < Scalar(0)).any()) throw std::invalid_argument("negative pixel value");
      if constexpr (R == Range::kLdr) {
        if ((c > Scalar(1)).any()) throw std::invalid_argument("LDR pixel value above 1");
      }
    }
  }

  template <typename Other>
  RgbImage<Other, R> cast() const {
    RgbImage<Other, R> out(width(), height());
    for (int c = 0; c < 3; ++c) out.channel(c) = channels_[c].template cast<Other>();
    return out;
  }

 private:
  std::array<Plane<Scalar>, 3> channels_;
};

template <typename Scalar>
using HdrImageT = RgbImage<Scalar, Range::kHdr>;
template <typename Scalar>
using LdrImageT = RgbImage<Scalar, Range::kLdr>;
using HdrImage = HdrImageT<float>;
using LdrImage = LdrImageT<float>;

inline constexpr double kLumaR = 0.299;
inline constexpr double kLumaG = 0.587;
inline constexpr double kLumaB = 0.114;

/// Rec.601 luma. Throws on negative or non-finite channels.
template <typename Scalar, Range R>
LuminanceMapT<Scalar> luminance(const RgbImage<Scalar, R>& img);

inline constexpr double kColorDivisionGuard = 1e-9;
inline constexpr double kDefaultSaturation = 0.5;

/// C_out = (C_in / Y)^s * out_luma per channel, clamped to [0,1].
/// `y` is the raw luminance of `hdr`; `out_luma` is the tone-mapped luminance.
template <typename Scalar>
LdrImageT<Scalar> reproduce_color(const HdrImageT<Scalar>& hdr, const LuminanceMapT<Scalar>& y,
                                  const LuminanceMapT<Scalar>& out_luma,
                                  Scalar saturation = Scalar(kDefaultSaturation));

/// Replicates a luminance map into all three channels.
template <typename Scalar>
LdrImageT<Scalar> gray_to_ldr(const LuminanceMapT<Scalar>& y);

}  // namespace tmo

#endif  // TMO_IMAGE_HPP_
