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

#include "tmo/image.hpp"

#include <cmath>

namespace tmo {

template <typename Scalar, Range R>
LuminanceMapT<Scalar> luminance(const RgbImage<Scalar, R>& img) {
  img.validate();
  return Scalar(kLumaR) * img.channel(0) + Scalar(kLumaG) * img.channel(1) +
         Scalar(kLumaB) * img.channel(2);
}

template <typename Scalar>
LdrImageT<Scalar> reproduce_color(const HdrImageT<Scalar>& hdr, const LuminanceMapT<Scalar>& y,
                                  const LuminanceMapT<Scalar>& out_luma, Scalar saturation) {
  const auto h = hdr.height();
  const auto w = hdr.width();
  if (y.rows() != h || y.cols() != w || out_luma.rows() != h || out_luma.cols() != w) {
    throw std::invalid_argument("reproduce_color: dimension mismatch");
  }
  if (!(saturation > Scalar(0) && saturation <= Scalar(1))) {
    throw std::invalid_argument("reproduce_color: saturation must lie in (0,1]");
  }
  const Plane<Scalar> denom = y.max(Scalar(kColorDivisionGuard));
  LdrImageT<Scalar> out(w, h);
  for (int c = 0; c < 3; ++c) {
    out.channel(c) =
        ((hdr.channel(c) / denom).pow(saturation) * out_luma).max(Scalar(0)).min(Scalar(1));
  }
  return out;
}

template <typename Scalar>
LdrImageT<Scalar> gray_to_ldr(const LuminanceMapT<Scalar>& y) {
  LdrImageT<Scalar> out(static_cast<int>(y.cols()), static_cast<int>(y.rows()));
  for (int c = 0; c < 3; ++c) out.channel(c) = y.max(Scalar(0)).min(Scalar(1));
  return out;
}

template LuminanceMapT<float> luminance(const HdrImageT<float>&);
template LuminanceMapT<float> luminance(const LdrImageT<float>&);
template LuminanceMapT<double> luminance(const HdrImageT<double>&);
template LuminanceMapT<double> luminance(const LdrImageT<double>&);
template LdrImageT<float> reproduce_color(const HdrImageT<float>&, const LuminanceMapT<float>&,
                                          const LuminanceMapT<float>&, float);
template LdrImageT<double> reproduce_color(const HdrImageT<double>&, const LuminanceMapT<double>&,
                                           const LuminanceMapT<double>&, double);
template LdrImageT<float> gray_to_ldr(const LuminanceMapT<float>&);
template LdrImageT<double> gray_to_ldr(const LuminanceMapT<double>&);

}  // namespace tmo
