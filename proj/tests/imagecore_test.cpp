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
#include <string>

#include <gtest/gtest.h>

#include "test_util.hpp"
#include "tmo/image.hpp"
#include "tmo/image_io.hpp"
#include "tmo/resample.hpp"

namespace tmo {
namespace {

using testing::TempDir;
using testing::write_bytes;

const std::string kRgbeHeader = "#?RADIANCE\nFORMAT=32-bit_rle_rgbe\n\n-Y 2 +X 2\n";

double rgbe_oracle(unsigned char m, unsigned char e) {
  return e == 0 ? 0.0 : std::ldexp(m / 256.0, e - 128);
}

IoErrorKind load_error(const std::filesystem::path& p) {
  try {
    load_hdr(p);
  } catch (const ImageIoError& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error for " << p;
  return IoErrorKind::kWriteFailed;
}

TEST(RgbeTest, HandEncodedPayloadMatchesOracle) {
  TempDir dir("rgbe");
  const unsigned char px[16] = {128, 0, 0, 129, 0, 128, 0, 129, 0, 0, 64, 130, 200, 100, 50, 120};
  write_bytes(dir / "a.hdr", kRgbeHeader + std::string(reinterpret_cast<const char*>(px), 16));
  const HdrImage img = load_hdr(dir / "a.hdr");
  ASSERT_EQ(img.width(), 2);
  ASSERT_EQ(img.height(), 2);
  for (int i = 0; i < 4; ++i) {
    for (int c = 0; c < 3; ++c) {
      EXPECT_DOUBLE_EQ(img.channel(c)(i / 2, i % 2), rgbe_oracle(px[4 * i + c], px[4 * i + 3])) << i << " " << c;
    }
  }
  EXPECT_EQ(img.channel(0)(0, 0), 1.0f);
}

TEST(RgbeTest, ErrorsAreDistinct) {
  TempDir dir("rgbe_err");
  const unsigned char px[6] = {128, 0, 0, 129, 0, 128};
  write_bytes(dir / "trunc.hdr", kRgbeHeader + std::string(reinterpret_cast<const char*>(px), 6));
  write_bytes(dir / "bad.hdr", "#?RADIANCE\nFORMAT=32-bit_rle_rgbe\n\nnonsense\n");
  write_bytes(dir / "gif.hdr", "GIF89a\x01\x00\x01\x00");
  EXPECT_EQ(load_error(dir / "trunc.hdr"), IoErrorKind::kTruncated);
  EXPECT_EQ(load_error(dir / "bad.hdr"), IoErrorKind::kMalformedHeader);
  EXPECT_EQ(load_error(dir / "gif.hdr"), IoErrorKind::kUnsupported);
  EXPECT_EQ(load_error(dir / "missing.hdr"), IoErrorKind::kUnreadable);
}

TEST(RgbeTest, RunLengthScanlines) {
  TempDir dir("rgbe_rle");
  HdrImage img = testing::random_hdr(67, 9, 3, 1e4);
  img.channel(1).block(2, 10, 3, 40).setConstant(5.0f);
  save_rgbe(dir / "x.hdr", img);
  const HdrImage back = load_hdr(dir / "x.hdr");
  ASSERT_EQ(back.width(), 67);
  ASSERT_EQ(back.height(), 9);
  for (int c = 0; c < 3; ++c) {
    for (Eigen::Index i = 0; i < img.channel(c).size(); ++i) {
      const float a = img.channel(c).data()[i];
      const float b = back.channel(c).data()[i];
      const float peak = std::max({img.channel(0).data()[i], img.channel(1).data()[i], img.channel(2).data()[i]});
      EXPECT_LE(std::abs(a - b), peak / 256.0f + 1e-30f);
    }
  }
}

TEST(PfmTest, RoundTripIsExact) {
  TempDir dir("pfm");
  const HdrImage img = testing::random_hdr(5, 7, 11, 1e6);
  save_pfm(dir / "x.pfm", img);
  const HdrImage back = load_hdr(dir / "x.pfm");
  for (int c = 0; c < 3; ++c) EXPECT_TRUE((img.channel(c) == back.channel(c)).all());
}

TEST(PngTest, FullByteIsOne) {
  TempDir dir("png");
  LdrImage img(1, 1);
  for (int c = 0; c < 3; ++c) img.channel(c).setOnes();
  save_png(dir / "w.png", img);
  const LdrImage back = load_ldr(dir / "w.png");
  for (int c = 0; c < 3; ++c) EXPECT_EQ(back.channel(c)(0, 0), 1.0f);
}

TEST(PngTest, RoundTripIsBitExact) {
  TempDir dir("png_rt");
  LdrImage img = testing::random_ldr(13, 6, 2);
  for (int c = 0; c < 3; ++c) img.channel(c) = (img.channel(c) * 255.f + 0.5f).floor() / 255.f;
  save_png(dir / "a.png", img);
  const LdrImage once = load_ldr(dir / "a.png");
  save_png(dir / "b.png", once);
  const LdrImage twice = load_ldr(dir / "b.png");
  for (int c = 0; c < 3; ++c) {
    EXPECT_TRUE((once.channel(c) == twice.channel(c)).all());
    EXPECT_LE((once.channel(c) - img.channel(c)).abs().maxCoeff(), 1e-6f);
  }
  write_bytes(dir / "cut.png", "\x89PNG\r\n\x1a\n");
  EXPECT_THROW(load_ldr(dir / "cut.png"), ImageIoError);
}

TEST(LuminanceTest, Coefficients) {
  HdrImageT<double> img(3, 1);
  img.channel(0) << 1, 1, 0;
  img.channel(1) << 1, 0, 0;
  img.channel(2) << 1, 0, 0;
  const auto y = luminance(img);
  EXPECT_NEAR(y(0, 0), 1.0, 1e-15);
  EXPECT_DOUBLE_EQ(y(0, 1), 0.299);
  EXPECT_EQ(y(0, 2), 0.0);
}

TEST(LuminanceTest, IsLinear) {
  const auto img = testing::random_hdr<double>(16, 16, 5);
  for (double a : {0.0, 0.5, 3.0, 1e4}) {
    HdrImageT<double> scaled = img;
    for (int c = 0; c < 3; ++c) scaled.channel(c) *= a;
    const auto y = luminance(img), ys = luminance(scaled);
    EXPECT_TRUE(((ys - a * y).abs() <= 1e-9 * (a * y).abs()).all()) << a;
  }
}

TEST(LuminanceTest, RejectsInvalidValues) {
  HdrImageT<double> img(1, 1);
  img.channel(0)(0, 0) = -1.0;
  EXPECT_THROW(luminance(img), std::invalid_argument);
  img.channel(0)(0, 0) = NAN;
  EXPECT_THROW(luminance(img), std::invalid_argument);
}

TEST(ColorTest, DirectEvaluation) {
  HdrImageT<double> hdr(1, 1);
  hdr.channel(0)(0, 0) = 8.0;
  hdr.channel(1)(0, 0) = 2.0;
  hdr.channel(2)(0, 0) = 0.0;
  LuminanceMapT<double> y(1, 1), out(1, 1);
  y << 2.0;
  out << 0.3;
  const auto ldr = reproduce_color(hdr, y, out, 0.5);
  EXPECT_NEAR(ldr.channel(0)(0, 0), 0.6, 1e-12);
  EXPECT_NEAR(ldr.channel(1)(0, 0), 0.3, 1e-12);
  EXPECT_EQ(ldr.channel(2)(0, 0), 0.0);
}

TEST(ColorTest, GrayAndZeroLuminance) {
  HdrImageT<double> hdr(2, 1);
  for (int c = 0; c < 3; ++c) hdr.channel(c) << 5.0, 0.0;
  const auto y = luminance(hdr);
  LuminanceMapT<double> out(1, 2);
  out << 0.42, 0.7;
  for (double s : {0.25, 0.5, 1.0}) {
    const auto ldr = reproduce_color(hdr, y, out, s);
    for (int c = 0; c < 3; ++c) {
      EXPECT_NEAR(ldr.channel(c)(0, 0), 0.42, 1e-12);
      EXPECT_EQ(ldr.channel(c)(0, 1), 0.0);
    }
  }
}

TEST(ColorTest, UnitSaturationReconstructsInput) {
  auto hdr = testing::random_hdr<double>(8, 8, 9, 1.0);
  const auto y = luminance(hdr);
  const auto ldr = reproduce_color(hdr, y, y, 1.0);
  for (int c = 0; c < 3; ++c) {
    for (Eigen::Index i = 0; i < y.size(); ++i) {
      if (y.data()[i] > 1e-9) EXPECT_NEAR(ldr.channel(c).data()[i], hdr.channel(c).data()[i], 1e-6);
    }
  }
}

TEST(ColorTest, Preconditions) {
  HdrImageT<double> hdr(2, 2);
  LuminanceMapT<double> y = LuminanceMapT<double>::Ones(2, 2), bad = LuminanceMapT<double>::Ones(2, 3);
  EXPECT_THROW(reproduce_color(hdr, y, bad, 0.5), std::invalid_argument);
  EXPECT_THROW(reproduce_color(hdr, y, y, 0.0), std::invalid_argument);
  EXPECT_THROW(reproduce_color(hdr, y, y, 1.5), std::invalid_argument);
}

// Halving with the Catmull-Rom kernel stretched by 2, reflect-101 borders.
Plane<double> halve_oracle(const Plane<double>& in) {
  auto kernel = [](double t) {
    t = std::abs(t);
    if (t < 1) return 1.5 * t * t * t - 2.5 * t * t + 1;
    if (t < 2) return -0.5 * t * t * t + 2.5 * t * t - 4 * t + 2;
    return 0.0;
  };
  auto reflect = [](int i, int n) {
    while (i < 0 || i >= n) i = i < 0 ? -i : 2 * (n - 1) - i;
    return i;
  };
  auto axis = [&](int n_out, int n_in, auto&& sample) {
    std::vector<double> out(static_cast<std::size_t>(n_out));
    for (int o = 0; o < n_out; ++o) {
      const double center = 2.0 * o + 0.5;
      double acc = 0, norm = 0;
      for (int j = static_cast<int>(std::floor(center - 4)); j <= static_cast<int>(std::ceil(center + 4)); ++j) {
        const double w = kernel((j - center) / 2.0);
        acc += w * sample(reflect(j, n_in));
        norm += w;
      }
      out[static_cast<std::size_t>(o)] = acc / norm;
    }
    return out;
  };
  const int h = static_cast<int>(in.rows()), w = static_cast<int>(in.cols());
  Plane<double> tmp(h, w / 2), out(h / 2, w / 2);
  for (int y = 0; y < h; ++y) {
    const auto row = axis(w / 2, w, [&](int x) { return in(y, x); });
    for (int x = 0; x < w / 2; ++x) tmp(y, x) = row[static_cast<std::size_t>(x)];
  }
  for (int x = 0; x < w / 2; ++x) {
    const auto col = axis(h / 2, h, [&](int y) { return tmp(y, x); });
    for (int y = 0; y < h / 2; ++y) out(y, x) = col[static_cast<std::size_t>(y)];
  }
  return out;
}

TEST(DownscaleTest, CheckerboardMatchesOracle) {
  Plane<double> board(8, 8);
  for (int y = 0; y < 8; ++y)
    for (int x = 0; x < 8; ++x) board(y, x) = (x + y) % 2;
  const auto got = downscale(board, 1);
  const auto want = halve_oracle(board);
  ASSERT_EQ(got.rows(), 4);
  EXPECT_LE((got - want).abs().maxCoeff(), 1e-6);

  const auto noise = testing::random_plane(12, 20, 4);
  EXPECT_LE((downscale(noise, 1) - halve_oracle(noise)).abs().maxCoeff(), 1e-6);
}

TEST(DownscaleTest, ConstantsAndIdentity) {
  const Plane<double> c = Plane<double>::Constant(16, 12, 0.37);
  EXPECT_LE((downscale(c, 2) - 0.37).abs().maxCoeff(), 1e-12);
  const auto m = testing::random_plane(8, 8, 1);
  EXPECT_TRUE((downscale(m, 0) == m).all());
}

TEST(DownscaleTest, CompositionMatchesTwoLevels) {
  const auto m = testing::random_plane<float>(32, 48, 6);
  EXPECT_LE((downscale<float>(downscale<float>(m, 1), 1) - downscale<float>(m, 2)).abs().maxCoeff(), 1e-5f);
}

TEST(DownscaleTest, Preconditions) {
  const auto m = testing::random_plane(10, 8, 1);
  EXPECT_THROW(downscale(m, 2), std::invalid_argument);
  EXPECT_THROW(downscale(m, 3), std::invalid_argument);
  EXPECT_THROW(downscale(m, -1), std::invalid_argument);
}

TEST(ResizeTest, PreservesConstantsAndReflects) {
  EXPECT_EQ(reflect_index(-1, 5), 1);
  EXPECT_EQ(reflect_index(5, 5), 3);
  EXPECT_EQ(reflect_index(-3, 1), 0);
  const Plane<double> c = Plane<double>::Constant(7, 9, 2.5);
  EXPECT_LE((resize_bicubic(c, 16, 3) - 2.5).abs().maxCoeff(), 1e-12);
}

}  // namespace
}  // namespace tmo
