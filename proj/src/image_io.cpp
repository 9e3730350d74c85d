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

#include "tmo/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <memory>
#include <sstream>
#include <vector>

#include "tmo/fs_util.hpp"

namespace tmo {

const char* to_string(IoErrorKind kind) {
  switch (kind) {
    case IoErrorKind::kUnreadable: return "unreadable file";
    case IoErrorKind::kMalformedHeader: return "malformed header";
    case IoErrorKind::kTruncated: return "truncated pixel data";
    case IoErrorKind::kCorruptData: return "corrupt pixel data";
    case IoErrorKind::kUnsupported: return "unsupported format";
    case IoErrorKind::kWriteFailed: return "write failed";
  }
  return "image i/o error";
}

bool has_extension(const std::filesystem::path& p, ImageKind kind) {
  auto ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  if (kind == ImageKind::kHdr) return ext == ".hdr" || ext == ".pic" || ext == ".rgbe" || ext == ".pfm";
  return ext == ".png";
}

namespace {

using Bytes = std::vector<unsigned char>;

Bytes read_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ImageIoError(IoErrorKind::kUnreadable, path.string());
  Bytes data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw ImageIoError(IoErrorKind::kUnreadable, path.string());
  return data;
}

void write_bytes(const std::filesystem::path& path, const Bytes& data) {
  try {
    atomic_write(path, [&](std::ostream& out) {
      out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
    });
  } catch (const std::exception& e) {
    throw ImageIoError(IoErrorKind::kWriteFailed, e.what());
  }
}

bool starts_with(const Bytes& d, std::string_view magic) {
  return d.size() >= magic.size() && std::equal(magic.begin(), magic.end(), d.begin());
}

constexpr unsigned char kPngSignature[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};

bool is_png(const Bytes& d) {
  return d.size() >= 8 && std::memcmp(d.data(), kPngSignature, 8) == 0;
}

// ---------------------------------------------------------------- RGBE

class RgbeReader {
 public:
  RgbeReader(const Bytes& data, std::string name) : d_(data), name_(std::move(name)) {}

  HdrImage read() {
    const auto [width, height] = read_header();
    HdrImage img(width, height);
    std::vector<Rgbe> line(width);
    for (int y = 0; y < height; ++y) {
      read_scanline(line);
      for (int x = 0; x < width; ++x) {
        float r, g, b;
        rgbe_to_float(line[x], r, g, b);
        img.channel(0)(y, x) = r;
        img.channel(1)(y, x) = g;
        img.channel(2)(y, x) = b;
      }
    }
    return img;
  }

 private:
  [[noreturn]] void fail(IoErrorKind k, const std::string& msg) const {
    throw ImageIoError(k, name_ + ": " + msg);
  }

  bool next_line(std::string& out) {
    if (pos_ >= d_.size()) return false;
    const auto nl = std::find(d_.begin() + static_cast<std::ptrdiff_t>(pos_), d_.end(), '\n');
    if (nl == d_.end()) return false;
    out.assign(d_.begin() + static_cast<std::ptrdiff_t>(pos_), nl);
    pos_ = static_cast<std::size_t>(nl - d_.begin()) + 1;
    return true;
  }

  std::pair<int, int> read_header() {
    std::string line;
    if (!next_line(line) || line.rfind("#?", 0) != 0) fail(IoErrorKind::kMalformedHeader, "missing #? magic");
    bool blank = false;
    while (next_line(line)) {
      if (line.empty()) {
        blank = true;
        break;
      }
      if (line.rfind("FORMAT=", 0) == 0) {
        const auto fmt = line.substr(7);
        if (fmt != "32-bit_rle_rgbe") fail(IoErrorKind::kUnsupported, "pixel format " + fmt);
      }
    }
    if (!blank) fail(IoErrorKind::kMalformedHeader, "header not terminated by a blank line");
    if (!next_line(line)) fail(IoErrorKind::kMalformedHeader, "missing resolution line");
    std::istringstream ss(line);
    std::string ya, xa;
    long h = 0, w = 0;
    if (!(ss >> ya >> h >> xa >> w)) fail(IoErrorKind::kMalformedHeader, "bad resolution line '" + line + "'");
    if (ya != "-Y" || xa != "+X") fail(IoErrorKind::kUnsupported, "image orientation " + line);
    if (h < 1 || w < 1 || h > (1 << 20) || w > (1 << 20)) fail(IoErrorKind::kMalformedHeader, "bad dimensions");
    return {static_cast<int>(w), static_cast<int>(h)};
  }

  unsigned char byte() {
    if (pos_ >= d_.size()) fail(IoErrorKind::kTruncated, "unexpected end of pixel data");
    return d_[pos_++];
  }

  void read_flat(std::vector<Rgbe>& line, std::size_t start) {
    int shift = 0;
    std::size_t x = start;
    while (x < line.size()) {
      Rgbe p{byte(), byte(), byte(), byte()};
      if (p.r == 1 && p.g == 1 && p.b == 1) {
        if (x == 0) fail(IoErrorKind::kCorruptData, "run without preceding pixel");
        const std::size_t count = static_cast<std::size_t>(p.e) << shift;
        if (x + count > line.size()) fail(IoErrorKind::kCorruptData, "run overflows scanline");
        std::fill_n(line.begin() + static_cast<std::ptrdiff_t>(x), count, line[x - 1]);
        x += count;
        shift += 8;
      } else {
        line[x++] = p;
        shift = 0;
      }
    }
  }

  void read_scanline(std::vector<Rgbe>& line) {
    const auto width = line.size();
    if (width < 8 || width > 0x7fff) return read_flat(line, 0);
    Rgbe head{byte(), byte(), byte(), byte()};
    if (head.r != 2 || head.g != 2 || (head.b & 0x80)) {
      line[0] = head;
      return read_flat(line, 1);
    }
    if (((static_cast<std::size_t>(head.b) << 8) | head.e) != width) {
      fail(IoErrorKind::kCorruptData, "scanline width mismatch");
    }
    std::vector<unsigned char> comp(width);
    for (int c = 0; c < 4; ++c) {
      std::size_t x = 0;
      while (x < width) {
        unsigned count = byte();
        if (count > 128) {
          count -= 128;
          if (x + count > width) fail(IoErrorKind::kCorruptData, "RLE run overflows scanline");
          const unsigned char v = byte();
          std::fill_n(comp.begin() + static_cast<std::ptrdiff_t>(x), count, v);
          x += count;
        } else {
          if (count == 0 || x + count > width) fail(IoErrorKind::kCorruptData, "bad RLE literal count");
          for (unsigned i = 0; i < count; ++i) comp[x++] = byte();
        }
      }
      for (std::size_t x2 = 0; x2 < width; ++x2) {
        auto& p = line[x2];
        (c == 0 ? p.r : c == 1 ? p.g : c == 2 ? p.b : p.e) = comp[x2];
      }
    }
  }

  const Bytes& d_;
  std::string name_;
  std::size_t pos_ = 0;
};

void append_rle_component(Bytes& out, const unsigned char* v, std::size_t n) {
  constexpr std::size_t kMinRun = 4;
  std::size_t cur = 0;
  while (cur < n) {
    std::size_t beg_run = cur;
    std::size_t run_count = 0;
    // find next run of length >= kMinRun
    while (run_count < kMinRun && beg_run < n) {
      beg_run += run_count;
      run_count = 1;
      while (beg_run + run_count < n && run_count < 127 && v[beg_run] == v[beg_run + run_count]) ++run_count;
    }
    if (run_count < kMinRun) beg_run = n;
    // literal bytes before the run
    while (cur < beg_run) {
      const std::size_t nonrun = std::min<std::size_t>(128, beg_run - cur);
      out.push_back(static_cast<unsigned char>(nonrun));
      out.insert(out.end(), v + cur, v + cur + nonrun);
      cur += nonrun;
    }
    if (run_count >= kMinRun && beg_run < n) {
      out.push_back(static_cast<unsigned char>(128 + run_count));
      out.push_back(v[beg_run]);
      cur += run_count;
    }
  }
}

// ---------------------------------------------------------------- PFM

HdrImage read_pfm(const Bytes& d, const std::string& name) {
  std::size_t pos = 2;
  const bool color = d[1] == 'F';
  auto token = [&]() {
    while (pos < d.size() && std::isspace(d[pos])) ++pos;
    std::string t;
    while (pos < d.size() && !std::isspace(d[pos])) t.push_back(static_cast<char>(d[pos++]));
    if (t.empty()) throw ImageIoError(IoErrorKind::kMalformedHeader, name + ": incomplete PFM header");
    return t;
  };
  long w = 0, h = 0;
  double scale = 0.0;
  try {
    w = std::stol(token());
    h = std::stol(token());
    scale = std::stod(token());
  } catch (const std::logic_error&) {
    throw ImageIoError(IoErrorKind::kMalformedHeader, name + ": non-numeric PFM header field");
  }
  if (w < 1 || h < 1 || scale == 0.0 || !std::isfinite(scale)) {
    throw ImageIoError(IoErrorKind::kMalformedHeader, name + ": bad PFM dimensions or scale");
  }
  if (pos >= d.size() || !std::isspace(d[pos])) {
    throw ImageIoError(IoErrorKind::kMalformedHeader, name + ": PFM header not terminated");
  }
  ++pos;
  const bool little = scale < 0.0;
  const std::size_t nc = color ? 3 : 1;
  const std::size_t need = static_cast<std::size_t>(w) * static_cast<std::size_t>(h) * nc * 4;
  if (d.size() - pos < need) throw ImageIoError(IoErrorKind::kTruncated, name + ": PFM payload too short");
  HdrImage img(static_cast<int>(w), static_cast<int>(h));
  const bool host_little = std::endian::native == std::endian::little;
  for (long row = 0; row < h; ++row) {
    const long y = h - 1 - row;  // stored bottom-to-top
    for (long x = 0; x < w; ++x) {
      for (std::size_t c = 0; c < nc; ++c) {
        unsigned char b[4];
        std::memcpy(b, &d[pos], 4);
        pos += 4;
        if (little != host_little) std::reverse(b, b + 4);
        float v;
        std::memcpy(&v, b, 4);
        if (!std::isfinite(v) || v < 0.0f) {
          throw ImageIoError(IoErrorKind::kCorruptData, name + ": negative or non-finite PFM sample");
        }
        if (color) {
          img.channel(static_cast<int>(c))(y, x) = v;
        } else {
          for (int k = 0; k < 3; ++k) img.channel(k)(y, x) = v;
        }
      }
    }
  }
  return img;
}

// ---------------------------------------------------------------- PNG

struct PngReadState {
  const Bytes* data = nullptr;
  std::size_t pos = 0;
  bool truncated = false;
  bool header_done = false;
  std::string message;
  std::vector<png_byte> pixels;
  std::vector<png_bytep> rows;
};

void png_read_mem(png_structp png, png_bytep out, png_size_t n) {
  auto* st = static_cast<PngReadState*>(png_get_io_ptr(png));
  if (st->data->size() - st->pos < n) {
    st->truncated = true;
    png_error(png, "unexpected end of PNG data");
  }
  std::memcpy(out, st->data->data() + st->pos, n);
  st->pos += n;
}

void png_error_fn(png_structp png, png_const_charp msg) {
  auto* st = static_cast<PngReadState*>(png_get_error_ptr(png));
  st->message = msg;
  png_longjmp(png, 1);
}

void png_warning_fn(png_structp, png_const_charp) {}

LdrImage read_png(const Bytes& d, const std::string& name) {
  auto st = std::make_unique<PngReadState>();
  st->data = &d;
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, st.get(), png_error_fn, png_warning_fn);
  if (!png) throw ImageIoError(IoErrorKind::kUnreadable, name + ": libpng init failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw ImageIoError(IoErrorKind::kUnreadable, name + ": libpng init failed");
  }
  png_uint_32 width = 0, height = 0;
  int bit_depth = 0;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    const auto kind = st->truncated ? IoErrorKind::kTruncated
                      : st->header_done ? IoErrorKind::kCorruptData
                                        : IoErrorKind::kMalformedHeader;
    throw ImageIoError(kind, name + ": " + st->message);
  }
  png_set_read_fn(png, st.get(), png_read_mem);
  png_read_info(png, info);
  int color_type = 0;
  png_get_IHDR(png, info, &width, &height, &bit_depth, &color_type, nullptr, nullptr, nullptr);
  png_set_expand(png);
  png_set_strip_alpha(png);
  if (color_type == PNG_COLOR_TYPE_GRAY || color_type == PNG_COLOR_TYPE_GRAY_ALPHA) png_set_gray_to_rgb(png);
  if (bit_depth == 16 && std::endian::native == std::endian::little) png_set_swap(png);
  png_read_update_info(png, info);
  st->header_done = true;
  const std::size_t rowbytes = png_get_rowbytes(png, info);
  bit_depth = png_get_bit_depth(png, info);
  st->pixels.resize(rowbytes * height);
  st->rows.resize(height);
  for (png_uint_32 y = 0; y < height; ++y) st->rows[y] = st->pixels.data() + y * rowbytes;
  png_read_image(png, st->rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  LdrImage img(static_cast<int>(width), static_cast<int>(height));
  for (png_uint_32 y = 0; y < height; ++y) {
    const png_byte* row = st->rows[y];
    for (png_uint_32 x = 0; x < width; ++x) {
      for (int c = 0; c < 3; ++c) {
        float v;
        if (bit_depth == 16) {
          std::uint16_t s;
          std::memcpy(&s, row + 2 * (3 * x + c), 2);
          v = static_cast<float>(s) / 65535.0f;
        } else {
          v = static_cast<float>(row[3 * x + c]) / 255.0f;
        }
        img.channel(c)(static_cast<int>(y), static_cast<int>(x)) = v;
      }
    }
  }
  return img;
}

struct PngWriteState {
  Bytes out;
  std::string message;
  std::vector<png_byte> pixels;
  std::vector<png_bytep> rows;
};

void png_write_mem(png_structp png, png_bytep data, png_size_t n) {
  auto* st = static_cast<PngWriteState*>(png_get_io_ptr(png));
  st->out.insert(st->out.end(), data, data + n);
}

void png_flush_mem(png_structp) {}

void png_write_error_fn(png_structp png, png_const_charp msg) {
  static_cast<PngWriteState*>(png_get_error_ptr(png))->message = msg;
  png_longjmp(png, 1);
}

/// `fill` populates `pixels` (big-endian samples for 16 bit).
Bytes encode_png(int width, int height, int channels, int bit_depth,
                 const std::function<void(std::vector<png_byte>&)>& fill) {
  auto st = std::make_unique<PngWriteState>();
  const std::size_t rowbytes = static_cast<std::size_t>(width) * channels * (bit_depth / 8);
  st->pixels.resize(rowbytes * height);
  fill(st->pixels);
  st->rows.resize(height);
  for (int y = 0; y < height; ++y) st->rows[y] = st->pixels.data() + y * rowbytes;

  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, st.get(), png_write_error_fn, png_warning_fn);
  if (!png) throw ImageIoError(IoErrorKind::kWriteFailed, "libpng init failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw ImageIoError(IoErrorKind::kWriteFailed, "libpng init failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw ImageIoError(IoErrorKind::kWriteFailed, st->message);
  }
  png_set_write_fn(png, st.get(), png_write_mem, png_flush_mem);
  png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), bit_depth,
               channels == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  png_write_image(png, st->rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return std::move(st->out);
}

unsigned quantize(float v, unsigned levels) {
  const double c = std::clamp(static_cast<double>(v), 0.0, 1.0);
  return static_cast<unsigned>(std::floor(c * levels + 0.5));
}

}  // namespace

Rgbe float_to_rgbe(float r, float g, float b) {
  const float v = std::max({r, g, b});
  if (!(v >= 1e-32f)) return {};
  int e = 0;
  std::frexp(v, &e);  // v = m * 2^e, m in [0.5, 1)
  auto encode = [&](int exp) {
    const double scale = std::ldexp(1.0, 8 - exp);
    return std::array<double, 3>{std::floor(r * scale + 0.5), std::floor(g * scale + 0.5),
                                 std::floor(b * scale + 0.5)};
  };
  auto m = encode(e);
  if (std::max({m[0], m[1], m[2]}) > 255.0) m = encode(++e);
  if (e + 128 > 255) return {255, 255, 255, 255};
  if (e + 128 < 1) return {};
  return {static_cast<unsigned char>(m[0]), static_cast<unsigned char>(m[1]), static_cast<unsigned char>(m[2]),
          static_cast<unsigned char>(e + 128)};
}

void rgbe_to_float(const Rgbe& p, float& r, float& g, float& b) {
  if (p.e == 0) {
    r = g = b = 0.0f;
    return;
  }
  const double f = std::ldexp(1.0, static_cast<int>(p.e) - (128 + 8));
  r = static_cast<float>(p.r * f);
  g = static_cast<float>(p.g * f);
  b = static_cast<float>(p.b * f);
}

HdrImage load_hdr(const std::filesystem::path& path) {
  const Bytes d = read_bytes(path);
  const auto name = path.string();
  if (starts_with(d, "#?")) return RgbeReader(d, name).read();
  if (starts_with(d, "PF") || starts_with(d, "Pf")) return read_pfm(d, name);
  if (d.empty()) throw ImageIoError(IoErrorKind::kMalformedHeader, name + ": empty file");
  throw ImageIoError(IoErrorKind::kUnsupported, name + ": not a Radiance RGBE or PFM file");
}

LdrImage load_ldr(const std::filesystem::path& path) {
  const Bytes d = read_bytes(path);
  const auto name = path.string();
  if (is_png(d)) return read_png(d, name);
  if (d.empty()) throw ImageIoError(IoErrorKind::kMalformedHeader, name + ": empty file");
  throw ImageIoError(IoErrorKind::kUnsupported, name + ": not a PNG file");
}

std::variant<HdrImage, LdrImage> load_image(const std::filesystem::path& path, ImageKind kind) {
  if (kind == ImageKind::kHdr) return load_hdr(path);
  return load_ldr(path);
}

void save_rgbe(const std::filesystem::path& path, const HdrImage& img) {
  img.validate();
  const int w = img.width();
  const int h = img.height();
  Bytes out;
  const std::string header = "#?RADIANCE\nFORMAT=32-bit_rle_rgbe\n\n-Y " + std::to_string(h) + " +X " +
                             std::to_string(w) + "\n";
  out.insert(out.end(), header.begin(), header.end());
  std::vector<Rgbe> line(w);
  std::array<std::vector<unsigned char>, 4> comp;
  for (auto& c : comp) c.resize(w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      line[x] = float_to_rgbe(img.channel(0)(y, x), img.channel(1)(y, x), img.channel(2)(y, x));
    }
    if (w < 8 || w > 0x7fff) {
      for (const auto& p : line) out.insert(out.end(), {p.r, p.g, p.b, p.e});
      continue;
    }
    out.insert(out.end(), {2, 2, static_cast<unsigned char>(w >> 8), static_cast<unsigned char>(w & 0xff)});
    for (int x = 0; x < w; ++x) {
      comp[0][x] = line[x].r;
      comp[1][x] = line[x].g;
      comp[2][x] = line[x].b;
      comp[3][x] = line[x].e;
    }
    for (const auto& c : comp) append_rle_component(out, c.data(), c.size());
  }
  write_bytes(path, out);
}

void save_pfm(const std::filesystem::path& path, const HdrImage& img) {
  img.validate();
  const int w = img.width();
  const int h = img.height();
  const std::string header = "PF\n" + std::to_string(w) + " " + std::to_string(h) + "\n-1.0\n";
  Bytes out(header.begin(), header.end());
  out.reserve(out.size() + static_cast<std::size_t>(w) * h * 12);
  for (int y = h - 1; y >= 0; --y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < 3; ++c) {
        float v = img.channel(c)(y, x);
        unsigned char b[4];
        std::memcpy(b, &v, 4);
        if constexpr (std::endian::native == std::endian::big) std::reverse(b, b + 4);
        out.insert(out.end(), b, b + 4);
      }
    }
  }
  write_bytes(path, out);
}

void save_png(const std::filesystem::path& path, const LdrImage& img) {
  img.validate();
  const int w = img.width();
  const int h = img.height();
  const auto bytes = encode_png(w, h, 3, 8, [&](std::vector<png_byte>& px) {
    std::size_t i = 0;
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        for (int c = 0; c < 3; ++c) px[i++] = static_cast<png_byte>(quantize(img.channel(c)(y, x), 255));
  });
  write_bytes(path, bytes);
}

void save_png16(const std::filesystem::path& path, const LuminanceMap& map) {
  const int w = static_cast<int>(map.cols());
  const int h = static_cast<int>(map.rows());
  if (w < 1 || h < 1) throw ImageIoError(IoErrorKind::kWriteFailed, "empty map");
  const auto bytes = encode_png(w, h, 1, 16, [&](std::vector<png_byte>& px) {
    std::size_t i = 0;
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        const unsigned q = quantize(map(y, x), 65535);
        px[i++] = static_cast<png_byte>(q >> 8);
        px[i++] = static_cast<png_byte>(q & 0xff);
      }
  });
  write_bytes(path, bytes);
}

}  // namespace tmo
