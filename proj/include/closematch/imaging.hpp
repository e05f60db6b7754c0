// Copyright 2026 The closematch Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <iterator>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "closematch/error.hpp"

namespace closematch {

/// Row-major raster. Pixel type is uint8_t for both grayscale intensities and
/// binary masks; BinaryImage additionally keeps every pixel in {0, 1}.
template <typename Tag>
class Raster {
 public:
  Raster() = default;

  Raster(std::size_t width, std::size_t height, std::vector<std::uint8_t> pixels)
      : width_(width), height_(height), pixels_(std::move(pixels)) {
    if (width_ == 0 || height_ == 0) throw data_error("image dimensions must be positive");
    if (pixels_.size() != width_ * height_)
      throw data_error("pixel count " + std::to_string(pixels_.size()) + " does not match " +
                       std::to_string(width_) + "x" + std::to_string(height_));
    Tag::validate(pixels_);
  }

  Raster(std::size_t width, std::size_t height, std::uint8_t fill = 0)
      : Raster(width, height, std::vector<std::uint8_t>(width * height, fill)) {}

  std::size_t width() const noexcept { return width_; }
  std::size_t height() const noexcept { return height_; }
  std::size_t size() const noexcept { return pixels_.size(); }
  bool empty() const noexcept { return pixels_.empty(); }

  std::uint8_t at(std::size_t row, std::size_t col) const { return pixels_[row * width_ + col]; }
  void set(std::size_t row, std::size_t col, std::uint8_t v) { pixels_[row * width_ + col] = v; }

  std::span<const std::uint8_t> pixels() const noexcept { return pixels_; }

  friend bool operator==(const Raster&, const Raster&) = default;

 private:
  std::size_t width_ = 0;
  std::size_t height_ = 0;
  std::vector<std::uint8_t> pixels_;
};

struct GrayTag {
  static void validate(const std::vector<std::uint8_t>&) {}
};

struct BinaryTag {
  static void validate(const std::vector<std::uint8_t>& px) {
    if (std::any_of(px.begin(), px.end(), [](std::uint8_t v) { return v > 1; }))
      throw data_error("binary image pixels must be 0 or 1");
  }
};

using GrayImage = Raster<GrayTag>;
/// 1 = ink, 0 = background.
using BinaryImage = Raster<BinaryTag>;

inline std::size_t ink_count(const BinaryImage& img) {
  return static_cast<std::size_t>(std::count(img.pixels().begin(), img.pixels().end(), 1));
}

// ---------------------------------------------------------------------------
// PGM I/O

namespace detail {

class PgmHeaderReader {
 public:
  explicit PgmHeaderReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  // Reads one whitespace-delimited token, skipping '#' comments.
  std::string token() {
    for (;;) {
      while (pos_ < bytes_.size() && std::isspace(bytes_[pos_])) ++pos_;
      if (pos_ < bytes_.size() && bytes_[pos_] == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n' && bytes_[pos_] != '\r') ++pos_;
        continue;
      }
      break;
    }
    std::string out;
    while (pos_ < bytes_.size() && !std::isspace(bytes_[pos_]) && bytes_[pos_] != '#')
      out.push_back(static_cast<char>(bytes_[pos_++]));
    return out;
  }

  std::size_t position() const noexcept { return pos_; }
  void advance(std::size_t n) noexcept { pos_ += n; }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

inline unsigned long parse_header_number(const std::string& tok, std::string_view field) {
  if (tok.empty()) throw data_error("pgm: missing " + std::string(field));
  if (!std::all_of(tok.begin(), tok.end(), [](char c) { return c >= '0' && c <= '9'; }) ||
      tok.size() > 9)
    throw data_error("pgm: malformed " + std::string(field) + " '" + tok + "'");
  return std::stoul(tok);
}

inline std::uint8_t rescale(unsigned long v, unsigned long maxval) {
  if (maxval == 255) return static_cast<std::uint8_t>(v);
  return static_cast<std::uint8_t>((v * 255 + maxval / 2) / maxval);
}

}  // namespace detail

/// Parses a binary (P5) or ASCII (P2) PGM with maxval <= 255. Intensities are
/// rescaled to [0, 255] when maxval is smaller.
inline GrayImage load_pgm(std::span<const std::uint8_t> bytes) {
  detail::PgmHeaderReader reader(bytes);
  const std::string magic = reader.token();
  if (magic != "P2" && magic != "P5")
    throw data_error("pgm: malformed magic number '" + magic + "'");
  const bool ascii = magic == "P2";

  const auto width = detail::parse_header_number(reader.token(), "width");
  const auto height = detail::parse_header_number(reader.token(), "height");
  const auto maxval = detail::parse_header_number(reader.token(), "maxval");
  if (width == 0) throw data_error("pgm: zero dimensions (width)");
  if (height == 0) throw data_error("pgm: zero dimensions (height)");
  if (maxval == 0) throw data_error("pgm: maxval must be positive");
  if (maxval > 255) throw data_error("pgm: maxval " + std::to_string(maxval) + " > 255");

  const std::size_t count = width * height;
  std::vector<std::uint8_t> pixels;
  pixels.reserve(count);
  if (ascii) {
    for (std::size_t i = 0; i < count; ++i) {
      const std::string tok = reader.token();
      if (tok.empty()) throw data_error("pgm: truncated pixel data");
      const auto v = detail::parse_header_number(tok, "pixel value");
      if (v > maxval) throw data_error("pgm: pixel value " + tok + " exceeds maxval");
      pixels.push_back(detail::rescale(v, maxval));
    }
  } else {
    // Exactly one whitespace byte separates maxval from the raster.
    reader.advance(1);
    const std::size_t start = reader.position();
    if (start > bytes.size() || bytes.size() - start < count)
      throw data_error("pgm: truncated pixel data");
    for (std::size_t i = 0; i < count; ++i) {
      const auto v = bytes[start + i];
      if (v > maxval) throw data_error("pgm: pixel value exceeds maxval");
      pixels.push_back(detail::rescale(v, maxval));
    }
  }
  return GrayImage(width, height, std::move(pixels));
}

inline GrayImage load_pgm(std::string_view text) {
  return load_pgm(std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(text.data()),
                                                text.size()));
}

inline std::vector<std::uint8_t> read_file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw data_error("cannot open '" + path + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline GrayImage load_pgm_file(const std::string& path) {
  const auto bytes = read_file_bytes(path);
  try {
    return load_pgm(std::span<const std::uint8_t>(bytes));
  } catch (const Error& e) {
    throw data_error(path + ": " + e.what());
  }
}

/// ASCII (P2) serialization, maxval 255, one raster row per line.
inline std::string write_pgm(const GrayImage& img) {
  std::ostringstream out;
  out << "P2\n" << img.width() << ' ' << img.height() << "\n255\n";
  for (std::size_t r = 0; r < img.height(); ++r) {
    for (std::size_t c = 0; c < img.width(); ++c) {
      if (c) out << ' ';
      out << static_cast<int>(img.at(r, c));
    }
    out << '\n';
  }
  return out.str();
}

/// Ink renders black (0), background white (255).
inline GrayImage to_gray(const BinaryImage& img) {
  std::vector<std::uint8_t> px(img.size());
  std::transform(img.pixels().begin(), img.pixels().end(), px.begin(),
                 [](std::uint8_t v) -> std::uint8_t { return v ? 0 : 255; });
  return GrayImage(img.width(), img.height(), std::move(px));
}

// ---------------------------------------------------------------------------
// Thresholding

/// Ink iff intensity <= t.
inline BinaryImage binarize_fixed(const GrayImage& img, std::uint8_t t) {
  std::vector<std::uint8_t> px(img.size());
  std::transform(img.pixels().begin(), img.pixels().end(), px.begin(),
                 [t](std::uint8_t v) -> std::uint8_t { return v <= t ? 1 : 0; });
  return BinaryImage(img.width(), img.height(), std::move(px));
}

inline std::array<std::uint64_t, 256> histogram(const GrayImage& img) {
  std::array<std::uint64_t, 256> hist{};
  for (auto v : img.pixels()) ++hist[v];
  return hist;
}

namespace detail {

// a/b > c/d for nonnegative a, c and positive b, d.
inline bool rational_greater(__int128 a, __int128 b, __int128 c, __int128 d) {
  __int128 lhs, rhs;
  if (!__builtin_mul_overflow(a, d, &lhs) && !__builtin_mul_overflow(c, b, &rhs)) return lhs > rhs;
  return static_cast<long double>(a) / static_cast<long double>(b) >
         static_cast<long double>(c) / static_cast<long double>(d);
}

}  // namespace detail

struct OtsuResult {
  BinaryImage image;
  std::uint8_t threshold = 0;
};

/// Otsu's method over the split {<= t} / {> t}. The first t attaining the
/// maximal between-class variance wins. A single-intensity image has no
/// separable content: threshold 0 and an all-background mask.
inline OtsuResult binarize_otsu(const GrayImage& img) {
  const auto hist = histogram(img);
  const auto distinct = std::count_if(hist.begin(), hist.end(), [](auto c) { return c > 0; });
  if (distinct <= 1) return {BinaryImage(img.width(), img.height(), 0), 0};

  // Between-class variance times total^2 equals d^2 / (w0*w1) with
  // d = total*sum0 - w0*sum_all; scores are compared as exact rationals.
  const auto total = static_cast<__int128>(img.size());
  __int128 sum_all = 0;
  for (int i = 0; i < 256; ++i) sum_all += static_cast<__int128>(i) * hist[i];

  __int128 w0 = 0, sum0 = 0;
  __int128 best_num = -1, best_den = 1;
  int best_t = 0;
  for (int t = 0; t < 256; ++t) {
    w0 += hist[t];
    sum0 += static_cast<__int128>(t) * hist[t];
    const __int128 w1 = total - w0;
    if (w0 == 0 || w1 == 0) continue;
    const __int128 d = total * sum0 - w0 * sum_all;
    const __int128 num = d * d, den = w0 * w1;
    if (best_num < 0 || detail::rational_greater(num, den, best_num, best_den)) {
      best_num = num;
      best_den = den;
      best_t = t;
    }
  }
  const auto t = static_cast<std::uint8_t>(best_t);
  return {binarize_fixed(img, t), t};
}

// ---------------------------------------------------------------------------
// Geometry

inline BinaryImage crop_to_bbox(const BinaryImage& img) {
  std::size_t top = img.height(), bottom = 0, left = img.width(), right = 0;
  bool any = false;
  for (std::size_t r = 0; r < img.height(); ++r)
    for (std::size_t c = 0; c < img.width(); ++c)
      if (img.at(r, c)) {
        any = true;
        top = std::min(top, r);
        bottom = std::max(bottom, r);
        left = std::min(left, c);
        right = std::max(right, c);
      }
  if (!any) throw data_error("empty glyph");

  const std::size_t w = right - left + 1, h = bottom - top + 1;
  std::vector<std::uint8_t> px;
  px.reserve(w * h);
  for (std::size_t r = top; r <= bottom; ++r)
    for (std::size_t c = left; c <= right; ++c) px.push_back(img.at(r, c));
  return BinaryImage(w, h, std::move(px));
}

/// Nearest-neighbor resample: out(r, c) = in(floor(r*H/n), floor(c*W/n)).
inline BinaryImage resize_to_square(const BinaryImage& img, std::size_t n) {
  if (n == 0) throw usage_error("resize side n must be positive");
  std::vector<std::uint8_t> px(n * n);
  for (std::size_t r = 0; r < n; ++r) {
    const std::size_t sr = r * img.height() / n;
    for (std::size_t c = 0; c < n; ++c) px[r * n + c] = img.at(sr, c * img.width() / n);
  }
  return BinaryImage(n, n, std::move(px));
}

/// Nearest-neighbor resample to an arbitrary size (used for scale jitter).
inline BinaryImage resize(const BinaryImage& img, std::size_t width, std::size_t height) {
  std::vector<std::uint8_t> px(width * height);
  for (std::size_t r = 0; r < height; ++r)
    for (std::size_t c = 0; c < width; ++c)
      px[r * width + c] = img.at(r * img.height() / height, c * img.width() / width);
  return BinaryImage(width, height, std::move(px));
}

/// Otsu binarization, bounding-box crop, then n×n resample.
inline BinaryImage normalize_glyph(const GrayImage& img, std::size_t n) {
  return resize_to_square(crop_to_bbox(binarize_otsu(img).image), n);
}

}  // namespace closematch
