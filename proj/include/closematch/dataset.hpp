// Copyright 2026 The closematch Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "closematch/error.hpp"
#include "closematch/imaging.hpp"
#include "closematch/rng.hpp"

namespace closematch {

struct GlyphSample {
  std::variant<GrayImage, BinaryImage> image;
  std::string label;
  std::string source_id;
};

/// Grayscale samples go through Otsu; binary samples skip thresholding.
inline BinaryImage normalize_sample(const GlyphSample& s, std::size_t n) {
  if (const auto* bin = std::get_if<BinaryImage>(&s.image)) return resize_to_square(crop_to_bbox(*bin), n);
  return normalize_glyph(std::get<GrayImage>(s.image), n);
}

// ---------------------------------------------------------------------------
// CSV helpers (no quoting; fields may not contain commas)

namespace detail {

inline std::vector<std::string> split_csv_line(std::string line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

inline std::string strip_bom(std::string s) {
  if (s.rfind("\xEF\xBB\xBF", 0) == 0) s.erase(0, 3);
  return s;
}

// Reads (row number, fields) for every non-blank line after the header.
inline std::vector<std::pair<std::size_t, std::vector<std::string>>> read_csv(
    const std::string& path, const std::vector<std::string>& header, const std::string& what) {
  std::ifstream in(path);
  if (!in) throw data_error(what + ": cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw data_error(what + ": '" + path + "' is empty");
  auto head = split_csv_line(strip_bom(line));
  for (auto& h : head) h = trim(h);
  if (head != header) {
    std::string expected;
    for (const auto& h : header) expected += (expected.empty() ? "" : ",") + h;
    throw data_error(what + ": '" + path + "' header must be '" + expected + "'");
  }
  std::vector<std::pair<std::size_t, std::vector<std::string>>> rows;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty() || trim(line) == "\r") continue;
    auto fields = split_csv_line(line);
    for (auto& f : fields) f = trim(f);
    rows.emplace_back(row, std::move(fields));
  }
  return rows;
}

}  // namespace detail

/// Manifest CSV: header "path,label"; paths are relative to the manifest's
/// directory. Duplicate rows are legal.
inline std::vector<GlyphSample> load_manifest(const std::string& path) {
  const auto rows = detail::read_csv(path, {"path", "label"}, "manifest");
  if (rows.empty()) throw data_error("manifest: '" + path + "' has no sample rows");
  const auto base = std::filesystem::path(path).parent_path();
  std::vector<GlyphSample> out;
  out.reserve(rows.size());
  for (const auto& [row, fields] : rows) {
    const std::string where = "manifest row " + std::to_string(row);
    if (fields.size() != 2 || fields[0].empty() || fields[1].empty())
      throw data_error(where + ": malformed row, expected 'path,label'");
    const auto image_path = (base / fields[0]).string();
    if (!std::filesystem::is_regular_file(image_path))
      throw data_error(where + ": missing image file '" + image_path + "'");
    try {
      out.push_back({load_pgm_file(image_path), fields[1], fields[0]});
    } catch (const Error& e) {
      throw data_error(where + ": " + e.what());
    }
  }
  return out;
}

inline void write_manifest(const std::string& path,
                           const std::vector<std::pair<std::string, std::string>>& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw data_error("cannot write manifest '" + path + "'");
  out << "path,label\n";
  for (const auto& [p, label] : rows) out << p << ',' << label << '\n';
}

// ---------------------------------------------------------------------------
// Registry of confusable pairs

struct PairRegistry {
  /// (correct_class, error_class)
  std::vector<std::pair<std::string, std::string>> pairs;

  void validate() const {
    std::set<std::pair<std::string, std::string>> seen;
    for (const auto& [a, b] : pairs) {
      if (a.empty() || b.empty()) throw data_error("registry: empty class name");
      if (a == b) throw data_error("registry: pair '" + a + "' repeats the same class");
      if (!seen.insert(std::minmax(a, b)).second)
        throw data_error("registry: duplicate pair " + a + "/" + b);
    }
  }

  /// Classes in order of first appearance.
  std::vector<std::string> classes() const {
    std::vector<std::string> out;
    for (const auto& [a, b] : pairs)
      for (const auto* name : {&a, &b})
        if (std::find(out.begin(), out.end(), *name) == out.end()) out.push_back(*name);
    return out;
  }
};

inline PairRegistry load_registry(const std::string& path) {
  const auto rows = detail::read_csv(path, {"correct_class", "error_class"}, "registry");
  PairRegistry reg;
  for (const auto& [row, fields] : rows) {
    if (fields.size() != 2 || fields[0].empty() || fields[1].empty())
      throw data_error("registry row " + std::to_string(row) + ": expected 'correct_class,error_class'");
    reg.pairs.emplace_back(fields[0], fields[1]);
  }
  if (reg.pairs.empty()) throw data_error("registry: '" + path + "' has no pairs");
  reg.validate();
  return reg;
}

// ---------------------------------------------------------------------------
// Equal train/test split

template <typename T>
struct Split {
  std::vector<T> train;
  std::vector<T> test;
};

/// Per-class stratified halving: a class with k samples puts ceil(k/2) in
/// train and floor(k/2) in test. Membership comes from a seeded shuffle of
/// each class (classes visited in order of first appearance); both halves
/// keep the input order.
template <typename T, typename LabelOf>
Split<T> split_even(const std::vector<T>& samples, std::uint64_t seed, LabelOf label_of) {
  std::vector<std::string> order;
  std::map<std::string, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const std::string& label = label_of(samples[i]);
    auto [it, inserted] = by_class.try_emplace(label);
    if (inserted) order.push_back(label);
    it->second.push_back(i);
  }
  std::vector<char> in_train(samples.size(), 0);
  Rng rng(seed);
  for (const auto& label : order) {
    auto& idx = by_class[label];
    if (idx.size() < 2)
      throw data_error("class '" + label + "' has " + std::to_string(idx.size()) +
                       " sample(s); the train/test split needs at least 2");
    rng.shuffle(idx.begin(), idx.end());
    const std::size_t take = (idx.size() + 1) / 2;
    for (std::size_t k = 0; k < take; ++k) in_train[idx[k]] = 1;
  }
  Split<T> out;
  for (std::size_t i = 0; i < samples.size(); ++i) (in_train[i] ? out.train : out.test).push_back(samples[i]);
  return out;
}

inline Split<GlyphSample> split_even(const std::vector<GlyphSample>& samples, std::uint64_t seed) {
  return split_even(samples, seed, [](const GlyphSample& s) -> const std::string& { return s.label; });
}

// ---------------------------------------------------------------------------
// Synthetic corpus

struct SynthParams {
  double flips = 0.0;
  std::size_t max_shift = 0;
  double scale_jitter = 0.0;
  std::size_t count = 24;
  std::uint64_t seed = 42;
  std::size_t n = 32;

  void validate() const {
    if (!(flips >= 0.0 && flips <= 1.0)) throw usage_error("flips must be in [0, 1]");
    if (!(scale_jitter >= 0.0 && scale_jitter <= 0.5)) throw usage_error("scale jitter must be in [0, 0.5]");
    if (count == 0) throw usage_error("count must be positive");
    if (n == 0) throw usage_error("n must be positive");
  }
};

using TemplateSet = std::vector<std::pair<std::string, BinaryImage>>;

/// Scale jitter, random placement inside a canvas padded by max_shift on each
/// side, then independent per-pixel flips. Returns the un-normalized canvas.
inline BinaryImage perturb(const BinaryImage& glyph, const SynthParams& p, Rng& rng) {
  BinaryImage g = glyph;
  if (p.scale_jitter > 0.0) {
    const double factor = 1.0 + p.scale_jitter * (2.0 * rng.uniform() - 1.0);
    const auto w = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(g.width() * factor)));
    const auto h = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(g.height() * factor)));
    g = resize(g, w, h);
  }
  const auto shift = static_cast<std::int64_t>(p.max_shift);
  const std::size_t pad = p.max_shift;
  BinaryImage canvas(g.width() + 2 * pad, g.height() + 2 * pad, 0);
  const auto dx = rng.between(-shift, shift), dy = rng.between(-shift, shift);
  const auto left = static_cast<std::size_t>(static_cast<std::int64_t>(pad) + dx);
  const auto top = static_cast<std::size_t>(static_cast<std::int64_t>(pad) + dy);
  for (std::size_t r = 0; r < g.height(); ++r)
    for (std::size_t c = 0; c < g.width(); ++c) canvas.set(top + r, left + c, g.at(r, c));
  if (p.flips > 0.0)
    for (std::size_t r = 0; r < canvas.height(); ++r)
      for (std::size_t c = 0; c < canvas.width(); ++c)
        if (rng.uniform() < p.flips) canvas.set(r, c, canvas.at(r, c) ^ 1);
  return canvas;
}

/// p.count normalized n×n samples per template class, classes in template
/// order. Draws that lose all ink are redrawn, at most 100 times.
inline std::vector<GlyphSample> synth_generate(const TemplateSet& templates, const SynthParams& p) {
  p.validate();
  constexpr int kMaxRetries = 100;
  std::vector<BinaryImage> glyphs;
  for (const auto& [label, img] : templates) {
    if (ink_count(img) == 0) throw data_error("template '" + label + "' has no ink");
    glyphs.push_back(crop_to_bbox(img));
  }
  Rng rng(p.seed);
  std::vector<GlyphSample> out;
  out.reserve(templates.size() * p.count);
  for (std::size_t t = 0; t < templates.size(); ++t) {
    for (std::size_t i = 0; i < p.count; ++i) {
      int attempt = 0;
      for (;;) {
        const BinaryImage canvas = perturb(glyphs[t], p, rng);
        if (ink_count(canvas) > 0) {
          out.push_back({resize_to_square(crop_to_bbox(canvas), p.n), templates[t].first,
                         "synth:" + templates[t].first + ":" + std::to_string(i)});
          break;
        }
        if (++attempt >= kMaxRetries)
          throw data_error("template '" + templates[t].first + "': every perturbation erased the glyph");
      }
    }
  }
  return out;
}

/// Loads every *.pgm in a directory as a template; the file stem is the
/// class name. Sorted by file name.
inline TemplateSet load_templates(const std::string& dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) throw data_error("template directory '" + dir + "' does not exist");
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".pgm") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  if (files.empty()) throw data_error("template directory '" + dir + "' has no .pgm files");
  TemplateSet out;
  for (const auto& f : files) {
    const auto bin = binarize_otsu(load_pgm_file(f.string())).image;
    if (ink_count(bin) == 0) throw data_error("template '" + f.string() + "' has no ink");
    out.emplace_back(f.stem().string(), crop_to_bbox(bin));
  }
  return out;
}

/// Writes each sample as an ASCII PGM plus a manifest.csv listing them.
/// File names are positional so arbitrary (e.g. non-ASCII) labels are safe.
inline void write_corpus(const std::vector<GlyphSample>& samples, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  std::vector<std::pair<std::string, std::string>> rows;
  std::map<std::string, std::size_t> class_ids;
  std::map<std::string, std::size_t> per_class;
  for (const auto& s : samples) {
    const auto id = class_ids.try_emplace(s.label, class_ids.size()).first->second;
    const auto k = per_class[s.label]++;
    char name[64];
    std::snprintf(name, sizeof name, "c%02zu_%04zu.pgm", id, k);
    const GrayImage gray = std::holds_alternative<BinaryImage>(s.image) ? to_gray(std::get<BinaryImage>(s.image))
                                                                        : std::get<GrayImage>(s.image);
    std::ofstream out(fs::path(dir) / name, std::ios::binary);
    if (!out) throw data_error("cannot write '" + (fs::path(dir) / name).string() + "'");
    out << write_pgm(gray);
    rows.emplace_back(name, s.label);
  }
  write_manifest((fs::path(dir) / "manifest.csv").string(), rows);
}

// ---------------------------------------------------------------------------
// Bundled stand-in glyphs

namespace detail {

class GlyphCanvas {
 public:
  explicit GlyphCanvas(std::size_t side) : img_(side, side, 0) {}

  void ring(double cy, double cx, double radius, double thickness, double from_deg = 0, double to_deg = 360) {
    for (std::size_t r = 0; r < img_.height(); ++r)
      for (std::size_t c = 0; c < img_.width(); ++c) {
        const double dy = static_cast<double>(r) - cy, dx = static_cast<double>(c) - cx;
        const double d = std::hypot(dx, dy);
        // Angle measured counter-clockwise from +x with rows growing downward.
        double a = std::atan2(-dy, dx) * 180.0 / 3.14159265358979323846;
        if (a < 0) a += 360.0;
        if (std::abs(d - radius) <= thickness / 2.0 && a >= from_deg && a <= to_deg) img_.set(r, c, 1);
      }
  }

  void box(std::size_t r0, std::size_t c0, std::size_t r1, std::size_t c1) {
    for (std::size_t r = r0; r <= r1 && r < img_.height(); ++r)
      for (std::size_t c = c0; c <= c1 && c < img_.width(); ++c) img_.set(r, c, 1);
  }

  const BinaryImage& image() const { return img_; }

 private:
  BinaryImage img_;
};

}  // namespace detail

/// Two pairs of visually close 32×32 glyphs: a closed loop against the same
/// loop with a descending tail, and an arch against the arch with a crossbar.
inline TemplateSet stock_templates() {
  using detail::GlyphCanvas;
  GlyphCanvas loop(32), loop_tail(32), arch(32), arch_bar(32);
  loop.ring(13, 14, 10, 3);
  loop_tail.ring(13, 14, 10, 3);
  loop_tail.box(13, 23, 31, 25);
  for (auto* g : {&arch, &arch_bar}) {
    g->ring(14, 15.5, 11, 3, 0, 180);
    g->box(14, 3, 31, 5);
    g->box(14, 26, 31, 28);
  }
  arch_bar.box(20, 4, 21, 27);
  return {{"loop", loop.image()}, {"loop_tail", loop_tail.image()}, {"arch", arch.image()}, {"arch_bar", arch_bar.image()}};
}

}  // namespace closematch
