// Copyright 2026 The closematch Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "closematch/error.hpp"
#include "closematch/svm.hpp"

namespace closematch {

/// Positive class is the pair's correct character.
struct ConfusionCounts {
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::uint64_t tn = 0;
  std::uint64_t fn = 0;

  std::uint64_t total() const noexcept { return tp + fp + tn + fn; }

  ConfusionCounts& operator+=(const ConfusionCounts& o) noexcept {
    tp += o.tp;
    fp += o.fp;
    tn += o.tn;
    fn += o.fn;
    return *this;
  }
  friend bool operator==(const ConfusionCounts&, const ConfusionCounts&) = default;
};

/// Percentages. A ratio with a zero denominator is absent.
struct PairMetrics {
  std::optional<double> sensitivity;
  std::optional<double> specificity;
  double accuracy = 0.0;
};

/// Tallies predict_pair against the truth for every test sample. `positive`
/// must be one of the model's two classes.
inline ConfusionCounts evaluate_pair(const SvmModel& model, std::span<const LabeledFeatures> test,
                                     const std::string& positive) {
  if (positive != model.pos_class && positive != model.neg_class)
    throw data_error("evaluate: '" + positive + "' is not a class of pair " + model.pos_class + "/" +
                     model.neg_class);
  const std::string& negative = positive == model.pos_class ? model.neg_class : model.pos_class;
  ConfusionCounts c;
  for (const auto& s : test) {
    if (s.label != positive && s.label != negative)
      throw data_error("evaluate: test label '" + s.label + "' is foreign to pair " + model.pos_class + "/" +
                       model.neg_class);
    const bool truth = s.label == positive;
    const bool said = predict_pair(model, s.x) == positive;
    if (truth) (said ? c.tp : c.fn)++;
    else (said ? c.fp : c.tn)++;
  }
  return c;
}

inline PairMetrics metrics(const ConfusionCounts& c) {
  if (c.total() == 0) throw data_error("metrics: no evaluated samples");
  PairMetrics m;
  if (c.tp + c.fn > 0) m.sensitivity = 100.0 * static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
  if (c.tn + c.fp > 0) m.specificity = 100.0 * static_cast<double>(c.tn) / static_cast<double>(c.tn + c.fp);
  m.accuracy = 100.0 * static_cast<double>(c.tp + c.tn) / static_cast<double>(c.total());
  return m;
}

inline constexpr std::string_view kAbsentCell = "—";

/// At most three decimals, trailing zeros trimmed: 79.1666 -> "79.167",
/// 87.5 -> "87.5", 100 -> "100".
inline std::string format_percent(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  std::string s(buf);
  s.erase(s.find_last_not_of('0') + 1);
  if (s.back() == '.') s.pop_back();
  if (s == "-0") s = "0";
  return s;
}

inline std::string format_percent(const std::optional<double>& v) {
  return v ? format_percent(*v) : std::string(kAbsentCell);
}

struct ReportRow {
  std::string correct;
  std::string error;
  ConfusionCounts counts;
  PairMetrics metrics;
};

namespace detail {

// Terminal column width approximated by the UTF-8 code point count.
inline std::size_t display_width(std::string_view s) {
  return static_cast<std::size_t>(std::count_if(s.begin(), s.end(), [](char ch) {
    return (static_cast<unsigned char>(ch) & 0xC0) != 0x80;
  }));
}

inline std::string pad(const std::string& s, std::size_t width) {
  return s + std::string(width - std::min(width, display_width(s)), ' ');
}

}  // namespace detail

inline std::string report_table(std::span<const ReportRow> rows) {
  const std::vector<std::string> header = {"Correct Character", "Error Character", "Sensitivity", "Specificity",
                                           "Accuracy"};
  std::vector<std::vector<std::string>> cells;
  for (const auto& r : rows)
    cells.push_back({r.correct, r.error, format_percent(r.metrics.sensitivity),
                     format_percent(r.metrics.specificity), format_percent(r.metrics.accuracy)});

  std::vector<std::size_t> width(header.size());
  for (std::size_t i = 0; i < header.size(); ++i) {
    width[i] = detail::display_width(header[i]);
    for (const auto& row : cells) width[i] = std::max(width[i], detail::display_width(row[i]));
  }
  std::ostringstream out;
  auto emit = [&](const std::vector<std::string>& row) {
    std::string line;
    for (std::size_t i = 0; i < row.size(); ++i) line += (i ? "  " : "") + detail::pad(row[i], width[i]);
    line.erase(line.find_last_not_of(' ') + 1);
    out << line << '\n';
  };
  emit(header);
  for (const auto& row : cells) emit(row);
  return out.str();
}

/// "correct,error,tp,fp,tn,fn,sensitivity,specificity,accuracy"; absent
/// ratios are empty fields.
inline std::string report_csv(std::span<const ReportRow> rows) {
  std::ostringstream out;
  out << "correct,error,tp,fp,tn,fn,sensitivity,specificity,accuracy\n";
  for (const auto& r : rows) {
    out << r.correct << ',' << r.error << ',' << r.counts.tp << ',' << r.counts.fp << ',' << r.counts.tn << ','
        << r.counts.fn << ',' << (r.metrics.sensitivity ? format_percent(*r.metrics.sensitivity) : "") << ','
        << (r.metrics.specificity ? format_percent(*r.metrics.specificity) : "") << ','
        << format_percent(r.metrics.accuracy) << '\n';
  }
  return out.str();
}

}  // namespace closematch
