// Copyright 2026 The closematch Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

#include "closematch/dataset.hpp"
#include "closematch/features.hpp"
#include "closematch/svm.hpp"

namespace closematch {

/// End-to-end settings. m = 0 means n/2; gamma = 0 means 1/(2m), i.e. one
/// over the feature dimension.
struct RunConfig {
  std::size_t n = 32;
  std::size_t m = 0;
  double gamma = 0.0;
  double c = 10.0;
  std::uint64_t seed = 42;
  bool normalize_l2 = true;
  double kkt_tol = 1e-3;
  int max_passes = 50;

  std::size_t resolved_m() const { return m == 0 ? n / 2 : m; }

  void validate() const {
    if (n == 0) throw usage_error("n must be positive");
    const auto mm = resolved_m();
    if (mm == 0 || mm > n) throw usage_error("m must satisfy 1 <= m <= n");
    if (gamma < 0.0) throw usage_error("gamma must be positive");
    kernel().validate();
  }

  KernelParams kernel() const {
    KernelParams k;
    k.gamma = gamma > 0.0 ? gamma : 1.0 / (2.0 * static_cast<double>(resolved_m()));
    k.c = c;
    k.kkt_tol = kkt_tol;
    k.max_passes = max_passes;
    return k;
  }

  FeatureOptions features() const { return {resolved_m(), normalize_l2}; }
};

/// normalize_sample(n) followed by extract_features, per sample.
inline std::vector<LabeledFeatures> featurize(const std::vector<GlyphSample>& samples, std::size_t n,
                                              const FeatureOptions& opts) {
  std::vector<LabeledFeatures> out;
  out.reserve(samples.size());
  for (const auto& s : samples) {
    try {
      out.push_back({s.label, extract_features(normalize_sample(s, n), opts).values});
    } catch (const Error& e) {
      throw Error(e.kind(), "sample '" + s.source_id + "': " + e.what());
    }
  }
  return out;
}

/// Samples whose label is one of the two classes.
inline std::vector<LabeledFeatures> select_pair(const std::vector<LabeledFeatures>& samples,
                                                const std::string& a, const std::string& b) {
  std::vector<LabeledFeatures> out;
  for (const auto& s : samples)
    if (s.label == a || s.label == b) out.push_back(s);
  return out;
}

}  // namespace closematch
