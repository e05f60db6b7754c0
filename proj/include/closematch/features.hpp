// Copyright 2026 The closematch Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <numeric>
#include <span>
#include <vector>

#include "closematch/error.hpp"
#include "closematch/imaging.hpp"

namespace closematch {

/// Row ink counts (horizontal projection) and column ink counts (vertical
/// projection) of an n×n glyph.
struct ProjectionPair {
  std::vector<std::uint32_t> h;
  std::vector<std::uint32_t> v;

  std::size_t n() const noexcept { return h.size(); }
};

using Spectrum = std::vector<std::complex<double>>;

/// Spectral feature vector: m magnitudes of the horizontal projection's
/// spectrum followed by m of the vertical one.
struct FeatureVector {
  std::vector<double> values;
  std::size_t m = 0;

  std::size_t dim() const noexcept { return values.size(); }
  friend bool operator==(const FeatureVector&, const FeatureVector&) = default;
};

inline ProjectionPair project(const BinaryImage& img) {
  if (img.width() != img.height())
    throw data_error("project: image must be square, got " + std::to_string(img.width()) + "x" +
                     std::to_string(img.height()));
  const std::size_t n = img.width();
  ProjectionPair p{std::vector<std::uint32_t>(n, 0), std::vector<std::uint32_t>(n, 0)};
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < n; ++c)
      if (img.at(r, c)) {
        ++p.h[r];
        ++p.v[c];
      }
  return p;
}

/// S(k) = sum_n s(n) exp(-j 2 pi k n / N). Direct evaluation; the phase index
/// k*n is reduced mod N first so large products do not lose angle precision.
inline Spectrum dft(std::span<const double> signal) {
  const std::size_t n = signal.size();
  if (n == 0) throw data_error("dft: empty signal");

  std::vector<std::complex<double>> twiddle(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double angle = -2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n);
    twiddle[i] = {std::cos(angle), std::sin(angle)};
  }

  Spectrum out(n);
  for (std::size_t k = 0; k < n; ++k) {
    std::complex<double> acc{0.0, 0.0};
    for (std::size_t t = 0; t < n; ++t) acc += signal[t] * twiddle[(k * t) % n];
    out[k] = acc;
  }
  // Real input: the DC term has no imaginary part.
  out[0] = {std::accumulate(signal.begin(), signal.end(), 0.0), 0.0};
  return out;
}

template <typename T>
Spectrum dft_of(std::span<const T> signal) {
  std::vector<double> s(signal.begin(), signal.end());
  return dft(s);
}

/// Magnitudes of the lowest m coefficients.
inline std::vector<double> truncate_spectrum(const Spectrum& spec, std::size_t m) {
  if (m == 0) throw usage_error("coefficient count m must be positive");
  if (m > spec.size())
    throw usage_error("coefficient count m=" + std::to_string(m) + " exceeds signal length " +
                      std::to_string(spec.size()));
  std::vector<double> out(m);
  for (std::size_t k = 0; k < m; ++k) out[k] = std::abs(spec[k]);
  return out;
}

struct FeatureOptions {
  std::size_t m = 0;
  /// Scale the final vector to unit L2 norm (zero vectors stay zero).
  bool normalize_l2 = false;
};

inline FeatureVector extract_features(const BinaryImage& img, const FeatureOptions& opts) {
  const ProjectionPair p = project(img);
  if (opts.m == 0 || opts.m > p.n())
    throw usage_error("coefficient count m=" + std::to_string(opts.m) + " must be in [1, " +
                      std::to_string(p.n()) + "]");
  const auto fh = truncate_spectrum(dft_of(std::span<const std::uint32_t>(p.h)), opts.m);
  const auto fv = truncate_spectrum(dft_of(std::span<const std::uint32_t>(p.v)), opts.m);

  FeatureVector x;
  x.m = opts.m;
  x.values.reserve(2 * opts.m);
  x.values.insert(x.values.end(), fh.begin(), fh.end());
  x.values.insert(x.values.end(), fv.begin(), fv.end());

  if (opts.normalize_l2) {
    double norm = 0.0;
    for (double v : x.values) norm += v * v;
    norm = std::sqrt(norm);
    if (norm > 0.0)
      for (double& v : x.values) v /= norm;
  }
  return x;
}

inline FeatureVector extract_features(const BinaryImage& img, std::size_t m) {
  return extract_features(img, FeatureOptions{m, false});
}

}  // namespace closematch
