// Copyright 2026 The closematch Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "closematch/error.hpp"
#include "closematch/rng.hpp"

namespace closematch {

struct KernelParams {
  double gamma = 1.0;
  double c = 10.0;
  double kkt_tol = 1e-3;
  int max_passes = 50;

  void validate() const {
    if (!(gamma > 0.0) || !std::isfinite(gamma)) throw usage_error("gamma must be positive");
    if (!(c > 0.0) || !std::isfinite(c)) throw usage_error("C must be positive");
    if (!(kkt_tol > 0.0)) throw usage_error("kkt_tol must be positive");
    if (max_passes < 1) throw usage_error("max_passes must be >= 1");
  }
};

/// Binary training data, labels in {-1, +1}.
struct TrainingSet {
  std::vector<std::vector<double>> x;
  std::vector<int> y;

  std::size_t size() const noexcept { return x.size(); }
};

/// Feature vector carrying a character-class name.
struct LabeledFeatures {
  std::string label;
  std::vector<double> x;
};

struct SvmModel {
  std::vector<std::vector<double>> support_x;
  std::vector<int> support_y;
  std::vector<double> alpha;
  double bias = 0.0;
  double gamma = 1.0;
  double c = 1.0;
  std::size_t dim = 0;
  std::string pos_class;
  std::string neg_class;
};

inline double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

/// K(x, y) = exp(-gamma * |x - y|^2)
inline double rbf_kernel(std::span<const double> x, std::span<const double> y, double gamma) {
  if (x.size() != y.size())
    throw data_error("rbf_kernel: dimension mismatch (" + std::to_string(x.size()) + " vs " +
                     std::to_string(y.size()) + ")");
  return std::exp(-gamma * squared_distance(x, y));
}

inline double decision(const SvmModel& model, std::span<const double> x) {
  if (x.size() != model.dim)
    throw data_error("decision: feature dimension " + std::to_string(x.size()) +
                     " does not match model dimension " + std::to_string(model.dim));
  double f = 0.0;
  for (std::size_t i = 0; i < model.alpha.size(); ++i)
    f += model.alpha[i] * model.support_y[i] * rbf_kernel(model.support_x[i], x, model.gamma);
  return f + model.bias;
}

/// Ties at exactly zero go to the positive class.
inline const std::string& predict_pair(const SvmModel& model, std::span<const double> x) {
  return decision(model, x) >= 0.0 ? model.pos_class : model.neg_class;
}

// ---------------------------------------------------------------------------
// Sequential minimal optimization

/// Full multiplier vector for a training set, before zero-alpha pruning.
struct DualSolution {
  std::vector<double> alpha;
  double bias = 0.0;
  std::size_t updates = 0;
  std::size_t sweeps = 0;
};

inline std::vector<double> gram_matrix(const TrainingSet& data, double gamma) {
  const std::size_t n = data.size();
  std::vector<double> k(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    k[i * n + i] = 1.0;
    for (std::size_t j = i + 1; j < n; ++j) k[i * n + j] = k[j * n + i] = rbf_kernel(data.x[i], data.x[j], gamma);
  }
  return k;
}

/// W(alpha) = sum_i alpha_i - 1/2 sum_ij alpha_i alpha_j y_i y_j K_ij
inline double dual_objective(const TrainingSet& data, std::span<const double> alpha, double gamma) {
  const auto k = gram_matrix(data, gamma);
  const std::size_t n = data.size();
  double linear = 0.0, quad = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    linear += alpha[i];
    for (std::size_t j = 0; j < n; ++j) quad += alpha[i] * alpha[j] * data.y[i] * data.y[j] * k[i * n + j];
  }
  return linear - 0.5 * quad;
}

inline void validate_training_set(const TrainingSet& data) {
  if (data.x.size() != data.y.size()) throw data_error("training set: x/y length mismatch");
  bool pos = false, neg = false;
  for (int label : data.y) {
    if (label == 1) pos = true;
    else if (label == -1) neg = true;
    else throw data_error("training set: labels must be -1 or +1");
  }
  if (!pos || !neg) throw data_error("degenerate training set: both labels are required");
  const std::size_t d = data.x.front().size();
  if (d == 0) throw data_error("training set: empty feature vectors");
  for (const auto& x : data.x) {
    if (x.size() != d)
      throw data_error("training set: dimension mismatch (" + std::to_string(x.size()) + " vs " +
                       std::to_string(d) + ")");
    if (!std::all_of(x.begin(), x.end(), [](double v) { return std::isfinite(v); }))
      throw data_error("training set: non-finite feature value");
  }
}

namespace detail {

class SmoSolver {
 public:
  SmoSolver(const TrainingSet& data, const KernelParams& params, std::uint64_t seed,
            std::vector<double>* objective_trace)
      : trace_(objective_trace),
        data_(data),
        params_(params),
        n_(data.size()),
        k_(gram_matrix(data, params.gamma)),
        alpha_(n_, 0.0),
        grad_(n_, 0.0),
        rng_(seed) {}

  DualSolution run() {
    DualSolution out;
    if (simplified_phase(out)) {
      out.bias = bias_;
    } else {
      out.bias = violating_pair_phase(out);
    }
    out.alpha = alpha_;
    out.updates = updates_;
    return out;
  }

 private:
  double kernel(std::size_t i, std::size_t j) const { return k_[i * n_ + j]; }
  double error(std::size_t i) const { return grad_[i] + bias_ - data_.y[i]; }

  bool violates_kkt(std::size_t i) const {
    const double r = data_.y[i] * error(i);  // y_i f(x_i) - 1
    return (r < -params_.kkt_tol && alpha_[i] < params_.c) || (r > params_.kkt_tol && alpha_[i] > 0.0);
  }

  // Random second index, as in the simplified schedule, then every other
  // index from a random start. Returns true when no KKT violator remains.
  bool simplified_phase(DualSolution& out) {
    int idle_passes = 0;
    const std::size_t max_sweeps = 1000 + 100 * n_;
    while (idle_passes < params_.max_passes && out.sweeps < max_sweeps) {
      ++out.sweeps;
      std::size_t violators = 0, changed = 0;
      for (std::size_t i = 0; i < n_; ++i) {
        if (!violates_kkt(i)) continue;
        ++violators;
        if (optimize_with(i)) ++changed;
      }
      if (violators == 0) return true;
      idle_passes = changed == 0 ? idle_passes + 1 : 0;
    }
    return false;
  }

  bool optimize_with(std::size_t i) {
    std::size_t j = rng_.below(n_ - 1);
    if (j >= i) ++j;
    if (take_step(i, j)) return true;
    const std::size_t start = rng_.below(n_);
    for (std::size_t off = 0; off < n_; ++off) {
      const std::size_t jj = (start + off) % n_;
      if (jj != i && jj != j && take_step(i, jj)) return true;
    }
    return false;
  }

  // Finishing phase for when the simplified schedule stalls (typically a
  // nearly constant kernel). Each sample bounds the bias from one side: with
  // F_i = f(x_i) - b - y_i, the KKT conditions read b >= -F_i for
  // i in {y=+1, a<C} u {y=-1, a>0} and b <= -F_i for i in {y=+1, a>0} u
  // {y=-1, a<C}. Optimizing the most violating pair until the largest lower
  // bound exceeds the smallest upper bound by at most kkt_tol, then taking the
  // midpoint, leaves every violation within kkt_tol / 2.
  double violating_pair_phase(DualSolution& out) {
    const double c = params_.c;
    const std::size_t max_steps = 100000 + 1000 * n_;
    for (std::size_t step = 0;; ++step) {
      double lo = -HUGE_VAL, hi = HUGE_VAL;
      std::size_t lo_i = n_, hi_i = n_;
      for (std::size_t t = 0; t < n_; ++t) {
        const double v = -(grad_[t] - data_.y[t]);
        const bool below_c = alpha_[t] < c, above_0 = alpha_[t] > 0.0;
        const bool lower = data_.y[t] == 1 ? below_c : above_0;
        const bool upper = data_.y[t] == 1 ? above_0 : below_c;
        if (lower && v > lo) {
          lo = v;
          lo_i = t;
        }
        if (upper && v < hi) {
          hi = v;
          hi_i = t;
        }
      }
      if (lo_i == n_ || hi_i == n_) return lo_i == n_ ? hi : lo;
      if (lo - hi <= params_.kkt_tol) return 0.5 * (lo + hi);
      if (step >= max_steps || !take_step(lo_i, hi_i))
        throw numeric_error("SMO did not satisfy KKT conditions within tolerance " +
                            std::to_string(params_.kkt_tol) + " (violation gap " + std::to_string(lo - hi) +
                            ")");
      if (step % n_ == 0) ++out.sweeps;
    }
  }

  bool take_step(std::size_t i, std::size_t j) {
    const double c = params_.c;
    const double a1 = alpha_[i], a2 = alpha_[j];
    const int y1 = data_.y[i], y2 = data_.y[j];
    const double e1 = error(i), e2 = error(j);
    const double s = y1 * y2;

    double lo, hi;
    if (y1 != y2) {
      lo = std::max(0.0, a2 - a1);
      hi = std::min(c, c + a2 - a1);
    } else {
      lo = std::max(0.0, a1 + a2 - c);
      hi = std::min(c, a1 + a2);
    }
    if (hi - lo <= 1e-14 * c) return false;

    const double k11 = kernel(i, i), k22 = kernel(j, j), k12 = kernel(i, j);
    const double eta = k11 + k22 - 2.0 * k12;
    const double slope = y2 * (e1 - e2);  // dW/da2 at the current point
    double a2_new;
    if (eta > 1e-12) {
      a2_new = std::clamp(a2 + slope / eta, lo, hi);
    } else {
      // Objective is linear along the constraint line; move to the better end.
      if (std::abs(slope) <= 1e-12) return false;
      a2_new = slope > 0.0 ? hi : lo;
    }
    a2_new = snap_to_box(a2_new);
    if (std::abs(a2_new - a2) < 1e-12 * (a2_new + a2 + 1e-12)) return false;
    const double a1_new = snap_to_box(a1 + s * (a2 - a2_new));

#ifndef NDEBUG
    const double before = objective();
#endif
    const double d1 = y1 * (a1_new - a1), d2 = y2 * (a2_new - a2);
    const double b1 = bias_ - e1 - d1 * k11 - d2 * k12;
    const double b2 = bias_ - e2 - d1 * k12 - d2 * k22;
    if (a1_new > 0.0 && a1_new < c) bias_ = b1;
    else if (a2_new > 0.0 && a2_new < c) bias_ = b2;
    else bias_ = 0.5 * (b1 + b2);

    for (std::size_t t = 0; t < n_; ++t) grad_[t] += d1 * kernel(i, t) + d2 * kernel(j, t);
    alpha_[i] = a1_new;
    alpha_[j] = a2_new;
    ++updates_;
    if (trace_) trace_->push_back(objective());
#ifndef NDEBUG
    assert(objective() >= before - 1e-9 * (1.0 + std::abs(before)));
#endif
    return true;
  }

  // Rounding must not leave a multiplier a hair inside the box.
  double snap_to_box(double a) const {
    const double eps = 1e-12 * params_.c;
    if (a < eps) return 0.0;
    if (a > params_.c - eps) return params_.c;
    return a;
  }

  double objective() const {
    double linear = 0.0, quad = 0.0;
    for (std::size_t i = 0; i < n_; ++i) {
      linear += alpha_[i];
      quad += alpha_[i] * data_.y[i] * grad_[i];
    }
    return linear - 0.5 * quad;
  }

  std::vector<double>* trace_;
  const TrainingSet& data_;
  KernelParams params_;
  std::size_t n_;
  std::vector<double> k_;
  std::vector<double> alpha_;
  std::vector<double> grad_;  // sum_j alpha_j y_j K_ij
  double bias_ = 0.0;
  std::size_t updates_ = 0;
  Rng rng_;
};

}  // namespace detail

/// Solves the soft-margin RBF dual. On return every sample satisfies the KKT
/// conditions to within params.kkt_tol under the returned bias. When
/// objective_trace is given, the dual objective after every accepted
/// two-multiplier update is appended to it.
inline DualSolution solve_dual(const TrainingSet& data, const KernelParams& params, std::uint64_t seed,
                               std::vector<double>* objective_trace = nullptr) {
  params.validate();
  validate_training_set(data);
  return detail::SmoSolver(data, params, seed, objective_trace).run();
}

inline SvmModel make_model(const TrainingSet& data, const DualSolution& sol, const KernelParams& params,
                           std::string pos_class = "+1", std::string neg_class = "-1") {
  SvmModel m;
  m.bias = sol.bias;
  m.gamma = params.gamma;
  m.c = params.c;
  m.dim = data.x.front().size();
  m.pos_class = std::move(pos_class);
  m.neg_class = std::move(neg_class);
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (sol.alpha[i] <= 0.0) continue;
    m.support_x.push_back(data.x[i]);
    m.support_y.push_back(data.y[i]);
    m.alpha.push_back(sol.alpha[i]);
  }
  if (m.alpha.empty()) throw numeric_error("SMO produced no support vectors");
  return m;
}

inline SvmModel train_smo(const TrainingSet& data, const KernelParams& params, std::uint64_t seed,
                          std::string pos_class = "+1", std::string neg_class = "-1") {
  return make_model(data, solve_dual(data, params, seed), params, std::move(pos_class),
                    std::move(neg_class));
}

// ---------------------------------------------------------------------------
// One-vs-one over a set of classes

enum class PairMode {
  /// Every unordered pair of classes.
  AllPairs,
  /// Only the confusable pairs listed in a registry.
  Registry,
};

struct PairwiseModel {
  std::vector<std::string> classes;
  std::vector<SvmModel> models;
  PairMode mode = PairMode::AllPairs;
  double gamma = 1.0;
  double c = 1.0;

  std::size_t dim() const { return models.empty() ? 0 : models.front().dim; }

  std::size_t class_index(const std::string& name) const {
    const auto it = std::find(classes.begin(), classes.end(), name);
    if (it == classes.end()) throw data_error("unknown class '" + name + "'");
    return static_cast<std::size_t>(it - classes.begin());
  }

  const SvmModel* find(const std::string& a, const std::string& b) const {
    for (const auto& m : models)
      if ((m.pos_class == a && m.neg_class == b) || (m.pos_class == b && m.neg_class == a)) return &m;
    return nullptr;
  }
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

inline SvmModel train_one_pair(std::span<const LabeledFeatures> samples, const std::string& pos,
                               const std::string& neg, const KernelParams& params, std::uint64_t seed) {
  TrainingSet set;
  for (const auto& s : samples) {
    if (s.label == pos) {
      set.x.push_back(s.x);
      set.y.push_back(1);
    } else if (s.label == neg) {
      set.x.push_back(s.x);
      set.y.push_back(-1);
    }
  }
  if (std::find(set.y.begin(), set.y.end(), 1) == set.y.end())
    throw data_error("class '" + pos + "' has no training samples");
  if (std::find(set.y.begin(), set.y.end(), -1) == set.y.end())
    throw data_error("class '" + neg + "' has no training samples");
  try {
    return train_smo(set, params, seed, pos, neg);
  } catch (const Error& e) {
    throw Error(e.kind(), "pair " + pos + "/" + neg + ": " + e.what());
  }
}

}  // namespace detail

/// Trains the given (positive, negative) class pairs. Pair k uses a seed
/// derived from (seed, k), so each pair is independently reproducible.
inline PairwiseModel train_pairs(std::span<const LabeledFeatures> samples,
                                 std::span<const std::pair<std::string, std::string>> pairs,
                                 const std::vector<std::string>& classes, PairMode mode,
                                 const KernelParams& params, std::uint64_t seed) {
  params.validate();
  PairwiseModel pm;
  pm.classes = classes;
  pm.mode = mode;
  pm.gamma = params.gamma;
  pm.c = params.c;
  pm.models.reserve(pairs.size());
  for (std::size_t k = 0; k < pairs.size(); ++k)
    pm.models.push_back(detail::train_one_pair(samples, pairs[k].first, pairs[k].second, params,
                                               detail::splitmix64(seed ^ k)));
  return pm;
}

/// One model per unordered pair of `classes` (C(k,2) models), class i
/// positive against every later class j.
inline PairwiseModel train_pairwise(std::span<const LabeledFeatures> samples,
                                    const std::vector<std::string>& classes, const KernelParams& params,
                                    std::uint64_t seed) {
  if (classes.size() < 2) throw data_error("pairwise training needs at least 2 classes");
  std::vector<std::pair<std::string, std::string>> pairs;
  for (std::size_t i = 0; i < classes.size(); ++i)
    for (std::size_t j = i + 1; j < classes.size(); ++j) pairs.emplace_back(classes[i], classes[j]);
  return train_pairs(samples, pairs, classes, PairMode::AllPairs, params, seed);
}

/// Class order of first appearance.
inline std::vector<std::string> classes_of(std::span<const LabeledFeatures> samples) {
  std::vector<std::string> out;
  for (const auto& s : samples)
    if (std::find(out.begin(), out.end(), s.label) == out.end()) out.push_back(s.label);
  return out;
}

inline PairwiseModel train_pairwise(std::span<const LabeledFeatures> samples, const KernelParams& params,
                                    std::uint64_t seed) {
  return train_pairwise(samples, classes_of(samples), params, seed);
}

struct MulticlassPrediction {
  std::string label;
  std::vector<std::size_t> votes;  // aligned with PairwiseModel::classes
  std::vector<double> decisions;   // aligned with PairwiseModel::models
};

/// Majority vote over the pair models; ties go to the earliest class.
inline MulticlassPrediction predict_multiclass(const PairwiseModel& pm, std::span<const double> x) {
  if (pm.models.empty()) throw data_error("pairwise model has no pair models");
  MulticlassPrediction out;
  out.votes.assign(pm.classes.size(), 0);
  out.decisions.reserve(pm.models.size());
  for (const auto& m : pm.models) {
    const double f = decision(m, x);
    out.decisions.push_back(f);
    ++out.votes[pm.class_index(f >= 0.0 ? m.pos_class : m.neg_class)];
  }
  const auto best = std::max_element(out.votes.begin(), out.votes.end());  // first max
  out.label = pm.classes[static_cast<std::size_t>(best - out.votes.begin())];
  return out;
}

}  // namespace closematch
