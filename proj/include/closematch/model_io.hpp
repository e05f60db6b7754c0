// Copyright 2026 The closematch Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "closematch/error.hpp"
#include "closematch/svm.hpp"

namespace closematch {

inline constexpr int kModelFormatVersion = 1;

/// A pairwise model plus the feature pipeline settings and split seed it was
/// trained with.
struct ModelFile {
  PairwiseModel model;
  std::size_t n = 32;
  std::size_t m = 16;
  std::uint64_t seed = 42;
  bool normalize_l2 = false;
};

namespace detail {

inline const char* mode_name(PairMode mode) { return mode == PairMode::AllPairs ? "all_pairs" : "registry"; }

inline double finite_real(const nlohmann::json& j, const std::string& where) {
  if (!j.is_number()) throw data_error("model: " + where + " must be a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw data_error("model: " + where + " is not finite");
  return v;
}

inline double real_field(const nlohmann::json& j, const char* key, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) throw data_error("model: missing field '" + where + key + "'");
  return finite_real(j.at(key), where + key);
}

template <typename T>
T field(const nlohmann::json& j, const char* key, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) throw data_error("model: missing field '" + where + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw data_error("model: field '" + where + key + "' has the wrong type");
  }
}

}  // namespace detail

/// JSON document; doubles use the shortest representation that round-trips.
inline std::string save_model(const ModelFile& file) {
  nlohmann::ordered_json doc;
  doc["format_version"] = kModelFormatVersion;
  doc["n"] = file.n;
  doc["m"] = file.m;
  doc["gamma"] = file.model.gamma;
  doc["c"] = file.model.c;
  doc["seed"] = file.seed;
  doc["normalize_l2"] = file.normalize_l2;
  doc["mode"] = detail::mode_name(file.model.mode);
  doc["classes"] = file.model.classes;
  auto& pairs = doc["pairs"] = nlohmann::ordered_json::array();
  for (const auto& m : file.model.models) {
    nlohmann::ordered_json p;
    p["pos_class"] = m.pos_class;
    p["neg_class"] = m.neg_class;
    p["bias"] = m.bias;
    auto& support = p["support"] = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < m.alpha.size(); ++i)
      support.push_back({{"y", m.support_y[i]}, {"alpha", m.alpha[i]}, {"x", m.support_x[i]}});
    pairs.push_back(std::move(p));
  }
  return doc.dump(1) + "\n";
}

/// Parses and validates a model document. Every stored invariant is checked:
/// version, class membership, pair coverage, label values, 0 < alpha <= C,
/// the dual equality constraint, dimensions and finiteness.
inline ModelFile load_model(std::string_view text) {
  nlohmann::json doc;
  if (text.empty()) throw data_error("model: empty document");
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw data_error(std::string("model: invalid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw data_error("model: document must be an object");
  const int version = detail::field<int>(doc, "format_version", "");
  if (version != kModelFormatVersion)
    throw data_error("model: unsupported format_version " + std::to_string(version));

  ModelFile file;
  file.n = detail::field<std::size_t>(doc, "n", "");
  file.m = detail::field<std::size_t>(doc, "m", "");
  file.seed = detail::field<std::uint64_t>(doc, "seed", "");
  file.normalize_l2 = detail::field<bool>(doc, "normalize_l2", "");
  if (file.m == 0 || file.m > file.n) throw data_error("model: requires 1 <= m <= n");

  auto& pm = file.model;
  pm.gamma = detail::real_field(doc, "gamma", "");
  pm.c = detail::real_field(doc, "c", "");
  if (pm.gamma <= 0.0 || pm.c <= 0.0) throw data_error("model: gamma and c must be positive");

  const auto mode = detail::field<std::string>(doc, "mode", "");
  if (mode == "all_pairs") pm.mode = PairMode::AllPairs;
  else if (mode == "registry") pm.mode = PairMode::Registry;
  else throw data_error("model: unknown mode '" + mode + "'");

  pm.classes = detail::field<std::vector<std::string>>(doc, "classes", "");
  if (pm.classes.size() < 2) throw data_error("model: at least 2 classes required");
  if (std::set<std::string>(pm.classes.begin(), pm.classes.end()).size() != pm.classes.size())
    throw data_error("model: duplicate class names");

  const std::size_t dim = 2 * file.m;
  if (!doc.contains("pairs") || !doc["pairs"].is_array() || doc["pairs"].empty())
    throw data_error("model: 'pairs' must be a non-empty array");
  std::set<std::pair<std::string, std::string>> seen;
  std::size_t index = 0;
  for (const auto& p : doc["pairs"]) {
    const std::string where = "pairs[" + std::to_string(index++) + "].";
    SvmModel m;
    m.pos_class = detail::field<std::string>(p, "pos_class", where);
    m.neg_class = detail::field<std::string>(p, "neg_class", where);
    m.bias = detail::real_field(p, "bias", where);
    m.gamma = pm.gamma;
    m.c = pm.c;
    m.dim = dim;
    pm.class_index(m.pos_class);
    pm.class_index(m.neg_class);
    if (m.pos_class == m.neg_class) throw data_error("model: " + where + " pairs a class with itself");
    const auto key = std::minmax(m.pos_class, m.neg_class);
    if (!seen.emplace(key.first, key.second).second)
      throw data_error("model: duplicate pair " + m.pos_class + "/" + m.neg_class);

    if (!p.contains("support") || !p["support"].is_array() || p["support"].empty())
      throw data_error("model: " + where + "support must be a non-empty array");
    double balance = 0.0;
    for (const auto& sv : p["support"]) {
      const int y = detail::field<int>(sv, "y", where + "support.");
      if (y != 1 && y != -1) throw data_error("model: " + where + "support label must be -1 or +1");
      const double a = detail::real_field(sv, "alpha", where);
      if (!(a > 0.0) || a > pm.c)
        throw data_error("model: " + where + "alpha " + std::to_string(a) + " outside (0, C]");
      if (!sv.contains("x") || !sv["x"].is_array() || sv["x"].size() != dim)
        throw data_error("model: " + where + "support vector must have " + std::to_string(dim) + " values");
      std::vector<double> x;
      x.reserve(dim);
      for (const auto& v : sv["x"]) x.push_back(detail::finite_real(v, where + "x"));
      m.support_x.push_back(std::move(x));
      m.support_y.push_back(y);
      m.alpha.push_back(a);
      balance += a * y;
    }
    if (std::abs(balance) > 1e-6)
      throw data_error("model: " + where + "violates sum(alpha*y) = 0 (" + std::to_string(balance) + ")");
    pm.models.push_back(std::move(m));
  }

  if (pm.mode == PairMode::AllPairs) {
    const std::size_t k = pm.classes.size();
    if (pm.models.size() != k * (k - 1) / 2)
      throw data_error("model: all_pairs mode requires one model per class pair");
  }
  return file;
}

}  // namespace closematch
