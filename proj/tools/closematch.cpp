// Copyright 2026 The closematch Authors
// SPDX-License-Identifier: Apache-2.0

// closematch: synthesize glyph corpora, extract projection-spectrum features,
// train pairwise RBF SVMs and report per-pair sensitivity/specificity/accuracy.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "closematch/closematch.hpp"

namespace cm = closematch;

namespace {

struct CommonOptions {
  cm::RunConfig run;
  std::string manifest;
  std::string registry;
  std::string model;
  std::string csv;
};

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw cm::data_error("cannot write '" + path + "'");
  out << text;
  if (!out) throw cm::data_error("write to '" + path + "' failed");
}

std::string read_text(const std::string& path) {
  const auto bytes = cm::read_file_bytes(path);
  return {bytes.begin(), bytes.end()};
}

double accuracy_on(const cm::SvmModel& model, const std::vector<cm::LabeledFeatures>& samples) {
  std::size_t hits = 0;
  for (const auto& s : samples) hits += cm::predict_pair(model, s.x) == s.label;
  return samples.empty() ? 0.0 : 100.0 * static_cast<double>(hits) / static_cast<double>(samples.size());
}

std::vector<double> parse_sweep(const std::string& spec) {
  const std::string prefix = "gamma=";
  if (spec.rfind(prefix, 0) != 0) throw cm::usage_error("--sweep expects 'gamma=a,b,c'");
  std::vector<double> out;
  std::stringstream in(spec.substr(prefix.size()));
  std::string tok;
  while (std::getline(in, tok, ',')) {
    try {
      std::size_t used = 0;
      const double g = std::stod(tok, &used);
      if (used != tok.size() || !(g > 0.0)) throw std::invalid_argument(tok);
      out.push_back(g);
    } catch (const std::exception&) {
      throw cm::usage_error("--sweep: invalid gamma '" + tok + "'");
    }
  }
  if (out.empty()) throw cm::usage_error("--sweep: no gamma values");
  return out;
}

// ---------------------------------------------------------------------------

struct SynthOptions {
  std::string templates;
  std::string out;
  cm::SynthParams params{0.02, 2, 0.0, 24, 42, 32};
};

int run_synth(const SynthOptions& o) {
  const auto templates = cm::load_templates(o.templates);
  const auto samples = cm::synth_generate(templates, o.params);
  cm::write_corpus(samples, o.out);
  std::cout << "wrote " << samples.size() << " samples (" << templates.size() << " classes) to "
            << (std::filesystem::path(o.out) / "manifest.csv").string() << '\n';
  return 0;
}

int run_featurize(const CommonOptions& o, const std::string& out_path) {
  o.run.validate();
  const auto samples = cm::load_manifest(o.manifest);
  const auto feats = cm::featurize(samples, o.run.n, o.run.features());
  std::ostringstream out;
  for (const auto& f : feats) {
    out << f.label;
    char buf[40];
    for (double v : f.x) {
      std::snprintf(buf, sizeof buf, ",%.17g", v);
      out << buf;
    }
    out << '\n';
  }
  if (out_path.empty() || out_path == "-") std::cout << out.str();
  else write_text(out_path, out.str());
  return 0;
}

struct TrainExtras {
  bool all_pairs = false;
  std::string sweep;
};

struct PreparedData {
  std::vector<cm::LabeledFeatures> train;
  std::vector<cm::LabeledFeatures> test;
};

PreparedData prepare(const std::string& manifest, std::size_t n, const cm::FeatureOptions& fo,
                     std::uint64_t seed) {
  const auto feats = cm::featurize(cm::load_manifest(manifest), n, fo);
  auto split = cm::split_even(feats, seed, [](const cm::LabeledFeatures& s) -> const std::string& { return s.label; });
  return {std::move(split.train), std::move(split.test)};
}

void require_classes(const std::vector<std::string>& classes, const std::vector<cm::LabeledFeatures>& data) {
  for (const auto& cls : classes) {
    const bool present = std::any_of(data.begin(), data.end(), [&](const auto& s) { return s.label == cls; });
    if (!present) throw cm::data_error("class '" + cls + "' has no samples in the manifest");
  }
}

cm::PairwiseModel train_model(const CommonOptions& o, const TrainExtras& x, const cm::KernelParams& kp,
                              const std::vector<cm::LabeledFeatures>& train) {
  if (x.all_pairs) {
    const auto classes = cm::classes_of(train);
    return cm::train_pairwise(train, classes, kp, o.run.seed);
  }
  const auto registry = cm::load_registry(o.registry);
  const auto classes = registry.classes();
  require_classes(classes, train);
  return cm::train_pairs(train, registry.pairs, classes, cm::PairMode::Registry, kp, o.run.seed);
}

int run_train(const CommonOptions& o, const TrainExtras& x) {
  o.run.validate();
  if (!x.all_pairs && o.registry.empty()) throw cm::usage_error("train: --registry is required (or --all-pairs)");
  if (x.sweep.empty() && o.model.empty()) throw cm::usage_error("train: --model is required");
  const auto data = prepare(o.manifest, o.run.n, o.run.features(), o.run.seed);

  if (!x.sweep.empty()) {
    // Diagnostic only: no model is written.
    std::cout << "gamma,mean_train_accuracy,mean_heldout_accuracy\n";
    for (double g : parse_sweep(x.sweep)) {
      auto kp = o.run.kernel();
      kp.gamma = g;
      const auto pm = train_model(o, x, kp, data.train);
      double tr = 0, te = 0;
      for (const auto& m : pm.models) {
        tr += accuracy_on(m, cm::select_pair(data.train, m.pos_class, m.neg_class));
        te += accuracy_on(m, cm::select_pair(data.test, m.pos_class, m.neg_class));
      }
      const double k = static_cast<double>(pm.models.size());
      std::cout << g << ',' << cm::format_percent(tr / k) << ',' << cm::format_percent(te / k) << '\n';
    }
    return 0;
  }

  cm::ModelFile file;
  file.model = train_model(o, x, o.run.kernel(), data.train);
  file.n = o.run.n;
  file.m = o.run.resolved_m();
  file.seed = o.run.seed;
  file.normalize_l2 = o.run.normalize_l2;
  write_text(o.model, cm::save_model(file));

  std::cout << "trained " << file.model.models.size() << " pair model(s), gamma=" << file.model.gamma
            << " C=" << file.model.c << " n=" << file.n << " m=" << file.m << '\n';
  for (const auto& m : file.model.models) {
    const auto subset = cm::select_pair(data.train, m.pos_class, m.neg_class);
    std::cout << m.pos_class << '/' << m.neg_class << ": train accuracy "
              << cm::format_percent(accuracy_on(m, subset)) << "% (" << subset.size() << " samples, "
              << m.alpha.size() << " support vectors)\n";
  }
  std::cout << "model written to " << o.model << '\n';
  return 0;
}

int run_evaluate(const CommonOptions& o) {
  const auto file = cm::load_model(read_text(o.model));
  const auto data = prepare(o.manifest, file.n, {file.m, file.normalize_l2}, file.seed);
  require_classes(file.model.classes, data.test);

  std::vector<cm::ReportRow> rows;
  for (const auto& m : file.model.models) {
    if (m.dim != data.test.front().x.size())
      throw cm::data_error("model dimension " + std::to_string(m.dim) + " does not match feature dimension " +
                           std::to_string(data.test.front().x.size()));
    const auto subset = cm::select_pair(data.test, m.pos_class, m.neg_class);
    const auto counts = cm::evaluate_pair(m, subset, m.pos_class);
    rows.push_back({m.pos_class, m.neg_class, counts, cm::metrics(counts)});
  }
  std::cout << cm::report_table(rows);
  if (!o.csv.empty()) write_text(o.csv, cm::report_csv(rows));
  return 0;
}

int run_predict(const CommonOptions& o, const std::string& image_path) {
  const auto file = cm::load_model(read_text(o.model));
  const auto glyph = cm::normalize_glyph(cm::load_pgm_file(image_path), file.n);
  const auto x = cm::extract_features(glyph, {file.m, file.normalize_l2});
  const auto pred = cm::predict_multiclass(file.model, x.values);

  std::cout << "predicted: " << pred.label << '\n';
  std::cout << "votes:";
  for (std::size_t i = 0; i < file.model.classes.size(); ++i)
    std::cout << ' ' << file.model.classes[i] << '=' << pred.votes[i];
  std::cout << '\n';
  char buf[40];
  for (std::size_t i = 0; i < file.model.models.size(); ++i) {
    const auto& m = file.model.models[i];
    std::snprintf(buf, sizeof buf, "%.17g", pred.decisions[i]);
    std::cout << "decision " << m.pos_class << '/' << m.neg_class << ": " << buf << '\n';
  }
  return 0;
}

void add_common(CLI::App* cmd, cm::RunConfig& o, bool hyper) {
  cmd->add_option("--n", o.n, "Normalized glyph side N");
  cmd->add_option("--m", o.m, "Spectral coefficients kept per axis (0 = N/2)");
  cmd->add_flag("--normalize-l2,!--no-normalize-l2", o.normalize_l2, "Scale each feature vector to unit L2 norm");
  if (!hyper) return;
  cmd->add_option("--gamma", o.gamma, "RBF width (0 = 1/(2m))");
  cmd->add_option("--c", o.c, "SVM box constraint C");
  cmd->add_option("--seed", o.seed, "Split and solver seed");
  cmd->add_option("--kkt-tol", o.kkt_tol, "SMO KKT tolerance");
  cmd->add_option("--max-passes", o.max_passes, "Simplified-SMO sweeps without progress before the finishing phase");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Close-matching glyph classifier: projection-histogram spectra + RBF SVM"};
  app.option_defaults()->always_capture_default();
  app.set_config("--config", "", "Optional config file (INI/TOML; command-line flags win)");
  app.require_subcommand(1);

  CommonOptions common;
  SynthOptions synth;
  TrainExtras extras;
  std::string featurize_out = "-";
  std::string image_path;

  auto* synth_cmd = app.add_subcommand("synth", "Generate a perturbed synthetic corpus from template glyphs");
  synth_cmd->add_option("--templates", synth.templates, "Directory of template .pgm files (stem = class)")
      ->required();
  synth_cmd->add_option("--out", synth.out, "Output directory for PGMs and manifest.csv")->required();
  synth_cmd->add_option("--count", synth.params.count, "Samples per class");
  synth_cmd->add_option("--flips", synth.params.flips, "Per-pixel flip probability");
  synth_cmd->add_option("--max-shift", synth.params.max_shift, "Maximum translation in pixels");
  synth_cmd->add_option("--scale-jitter", synth.params.scale_jitter, "Relative scale perturbation in [0, 0.5]");
  synth_cmd->add_option("--n", synth.params.n, "Normalized glyph side N");
  synth_cmd->add_option("--seed", synth.params.seed, "Generator seed");

  auto* feat_cmd = app.add_subcommand("featurize", "Write 'label,f_1,...,f_2M' rows for a manifest");
  feat_cmd->add_option("--manifest", common.manifest, "Manifest CSV (path,label)")->required();
  feat_cmd->add_option("--out", featurize_out, "Output file ('-' = standard output)");
  add_common(feat_cmd, common.run, false);

  auto* train_cmd = app.add_subcommand("train", "Split the corpus and train one SVM per registry pair");
  train_cmd->add_option("--manifest", common.manifest, "Manifest CSV (path,label)")->required();
  train_cmd->add_option("--registry", common.registry, "Pair registry CSV (correct_class,error_class)");
  train_cmd->add_option("--model", common.model, "Output model file");
  train_cmd->add_flag("--all-pairs", extras.all_pairs, "Train every class pair instead of registry pairs");
  train_cmd->add_option("--sweep", extras.sweep, "Compare gammas, e.g. gamma=0.01,0.03,0.1 (writes no model)");
  add_common(train_cmd, common.run, true);

  auto* eval_cmd = app.add_subcommand("evaluate", "Score the held-out half and print the per-pair table");
  eval_cmd->add_option("--manifest", common.manifest, "Manifest CSV used for training")->required();
  eval_cmd->add_option("--model", common.model, "Model file")->required();
  eval_cmd->add_option("--csv", common.csv, "Also write counts and metrics as CSV");

  auto* predict_cmd = app.add_subcommand("predict", "Classify one glyph image");
  predict_cmd->add_option("--model", common.model, "Model file")->required();
  predict_cmd->add_option("image", image_path, "PGM image")->required();

  std::string stage = "closematch";
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "closematch: usage error: " << e.what() << '\n';
    return 1;
  }

  try {
    if (*synth_cmd) {
      stage = "synth";
      return run_synth(synth);
    }
    if (*feat_cmd) {
      stage = "featurize";
      return run_featurize(common, featurize_out);
    }
    if (*train_cmd) {
      stage = "train";
      return run_train(common, extras);
    }
    if (*eval_cmd) {
      stage = "evaluate";
      return run_evaluate(common);
    }
    if (*predict_cmd) {
      stage = "predict";
      return run_predict(common, image_path);
    }
  } catch (const cm::Error& e) {
    std::cerr << "closematch " << stage << ": " << e.what() << '\n';
    return static_cast<int>(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "closematch " << stage << ": " << e.what() << '\n';
    return static_cast<int>(cm::ErrorKind::Data);
  }
  return 1;
}
