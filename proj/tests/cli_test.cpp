// Copyright 2026 The closematch Authors
// SPDX-License-Identifier: Apache-2.0

#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <fstream>
#include <sstream>
#include <string>

#include "cli_support.hpp"
#include "closematch/dataset.hpp"
#include "closematch/model_io.hpp"

using cli_support::quote;
using cli_support::slurp;
using cli_support::Workspace;
using Catch::Matchers::ContainsSubstring;
using Catch::Matchers::StartsWith;

namespace {

const std::string kData = CLOSEMATCH_DATA_DIR;

std::string synth_args(const Workspace& ws, const std::string& out, const std::string& extra = "") {
  return "synth --templates " + quote(kData + "/templates") + " --out " + quote(ws.path(out)) + " " + extra;
}

std::size_t count_lines(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

}  // namespace

TEST_CASE("synth writes count samples per class", "[cli]") {
  Workspace ws("cli_synth");
  const auto r = ws.run(synth_args(ws, "corpus", "--count 12"));
  REQUIRE(r.code == 0);
  std::size_t pgms = 0;
  for (const auto& e : std::filesystem::directory_iterator(ws.path("corpus"))) pgms += e.path().extension() == ".pgm";
  CHECK(pgms == 48);
  const auto manifest = slurp(ws.path("corpus/manifest.csv"));
  CHECK(count_lines(manifest) == 49);
  CHECK_THAT(manifest, StartsWith("path,label\n"));
}

TEST_CASE("synth reports a missing template directory", "[cli]") {
  Workspace ws("cli_missing");
  const auto r = ws.run("synth --templates " + quote(ws.path("nowhere")) + " --out " + quote(ws.path("c")));
  CHECK(r.code == 2);
  CHECK_THAT(r.err, ContainsSubstring("does not exist"));
}

TEST_CASE("usage errors exit 1", "[cli]") {
  Workspace ws("cli_usage");
  CHECK(ws.run("").code == 1);
  CHECK(ws.run("train").code == 1);
  CHECK(ws.run("frobnicate").code == 1);
  const auto r = ws.run(synth_args(ws, "c", "--n 0"));
  CHECK(r.code == 1);
}

TEST_CASE("help lists defaults", "[cli]") {
  Workspace ws("cli_help");
  const auto r = ws.run("synth --help");
  CHECK(r.code == 0);
  CHECK_THAT(r.out, ContainsSubstring("--flips") && ContainsSubstring("0.02"));
  const auto t = ws.run("train --help");
  CHECK_THAT(t.out, ContainsSubstring("--seed") && ContainsSubstring("42"));
}

TEST_CASE("train, evaluate and predict", "[cli]") {
  Workspace ws("cli_flow");
  REQUIRE(ws.run(synth_args(ws, "corpus", "--count 10")).code == 0);
  const auto manifest = quote(ws.path("corpus/manifest.csv"));
  const auto registry = quote(kData + "/registry.csv");

  const auto train = ws.run("train --manifest " + manifest + " --registry " + registry + " --model " +
                            quote(ws.path("model.json")));
  REQUIRE(train.code == 0);
  CHECK_THAT(train.out, ContainsSubstring("trained 2 pair model(s)"));
  const auto model = closematch::load_model(slurp(ws.path("model.json")));
  CHECK(model.model.models.size() == 2);
  CHECK(model.model.classes.size() == 4);

  const auto eval = ws.run("evaluate --manifest " + manifest + " --model " + quote(ws.path("model.json")) +
                           " --csv " + quote(ws.path("report.csv")));
  REQUIRE(eval.code == 0);
  CHECK_THAT(eval.out, StartsWith("Correct Character"));
  CHECK(count_lines(eval.out) == 3);
  const auto csv = slurp(ws.path("report.csv"));
  CHECK(count_lines(csv) == 3);
  // Each CSV row is five test samples of each class.
  CHECK_THAT(csv, ContainsSubstring("loop,loop_tail,"));
  CHECK_THAT(csv, ContainsSubstring("arch,arch_bar,"));

  const auto predict = ws.run("predict --model " + quote(ws.path("model.json")) + " " +
                              quote(ws.path("corpus/c00_0000.pgm")));
  REQUIRE(predict.code == 0);
  CHECK_THAT(predict.out, StartsWith("predicted: "));
  CHECK_THAT(predict.out, ContainsSubstring("votes:") && ContainsSubstring("decision "));

  const auto all = ws.run("train --all-pairs --manifest " + manifest + " --model " + quote(ws.path("all.json")));
  REQUIRE(all.code == 0);
  CHECK(closematch::load_model(slurp(ws.path("all.json"))).model.models.size() == 6);

  const auto featurize = ws.run("featurize --manifest " + manifest + " --m 4");
  REQUIRE(featurize.code == 0);
  CHECK(count_lines(featurize.out) == 40);
  const auto first = featurize.out.substr(0, featurize.out.find('\n'));
  CHECK(std::count(first.begin(), first.end(), ',') == 8);
}

TEST_CASE("predict on a blank image reports an empty glyph", "[cli]") {
  Workspace ws("cli_blank");
  REQUIRE(ws.run(synth_args(ws, "corpus", "--count 4")).code == 0);
  REQUIRE(ws.run("train --all-pairs --manifest " + quote(ws.path("corpus/manifest.csv")) + " --model " +
                 quote(ws.path("m.json")))
              .code == 0);
  closematch::GrayImage blank(4, 4, 255);
  std::ofstream(ws.path("blank.pgm")) << closematch::write_pgm(blank);
  const auto r = ws.run("predict --model " + quote(ws.path("m.json")) + " " + quote(ws.path("blank.pgm")));
  CHECK(r.code == 2);
  CHECK_THAT(r.err, ContainsSubstring("empty glyph"));
}

TEST_CASE("registry classes need at least two samples", "[cli]") {
  Workspace ws("cli_thin");
  REQUIRE(ws.run(synth_args(ws, "corpus", "--count 4")).code == 0);
  // Keep one loop_tail sample only.
  std::string manifest = "path,label\n";
  int tails = 0;
  std::istringstream in(slurp(ws.path("corpus/manifest.csv")));
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    if (line.ends_with(",loop_tail") && tails++ > 0) continue;
    manifest += line + "\n";
  }
  std::ofstream(ws.path("corpus/thin.csv")) << manifest;
  const auto r = ws.run("train --manifest " + quote(ws.path("corpus/thin.csv")) + " --registry " +
                        quote(kData + "/registry.csv") + " --model " + quote(ws.path("m.json")));
  CHECK(r.code == 2);
  CHECK_THAT(r.err, ContainsSubstring("loop_tail"));
}

TEST_CASE("reruns are byte-identical", "[cli]") {
  Workspace ws("cli_rerun");
  std::string models[2], reports[2];
  for (int k = 0; k < 2; ++k) {
    const std::string dir = "run" + std::to_string(k);
    REQUIRE(ws.run(synth_args(ws, dir, "--count 8 --seed 7")).code == 0);
    const auto manifest = quote(ws.path(dir + "/manifest.csv"));
    const auto model = quote(ws.path(dir + "/model.json"));
    REQUIRE(ws.run("train --all-pairs --seed 7 --manifest " + manifest + " --model " + model).code == 0);
    const auto e = ws.run("evaluate --manifest " + manifest + " --model " + model);
    REQUIRE(e.code == 0);
    models[k] = slurp(ws.path(dir + "/model.json"));
    reports[k] = e.out;
  }
  CHECK(models[0] == models[1]);
  CHECK(reports[0] == reports[1]);
}

TEST_CASE("evaluate rejects a corrupted model", "[cli]") {
  Workspace ws("cli_corrupt");
  REQUIRE(ws.run(synth_args(ws, "corpus", "--count 4")).code == 0);
  std::ofstream(ws.path("bad.json")) << "{\"format_version\": 1";
  const auto r = ws.run("evaluate --manifest " + quote(ws.path("corpus/manifest.csv")) + " --model " +
                        quote(ws.path("bad.json")));
  CHECK(r.code == 2);
  CHECK_THAT(r.err, ContainsSubstring("closematch evaluate"));
}
