// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------
#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "ctfa/bench.hpp"
#include "ctfa/errors.hpp"

namespace ctfa {
namespace {

namespace fs = std::filesystem;

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no ctfa::Error thrown";
  return ErrorKind::contract_violation;
}

std::string message_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.what();
  }
  return {};
}

fs::path scratch_dir(const std::string& name) {
  const fs::path p = fs::path(testing::TempDir()) / ("ctfa_bench_" + name);
  fs::remove_all(p);
  return p;
}

ResultRow row(const std::string& scheme, double bits, int point = 0, const std::string& status = "ok") {
  ResultRow r;
  r.scheme = scheme;
  r.throughput_bits = bits;
  r.sweep_point = point;
  r.status = status;
  r.outer_iterations = 3;
  return r;
}

TEST(ParseConfig, EmptyDocumentTakesDeskDefaults) {
  const ExperimentSpec s = parse_config_text("{}");
  EXPECT_EQ(s.profile, Profile::desk);
  EXPECT_EQ(s.scenario.n_slots, 50);
  EXPECT_EQ(s.seeds.size(), 20u);
  EXPECT_EQ(s.seeds.front(), 1u);
  EXPECT_EQ(s.schemes.size(), 6u);
  EXPECT_EQ(s.rule, StoppingRule{});
  EXPECT_NEAR(s.scenario.power / s.scenario.noise_var, 10.0, 1e-12);
  EXPECT_EQ(parse_config_text("  \n"), s);
}

TEST(ParseConfig, ProfileOverrideResolvesDefaults) {
  const ExperimentSpec s = parse_config_text(R"({"profile": "desk"})", Profile::full);
  EXPECT_EQ(s.profile, Profile::full);
  EXPECT_EQ(s.scenario.n_slots, 200);
  EXPECT_EQ(s.seeds.size(), 50u);
}

TEST(ParseConfig, ExplicitValuesWin) {
  const ExperimentSpec s = parse_config_text(
      R"({"scenario": {"n_tx": 4, "n_rx": 4, "snr_db": 20, "n_slots": 7},
          "schemes": ["proposed", "fpa"], "n_seeds": 3, "rule": {"max_outer": 5}})");
  EXPECT_EQ(s.scenario.n_tx, 4);
  EXPECT_EQ(s.scenario.n_slots, 7);
  EXPECT_NEAR(s.scenario.power, 100.0, 1e-9);
  EXPECT_EQ(s.schemes, (std::vector<Scheme>{Scheme::proposed, Scheme::fpa}));
  EXPECT_EQ(s.seeds, (std::vector<std::uint64_t>{1, 2, 3}));
  EXPECT_EQ(s.rule.max_outer, 5);
}

TEST(ParseConfig, RejectsBadDocuments) {
  EXPECT_EQ(kind_of([] { parse_config_text(R"({"scenario": {"n_tx": 0}})"); }), ErrorKind::config);
  EXPECT_NE(message_of([] { parse_config_text(R"({"scenario": {"n_tx": 0}})"); }).find("n_tx"), std::string::npos);
  EXPECT_NE(message_of([] { parse_config_text(R"({"bogus": 1})"); }).find("bogus"), std::string::npos);
  EXPECT_NE(message_of([] { parse_config_text(R"({"scenario": {"nt": 2}})"); }).find("nt"), std::string::npos);
  EXPECT_EQ(kind_of([] { parse_config_text(R"({"schemes": ["proposed"]})"); }), ErrorKind::config);
  EXPECT_EQ(kind_of([] { parse_config_text(R"({"schemes": ["fpa", "warp"]})"); }), ErrorKind::config);
  EXPECT_EQ(kind_of([] { parse_config_text(R"({"seeds": [1, 1]})"); }), ErrorKind::config);
  EXPECT_EQ(kind_of([] { parse_config_text(R"({"seeds": [1], "n_seeds": 2})"); }), ErrorKind::config);
  EXPECT_EQ(kind_of([] { parse_config_text(R"({"sweep": {"snr_db": []}})"); }), ErrorKind::config);
  EXPECT_EQ(kind_of([] { parse_config_text("{not json"); }), ErrorKind::config);
  EXPECT_EQ(kind_of([] { parse_config_text(R"({"profile": "huge"})"); }), ErrorKind::config);
}

TEST(ParseConfig, ShippedConfigsParse) {
  int count = 0;
  for (const auto& entry : fs::directory_iterator(fs::path(CTFA_SOURCE_DIR) / "configs")) {
    if (entry.path().extension() != ".json") continue;
    ++count;
    EXPECT_NO_THROW(parse_config(entry.path().string())) << entry.path();
  }
  EXPECT_GE(count, 1);
}

TEST(ParseConfig, MissingFileIsReported) {
  EXPECT_THROW(parse_config((scratch_dir("missing") / "none.json").string()), Error);
}

TEST(SerializeSpec, RoundTrips) {
  const ExperimentSpec s = parse_config_text(
      R"({"scenario": {"n_tx": 3, "rician_k": 2.5, "v_max": 0.02},
          "schemes": ["fpa", "random"], "seeds": [4, 9],
          "sweep": {"rician_k": [0, 10], "snr_db": [5]},
          "output_dir": "out/x", "profile": "full", "rule": {"rel_tol": 1e-4}})");
  EXPECT_EQ(parse_config_text(serialize_spec(s)), s);
  const ExperimentSpec d = parse_config_text("{}");
  EXPECT_EQ(parse_config_text(serialize_spec(d)), d);
}

TEST(ExpandSweep, CartesianProductInOrder) {
  const ExperimentSpec s =
      parse_config_text(R"({"sweep": {"rician_k": [0, 5], "paths": [3], "snr_db": [0, 10, 20]}})");
  const auto pts = expand_sweep(s);
  ASSERT_EQ(pts.size(), 6u);
  EXPECT_EQ(pts[4].index, 4);
  EXPECT_EQ(pts[4].scenario.rician_k, 5.0);
  EXPECT_EQ(pts[4].scenario.l_rx, 3);
  EXPECT_EQ(pts[4].snr_db, 10.0);
  EXPECT_NEAR(pts[5].scenario.power, 100.0 * s.scenario.noise_var, 1e-9);
  EXPECT_EQ(expand_sweep(parse_config_text("{}")).size(), 1u);
}

TEST(Quantile, Examples) {
  EXPECT_EQ(quantile({3, 1, 2, 5, 4}, 0.5), 3.0);
  EXPECT_EQ(quantile({1, 2, 3, 4}, 0.5), 2.5);
  EXPECT_EQ(quantile({1, 2, 3, 4}, 0.25), 1.75);
  EXPECT_EQ(quantile({7}, 0.75), 7.0);
  EXPECT_EQ(kind_of([] { quantile({}, 0.5); }), ErrorKind::summary);
}

// Independent oracle: the p-quantile is where the piecewise-linear
// interpolant through (i / (n - 1), x_(i)) takes the value p.
TEST(Quantile, MatchesInterpolantOracle) {
  std::mt19937_64 rng(81);
  std::uniform_real_distribution<double> u(-5, 5);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> x(2 + trial % 9);
    for (auto& v : x) v = u(rng);
    std::vector<double> sorted = x;
    std::sort(sorted.begin(), sorted.end());
    const double p = std::uniform_real_distribution<double>(0, 1)(rng);
    const double n1 = static_cast<double>(sorted.size() - 1);
    double expected = sorted.back();
    for (std::size_t i = 0; i + 1 < sorted.size(); ++i) {
      const double a = static_cast<double>(i) / n1, b = static_cast<double>(i + 1) / n1;
      if (p >= a && p <= b) {
        expected = sorted[i] + (p - a) / (b - a) * (sorted[i + 1] - sorted[i]);
        break;
      }
    }
    EXPECT_NEAR(quantile(x, p), expected, 1e-12);
    EXPECT_EQ(quantile(x, 0.0), sorted.front());
    EXPECT_EQ(quantile(x, 1.0), sorted.back());
  }
}

TEST(Summarize, GainsAgainstFixedMedian) {
  const std::vector<ResultRow> rows = {row("fpa", 2.0), row("fpa", 4.0), row("fpa", 3.0),
                                       row("proposed", 3.3), row("proposed", 3.9), row("proposed", 3.6),
                                       row("proposed", 100.0, 0, "failed")};
  const auto s = summarize(rows);
  ASSERT_EQ(s.size(), 2u);
  EXPECT_EQ(s[0].scheme, "fpa");
  EXPECT_EQ(s[0].gain_percent, 0.0);
  EXPECT_EQ(s[1].scheme, "proposed");
  EXPECT_EQ(s[1].runs, 3);
  EXPECT_NEAR(s[1].median_bits, 3.6, 1e-12);
  EXPECT_NEAR(s[1].q1_bits, 3.45, 1e-12);
  EXPECT_NEAR(s[1].q3_bits, 3.75, 1e-12);
  EXPECT_NEAR(s[1].gain_percent, 20.0, 1e-9);
  EXPECT_EQ(s[1].median_iterations, 3.0);
}

TEST(Summarize, PointWithoutFixedReferenceFails) {
  EXPECT_EQ(kind_of([] { summarize({row("fpa", 1.0, 0), row("proposed", 1.0, 1)}); }), ErrorKind::summary);
  EXPECT_EQ(kind_of([] { summarize({row("fpa", 1.0, 0, "failed")}); }), ErrorKind::summary);
}

TEST(CsvField, QuotesOnlyWhenNeeded) {
  EXPECT_EQ(csv_field("plain"), "plain");
  EXPECT_EQ(csv_field("a,b"), "\"a,b\"");
  EXPECT_EQ(csv_field("say \"hi\""), "\"say \"\"hi\"\"\"");
  EXPECT_EQ(csv_field("two\nlines"), "\"two\nlines\"");
  EXPECT_EQ(csv_field(""), "");
}

ExperimentSpec tiny_spec(const fs::path& dir, const std::string& schemes) {
  return parse_config_text(R"({"scenario": {"n_slots": 5}, "schemes": )" + schemes +
                           R"(, "seeds": [1, 2, 3], "output_dir": ")" + dir.string() + "\"}");
}

TEST(RunExperiment, FixedOnlyHasZeroGainAndWritesTables) {
  const fs::path dir = scratch_dir("fpa_only");
  const auto report = run_experiment(tiny_spec(dir, R"(["fpa"])"));
  ASSERT_EQ(report.rows.size(), 3u);
  EXPECT_FALSE(report.any_failed);
  ASSERT_EQ(report.summary.size(), 1u);
  EXPECT_EQ(report.summary[0].gain_percent, 0.0);
  for (const char* f : {"results.csv", "timing.csv", "summary.csv", "geometry_1.json",
                        "traj_fpa_2_tx.csv", "conv_fpa_3.csv"}) {
    EXPECT_TRUE(fs::exists(dir / f)) << f;
  }
  std::ifstream in(dir / "results.csv");
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header.rfind("scheme,seed,sweep_point", 0), 0u);
}

TEST(RunExperiment, RepeatRunsAgreeAndWorkersDoNotReorder) {
  const fs::path dir = scratch_dir("repeat");
  const auto spec = tiny_spec(dir, R"(["random", "fpa"])");
  const auto a = run_experiment(spec);
  RunControl parallel;
  parallel.workers = 3;
  std::vector<std::string> lines;
  parallel.progress = [&](const std::string& l) { lines.push_back(l); };
  const auto b = run_experiment(spec, parallel);
  ASSERT_EQ(a.rows.size(), b.rows.size());
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    EXPECT_EQ(a.rows[i].scheme, b.rows[i].scheme);
    EXPECT_EQ(a.rows[i].seed, b.rows[i].seed);
    EXPECT_EQ(a.rows[i].throughput_bits, b.rows[i].throughput_bits);
  }
  EXPECT_EQ(lines.size(), 6u);
}

}  // namespace
}  // namespace ctfa
