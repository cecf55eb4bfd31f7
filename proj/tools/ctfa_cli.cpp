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

// Command-line front end: experiments, trajectory validation and a demo.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include "ctfa/bench.hpp"
#include "ctfa/errors.hpp"
#include "ctfa/kinematics.hpp"
#include "ctfa/orchestrator.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailed = 1;
constexpr int kExitConfig = 2;

std::optional<ctfa::Profile> parse_profile(const std::string& name) {
  if (name.empty()) return std::nullopt;
  if (name == "desk") return ctfa::Profile::desk;
  if (name == "full") return ctfa::Profile::full;
  throw ctfa::Error(ctfa::ErrorKind::config, "--profile must be desk or full");
}

void print_summary(const std::vector<ctfa::SummaryRow>& rows) {
  fmt::print("{:>5} {:>9} {:>5} {:>8} {:>12} {:>10} {:>9}\n", "point", "scheme", "runs",
             "median", "iqr", "gain%", "iters");
  for (const auto& s : rows) {
    fmt::print("{:>5} {:>9} {:>5} {:>8.4f} {:>5.3f}-{:<6.3f} {:>10.2f} {:>9.1f}\n", s.sweep_point,
               s.scheme, s.runs, s.median_bits, s.q1_bits, s.q3_bits, s.gain_percent,
               s.median_iterations);
  }
}

int cmd_run(const std::string& config_path, const std::string& profile, long long seed_offset,
            int workers, bool verbose) {
  ctfa::ExperimentSpec spec = ctfa::parse_config(config_path, parse_profile(profile));
  for (auto& s : spec.seeds) s = static_cast<std::uint64_t>(static_cast<long long>(s) + seed_offset);
  ctfa::RunControl control;
  control.workers = workers;
  if (verbose) {
    control.progress = [](const std::string& line) { std::fprintf(stderr, "%s\n", line.c_str()); };
  }
  const auto report = ctfa::run_experiment(spec, control);
  print_summary(report.summary);
  fmt::print("results written to {}\n", spec.output_dir);
  return report.any_failed ? kExitFailed : kExitOk;
}

int cmd_validate(const std::string& csv_path, const std::string& config_path,
                 const std::string& side_name) {
  const ctfa::Side side = side_name == "rx" ? ctfa::Side::rx : ctfa::Side::tx;
  ctfa::ScenarioConfig config;
  if (!config_path.empty()) config = ctfa::parse_config(config_path).scenario;
  std::ifstream in(csv_path);
  if (!in) throw ctfa::Error(ctfa::ErrorKind::io, fmt::format("cannot open {}", csv_path));
  const ctfa::TrajectoryPlan plan = ctfa::read_plan_csv(in, side, config.slot_len);
  if (config_path.empty()) {
    // Without a config, take the plan's own shape and the default limits.
    config.n_slots = plan.n_slots();
    (side == ctfa::Side::tx ? config.n_tx : config.n_rx) = plan.n_elements();
  }
  const auto violations = ctfa::validate(plan, config);
  for (const auto& v : violations) {
    fmt::print("{} element={} slot={} magnitude={}{}\n", ctfa::to_string(v.kind), v.element,
               v.slot, v.magnitude, v.other >= 0 ? fmt::format(" other={}", v.other) : "");
  }
  fmt::print("{}: {} violation(s)\n", csv_path, violations.size());
  return violations.empty() ? kExitOk : kExitFailed;
}

int cmd_demo(long long seed_offset, bool verbose) {
  ctfa::ScenarioConfig config;
  const auto seed = static_cast<std::uint64_t>(1 + seed_offset);
  const auto geometry = ctfa::sample_geometry(config, seed);
  ctfa::RunOptions options;
  options.progress = [verbose](const ctfa::HistoryEntry& e) {
    if (verbose) {
      std::fprintf(stderr, "%s\n",
                   nlohmann::json{{"iteration", e.iteration},
                                  {"h1", e.h1},
                                  {"throughput_bits", e.throughput_bits},
                                  {"elapsed_seconds", e.elapsed_seconds}}
                       .dump()
                       .c_str());
    } else {
      fmt::print("iter {:>3}  h1 {:>12.6f}  throughput {:.6f} bits/Hz  ({:.2f} s)\n", e.iteration,
                 e.h1, e.throughput_bits, e.elapsed_seconds);
    }
  };
  const auto proposed =
      ctfa::evaluate_scheme(ctfa::Scheme::proposed, config, geometry, options, seed);
  const auto fpa = ctfa::evaluate_scheme(ctfa::Scheme::fpa, config, geometry, {}, seed);
  fmt::print("proposed {:.6f} bits/Hz, fpa {:.6f} bits/Hz, gain {:.2f}%, {} iterations{}\n",
             proposed.throughput_bits, fpa.throughput_bits,
             100.0 * (proposed.throughput_bits - fpa.throughput_bits) / fpa.throughput_bits,
             proposed.outer_iterations, proposed.converged ? "" : " (not converged)");
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Joint trajectory and covariance optimization for moving-element MIMO arrays"};
  app.require_subcommand(1);
  long long seed_offset = 0;
  int workers = 1;
  std::string profile;
  bool verbose = false;
  app.add_option("--seed-offset", seed_offset, "Added to every seed");
  app.add_option("--workers", workers, "Parallel runs")->check(CLI::PositiveNumber);
  app.add_option("--profile", profile, "desk or full")->check(CLI::IsMember({"desk", "full"}));
  app.add_flag("--verbose", verbose, "Line-delimited JSON progress on stderr");
  app.fallthrough();

  std::string config_path;
  auto* run = app.add_subcommand("run", "Run an experiment from a JSON config");
  run->add_option("config", config_path, "Experiment config")->required();

  std::string csv_path;
  std::string validate_config;
  std::string side = "tx";
  auto* val = app.add_subcommand("validate", "Check a trajectory CSV against the limits");
  val->add_option("trajectory", csv_path, "Trajectory CSV")->required();
  val->add_option("--config", validate_config, "Experiment config supplying the limits");
  val->add_option("--side", side, "tx or rx")->check(CLI::IsMember({"tx", "rx"}));

  auto* demo = app.add_subcommand("demo", "Single 2x2 run with progress output");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (run->parsed()) return cmd_run(config_path, profile, seed_offset, workers, verbose);
    if (val->parsed()) return cmd_validate(csv_path, validate_config, side);
    if (demo->parsed()) return cmd_demo(seed_offset, verbose);
  } catch (const ctfa::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return e.kind() == ctfa::ErrorKind::config ? kExitConfig : kExitFailed;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitFailed;
  }
  return kExitOk;
}
