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

#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "ctfa/channel.hpp"
#include "ctfa/orchestrator.hpp"

namespace ctfa {

enum class Profile { desk, full };

const char* to_string(Profile p);

/// Defaults tied to a profile: slot count and ensemble size.
int profile_slots(Profile p);
int profile_seed_count(Profile p);

/// Parameter grid. Axes left empty keep the scenario's value.
struct SweepSpec {
  std::vector<double> rician_k;
  std::vector<int> paths;
  std::vector<double> snr_db;

  bool operator==(const SweepSpec&) const = default;
};

struct ExperimentSpec {
  ScenarioConfig scenario;
  std::vector<Scheme> schemes;
  std::vector<std::uint64_t> seeds;
  std::optional<SweepSpec> sweep;
  std::string output_dir = "results";
  Profile profile = Profile::desk;
  StoppingRule rule;

  bool operator==(const ExperimentSpec&) const = default;
};

/// One resolved grid point with the scenario it produces.
struct SweepPoint {
  int index = 0;
  ScenarioConfig scenario;
  double snr_db = 0.0;
};

std::vector<SweepPoint> expand_sweep(const ExperimentSpec& spec);

struct ResultRow {
  std::string scheme;
  std::uint64_t seed = 0;
  int sweep_point = 0;
  double rician_k = 0.0;
  int paths = 0;
  double snr_db = 0.0;
  double throughput_bits = 0.0;
  int outer_iterations = 0;
  bool converged = false;
  double wall_seconds = 0.0;
  std::string status = "ok";  // ok | flagged | failed
  std::string note;
};

struct SummaryRow {
  int sweep_point = 0;
  double rician_k = 0.0;
  int paths = 0;
  double snr_db = 0.0;
  std::string scheme;
  int runs = 0;
  double median_bits = 0.0;
  double q1_bits = 0.0;
  double q3_bits = 0.0;
  double gain_percent = 0.0;
  double median_iterations = 0.0;
};

/// Parses a JSON experiment document. Absent keys take the defaults; an
/// explicit `profile_override` replaces the document's profile before
/// defaults are resolved. Throws Error(config) naming the offending key.
ExperimentSpec parse_config_text(const std::string& text,
                                 std::optional<Profile> profile_override = std::nullopt);
ExperimentSpec parse_config(const std::string& path,
                            std::optional<Profile> profile_override = std::nullopt);

/// JSON document with every field resolved, so parsing it gives back the
/// same spec.
std::string serialize_spec(const ExperimentSpec& spec);

/// Linear-interpolation quantile of unsorted data, p in [0, 1].
double quantile(std::vector<double> values, double p);

/// Median and interquartile throughput per (sweep point, scheme), with
/// gains against the fpa median. Failed rows are skipped. Throws
/// Error(summary) when a sweep point has no successful fpa row.
std::vector<SummaryRow> summarize(const std::vector<ResultRow>& rows);

struct JobInfo {
  int sweep_point = 0;
  std::uint64_t seed = 0;
};

struct RunControl {
  int workers = 1;
  bool write_artifacts = true;
  // Line-delimited JSON progress records, one call per line.
  std::function<void(const std::string&)> progress;
  // Invoked for every finished scheme run (serialized across workers).
  std::function<void(const JobInfo&, const SchemeResult&)> on_result;
};

struct ExperimentReport {
  std::vector<ResultRow> rows;
  std::vector<SummaryRow> summary;
  bool any_failed = false;
};

/// Runs every (sweep point, seed, scheme) and writes results.csv,
/// timing.csv, summary.csv and per-run artifacts under spec.output_dir.
ExperimentReport run_experiment(const ExperimentSpec& spec, const RunControl& control = {});

void write_results_csv(std::ostream& out, const std::vector<ResultRow>& rows);
void write_timing_csv(std::ostream& out, const std::vector<ResultRow>& rows);
void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& rows);
void write_convergence_csv(std::ostream& out, const std::vector<HistoryEntry>& history);

/// RFC 4180 field quoting.
std::string csv_field(const std::string& s);

}  // namespace ctfa
