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
#include <optional>
#include <string>
#include <vector>

#include "ctfa/channel.hpp"
#include "ctfa/kinematics.hpp"
#include "ctfa/ratecalc.hpp"
#include "ctfa/socp_solver.hpp"

namespace ctfa {

struct StoppingRule {
  double rel_tol = 1e-3;
  int max_outer = 100;
  // Each MM step moves an element only a small fraction of a wavelength,
  // so the inner loop needs a tight tolerance to make real progress.
  double inner_rel_tol = 1e-5;
  int max_inner = 100;

  /// Throws Error(config) for non-positive tolerances or counts.
  void check() const;

  bool operator==(const StoppingRule&) const = default;
};

/// One outer iteration: h1 (nats), throughput (bits) and time since start.
struct HistoryEntry {
  int iteration = 0;
  double h1 = 0.0;
  double throughput_bits = 0.0;
  double elapsed_seconds = 0.0;
};

/// Exact sum of tr(W_n E_n) over the inner MM iterations of one element.
struct InnerTrace {
  int outer_iteration = 0;
  Side side = Side::tx;
  int element = 0;
  std::vector<double> h2;
};

struct OptimizerState {
  TrajectoryPlan tx_plan;
  TrajectoryPlan rx_plan;
  CovarianceSchedule schedule;
  WmmseState wmmse;
  std::vector<HistoryEntry> history;
  std::vector<InnerTrace> inner_traces;
  std::vector<std::string> events;
  int outer_iterations = 0;
  bool converged = false;

  const TrajectoryPlan& plan(Side s) const { return s == Side::tx ? tx_plan : rx_plan; }
  TrajectoryPlan& plan(Side s) { return s == Side::tx ? tx_plan : rx_plan; }
};

struct RunOptions {
  StoppingRule rule;
  bool optimize_tx = true;
  bool optimize_rx = true;
  // Treat every slot's position as free (no motion model). Used for the
  // single-slot position search behind the second linear baseline.
  bool free_positions = false;
  SolverSettings solver;
  bool record_traces = true;
  // Called after each history entry is appended.
  std::function<void(const HistoryEntry&)> progress;
  // Called with the full state after each outer iteration.
  std::function<void(const OptimizerState&)> observer;
};

/// Channel for every slot of the given plans.
std::vector<ComplexMatrix> slot_channels(const ScenarioConfig& config,
                                         const ChannelGeometry& geometry,
                                         const TrajectoryPlan& tx_plan,
                                         const TrajectoryPlan& rx_plan);

/// Water-filled Q and closed-form U, W for every slot; refreshes the cached
/// objective. Zero-channel slots get Q = P / N_t I, U = 0, W = I.
void update_slot_blocks(OptimizerState& state, const ScenarioConfig& config,
                        const ChannelGeometry& geometry);

/// h1 = sum_n ln det W_n - tr(W_n E_n) at the state's current variables.
double evaluate_h1(const OptimizerState& state, const ScenarioConfig& config,
                   const ChannelGeometry& geometry);

/// Throughput in bits with the state's current schedule.
double state_throughput(const OptimizerState& state, const ScenarioConfig& config,
                        const ChannelGeometry& geometry);

/// Both arrays stationary at the UPA layout with slot blocks filled in.
OptimizerState initial_state(const ScenarioConfig& config, const ChannelGeometry& geometry);

/// MM loop for one element with every other block fixed. The element's
/// track in `state` is replaced by the last accepted iterate. Returns the
/// inner trace of exact h2 values.
InnerTrace optimize_element(Side side, int element, OptimizerState& state,
                            const ScenarioConfig& config, const ChannelGeometry& geometry,
                            const RunOptions& options, int outer_iteration = 0);

/// Alternating optimization from the initial state until the relative
/// increase of h1 drops below rule.rel_tol or max_outer is reached. The
/// returned schedule is water-filled on the final trajectories.
OptimizerState run(const ScenarioConfig& config, const ChannelGeometry& geometry,
                   const RunOptions& options = {});

enum class Scheme { proposed, t_ctfa, linear1, linear2, random, fpa };

const char* to_string(Scheme s);
std::optional<Scheme> scheme_from_string(const std::string& name);

struct SchemeResult {
  Scheme scheme = Scheme::fpa;
  double throughput_bits = 0.0;
  TrajectoryPlan tx_plan;
  TrajectoryPlan rx_plan;
  CovarianceSchedule schedule;
  std::vector<HistoryEntry> history;
  std::vector<InnerTrace> inner_traces;
  int outer_iterations = 0;
  bool converged = true;
  bool flagged = false;
  std::string note;
};

/// Water-filled throughput in bits for fixed plans.
double waterfilled_throughput(const ScenarioConfig& config, const ChannelGeometry& geometry,
                              const TrajectoryPlan& tx_plan, const TrajectoryPlan& rx_plan,
                              CovarianceSchedule* schedule = nullptr);

/// Runs one scheme. `options` supplies the stopping rule and callbacks for
/// the optimizing schemes; scheme-specific switches are set here. linear1
/// needs the proposed scheme's result; when `proposed` is null it is
/// computed here. `seed` drives the random baseline.
SchemeResult evaluate_scheme(Scheme scheme, const ScenarioConfig& config,
                             const ChannelGeometry& geometry, const RunOptions& options,
                             std::uint64_t seed, const SchemeResult* proposed = nullptr);

}  // namespace ctfa
