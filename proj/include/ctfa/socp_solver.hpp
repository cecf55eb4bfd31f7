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

#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "ctfa/channel.hpp"
#include "ctfa/kinematics.hpp"
#include "ctfa/mm_surrogate.hpp"
#include "ctfa/numerics.hpp"

namespace ctfa {

/// One element's convex trajectory subproblem over slots 0..N:
///   min sum_n curvature_n / 2 ||q_n||^2 + linear_n^T q_n
/// subject to the motion recursion from (start_pos, start_vel), the box
/// [box_lo, box_hi]^2, speed and acceleration caps and per-slot
/// half-spaces. Slot 0 is fixed at start_pos unless free_positions is set,
/// in which case every slot's position is an independent variable and the
/// caps and recursion are dropped.
struct TrajectorySubproblem {
  int n_slots = 0;
  double slot_len = 0.0;
  Position2D start_pos = Position2D::Zero();
  Vec2 start_vel = Vec2::Zero();
  std::vector<double> curvature;
  std::vector<Vec2> linear;
  double box_lo = 0.0;
  double box_hi = 0.0;
  double v_cap = 0.0;
  double a_cap = 0.0;
  std::vector<std::vector<HalfSpace>> half_spaces;
  bool free_positions = false;
};

enum class SolverStatus { optimal, max_iter, numerical_failure };

const char* to_string(SolverStatus s);

struct SubproblemSolution {
  std::vector<Vec2> accelerations;  // length N (empty in free mode)
  ElementTrack track;               // implied positions and velocities
  double objective_value = 0.0;
  SolverStatus status = SolverStatus::optimal;
  double kkt_residual = 0.0;
  int newton_steps = 0;
  bool kept_warm_start = false;
};

struct SolverSettings {
  double mu_initial = 1.0;
  double mu_factor = 0.2;
  double mu_final = 1e-9;
  int max_newton_steps = 200;
  double kkt_tolerance = 1e-7;
  // Separation half-spaces are enforced at min_sep minus this amount so
  // that iterates sitting exactly at distance D stay interior.
  double separation_slack = 5e-7;
};

/// Assembles the subproblem from per-slot surrogates (length N + 1) and
/// per-slot half-spaces. Throws infeasible_warm_start if the fixed start
/// position violates a slot-0 half-space by more than 1e-6.
TrajectorySubproblem build_subproblem(std::span<const SlotSurrogate> surrogates,
                                      const Position2D& start_pos, const Vec2& start_vel,
                                      std::vector<std::vector<HalfSpace>> half_spaces,
                                      const ScenarioConfig& config, bool free_positions = false);

/// Objective at the given accelerations, evaluated through propagate.
double condensed_objective(const TrajectorySubproblem& sub, std::span<const Vec2> accelerations);

/// Objective at explicit positions (one per slot).
double positional_objective(const TrajectorySubproblem& sub, std::span<const Position2D> positions);

/// Log-barrier interior point over the accelerations. `warm_start` has N
/// accelerations (dynamics mode) or N + 1 positions (free mode, passed as
/// `warm_positions`). Never returns anything worse than the warm start.
/// Throws infeasible_warm_start when the warm start misses a constraint by
/// more than 1e-6.
SubproblemSolution solve(const TrajectorySubproblem& sub, std::span<const Vec2> warm_start,
                         const SolverSettings& settings = {});

SubproblemSolution solve_free(const TrajectorySubproblem& sub,
                              std::span<const Position2D> warm_positions);

/// Full-precision dump of every coefficient for offline reproduction.
nlohmann::json subproblem_to_json(const TrajectorySubproblem& sub);

}  // namespace ctfa
