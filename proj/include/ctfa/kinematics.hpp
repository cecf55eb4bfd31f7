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
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "ctfa/channel.hpp"
#include "ctfa/numerics.hpp"

namespace ctfa {

/// State of one element over slots 0..N. All three sequences have N + 1
/// entries; acceleration[N] is zero by convention.
struct ElementTrack {
  std::vector<Position2D> position;
  std::vector<Vec2> velocity;
  std::vector<Vec2> acceleration;

  int n_slots() const { return static_cast<int>(position.size()) - 1; }
};

struct TrajectoryPlan {
  Side side = Side::tx;
  double slot_len = 0.0;
  std::vector<ElementTrack> elements;
  // Set when a generator had to degrade its output (clipped endpoint,
  // stationary fallback). `note` says why.
  bool flagged = false;
  std::string note;

  int n_elements() const { return static_cast<int>(elements.size()); }
  int n_slots() const { return elements.empty() ? 0 : elements.front().n_slots(); }
  std::vector<Position2D> positions_at(int slot) const;
  std::vector<Position2D> final_positions() const { return positions_at(n_slots()); }
};

enum class ViolationKind { shape, dynamics, box, velocity, acceleration, separation };

const char* to_string(ViolationKind kind);

/// One violated constraint. `other` is the second element for separation
/// violations and -1 otherwise; `magnitude` is the amount by which the
/// bound is exceeded (meters or SI rate units).
struct Violation {
  ViolationKind kind;
  int element;
  int slot;
  double magnitude;
  int other = -1;
};

// Feasibility tolerances.
inline constexpr double kDynamicsTol = 1e-9;
inline constexpr double kNormTol = 1e-9;
inline constexpr double kBoxTol = 1e-9;
inline constexpr double kSeparationTol = 1e-6;

/// Forward recursion v+ = v + a d, q+ = q + v d + a d^2 / 2 over the
/// given N accelerations. The returned track has N + 1 samples and a zero
/// final acceleration.
ElementTrack propagate(const Position2D& start_pos, const Vec2& start_vel,
                       std::span<const Vec2> accelerations, double slot_len);

/// Every violated dynamics, box, speed, acceleration or separation bound.
/// The slot length comes from the plan; caps and region from `config`.
std::vector<Violation> validate(const TrajectoryPlan& plan, const ScenarioConfig& config);

/// Single-element checks only (no pairwise separation).
std::vector<Violation> validate_track(const ElementTrack& track, double slot_len,
                                      const ScenarioConfig& config, int element = 0);

struct SlotDurationReport {
  bool ok = true;
  double coherence_bound = 0.0;  // T_c / N
  double phase_bound = 0.0;      // lambda / (4 V_max)
  double accel_bound = 0.0;      // V_max / a_max
  double margin = 0.5;
};

/// Warns (ok = false) when slot_len exceeds margin times the smallest bound.
/// Zero caps make their bound infinite.
SlotDurationReport slot_duration_check(const ScenarioConfig& config, double margin = 0.5);

/// Centered row-major grid with spacing max(D, lambda/2). Throws
/// infeasible_layout when the grid does not fit.
std::vector<Position2D> initial_upa_layout(int count, const ScenarioConfig& config);

/// Every element parked at `positions` for slots 0..N.
TrajectoryPlan stationary_plan(Side side, std::span<const Position2D> positions,
                               const ScenarioConfig& config);

/// Random accelerations in the a_max disc, repaired slot by slot so the
/// plan stays feasible. Starts from the UPA layout at rest.
TrajectoryPlan random_feasible_trajectory(const ScenarioConfig& config, Side side,
                                          std::uint64_t seed);

/// Straight-line motion from `start` to `end` over N slots: accelerate
/// along the segment to a cruise speed, then coast, arriving at slot N.
/// Unreachable endpoints are pulled back along the segment (flagged).
/// Throws infeasible_linear_path if two elements come closer than D.
TrajectoryPlan linear_trajectory(std::span<const Position2D> start,
                                 std::span<const Position2D> end, Side side,
                                 const ScenarioConfig& config);

/// CSV with header element,slot,x,y,vx,vy,ax,ay.
void write_plan_csv(std::ostream& out, const TrajectoryPlan& plan);
TrajectoryPlan read_plan_csv(std::istream& in, Side side, double slot_len);

}  // namespace ctfa
