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

#include "ctfa/kinematics.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <istream>
#include <limits>
#include <map>
#include <numbers>
#include <ostream>
#include <sstream>

#include <fmt/format.h>

#include "ctfa/errors.hpp"
#include "ctfa/random.hpp"

namespace ctfa {

std::vector<Position2D> TrajectoryPlan::positions_at(int slot) const {
  std::vector<Position2D> out;
  out.reserve(elements.size());
  for (const auto& e : elements) out.push_back(e.position.at(static_cast<std::size_t>(slot)));
  return out;
}

const char* to_string(ViolationKind kind) {
  switch (kind) {
    case ViolationKind::shape: return "shape";
    case ViolationKind::dynamics: return "dynamics";
    case ViolationKind::box: return "box";
    case ViolationKind::velocity: return "velocity";
    case ViolationKind::acceleration: return "acceleration";
    case ViolationKind::separation: return "separation";
  }
  return "unknown";
}

ElementTrack propagate(const Position2D& start_pos, const Vec2& start_vel,
                       std::span<const Vec2> accelerations, double slot_len) {
  const std::size_t n = accelerations.size();
  ElementTrack t;
  t.position.resize(n + 1);
  t.velocity.resize(n + 1);
  t.acceleration.resize(n + 1);
  t.position[0] = start_pos;
  t.velocity[0] = start_vel;
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2& a = accelerations[i];
    t.acceleration[i] = a;
    t.velocity[i + 1] = t.velocity[i] + a * slot_len;
    t.position[i + 1] = t.position[i] + t.velocity[i] * slot_len + 0.5 * slot_len * slot_len * a;
  }
  t.acceleration[n] = Vec2::Zero();
  return t;
}

std::vector<Violation> validate_track(const ElementTrack& track, double slot_len,
                                      const ScenarioConfig& config, int element) {
  std::vector<Violation> out;
  const std::size_t len = track.position.size();
  if (len == 0 || track.velocity.size() != len || track.acceleration.size() != len) {
    out.push_back({ViolationKind::shape, element, -1, 0.0});
    return out;
  }
  const double side = config.region_side;
  for (std::size_t n = 0; n < len; ++n) {
    const int slot = static_cast<int>(n);
    const Position2D& q = track.position[n];
    double box_excess = 0.0;
    for (int c = 0; c < 2; ++c) {
      box_excess = std::max({box_excess, -q(c), q(c) - side});
    }
    if (!q.allFinite() || box_excess > kBoxTol) {
      out.push_back({ViolationKind::box, element, slot, q.allFinite() ? box_excess : INFINITY});
    }
    const double speed = track.velocity[n].norm();
    if (!(speed <= config.v_max + kNormTol)) {
      out.push_back({ViolationKind::velocity, element, slot, speed - config.v_max});
    }
    const double accel = track.acceleration[n].norm();
    if (!(accel <= config.a_max + kNormTol)) {
      out.push_back({ViolationKind::acceleration, element, slot, accel - config.a_max});
    }
    if (n + 1 < len) {
      const Vec2& a = track.acceleration[n];
      const Vec2 v_next = track.velocity[n] + a * slot_len;
      const Position2D q_next = q + track.velocity[n] * slot_len + 0.5 * slot_len * slot_len * a;
      const double err = std::max((v_next - track.velocity[n + 1]).norm(),
                                  (q_next - track.position[n + 1]).norm());
      if (!(err <= kDynamicsTol)) out.push_back({ViolationKind::dynamics, element, slot, err});
    }
  }
  return out;
}

std::vector<Violation> validate(const TrajectoryPlan& plan, const ScenarioConfig& config) {
  std::vector<Violation> out;
  if (plan.n_elements() != config.elements(plan.side)) {
    out.push_back({ViolationKind::shape, -1, -1, 0.0});
    return out;
  }
  const std::size_t len = static_cast<std::size_t>(config.n_slots) + 1;
  for (int k = 0; k < plan.n_elements(); ++k) {
    if (plan.elements[static_cast<std::size_t>(k)].position.size() != len) {
      out.push_back({ViolationKind::shape, k, -1, 0.0});
      return out;
    }
  }
  for (int k = 0; k < plan.n_elements(); ++k) {
    auto v = validate_track(plan.elements[static_cast<std::size_t>(k)], plan.slot_len, config, k);
    out.insert(out.end(), v.begin(), v.end());
  }
  for (std::size_t n = 0; n < len; ++n) {
    for (int k = 0; k < plan.n_elements(); ++k) {
      for (int j = k + 1; j < plan.n_elements(); ++j) {
        const double dist = (plan.elements[static_cast<std::size_t>(k)].position[n] -
                             plan.elements[static_cast<std::size_t>(j)].position[n])
                                .norm();
        if (!(dist >= config.min_separation - kSeparationTol)) {
          out.push_back({ViolationKind::separation, k, static_cast<int>(n),
                         config.min_separation - dist, j});
        }
      }
    }
  }
  return out;
}

SlotDurationReport slot_duration_check(const ScenarioConfig& config, double margin) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  SlotDurationReport r;
  r.margin = margin;
  r.coherence_bound = config.n_slots > 0 ? config.coherence_time / config.n_slots : inf;
  r.phase_bound = config.v_max > 0.0 ? config.wavelength / (4.0 * config.v_max) : inf;
  r.accel_bound = config.a_max > 0.0 ? config.v_max / config.a_max : inf;
  const double tightest = std::min({r.coherence_bound, r.phase_bound, r.accel_bound});
  r.ok = config.slot_len <= margin * tightest;
  return r;
}

std::vector<Position2D> initial_upa_layout(int count, const ScenarioConfig& config) {
  if (count < 1) contract_fail("layout needs at least one element");
  int cols = 1;
  while (cols * cols < count) ++cols;
  const int rows = (count + cols - 1) / cols;
  const double spacing = std::max(config.min_separation, 0.5 * config.wavelength);
  const double width = spacing * (cols - 1);
  const double height = spacing * (rows - 1);
  if (width > config.region_side || height > config.region_side) {
    throw Error(ErrorKind::infeasible_layout,
                fmt::format("{}x{} grid with spacing {} exceeds region side {}", rows, cols,
                            spacing, config.region_side));
  }
  const double x0 = 0.5 * (config.region_side - width);
  const double y0 = 0.5 * (config.region_side - height);
  std::vector<Position2D> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    out.emplace_back(x0 + spacing * (i % cols), y0 + spacing * (i / cols));
  }
  return out;
}

TrajectoryPlan stationary_plan(Side side, std::span<const Position2D> positions,
                               const ScenarioConfig& config) {
  TrajectoryPlan plan;
  plan.side = side;
  plan.slot_len = config.slot_len;
  const std::vector<Vec2> zeros(static_cast<std::size_t>(config.n_slots), Vec2::Zero());
  for (const auto& p : positions) {
    plan.elements.push_back(propagate(p, Vec2::Zero(), zeros, config.slot_len));
  }
  return plan;
}

namespace {

struct PointState {
  Position2D q;
  Vec2 v;
};

// Deceleration that stops the element as fast as a_max allows without
// reversing its direction.
Vec2 brake_acceleration(const Vec2& v, double a_max, double slot_len) {
  const double speed = v.norm();
  if (speed == 0.0) return Vec2::Zero();
  return -std::min(a_max, speed / slot_len) / speed * v;
}

PointState step(const PointState& s, const Vec2& a, double slot_len) {
  return {s.q + s.v * slot_len + 0.5 * slot_len * slot_len * a, s.v + a * slot_len};
}

bool layout_ok(std::span<const PointState> states, const ScenarioConfig& config) {
  constexpr double box_slack = 1e-12;
  constexpr double sep_slack = 1e-9;
  for (std::size_t k = 0; k < states.size(); ++k) {
    const Position2D& q = states[k].q;
    if (q.minCoeff() < -box_slack || q.maxCoeff() > config.region_side + box_slack) return false;
    for (std::size_t j = k + 1; j < states.size(); ++j) {
      if ((q - states[j].q).norm() < config.min_separation - sep_slack) return false;
    }
  }
  return true;
}

// True when every element braking from `states` (at `slot`) keeps the
// layout feasible through slot N.
bool brake_rollout_ok(std::vector<PointState> states, int slot, const ScenarioConfig& config) {
  for (int n = slot;; ++n) {
    if (!layout_ok(states, config)) return false;
    if (n >= config.n_slots) return true;
    bool moving = false;
    for (auto& s : states) {
      if (s.v.squaredNorm() > 0.0) {
        moving = true;
        s = step(s, brake_acceleration(s.v, config.a_max, config.slot_len), config.slot_len);
      }
    }
    if (!moving) return true;
  }
}

}  // namespace

TrajectoryPlan random_feasible_trajectory(const ScenarioConfig& config, Side side,
                                          std::uint64_t seed) {
  const auto start = initial_upa_layout(config.elements(side), config);
  const std::size_t count = start.size();
  const int n_slots = config.n_slots;
  const double dt = config.slot_len;
  CounterRng rng(seed, side == Side::tx ? streams::tx_random_trajectory
                                        : streams::rx_random_trajectory);

  std::vector<PointState> now(count);
  for (std::size_t k = 0; k < count; ++k) now[k] = {start[k], Vec2::Zero()};
  std::vector<std::vector<Vec2>> accels(count);

  for (int n = 0; n < n_slots; ++n) {
    std::vector<PointState> next(count);
    for (std::size_t k = 0; k < count; ++k) {
      next[k] = step(now[k], brake_acceleration(now[k].v, config.a_max, dt), dt);
    }
    for (std::size_t k = 0; k < count; ++k) {
      const double radius = config.a_max * std::sqrt(rng.uniform());
      const double angle = 2.0 * std::numbers::pi * rng.uniform();
      const Vec2 sample(radius * std::cos(angle), radius * std::sin(angle));
      const Vec2 brake = brake_acceleration(now[k].v, config.a_max, dt);
      Vec2 chosen = brake;
      for (double scale : {1.0, 0.5, 0.25}) {
        const Vec2 a = scale * sample;
        const PointState cand = step(now[k], a, dt);
        if (cand.v.norm() > config.v_max) continue;
        auto trial = next;
        trial[k] = cand;
        if (brake_rollout_ok(trial, n + 1, config)) {
          chosen = a;
          break;
        }
      }
      next[k] = step(now[k], chosen, dt);
      accels[k].push_back(chosen);
    }
    now = std::move(next);
  }

  TrajectoryPlan plan;
  plan.side = side;
  plan.slot_len = dt;
  for (std::size_t k = 0; k < count; ++k) {
    plan.elements.push_back(propagate(start[k], Vec2::Zero(), accels[k], dt));
  }
  if (!validate(plan, config).empty()) {
    plan = stationary_plan(side, start, config);
    plan.flagged = true;
    plan.note = "random repair failed; stationary fallback";
  }
  return plan;
}

namespace {

// Scalar acceleration profile that ramps up to `cruise` as fast as a_max
// allows and then coasts.
std::vector<double> ramp_profile(double cruise, int n_slots, double a_max, double dt) {
  std::vector<double> out(static_cast<std::size_t>(n_slots), 0.0);
  double v = 0.0;
  for (auto& a : out) {
    a = std::clamp((cruise - v) / dt, 0.0, a_max);
    v += a * dt;
  }
  return out;
}

double ramp_distance(const std::vector<double>& accel, double dt) {
  double v = 0.0;
  double s = 0.0;
  for (double a : accel) {
    s += v * dt + 0.5 * dt * dt * a;
    v += a * dt;
  }
  return s;
}

}  // namespace

TrajectoryPlan linear_trajectory(std::span<const Position2D> start,
                                 std::span<const Position2D> end, Side side,
                                 const ScenarioConfig& config) {
  if (start.size() != end.size()) contract_fail("start and end lists differ in length");
  const int n_slots = config.n_slots;
  const double dt = config.slot_len;
  TrajectoryPlan plan;
  plan.side = side;
  plan.slot_len = dt;
  const double top_speed = std::min(config.v_max, n_slots * dt * config.a_max);
  for (std::size_t k = 0; k < start.size(); ++k) {
    const Vec2 delta = end[k] - start[k];
    const double dist = delta.norm();
    std::vector<Vec2> accel(static_cast<std::size_t>(n_slots), Vec2::Zero());
    if (dist > 0.0 && n_slots > 0 && top_speed > 0.0) {
      const Vec2 dir = delta / dist;
      const double reach = ramp_distance(ramp_profile(top_speed, n_slots, config.a_max, dt), dt);
      double cruise = top_speed;
      if (reach < dist) {
        plan.flagged = true;
        plan.note = "endpoint pulled back to the reachable distance";
      } else {
        double lo = 0.0;
        double hi = top_speed;
        for (int it = 0; it < 200 && hi - lo > 0.0; ++it) {
          const double mid = 0.5 * (lo + hi);
          if (mid == lo || mid == hi) break;
          const double s = ramp_distance(ramp_profile(mid, n_slots, config.a_max, dt), dt);
          (s < dist ? lo : hi) = mid;
        }
        cruise = hi;
      }
      const auto profile = ramp_profile(cruise, n_slots, config.a_max, dt);
      for (std::size_t n = 0; n < profile.size(); ++n) accel[n] = profile[n] * dir;
    } else if (dist > 0.0) {
      plan.flagged = true;
      plan.note = "endpoint unreachable; element kept at start";
    }
    plan.elements.push_back(propagate(start[k], Vec2::Zero(), accel, dt));
  }
  for (int n = 0; n <= n_slots; ++n) {
    for (std::size_t k = 0; k < start.size(); ++k) {
      for (std::size_t j = k + 1; j < start.size(); ++j) {
        const double d = (plan.elements[k].position[static_cast<std::size_t>(n)] -
                          plan.elements[j].position[static_cast<std::size_t>(n)])
                             .norm();
        if (d < config.min_separation - kSeparationTol) {
          throw Error(ErrorKind::infeasible_linear_path,
                      fmt::format("elements {} and {} are {} apart at slot {}", k, j, d, n));
        }
      }
    }
  }
  return plan;
}

void write_plan_csv(std::ostream& out, const TrajectoryPlan& plan) {
  out << "element,slot,x,y,vx,vy,ax,ay\n";
  for (int k = 0; k < plan.n_elements(); ++k) {
    const auto& e = plan.elements[static_cast<std::size_t>(k)];
    for (std::size_t n = 0; n < e.position.size(); ++n) {
      out << fmt::format("{},{},{},{},{},{},{},{}\n", k, n, e.position[n].x(), e.position[n].y(),
                         e.velocity[n].x(), e.velocity[n].y(), e.acceleration[n].x(),
                         e.acceleration[n].y());
    }
  }
}

namespace {

double parse_double(const std::string& field, int line) {
  double v = 0.0;
  const char* first = field.data();
  const char* last = first + field.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last) {
    throw Error(ErrorKind::io, fmt::format("line {}: bad number '{}'", line, field));
  }
  return v;
}

}  // namespace

TrajectoryPlan read_plan_csv(std::istream& in, Side side, double slot_len) {
  std::string line;
  if (!std::getline(in, line) || line.rfind("element,slot,x,y,vx,vy,ax,ay", 0) != 0) {
    throw Error(ErrorKind::io, "missing trajectory CSV header");
  }
  std::map<int, std::map<int, std::array<double, 6>>> rows;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string f;
    while (std::getline(ss, f, ',')) fields.push_back(f);
    if (fields.size() != 8) {
      throw Error(ErrorKind::io, fmt::format("line {}: expected 8 fields", line_no));
    }
    const int k = static_cast<int>(parse_double(fields[0], line_no));
    const int n = static_cast<int>(parse_double(fields[1], line_no));
    std::array<double, 6> vals{};
    for (int i = 0; i < 6; ++i) vals[static_cast<std::size_t>(i)] = parse_double(fields[static_cast<std::size_t>(i + 2)], line_no);
    rows[k][n] = vals;
  }
  TrajectoryPlan plan;
  plan.side = side;
  plan.slot_len = slot_len;
  int expect_k = 0;
  for (const auto& [k, slots] : rows) {
    if (k != expect_k++) throw Error(ErrorKind::io, "element indices are not contiguous");
    ElementTrack t;
    int expect_n = 0;
    for (const auto& [n, v] : slots) {
      if (n != expect_n++) throw Error(ErrorKind::io, "slot indices are not contiguous");
      t.position.emplace_back(v[0], v[1]);
      t.velocity.emplace_back(v[2], v[3]);
      t.acceleration.emplace_back(v[4], v[5]);
    }
    plan.elements.push_back(std::move(t));
  }
  if (!plan.elements.empty()) {
    for (const auto& e : plan.elements) {
      if (e.position.size() != plan.elements.front().position.size()) {
        throw Error(ErrorKind::io, "elements have different slot counts");
      }
    }
  }
  return plan;
}

}  // namespace ctfa
