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

#include "ctfa/orchestrator.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>

#include <fmt/format.h>

#include "ctfa/errors.hpp"
#include "ctfa/mm_surrogate.hpp"

namespace ctfa {

void StoppingRule::check() const {
  if (!(rel_tol > 0.0)) throw Error(ErrorKind::config, "rule.rel_tol must be positive");
  if (!(inner_rel_tol > 0.0)) throw Error(ErrorKind::config, "rule.inner_rel_tol must be positive");
  if (max_outer < 1) throw Error(ErrorKind::config, "rule.max_outer must be at least 1");
  if (max_inner < 1) throw Error(ErrorKind::config, "rule.max_inner must be at least 1");
}

std::vector<ComplexMatrix> slot_channels(const ScenarioConfig& config,
                                         const ChannelGeometry& geometry,
                                         const TrajectoryPlan& tx_plan,
                                         const TrajectoryPlan& rx_plan) {
  std::vector<ComplexMatrix> out;
  const int n_slots = tx_plan.n_slots();
  if (rx_plan.n_slots() != n_slots) contract_fail("transmit and receive plans differ in length");
  out.reserve(static_cast<std::size_t>(n_slots) + 1);
  for (int n = 0; n <= n_slots; ++n) {
    out.push_back(assemble_channel(tx_plan.positions_at(n), rx_plan.positions_at(n), geometry,
                                   config.wavelength));
  }
  return out;
}

namespace {

struct SlotBlocks {
  ComplexMatrix q;
  ComplexMatrix u;
  ComplexMatrix w;
};

SlotBlocks solve_slot(const ComplexMatrix& h, const ScenarioConfig& config) {
  SlotBlocks b;
  try {
    b.q = waterfill(h, config.power, config.noise_var);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::zero_channel) throw;
    const auto nt = h.cols();
    b.q = ComplexMatrix::Identity(nt, nt) * (config.power / static_cast<double>(nt));
    b.u = ComplexMatrix::Zero(h.rows(), nt);
    b.w = ComplexMatrix::Identity(nt, nt);
    return b;
  }
  b.u = update_u(h, b.q, config.noise_var);
  b.w = update_w(h, b.q, b.u, config.noise_var);
  return b;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace

void update_slot_blocks(OptimizerState& state, const ScenarioConfig& config,
                        const ChannelGeometry& geometry) {
  const auto channels = slot_channels(config, geometry, state.tx_plan, state.rx_plan);
  state.schedule.q_mat.resize(channels.size());
  state.wmmse.u_mat.resize(channels.size());
  state.wmmse.w_mat.resize(channels.size());
  for (std::size_t n = 0; n < channels.size(); ++n) {
    SlotBlocks b = solve_slot(channels[n], config);
    state.schedule.q_mat[n] = std::move(b.q);
    state.wmmse.u_mat[n] = std::move(b.u);
    state.wmmse.w_mat[n] = std::move(b.w);
  }
  state.wmmse.objective = evaluate_h1(state, config, geometry);
}

double evaluate_h1(const OptimizerState& state, const ScenarioConfig& config,
                   const ChannelGeometry& geometry) {
  const auto channels = slot_channels(config, geometry, state.tx_plan, state.rx_plan);
  double acc = 0.0;
  for (std::size_t n = 0; n < channels.size(); ++n) {
    const ComplexMatrix e =
        mse_matrix(channels[n], state.schedule.q_mat[n], state.wmmse.u_mat[n], config.noise_var);
    acc += wmmse_slot_term(state.wmmse.w_mat[n], e);
  }
  return acc;
}

double state_throughput(const OptimizerState& state, const ScenarioConfig& config,
                        const ChannelGeometry& geometry) {
  const auto channels = slot_channels(config, geometry, state.tx_plan, state.rx_plan);
  return total_throughput(channels, state.schedule.q_mat, config.slot_len, config.noise_var);
}

OptimizerState initial_state(const ScenarioConfig& config, const ChannelGeometry& geometry) {
  OptimizerState state;
  const auto tx = initial_upa_layout(config.n_tx, config);
  const auto rx = initial_upa_layout(config.n_rx, config);
  state.tx_plan = stationary_plan(Side::tx, tx, config);
  state.rx_plan = stationary_plan(Side::rx, rx, config);
  update_slot_blocks(state, config, geometry);
  return state;
}

InnerTrace optimize_element(Side side, int element, OptimizerState& state,
                            const ScenarioConfig& config, const ChannelGeometry& geometry,
                            const RunOptions& options, int outer_iteration) {
  TrajectoryPlan& plan = state.plan(side);
  if (element < 0 || element >= plan.n_elements()) contract_fail("element index out of range");
  const auto len = static_cast<std::size_t>(plan.n_slots()) + 1;
  const double lambda = config.wavelength;
  const auto& elevations = geometry.elevations(side);
  const auto& azimuths = geometry.azimuths(side);

  // The decomposition depends only on blocks held fixed here, so it is
  // built once per call; so is the eigenvalue majorizer.
  std::vector<SlotCoefficients> coeffs(len);
  for (std::size_t n = 0; n < len; ++n) {
    SlotSnapshot snap{state.schedule.q_mat[n], state.wmmse.u_mat[n], state.wmmse.w_mat[n],
                      state.tx_plan.positions_at(static_cast<int>(n)),
                      state.rx_plan.positions_at(static_cast<int>(n))};
    coeffs[n] = slot_coefficients(side, element, snap, geometry, lambda, config.noise_var);
  }
  auto h2_of = [&](const ElementTrack& t) {
    double acc = 0.0;
    for (std::size_t n = 0; n < len; ++n) {
      acc += coefficient_value(coeffs[n], field_response_vector(t.position[n], elevations,
                                                                azimuths, lambda));
    }
    return acc;
  };

  InnerTrace trace{outer_iteration, side, element, {}};
  ElementTrack current = plan.elements[static_cast<std::size_t>(element)];
  double h2 = h2_of(current);
  trace.h2.push_back(h2);
  const Vec2 nudge(1e-6 * lambda, 0.0);

  for (int it = 0; it < options.rule.max_inner; ++it) {
    std::vector<SlotSurrogate> surrogates(len);
    std::vector<std::vector<HalfSpace>> half_spaces(len);
    for (std::size_t n = 0; n < len; ++n) {
      const Position2D& q0 = current.position[n];
      const ComplexVector e = eta(coeffs[n], q0, side, geometry, lambda);
      const auto d = surrogate_derivatives(e, q0, elevations, azimuths, lambda);
      surrogates[n] = build_surrogate(tau_value(e, q0, side, geometry, lambda), d, q0);
      for (int other = 0; other < plan.n_elements(); ++other) {
        if (other == element) continue;
        const Position2D& fixed = plan.elements[static_cast<std::size_t>(other)].position[n];
        try {
          half_spaces[n].push_back(linearize_separation(q0, fixed, config.min_separation));
        } catch (const Error& err) {
          if (err.kind() != ErrorKind::degenerate_geometry) throw;
          half_spaces[n].push_back(linearize_separation(q0 + nudge, fixed, config.min_separation));
        }
      }
    }
    SubproblemSolution sol;
    try {
      const TrajectorySubproblem sub =
          build_subproblem(surrogates, current.position.front(), current.velocity.front(),
                           std::move(half_spaces), config, options.free_positions);
      if (options.free_positions) {
        sol = solve_free(sub, current.position);
      } else {
        const std::span<const Vec2> warm(current.acceleration.data(), len - 1);
        sol = solve(sub, warm, options.solver);
      }
    } catch (const Error& err) {
      if (err.kind() != ErrorKind::infeasible_warm_start) throw;
      state.events.push_back(fmt::format("outer {} {} element {}: kept previous trajectory ({})",
                                         outer_iteration, to_string(side), element, err.what()));
      break;
    }
    const double h2_new = h2_of(sol.track);
    if (!(h2_new <= h2)) {
      state.events.push_back(fmt::format("outer {} {} element {}: step raised h2 by {:.3e}, reverted",
                                         outer_iteration, to_string(side), element, h2_new - h2));
      break;
    }
    current = std::move(sol.track);
    const double rel = (h2 - h2_new) / std::max(std::abs(h2), 1e-12);
    h2 = h2_new;
    trace.h2.push_back(h2);
    if (rel < options.rule.inner_rel_tol) break;
  }
  plan.elements[static_cast<std::size_t>(element)] = std::move(current);
  return trace;
}

namespace {

double refreshed_throughput(const OptimizerState& state, const ScenarioConfig& config,
                            const ChannelGeometry& geometry) {
  return waterfilled_throughput(config, geometry, state.tx_plan, state.rx_plan);
}

}  // namespace

OptimizerState run(const ScenarioConfig& config, const ChannelGeometry& geometry,
                   const RunOptions& options) {
  options.rule.check();
  const auto start = std::chrono::steady_clock::now();
  OptimizerState state = initial_state(config, geometry);
  auto record = [&](int iteration, double h1) {
    HistoryEntry e{iteration, h1, refreshed_throughput(state, config, geometry),
                   seconds_since(start)};
    state.history.push_back(e);
    if (options.progress) options.progress(e);
  };
  double h1 = state.wmmse.objective;
  record(0, h1);
  for (int it = 1; it <= options.rule.max_outer; ++it) {
    update_slot_blocks(state, config, geometry);
    for (Side side : {Side::tx, Side::rx}) {
      if ((side == Side::tx && !options.optimize_tx) || (side == Side::rx && !options.optimize_rx)) {
        continue;
      }
      for (int k = 0; k < state.plan(side).n_elements(); ++k) {
        InnerTrace t = optimize_element(side, k, state, config, geometry, options, it);
        if (options.record_traces) state.inner_traces.push_back(std::move(t));
      }
    }
    const double h1_new = evaluate_h1(state, config, geometry);
    state.wmmse.objective = h1_new;
    state.outer_iterations = it;
    record(it, h1_new);
    if (options.observer) options.observer(state);
    const double rel = (h1_new - h1) / std::max(std::abs(h1), 1e-12);
    h1 = h1_new;
    if (rel < options.rule.rel_tol) {
      state.converged = true;
      break;
    }
  }
  update_slot_blocks(state, config, geometry);
  return state;
}

const char* to_string(Scheme s) {
  switch (s) {
    case Scheme::proposed: return "proposed";
    case Scheme::t_ctfa: return "t_ctfa";
    case Scheme::linear1: return "linear1";
    case Scheme::linear2: return "linear2";
    case Scheme::random: return "random";
    case Scheme::fpa: return "fpa";
  }
  return "unknown";
}

std::optional<Scheme> scheme_from_string(const std::string& name) {
  for (Scheme s : {Scheme::proposed, Scheme::t_ctfa, Scheme::linear1, Scheme::linear2,
                   Scheme::random, Scheme::fpa}) {
    if (name == to_string(s)) return s;
  }
  return std::nullopt;
}

double waterfilled_throughput(const ScenarioConfig& config, const ChannelGeometry& geometry,
                              const TrajectoryPlan& tx_plan, const TrajectoryPlan& rx_plan,
                              CovarianceSchedule* schedule) {
  const auto channels = slot_channels(config, geometry, tx_plan, rx_plan);
  CovarianceSchedule local;
  local.q_mat.reserve(channels.size());
  for (const auto& h : channels) local.q_mat.push_back(solve_slot(h, config).q);
  const double bits = total_throughput(channels, local.q_mat, config.slot_len, config.noise_var);
  if (schedule) *schedule = std::move(local);
  return bits;
}

namespace {

SchemeResult from_state(Scheme scheme, OptimizerState&& state, const ScenarioConfig& config,
                        const ChannelGeometry& geometry) {
  SchemeResult r;
  r.scheme = scheme;
  r.throughput_bits = state_throughput(state, config, geometry);
  r.tx_plan = std::move(state.tx_plan);
  r.rx_plan = std::move(state.rx_plan);
  r.schedule = std::move(state.schedule);
  r.history = std::move(state.history);
  r.inner_traces = std::move(state.inner_traces);
  r.outer_iterations = state.outer_iterations;
  r.converged = state.converged;
  return r;
}

SchemeResult from_plans(Scheme scheme, TrajectoryPlan tx, TrajectoryPlan rx,
                        const ScenarioConfig& config, const ChannelGeometry& geometry) {
  SchemeResult r;
  r.scheme = scheme;
  r.throughput_bits = waterfilled_throughput(config, geometry, tx, rx, &r.schedule);
  r.flagged = tx.flagged || rx.flagged;
  for (const auto* p : {&tx, &rx}) {
    if (p->flagged) r.note += (r.note.empty() ? "" : "; ") + std::string(to_string(p->side)) + ": " + p->note;
  }
  r.tx_plan = std::move(tx);
  r.rx_plan = std::move(rx);
  r.history.push_back({0, 0.0, r.throughput_bits, 0.0});
  return r;
}

// Straight-line plan toward `target`; if two elements would collide, the
// displacement is halved until the paths clear.
TrajectoryPlan linear_toward(Side side, const std::vector<Position2D>& target,
                             const ScenarioConfig& config) {
  const auto start = initial_upa_layout(config.elements(side), config);
  double beta = 1.0;
  for (int attempt = 0; attempt < 40; ++attempt, beta *= 0.5) {
    std::vector<Position2D> end(start.size());
    for (std::size_t k = 0; k < start.size(); ++k) end[k] = start[k] + beta * (target[k] - start[k]);
    try {
      TrajectoryPlan plan = linear_trajectory(start, end, side, config);
      if (beta < 1.0) {
        plan.flagged = true;
        plan.note = fmt::format("paths crossed; displacement scaled by {}", beta);
      }
      return plan;
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::infeasible_linear_path) throw;
    }
  }
  TrajectoryPlan plan = stationary_plan(side, start, config);
  plan.flagged = true;
  plan.note = "no collision-free straight path; stationary";
  return plan;
}

}  // namespace

SchemeResult evaluate_scheme(Scheme scheme, const ScenarioConfig& config,
                             const ChannelGeometry& geometry, const RunOptions& options,
                             std::uint64_t seed, const SchemeResult* proposed) {
  switch (scheme) {
    case Scheme::proposed: {
      RunOptions opt = options;
      opt.optimize_tx = true;
      opt.optimize_rx = true;
      opt.free_positions = false;
      return from_state(scheme, run(config, geometry, opt), config, geometry);
    }
    case Scheme::t_ctfa: {
      RunOptions opt = options;
      opt.optimize_tx = true;
      opt.optimize_rx = false;
      opt.free_positions = false;
      return from_state(scheme, run(config, geometry, opt), config, geometry);
    }
    case Scheme::linear1: {
      SchemeResult local;
      if (!proposed) {
        local = evaluate_scheme(Scheme::proposed, config, geometry, options, seed);
        proposed = &local;
      }
      return from_plans(scheme, linear_toward(Side::tx, proposed->tx_plan.final_positions(), config),
                        linear_toward(Side::rx, proposed->rx_plan.final_positions(), config),
                        config, geometry);
    }
    case Scheme::linear2: {
      ScenarioConfig single = config;
      single.n_slots = 0;
      RunOptions opt;
      opt.rule = options.rule;
      opt.solver = options.solver;
      opt.free_positions = true;
      opt.record_traces = false;
      const OptimizerState target = run(single, geometry, opt);
      return from_plans(scheme, linear_toward(Side::tx, target.tx_plan.final_positions(), config),
                        linear_toward(Side::rx, target.rx_plan.final_positions(), config),
                        config, geometry);
    }
    case Scheme::random:
      return from_plans(scheme, random_feasible_trajectory(config, Side::tx, seed),
                        random_feasible_trajectory(config, Side::rx, seed), config, geometry);
    case Scheme::fpa: {
      const auto tx = initial_upa_layout(config.n_tx, config);
      const auto rx = initial_upa_layout(config.n_rx, config);
      return from_plans(scheme, stationary_plan(Side::tx, tx, config),
                        stationary_plan(Side::rx, rx, config), config, geometry);
    }
  }
  contract_fail("unknown scheme");
}

}  // namespace ctfa
