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

#include "ctfa/socp_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "ctfa/errors.hpp"

namespace ctfa {

const char* to_string(SolverStatus s) {
  switch (s) {
    case SolverStatus::optimal: return "optimal";
    case SolverStatus::max_iter: return "max-iter";
    case SolverStatus::numerical_failure: return "numerical-failure";
  }
  return "unknown";
}

TrajectorySubproblem build_subproblem(std::span<const SlotSurrogate> surrogates,
                                      const Position2D& start_pos, const Vec2& start_vel,
                                      std::vector<std::vector<HalfSpace>> half_spaces,
                                      const ScenarioConfig& config, bool free_positions) {
  const int n_slots = static_cast<int>(surrogates.size()) - 1;
  if (n_slots < 0) contract_fail("build_subproblem: need at least one slot");
  if (half_spaces.size() != surrogates.size()) {
    contract_fail("build_subproblem: half-space list length differs from slot count");
  }
  TrajectorySubproblem sub;
  sub.n_slots = n_slots;
  sub.slot_len = config.slot_len;
  sub.start_pos = start_pos;
  sub.start_vel = start_vel;
  sub.box_lo = 0.0;
  sub.box_hi = config.region_side;
  sub.v_cap = config.v_max;
  sub.a_cap = config.a_max;
  sub.free_positions = free_positions;
  for (const auto& s : surrogates) {
    if (!(s.curvature >= 0.0)) contract_fail("build_subproblem: negative curvature");
    sub.curvature.push_back(s.curvature);
    sub.linear.push_back(s.linear);
  }
  if (!free_positions) {
    for (const auto& h : half_spaces.front()) {
      if (h.slack(start_pos) < -1e-6) {
        throw Error(ErrorKind::infeasible_warm_start,
                    fmt::format("start position violates a separation half-space by {}",
                                -h.slack(start_pos)));
      }
    }
  }
  sub.half_spaces = std::move(half_spaces);
  return sub;
}

double positional_objective(const TrajectorySubproblem& sub,
                            std::span<const Position2D> positions) {
  double acc = 0.0;
  for (std::size_t n = 0; n < positions.size(); ++n) {
    acc += 0.5 * sub.curvature[n] * positions[n].squaredNorm() + sub.linear[n].dot(positions[n]);
  }
  return acc;
}

double condensed_objective(const TrajectorySubproblem& sub, std::span<const Vec2> accelerations) {
  const ElementTrack t = propagate(sub.start_pos, sub.start_vel, accelerations, sub.slot_len);
  return positional_objective(sub, t.position);
}

namespace {

// a^T q >= bound at one slot.
struct LinearRow {
  int slot;
  Vec2 normal;
  double bound;
};

// ||v_slot||^2 <= cap_sq (velocity) or ||a_slot||^2 <= cap_sq.
struct BallRow {
  int slot;
  bool velocity;
  double cap_sq;
};

constexpr double kWarmDeficitLimit = 1e-6;
constexpr double kLinearFloor = 1e-12;
constexpr double kMeritPrecision = 1e-13;
constexpr double kCenteringDecrement = 1e-6;
// Constraints this close to their bound (relative) count as active.
constexpr double kActiveTolerance = 1e-6;

class BarrierProblem {
 public:
  BarrierProblem(const TrajectorySubproblem& sub, double separation_slack) : sub_(sub) {
    const int n = sub.n_slots;
    for (int s = 1; s <= n; ++s) {
      rows_.push_back({s, Vec2(1, 0), sub.box_lo});
      rows_.push_back({s, Vec2(0, 1), sub.box_lo});
      rows_.push_back({s, Vec2(-1, 0), -sub.box_hi});
      rows_.push_back({s, Vec2(0, -1), -sub.box_hi});
      for (const auto& h : sub.half_spaces[static_cast<std::size_t>(s)]) {
        rows_.push_back({s, h.normal, h.normal.dot(h.fixed_point) + h.min_sep - separation_slack});
      }
      balls_.push_back({s, true, sub.v_cap * sub.v_cap});
    }
    for (int m = 0; m < n; ++m) balls_.push_back({m, false, sub.a_cap * sub.a_cap});
  }

  int dim() const { return 2 * sub_.n_slots; }

  // Loosens any bound the warm start does not strictly satisfy, so the
  // barrier can start from it. Throws when the warm start misses by more
  // than the tolerated deficit.
  void interiorize(const Eigen::VectorXd& z) {
    states(z);
    for (auto& r : rows_) {
      const double s = r.normal.dot(q_[static_cast<std::size_t>(r.slot)]) - r.bound;
      if (s < -kWarmDeficitLimit) {
        throw Error(ErrorKind::infeasible_warm_start,
                    fmt::format("warm start misses a linear bound by {} at slot {}", -s, r.slot));
      }
      if (s < kLinearFloor) r.bound -= kLinearFloor - s;
    }
    for (auto& b : balls_) {
      const double norm = ball_vector(b).norm();
      const double cap = std::sqrt(b.cap_sq);
      if (norm - cap > kWarmDeficitLimit) {
        throw Error(ErrorKind::infeasible_warm_start,
                    fmt::format("warm start exceeds a {} cap by {} at slot {}",
                                b.velocity ? "speed" : "acceleration", norm - cap, b.slot));
      }
      const double floor = 1e-13 * std::max(b.cap_sq, 1e-300);
      const double s = b.cap_sq - norm * norm;
      if (s < floor) b.cap_sq += floor - s;
    }
  }

  // Positions and velocities for every slot from the accelerations.
  void states(const Eigen::VectorXd& z) {
    const int n = sub_.n_slots;
    const double dt = sub_.slot_len;
    q_.assign(static_cast<std::size_t>(n) + 1, Position2D::Zero());
    v_.assign(static_cast<std::size_t>(n) + 1, Vec2::Zero());
    z_ = z;
    q_[0] = sub_.start_pos;
    v_[0] = sub_.start_vel;
    for (int m = 0; m < n; ++m) {
      const Vec2 a = z.segment<2>(2 * m);
      const auto i = static_cast<std::size_t>(m);
      v_[i + 1] = v_[i] + a * dt;
      q_[i + 1] = q_[i] + v_[i] * dt + 0.5 * dt * dt * a;
    }
  }

  // Unscaled objective over all slots.
  double objective() const { return positional_objective(sub_, q_); }

  // Smallest slack across all constraints at the current states.
  double min_slack() const {
    double lo = std::numeric_limits<double>::infinity();
    for (const auto& r : rows_) {
      lo = std::min(lo, r.normal.dot(q_[static_cast<std::size_t>(r.slot)]) - r.bound);
    }
    for (const auto& b : balls_) lo = std::min(lo, b.cap_sq - ball_vector(b).squaredNorm());
    return lo;
  }

  // scale * f + mu * barrier at the current states (infinite if infeasible).
  double merit(double scale, double mu) const {
    double barrier = 0.0;
    for (const auto& r : rows_) {
      const double s = r.normal.dot(q_[static_cast<std::size_t>(r.slot)]) - r.bound;
      if (!(s > 0.0)) return std::numeric_limits<double>::infinity();
      barrier -= std::log(s);
    }
    for (const auto& b : balls_) {
      const double s = b.cap_sq - ball_vector(b).squaredNorm();
      if (!(s > 0.0)) return std::numeric_limits<double>::infinity();
      barrier -= std::log(s);
    }
    return scale * objective() + mu * barrier;
  }

  // Gradient and (optionally) Hessian of scale * f + mu * barrier with
  // respect to the accelerations.
  void derivatives(double scale, double mu, Eigen::VectorXd& grad, Eigen::MatrixXd* hess) const {
    const int n = sub_.n_slots;
    const double dt = sub_.slot_len;
    const auto len = static_cast<std::size_t>(n) + 1;
    std::vector<Vec2> gq(len, Vec2::Zero()), gv(len, Vec2::Zero()), ga(len, Vec2::Zero());
    std::vector<Eigen::Matrix2d> hq(len, Eigen::Matrix2d::Zero()), hv(len, Eigen::Matrix2d::Zero()),
        ha(len, Eigen::Matrix2d::Zero());
    for (std::size_t s = 1; s < len; ++s) {
      gq[s] = scale * (sub_.curvature[s] * q_[s] + sub_.linear[s]);
      hq[s] = scale * sub_.curvature[s] * Eigen::Matrix2d::Identity();
    }
    if (mu > 0.0) {
      for (const auto& r : rows_) {
        const auto s = static_cast<std::size_t>(r.slot);
        const double slack = r.normal.dot(q_[s]) - r.bound;
        gq[s] -= mu / slack * r.normal;
        hq[s] += mu / (slack * slack) * r.normal * r.normal.transpose();
      }
      for (const auto& b : balls_) {
        const Vec2 x = ball_vector(b);
        const double slack = b.cap_sq - x.squaredNorm();
        const auto s = static_cast<std::size_t>(b.slot);
        const Vec2 g = 2.0 * mu / slack * x;
        const Eigen::Matrix2d h = 2.0 * mu / slack * Eigen::Matrix2d::Identity() +
                                  4.0 * mu / (slack * slack) * x * x.transpose();
        if (b.velocity) {
          gv[s] += g;
          hv[s] += h;
        } else {
          ga[s] += g;
          ha[s] += h;
        }
      }
    }
    // Suffix sums over slots after index M.
    std::vector<Vec2> s0(len, Vec2::Zero()), s1(len, Vec2::Zero()), sv(len, Vec2::Zero());
    std::vector<Eigen::Matrix2d> t0(len, Eigen::Matrix2d::Zero()), t1(t0), t2(t0), v0(t0);
    for (int m = n - 1; m >= 0; --m) {
      const auto i = static_cast<std::size_t>(m);
      const double next = m + 1.0;
      s0[i] = s0[i + 1] + gq[i + 1];
      s1[i] = s1[i + 1] + next * gq[i + 1];
      sv[i] = sv[i + 1] + gv[i + 1];
      if (hess) {
        t0[i] = t0[i + 1] + hq[i + 1];
        t1[i] = t1[i + 1] + next * hq[i + 1];
        t2[i] = t2[i + 1] + next * next * hq[i + 1];
        v0[i] = v0[i + 1] + hv[i + 1];
      }
    }
    const double dt2 = dt * dt;
    const double dt4 = dt2 * dt2;
    grad.resize(2 * n);
    for (int m = 0; m < n; ++m) {
      const auto i = static_cast<std::size_t>(m);
      const double p = m + 0.5;
      grad.segment<2>(2 * m) = dt2 * (s1[i] - p * s0[i]) + dt * sv[i] + ga[i];
    }
    if (!hess) return;
    hess->resize(2 * n, 2 * n);
    for (int m = 0; m < n; ++m) {
      const double p = m + 0.5;
      for (int mp = m; mp < n; ++mp) {
        const auto top = static_cast<std::size_t>(mp);
        const double pp = mp + 0.5;
        Eigen::Matrix2d block = dt4 * (t2[top] - (p + pp) * t1[top] + p * pp * t0[top]) + dt2 * v0[top];
        if (m == mp) block += ha[static_cast<std::size_t>(m)];
        hess->block<2, 2>(2 * m, 2 * mp) = block;
        if (m != mp) hess->block<2, 2>(2 * mp, 2 * m) = block.transpose();
      }
    }
  }

  // First-order optimality at the current states: least-squares
  // multipliers for the constraints within `active_tol` (relative) of their
  // bound, then the worse of the stationarity residual and any negative
  // multiplier, relative to 1 + |grad f|.
  double kkt_residual(double scale, double active_tol) const {
    const int n = sub_.n_slots;
    const double dt = sub_.slot_len;
    Eigen::VectorXd grad_f;
    derivatives(scale, 0.0, grad_f, nullptr);
    std::vector<Eigen::VectorXd> cols;
    const double box_span = std::max(sub_.box_hi - sub_.box_lo, 1e-300);
    for (const auto& r : rows_) {
      const auto s = static_cast<std::size_t>(r.slot);
      if (r.normal.dot(q_[s]) - r.bound > active_tol * box_span) continue;
      Eigen::VectorXd c = Eigen::VectorXd::Zero(2 * n);
      for (int m = 0; m < r.slot; ++m) c.segment<2>(2 * m) = dt * dt * (r.slot - m - 0.5) * r.normal;
      cols.push_back(std::move(c));
    }
    for (const auto& b : balls_) {
      const Vec2 x = ball_vector(b);
      if (b.cap_sq - x.squaredNorm() > active_tol * b.cap_sq) continue;
      Eigen::VectorXd c = Eigen::VectorXd::Zero(2 * n);
      if (b.velocity) {
        for (int m = 0; m < b.slot; ++m) c.segment<2>(2 * m) = -2.0 * dt * x;
      } else {
        c.segment<2>(2 * b.slot) = -2.0 * x;
      }
      cols.push_back(std::move(c));
    }
    const double denom = 1.0 + grad_f.cwiseAbs().maxCoeff();
    if (cols.empty()) return grad_f.cwiseAbs().maxCoeff() / denom;
    Eigen::MatrixXd jac(2 * n, static_cast<Eigen::Index>(cols.size()));
    for (std::size_t i = 0; i < cols.size(); ++i) jac.col(static_cast<Eigen::Index>(i)) = cols[i];
    const Eigen::VectorXd lambda = jac.colPivHouseholderQr().solve(grad_f);
    double worst = (grad_f - jac * lambda).cwiseAbs().maxCoeff();
    for (Eigen::Index i = 0; i < lambda.size(); ++i) {
      worst = std::max(worst, -lambda(i) * jac.col(i).cwiseAbs().maxCoeff());
    }
    return worst / denom;
  }

  const std::vector<Position2D>& positions() const { return q_; }

 private:
  Vec2 ball_vector(const BallRow& b) const {
    const auto s = static_cast<std::size_t>(b.slot);
    return b.velocity ? v_[s] : Vec2(z_.segment<2>(2 * b.slot));
  }

  const TrajectorySubproblem& sub_;
  std::vector<LinearRow> rows_;
  std::vector<BallRow> balls_;
  std::vector<Position2D> q_;
  std::vector<Vec2> v_;
  Eigen::VectorXd z_;
};

Eigen::VectorXd pack(std::span<const Vec2> a) {
  Eigen::VectorXd z(2 * static_cast<Eigen::Index>(a.size()));
  for (std::size_t m = 0; m < a.size(); ++m) z.segment<2>(2 * static_cast<Eigen::Index>(m)) = a[m];
  return z;
}

std::vector<Vec2> unpack(const Eigen::VectorXd& z) {
  std::vector<Vec2> a(static_cast<std::size_t>(z.size() / 2));
  for (std::size_t m = 0; m < a.size(); ++m) a[m] = z.segment<2>(2 * static_cast<Eigen::Index>(m));
  return a;
}

// Solves H x = -g with symmetric diagonal equilibration. Returns false if
// the factorization fails even after a small ridge.
bool newton_direction(const Eigen::MatrixXd& h, const Eigen::VectorXd& g, Eigen::VectorXd& dx) {
  Eigen::VectorXd d = h.diagonal().cwiseMax(1e-300).cwiseSqrt().cwiseInverse();
  Eigen::MatrixXd scaled = d.asDiagonal() * h * d.asDiagonal();
  for (double ridge : {0.0, 1e-12, 1e-9}) {
    Eigen::LLT<Eigen::MatrixXd> llt(scaled + ridge * Eigen::MatrixXd::Identity(h.rows(), h.cols()));
    if (llt.info() == Eigen::Success) {
      dx = d.asDiagonal() * llt.solve(-(d.asDiagonal() * g));
      if (dx.allFinite()) return true;
    }
  }
  return false;
}

SubproblemSolution make_solution(const TrajectorySubproblem& sub, const Eigen::VectorXd& z) {
  SubproblemSolution out;
  out.accelerations = unpack(z);
  out.track = propagate(sub.start_pos, sub.start_vel, out.accelerations, sub.slot_len);
  out.objective_value = positional_objective(sub, out.track.position);
  return out;
}

}  // namespace

SubproblemSolution solve(const TrajectorySubproblem& sub, std::span<const Vec2> warm_start,
                         const SolverSettings& settings) {
  if (sub.free_positions) contract_fail("solve: use solve_free for free-position subproblems");
  if (static_cast<int>(warm_start.size()) != sub.n_slots) {
    contract_fail(fmt::format("solve: warm start has {} accelerations, expected {}",
                              warm_start.size(), sub.n_slots));
  }
  const Eigen::VectorXd z_warm = pack(warm_start);
  SubproblemSolution warm = make_solution(sub, z_warm);
  warm.kept_warm_start = true;
  if (sub.n_slots == 0 || sub.v_cap <= 0.0 || sub.a_cap <= 0.0) return warm;

  BarrierProblem prob(sub, settings.separation_slack);
  prob.interiorize(z_warm);
  prob.states(z_warm);

  // Normalize the objective so its variation across the acceleration
  // ball is of order one; barrier weights are then scale-free.
  Eigen::VectorXd g_raw;
  Eigen::MatrixXd h_raw;
  prob.derivatives(1.0, 0.0, g_raw, &h_raw);
  const double spread =
      g_raw.cwiseAbs().maxCoeff() * sub.a_cap + h_raw.diagonal().maxCoeff() * sub.a_cap * sub.a_cap;
  if (!(spread > 0.0) || !std::isfinite(spread)) return warm;
  const double scale = 1.0 / spread;

  Eigen::VectorXd z = z_warm;
  Eigen::VectorXd grad, grad_f, dx;
  Eigen::MatrixXd hess;
  int steps = 0;
  bool failed = false;
  bool final_converged = false;
  double kkt = std::numeric_limits<double>::infinity();
  for (double mu = settings.mu_initial;; mu *= settings.mu_factor) {
    const bool last = mu <= settings.mu_final;
    bool centered = false;
    while (steps < settings.max_newton_steps) {
      prob.states(z);
      prob.derivatives(scale, mu, grad, &hess);
      prob.derivatives(scale, 0.0, grad_f, nullptr);
      kkt = grad.cwiseAbs().maxCoeff() / (1.0 + grad_f.cwiseAbs().maxCoeff());
      if (kkt <= 1e-3 * settings.kkt_tolerance) {
        centered = true;
        break;
      }
      if (!newton_direction(hess, grad, dx)) {
        failed = true;
        break;
      }
      // Stop once the predicted decrease is lost in the rounding of the
      // merit itself; further line searches cannot make progress.
      const double decrement = -grad.dot(dx);
      const double f0 = prob.merit(scale, mu);
      if (decrement <= kMeritPrecision * std::max(1.0, std::abs(f0))) {
        centered = true;
        break;
      }
      ++steps;
      double t = 1.0;
      bool accepted = false;
      for (int ls = 0; ls < 80; ++ls, t *= 0.5) {
        prob.states(z + t * dx);
        if (prob.min_slack() <= 0.0) continue;
        if (prob.merit(scale, mu) <= f0 - 1e-4 * t * decrement) {
          accepted = true;
          break;
        }
      }
      if (!accepted) {
        // No progress possible at this weight: treat as centered.
        prob.states(z);
        centered = true;
        break;
      }
      z += t * dx;
      // Intermediate weights only need rough centering.
      if (!last && decrement <= kCenteringDecrement) {
        centered = true;
        break;
      }
    }
    if (failed || !centered) break;
    if (last) {
      final_converged = true;
      break;
    }
  }

  // The barrier gradient stays large next to active bounds even when Newton
  // can make no further progress, so optimality is judged by the KKT
  // residual of the returned point instead.
  prob.states(z);
  kkt = prob.kkt_residual(scale, kActiveTolerance);
  SubproblemSolution out = make_solution(sub, z);
  out.newton_steps = steps;
  out.kkt_residual = kkt;
  out.status = failed ? SolverStatus::numerical_failure
               : (final_converged && kkt <= settings.kkt_tolerance) ? SolverStatus::optimal
                                                                    : SolverStatus::max_iter;
  if (!(out.objective_value <= warm.objective_value + 1e-12 * std::abs(warm.objective_value))) {
    warm.newton_steps = steps;
    warm.kkt_residual = kkt;
    warm.status = out.status;
    return warm;
  }
  return out;
}

namespace {

struct Line {
  Vec2 normal;
  double bound;  // normal^T q >= bound
};

}  // namespace

SubproblemSolution solve_free(const TrajectorySubproblem& sub,
                              std::span<const Position2D> warm_positions) {
  const auto len = static_cast<std::size_t>(sub.n_slots) + 1;
  if (warm_positions.size() != len) contract_fail("solve_free: warm start length mismatch");
  constexpr double feas_tol = 1e-12;
  SubproblemSolution out;
  out.track.position.resize(len);
  out.track.velocity.assign(len, Vec2::Zero());
  out.track.acceleration.assign(len, Vec2::Zero());
  for (std::size_t n = 0; n < len; ++n) {
    std::vector<Line> lines = {{Vec2(1, 0), sub.box_lo},
                               {Vec2(0, 1), sub.box_lo},
                               {Vec2(-1, 0), -sub.box_hi},
                               {Vec2(0, -1), -sub.box_hi}};
    for (const auto& h : sub.half_spaces[n]) {
      lines.push_back({h.normal, h.normal.dot(h.fixed_point) + h.min_sep});
    }
    const double c = sub.curvature[n];
    const Vec2& l = sub.linear[n];
    auto value = [&](const Position2D& q) { return 0.5 * c * q.squaredNorm() + l.dot(q); };
    auto feasible = [&](const Position2D& q) {
      return std::all_of(lines.begin(), lines.end(),
                         [&](const Line& ln) { return ln.normal.dot(q) - ln.bound >= -feas_tol; });
    };
    Position2D best = warm_positions[n];
    double best_val = feasible(best) ? value(best) : std::numeric_limits<double>::infinity();
    auto consider = [&](const Position2D& q) {
      if (q.allFinite() && feasible(q) && value(q) < best_val) {
        best = q;
        best_val = value(q);
      }
    };
    // The optimum of a convex quadratic over a polygon is either the free
    // minimizer, a minimizer on one edge line, or a vertex.
    if (c > 0.0) {
      consider(-l / c);
      for (const auto& ln : lines) {
        const Position2D free_min = -l / c;
        consider(free_min + (ln.bound - ln.normal.dot(free_min)) * ln.normal);
      }
    }
    for (std::size_t i = 0; i < lines.size(); ++i) {
      for (std::size_t j = i + 1; j < lines.size(); ++j) {
        Eigen::Matrix2d a;
        a.row(0) = lines[i].normal;
        a.row(1) = lines[j].normal;
        if (std::abs(a.determinant()) < 1e-12) continue;
        consider(a.inverse() * Vec2(lines[i].bound, lines[j].bound));
      }
    }
    out.track.position[n] = best;
  }
  out.objective_value = positional_objective(sub, out.track.position);
  return out;
}

nlohmann::json subproblem_to_json(const TrajectorySubproblem& sub) {
  nlohmann::json j;
  j["n_slots"] = sub.n_slots;
  j["slot_len"] = sub.slot_len;
  j["start_pos"] = {sub.start_pos.x(), sub.start_pos.y()};
  j["start_vel"] = {sub.start_vel.x(), sub.start_vel.y()};
  j["curvature"] = sub.curvature;
  nlohmann::json lin = nlohmann::json::array();
  for (const auto& l : sub.linear) lin.push_back({l.x(), l.y()});
  j["linear"] = std::move(lin);
  j["box"] = {sub.box_lo, sub.box_hi};
  j["v_cap"] = sub.v_cap;
  j["a_cap"] = sub.a_cap;
  j["free_positions"] = sub.free_positions;
  nlohmann::json hs = nlohmann::json::array();
  for (const auto& slot : sub.half_spaces) {
    nlohmann::json row = nlohmann::json::array();
    for (const auto& h : slot) {
      row.push_back({{"normal", {h.normal.x(), h.normal.y()}},
                     {"fixed_point", {h.fixed_point.x(), h.fixed_point.y()}},
                     {"min_sep", h.min_sep}});
    }
    hs.push_back(std::move(row));
  }
  j["half_spaces"] = std::move(hs);
  return j;
}

}  // namespace ctfa
