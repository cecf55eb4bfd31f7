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
#include <vector>

#include "ctfa/channel.hpp"
#include "ctfa/numerics.hpp"

namespace ctfa {

/// Everything one slot's decomposition depends on: the current covariance,
/// receive filter, weight and both arrays' positions.
struct SlotSnapshot {
  ComplexMatrix q;
  ComplexMatrix u;
  ComplexMatrix w;
  std::vector<Position2D> tx_positions;
  std::vector<Position2D> rx_positions;
};

/// tr(W E) as a function of one element's field response g:
///   g^H B g + 2 Re{g^H d} + const_term.
/// phi_scale is lambda_max(B), the majorizer Phi = phi_scale * I.
struct SlotCoefficients {
  ComplexMatrix b_mat;
  ComplexVector d_vec;
  double phi_scale = 0.0;
  double const_term = 0.0;
};

/// Coefficients for element `element` of `side` with every other variable
/// held at `snap`.
SlotCoefficients slot_coefficients(Side side, int element, const SlotSnapshot& snap,
                                   const ChannelGeometry& geometry, double wavelength,
                                   double noise_var);

/// g^H B g + 2 Re{g^H d} + const_term.
double coefficient_value(const SlotCoefficients& c, const ComplexVector& g);

/// tr(W E) with the snapshot's channel, evaluated directly.
double direct_trace_we(const SlotSnapshot& snap, const ChannelGeometry& geometry,
                       double wavelength, double noise_var);

/// eta = d - (phi_scale I - B) g(q0).
ComplexVector eta(const SlotCoefficients& c, const Position2D& expansion_point, Side side,
                  const ChannelGeometry& geometry, double wavelength);

/// L lambda_max + g0^H (Phi - B) g0: the position-free part of the
/// eigenvalue majorizer, so that g^H B g <= tau-part + this.
double majorizer_offset(const SlotCoefficients& c, const Position2D& expansion_point, Side side,
                        const ChannelGeometry& geometry, double wavelength);

/// tau(q) = 2 Re{g(q)^H eta}.
double tau_value(const ComplexVector& eta_vec, const Position2D& q, Side side,
                 const ChannelGeometry& geometry, double wavelength);

struct SurrogateDerivatives {
  Vec2 gradient = Vec2::Zero();
  Eigen::Matrix2d hessian = Eigen::Matrix2d::Zero();
  double curvature = 0.0;
};

/// Gradient and Hessian of tau at q, and the curvature bound
/// 16 pi^2 / lambda^2 * sum |eta_i| that dominates the Hessian everywhere.
SurrogateDerivatives surrogate_derivatives(const ComplexVector& eta_vec, const Position2D& q,
                                           std::span<const double> elevations,
                                           std::span<const double> azimuths, double wavelength);

/// gamma(q) = curvature / 2 q^T q + linear^T q. Adding `offset` gives an
/// upper bound on tau that touches it at the expansion point.
struct SlotSurrogate {
  double curvature = 0.0;
  Vec2 linear = Vec2::Zero();
  Position2D expansion_point = Position2D::Zero();
  double anchor_value = 0.0;
  double offset = 0.0;

  double value(const Position2D& q) const { return 0.5 * curvature * q.squaredNorm() + linear.dot(q); }
  double bound(const Position2D& q) const { return value(q) + offset; }
};

SlotSurrogate build_surrogate(double tau_at_expansion, const SurrogateDerivatives& derivs,
                              const Position2D& expansion_point);

/// Inner approximation of ||q - fixed_point|| >= min_sep:
/// normal^T (q - fixed_point) >= min_sep.
struct HalfSpace {
  Vec2 normal = Vec2::UnitX();
  Position2D fixed_point = Position2D::Zero();
  double min_sep = 0.0;

  double slack(const Position2D& q) const { return normal.dot(q - fixed_point) - min_sep; }
};

/// Throws degenerate_geometry when the points are closer than 1e-9.
HalfSpace linearize_separation(const Position2D& moving_prev, const Position2D& fixed_point,
                               double min_sep);

}  // namespace ctfa
