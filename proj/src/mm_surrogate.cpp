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

#include "ctfa/mm_surrogate.hpp"

#include <cmath>
#include <numbers>

#include "ctfa/errors.hpp"
#include "ctfa/ratecalc.hpp"

namespace ctfa {

namespace {

// Shared shape of both sides: with M = sum_i v_i s_i^H over the active
// side's field responses v_i and square-root columns s_i,
//   tr(W E) = tr(M^H C M) - 2 Re sum_i v_i^H a_i + fixed,
// where a_i are the columns of `a_mat`.
SlotCoefficients split_element(int element, const ComplexMatrix& responses,
                               const ComplexMatrix& root, const ComplexMatrix& c_mat,
                               const ComplexMatrix& a_mat, double fixed) {
  const Eigen::Index count = responses.cols();
  if (element < 0 || element >= count) contract_fail("element index out of range");
  const Eigen::Index k = element;
  ComplexMatrix rest = ComplexMatrix::Zero(responses.rows(), root.rows());
  double cross = 0.0;
  for (Eigen::Index i = 0; i < count; ++i) {
    if (i == k) continue;
    rest += responses.col(i) * root.col(i).adjoint();
    cross += (responses.col(i).adjoint() * a_mat.col(i))(0, 0).real();
  }
  SlotCoefficients out;
  out.b_mat = hermitian_part(root.col(k).squaredNorm() * c_mat);
  out.d_vec = c_mat * rest * root.col(k) - a_mat.col(k);
  out.phi_scale = hermitian_max_eig(out.b_mat);
  out.const_term = fixed - 2.0 * cross + (rest.adjoint() * c_mat * rest).trace().real();
  return out;
}

}  // namespace

SlotCoefficients slot_coefficients(Side side, int element, const SlotSnapshot& snap,
                                   const ChannelGeometry& geometry, double wavelength,
                                   double noise_var) {
  const double sigma = std::sqrt(noise_var);
  const ComplexMatrix& sig = geometry.path_response;
  const ComplexMatrix g = field_response_matrix(snap.tx_positions, Side::tx, geometry, wavelength);
  const ComplexMatrix f = field_response_matrix(snap.rx_positions, Side::rx, geometry, wavelength);
  const ComplexMatrix q_root = psd_sqrt(snap.q);
  const ComplexMatrix& u = snap.u;
  const ComplexMatrix& w = snap.w;
  const double fixed = w.trace().real() + (w * u.adjoint() * u).trace().real();
  if (side == Side::tx) {
    const ComplexMatrix c_mat = hermitian_part(sig.adjoint() * f * u * w * u.adjoint() * f.adjoint() * sig / noise_var);
    const ComplexMatrix a_mat = sig.adjoint() * f * u * w * q_root / sigma;
    return split_element(element, g, q_root, c_mat, a_mat, fixed);
  }
  const ComplexMatrix c_mat = hermitian_part(sig * g * snap.q * g.adjoint() * sig.adjoint() / noise_var);
  const ComplexMatrix l_root = psd_sqrt(hermitian_part(u * w * u.adjoint()));
  const ComplexMatrix a_mat = sig * g * q_root * w * u.adjoint() / sigma;
  return split_element(element, f, l_root, c_mat, a_mat, fixed);
}

double coefficient_value(const SlotCoefficients& c, const ComplexVector& g) {
  const double quad = (g.adjoint() * c.b_mat * g)(0, 0).real();
  const double lin = 2.0 * (g.adjoint() * c.d_vec)(0, 0).real();
  return quad + lin + c.const_term;
}

double direct_trace_we(const SlotSnapshot& snap, const ChannelGeometry& geometry,
                       double wavelength, double noise_var) {
  const ComplexMatrix h =
      assemble_channel(snap.tx_positions, snap.rx_positions, geometry, wavelength);
  return (snap.w * mse_matrix(h, snap.q, snap.u, noise_var)).trace().real();
}

ComplexVector eta(const SlotCoefficients& c, const Position2D& expansion_point, Side side,
                  const ChannelGeometry& geometry, double wavelength) {
  const ComplexVector g0 = field_response_vector(expansion_point, geometry.elevations(side),
                                                 geometry.azimuths(side), wavelength);
  return c.d_vec - (c.phi_scale * g0 - c.b_mat * g0);
}

double majorizer_offset(const SlotCoefficients& c, const Position2D& expansion_point, Side side,
                        const ChannelGeometry& geometry, double wavelength) {
  const ComplexVector g0 = field_response_vector(expansion_point, geometry.elevations(side),
                                                 geometry.azimuths(side), wavelength);
  const double paths = static_cast<double>(g0.size());
  const double gap = c.phi_scale * g0.squaredNorm() - (g0.adjoint() * c.b_mat * g0)(0, 0).real();
  return paths * c.phi_scale + gap;
}

double tau_value(const ComplexVector& eta_vec, const Position2D& q, Side side,
                 const ChannelGeometry& geometry, double wavelength) {
  const ComplexVector g =
      field_response_vector(q, geometry.elevations(side), geometry.azimuths(side), wavelength);
  return 2.0 * (g.adjoint() * eta_vec)(0, 0).real();
}

SurrogateDerivatives surrogate_derivatives(const ComplexVector& eta_vec, const Position2D& q,
                                           std::span<const double> elevations,
                                           std::span<const double> azimuths, double wavelength) {
  const double k = 2.0 * std::numbers::pi / wavelength;
  SurrogateDerivatives out;
  double magnitude_sum = 0.0;
  for (Eigen::Index i = 0; i < eta_vec.size(); ++i) {
    const auto idx = static_cast<std::size_t>(i);
    const double mag = std::abs(eta_vec(i));
    magnitude_sum += mag;
    if (mag == 0.0) continue;
    const Vec2 dir(std::sin(elevations[idx]) * std::cos(azimuths[idx]), std::cos(elevations[idx]));
    const double kappa = k * dir.dot(q) - std::arg(eta_vec(i));
    out.gradient += -2.0 * k * mag * std::sin(kappa) * dir;
    out.hessian += -2.0 * k * k * mag * std::cos(kappa) * dir * dir.transpose();
  }
  out.curvature = 4.0 * k * k * magnitude_sum;
  return out;
}

SlotSurrogate build_surrogate(double tau_at_expansion, const SurrogateDerivatives& derivs,
                              const Position2D& expansion_point) {
  SlotSurrogate s;
  s.curvature = derivs.curvature;
  s.linear = derivs.gradient - derivs.curvature * expansion_point;
  s.expansion_point = expansion_point;
  s.anchor_value = tau_at_expansion;
  s.offset = tau_at_expansion + 0.5 * derivs.curvature * expansion_point.squaredNorm() -
             derivs.gradient.dot(expansion_point);
  return s;
}

HalfSpace linearize_separation(const Position2D& moving_prev, const Position2D& fixed_point,
                               double min_sep) {
  const Vec2 diff = moving_prev - fixed_point;
  const double dist = diff.norm();
  if (!(dist > 1e-9)) {
    throw Error(ErrorKind::degenerate_geometry, "separation linearized at coincident points");
  }
  return {diff / dist, fixed_point, min_sep};
}

}  // namespace ctfa
