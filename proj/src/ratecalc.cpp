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

#include "ctfa/ratecalc.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <fmt/format.h>

#include "ctfa/errors.hpp"

namespace ctfa {

namespace {

void require_psd(const ComplexMatrix& q, const char* who) {
  if (q.rows() != q.cols()) contract_fail(fmt::format("{}: covariance is not square", who));
  if (!is_hermitian(q)) contract_fail(fmt::format("{}: covariance is not Hermitian", who));
  const double scale = std::max(1.0, q.cwiseAbs().maxCoeff());
  if (q.size() > 0 && hermitian_min_eig(q) < -1e-9 * scale) {
    contract_fail(fmt::format("{}: covariance is not positive semidefinite", who));
  }
}

ComplexMatrix identity(Eigen::Index n) { return ComplexMatrix::Identity(n, n); }

}  // namespace

double rate_nats(const ComplexMatrix& h, const ComplexMatrix& q, double noise_var) {
  require_psd(q, "rate");
  if (h.cols() != q.rows()) contract_fail("rate: channel and covariance sizes differ");
  const ComplexMatrix m = identity(h.rows()) + h * q * h.adjoint() / noise_var;
  return std::max(0.0, log_det_hpd(m));
}

double instantaneous_rate(const ComplexMatrix& h, const ComplexMatrix& q, double noise_var) {
  return rate_nats(h, q, noise_var) / std::numbers::ln2;
}

double total_throughput(std::span<const ComplexMatrix> channels,
                        std::span<const ComplexMatrix> covariances, double slot_len,
                        double noise_var) {
  if (channels.size() != covariances.size()) contract_fail("throughput: slot counts differ");
  double acc = 0.0;
  for (std::size_t n = 0; n < channels.size(); ++n) {
    acc += instantaneous_rate(channels[n], covariances[n], noise_var);
  }
  return slot_len * acc;
}

ComplexMatrix mse_matrix(const ComplexMatrix& h, const ComplexMatrix& q, const ComplexMatrix& u,
                         double noise_var) {
  const double sigma = std::sqrt(noise_var);
  const ComplexMatrix r = identity(q.rows()) - u.adjoint() * h * psd_sqrt(q) / sigma;
  return hermitian_part(r * r.adjoint() + u.adjoint() * u);
}

double wmmse_slot_term(const ComplexMatrix& w, const ComplexMatrix& e) {
  Eigen::LLT<ComplexMatrix> llt(hermitian_part(w));
  if (llt.info() != Eigen::Success) contract_fail("wmmse objective: W is not positive definite");
  return log_det_hpd(w) - (w * e).trace().real();
}

double wmmse_objective(std::span<const ComplexMatrix> w, std::span<const ComplexMatrix> e) {
  if (w.size() != e.size()) contract_fail("wmmse objective: slot counts differ");
  double acc = 0.0;
  for (std::size_t n = 0; n < w.size(); ++n) acc += wmmse_slot_term(w[n], e[n]);
  return acc;
}

Eigen::VectorXd waterfill_levels(const Eigen::VectorXd& singulars, double power, double noise_var) {
  const Eigen::Index s = singulars.size();
  Eigen::VectorXd floor(s);
  for (Eigen::Index i = 0; i < s; ++i) floor(i) = noise_var / (singulars(i) * singulars(i));
  auto allocated = [&](double nu) {
    return (nu - floor.array()).max(0.0).sum();
  };
  // allocated() is continuous and non-decreasing; this bracket always
  // contains the level where it equals `power`.
  double lo = 0.0;
  double hi = power + floor.maxCoeff();
  for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (allocated(mid) < power) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  // Recompute the level exactly from the active set so the trace is P to
  // rounding.
  const double nu_guess = 0.5 * (lo + hi);
  double floor_sum = 0.0;
  int active = 0;
  for (Eigen::Index i = 0; i < s; ++i) {
    if (floor(i) < nu_guess) {
      floor_sum += floor(i);
      ++active;
    }
  }
  const double nu = active > 0 ? (power + floor_sum) / active : nu_guess;
  Eigen::VectorXd p(s);
  for (Eigen::Index i = 0; i < s; ++i) p(i) = std::max(0.0, nu - floor(i));
  return p;
}

ComplexMatrix waterfill(const ComplexMatrix& h, double power, double noise_var) {
  const SvdFactors svd = truncated_svd(h);
  if (svd.rank() == 0) throw Error(ErrorKind::zero_channel, "waterfill: channel is zero");
  const Eigen::VectorXd p = waterfill_levels(svd.singulars, power, noise_var);
  return hermitian_part(svd.right * p.cast<cd>().asDiagonal() * svd.right.adjoint());
}

ComplexMatrix update_u(const ComplexMatrix& h, const ComplexMatrix& q, double noise_var) {
  const double sigma = std::sqrt(noise_var);
  const ComplexMatrix m = identity(h.rows()) + h * q * h.adjoint() / noise_var;
  return hpd_inverse(m) * h * psd_sqrt(q) / sigma;
}

ComplexMatrix update_w(const ComplexMatrix& h, const ComplexMatrix& q, const ComplexMatrix& u_star,
                       double noise_var, bool* ridged) {
  ComplexMatrix e = mse_matrix(h, q, u_star, noise_var);
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(e, Eigen::EigenvaluesOnly);
  const double hi = es.eigenvalues().maxCoeff();
  const double lo = es.eigenvalues().minCoeff();
  const bool singular = !(lo > 0.0) || hi / lo > 1e12;
  if (ridged) *ridged = singular;
  if (singular) e += 1e-12 * identity(e.rows());
  return hpd_inverse(e);
}

VariationalCheck variational_rate_check(const ComplexMatrix& h, const ComplexMatrix& v,
                              const ComplexMatrix& z) {
  const ComplexMatrix hv = h * v;
  VariationalCheck out;
  // det(I + A Z^{-1}) = det(Z + A) / det(Z) keeps both factors Hermitian.
  out.direct = log_det_hpd(z + hv * hv.adjoint()) - log_det_hpd(z);
  const ComplexMatrix u = hpd_inverse(hv * hv.adjoint() + z) * hv;
  const ComplexMatrix r = identity(v.cols()) - u.adjoint() * hv;
  const ComplexMatrix e = hermitian_part(r * r.adjoint() + u.adjoint() * z * u);
  const ComplexMatrix w = hpd_inverse(e);
  out.variational = log_det_hpd(w) - (w * e).trace().real() + static_cast<double>(v.cols());
  return out;
}

}  // namespace ctfa
