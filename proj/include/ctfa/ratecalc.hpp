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

#include "ctfa/numerics.hpp"

namespace ctfa {

/// Per-slot transmit covariances Q_0..Q_N.
struct CovarianceSchedule {
  std::vector<ComplexMatrix> q_mat;
};

/// Per-slot receive filters U_n (N_r x N_t) and weights W_n (N_t x N_t),
/// plus the cached objective h1 in nats.
struct WmmseState {
  std::vector<ComplexMatrix> u_mat;
  std::vector<ComplexMatrix> w_mat;
  double objective = 0.0;
};

/// ln det(I + H Q H^H / noise_var). Throws contract_violation when Q is not
/// Hermitian PSD (eigenvalues below -1e-9 relative).
double rate_nats(const ComplexMatrix& h, const ComplexMatrix& q, double noise_var);

/// Same rate in bits.
double instantaneous_rate(const ComplexMatrix& h, const ComplexMatrix& q, double noise_var);

/// slot_len times the sum of per-slot rates, in bits.
double total_throughput(std::span<const ComplexMatrix> channels,
                        std::span<const ComplexMatrix> covariances, double slot_len,
                        double noise_var);

/// E = (I - U^H H Q^{1/2} / sigma)(...)^H + U^H U, an N_t x N_t matrix.
ComplexMatrix mse_matrix(const ComplexMatrix& h, const ComplexMatrix& q, const ComplexMatrix& u,
                         double noise_var);

/// Sum over slots of ln det W_n - tr(W_n E_n). Throws contract_violation if
/// some W_n is not positive definite.
double wmmse_objective(std::span<const ComplexMatrix> w, std::span<const ComplexMatrix> e);

/// ln det W - tr(W E) for one slot.
double wmmse_slot_term(const ComplexMatrix& w, const ComplexMatrix& e);

/// Capacity-achieving covariance with trace `power`. Throws zero_channel
/// when H has rank 0.
ComplexMatrix waterfill(const ComplexMatrix& h, double power, double noise_var);

/// Power levels max(0, nu - noise_var / xi_s^2) summing to `power`; the
/// water level nu is located by bisection and then fixed exactly from the
/// active set.
Eigen::VectorXd waterfill_levels(const Eigen::VectorXd& singulars, double power, double noise_var);

/// U* = (I + H Q H^H / noise_var)^{-1} H Q^{1/2} / sigma.
ComplexMatrix update_u(const ComplexMatrix& h, const ComplexMatrix& q, double noise_var);

/// W* = E(U*)^{-1}. If E is numerically singular (condition number above
/// 1e12) a 1e-12 ridge is added and `ridged` is set.
ComplexMatrix update_w(const ComplexMatrix& h, const ComplexMatrix& q, const ComplexMatrix& u_star,
                       double noise_var, bool* ridged = nullptr);

struct VariationalCheck {
  double direct = 0.0;
  double variational = 0.0;
};

/// Both sides of ln det(I + H V V^H H^H Z^{-1}) = max_{W, U} ln det W -
/// tr(W E(U, V)) + m, with the right side evaluated at the analytic
/// maximizers for noise covariance Z.
VariationalCheck variational_rate_check(const ComplexMatrix& h, const ComplexMatrix& v,
                              const ComplexMatrix& z);

}  // namespace ctfa
