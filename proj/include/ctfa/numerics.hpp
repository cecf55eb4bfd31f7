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

#include <complex>

#include <Eigen/Dense>

namespace ctfa {

using cd = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;
using Vec2 = Eigen::Vector2d;
using Position2D = Eigen::Vector2d;

/// Thin SVD restricted to the numerically nonzero singular values.
/// `left` is rows x S, `right` is cols x S, singulars descending and > 0.
struct SvdFactors {
  ComplexMatrix left;
  Eigen::VectorXd singulars;
  ComplexMatrix right;

  Eigen::Index rank() const { return singulars.size(); }
};

/// Singular values below this fraction of the largest are treated as zero.
inline constexpr double kRankTolerance = 1e-10;

bool all_finite(const ComplexMatrix& m);

/// True when max|m - m^H| <= tol * max(1, max|m|).
bool is_hermitian(const ComplexMatrix& m, double tol = 1e-10);

/// (m + m^H) / 2
ComplexMatrix hermitian_part(const ComplexMatrix& m);

/// Largest eigenvalue of a Hermitian matrix. Throws contract_violation for
/// non-square or non-Hermitian input.
double hermitian_max_eig(const ComplexMatrix& m);

SvdFactors truncated_svd(const ComplexMatrix& m);

/// Hermitian PSD square root. Eigenvalues in [-1e-6, 0) are clamped to zero,
/// anything more negative throws not_psd.
ComplexMatrix psd_sqrt(const ComplexMatrix& q);

/// Smallest eigenvalue of the Hermitian part.
double hermitian_min_eig(const ComplexMatrix& m);

/// Natural-log determinant of a Hermitian positive definite matrix.
double log_det_hpd(const ComplexMatrix& m);

/// Inverse of a Hermitian positive definite matrix, symmetrized.
ComplexMatrix hpd_inverse(const ComplexMatrix& m);

}  // namespace ctfa
