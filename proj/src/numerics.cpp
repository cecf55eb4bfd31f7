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

#include "ctfa/numerics.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "ctfa/errors.hpp"

namespace ctfa {

namespace {

void require_square(const ComplexMatrix& m, const char* who) {
  if (m.rows() != m.cols()) {
    contract_fail(fmt::format("{}: expected a square matrix, got {}x{}", who, m.rows(), m.cols()));
  }
}

void require_finite(const ComplexMatrix& m, const char* who) {
  if (!all_finite(m)) {
    throw Error(ErrorKind::non_finite, fmt::format("{}: input contains NaN or Inf", who));
  }
}

}  // namespace

bool all_finite(const ComplexMatrix& m) {
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      if (!std::isfinite(m(i, j).real()) || !std::isfinite(m(i, j).imag())) return false;
    }
  }
  return true;
}

bool is_hermitian(const ComplexMatrix& m, double tol) {
  if (m.rows() != m.cols()) return false;
  if (m.size() == 0) return true;
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  return (m - m.adjoint()).cwiseAbs().maxCoeff() <= tol * scale;
}

ComplexMatrix hermitian_part(const ComplexMatrix& m) { return 0.5 * (m + m.adjoint()); }

double hermitian_max_eig(const ComplexMatrix& m) {
  require_square(m, "hermitian_max_eig");
  require_finite(m, "hermitian_max_eig");
  if (m.size() == 0) contract_fail("hermitian_max_eig: empty matrix");
  if (!is_hermitian(m)) contract_fail("hermitian_max_eig: matrix is not Hermitian");
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(hermitian_part(m), Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff();
}

double hermitian_min_eig(const ComplexMatrix& m) {
  require_square(m, "hermitian_min_eig");
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(hermitian_part(m), Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

SvdFactors truncated_svd(const ComplexMatrix& m) {
  require_finite(m, "truncated_svd");
  SvdFactors out;
  if (m.size() == 0) {
    out.left.resize(m.rows(), 0);
    out.right.resize(m.cols(), 0);
    return out;
  }
  Eigen::JacobiSVD<ComplexMatrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd& s = svd.singularValues();
  const double largest = s.size() > 0 ? s(0) : 0.0;
  Eigen::Index rank = 0;
  if (largest > 0.0) {
    while (rank < s.size() && s(rank) > kRankTolerance * largest) ++rank;
  }
  out.singulars = s.head(rank);
  out.left = svd.matrixU().leftCols(rank);
  out.right = svd.matrixV().leftCols(rank);
  return out;
}

ComplexMatrix psd_sqrt(const ComplexMatrix& q) {
  require_square(q, "psd_sqrt");
  require_finite(q, "psd_sqrt");
  if (q.size() == 0) return q;
  if (!is_hermitian(q)) contract_fail("psd_sqrt: matrix is not Hermitian");
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(hermitian_part(q));
  Eigen::VectorXd lam = es.eigenvalues();
  for (Eigen::Index i = 0; i < lam.size(); ++i) {
    if (lam(i) < -1e-6) {
      throw Error(ErrorKind::not_psd, fmt::format("psd_sqrt: eigenvalue {} below -1e-6", lam(i)));
    }
    lam(i) = std::sqrt(std::max(lam(i), 0.0));
  }
  const ComplexMatrix& v = es.eigenvectors();
  return hermitian_part(v * lam.asDiagonal() * v.adjoint());
}

double log_det_hpd(const ComplexMatrix& m) {
  require_square(m, "log_det_hpd");
  Eigen::LLT<ComplexMatrix> llt(hermitian_part(m));
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorKind::not_psd, "log_det_hpd: matrix is not positive definite");
  }
  const auto& l = llt.matrixLLT();
  double acc = 0.0;
  for (Eigen::Index i = 0; i < l.rows(); ++i) acc += std::log(l(i, i).real());
  return 2.0 * acc;
}

ComplexMatrix hpd_inverse(const ComplexMatrix& m) {
  require_square(m, "hpd_inverse");
  Eigen::LLT<ComplexMatrix> llt(hermitian_part(m));
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorKind::not_psd, "hpd_inverse: matrix is not positive definite");
  }
  ComplexMatrix inv = llt.solve(ComplexMatrix::Identity(m.rows(), m.cols()));
  return hermitian_part(inv);
}

}  // namespace ctfa
