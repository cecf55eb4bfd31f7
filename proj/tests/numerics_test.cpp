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
#include <gtest/gtest.h>

#include <random>

#include "ctfa/errors.hpp"
#include "ctfa/numerics.hpp"
#include "oracles.hpp"

namespace ctfa {
namespace {

ComplexMatrix diag3(double a, double b, double c) {
  ComplexMatrix m = ComplexMatrix::Zero(3, 3);
  m(0, 0) = a;
  m(1, 1) = b;
  m(2, 2) = c;
  return m;
}

TEST(HermitianMaxEig, IdentityGivesOne) {
  EXPECT_NEAR(hermitian_max_eig(ComplexMatrix::Identity(3, 3)), 1.0, 1e-12);
}

TEST(HermitianMaxEig, DiagonalPicksLargest) {
  EXPECT_NEAR(hermitian_max_eig(diag3(1, 3, 2)), 3.0, 1e-12);
}

TEST(HermitianMaxEig, MatchesJacobiOracleOnRandomPsd) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const ComplexMatrix m = oracle::random_hpd(4, rng, 0.0);
    const double expected = oracle::hermitian_eigenvalues(m).back();
    EXPECT_NEAR(hermitian_max_eig(m), expected, 1e-9 * std::abs(expected));
  }
}

TEST(HermitianMaxEig, RejectsNonSquareAndNonHermitian) {
  EXPECT_THROW(hermitian_max_eig(ComplexMatrix::Zero(2, 3)), Error);
  ComplexMatrix m = ComplexMatrix::Identity(2, 2);
  m(0, 1) = 1.0;
  try {
    hermitian_max_eig(m);
    FAIL() << "expected a contract violation";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::contract_violation);
  }
}

TEST(HermitianMaxEig, ScalesWithPositiveFactor) {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 20; ++trial) {
    const ComplexMatrix m = oracle::random_hpd(3, rng);
    const double alpha = 0.1 + 5.0 * trial;
    EXPECT_NEAR(hermitian_max_eig(alpha * m), alpha * hermitian_max_eig(m),
                1e-9 * alpha * hermitian_max_eig(m));
  }
}

TEST(TruncatedSvd, IdentityHasUnitSingulars) {
  const SvdFactors f = truncated_svd(ComplexMatrix::Identity(2, 2));
  ASSERT_EQ(f.rank(), 2);
  EXPECT_NEAR(f.singulars(0), 1.0, 1e-12);
  EXPECT_NEAR(f.singulars(1), 1.0, 1e-12);
}

TEST(TruncatedSvd, RankOneOuterProduct) {
  ComplexVector u(3), v(2);
  u << cd(2.0, 0.0), 0.0, 0.0;
  v << 0.0, cd(0.0, 3.0);
  const SvdFactors f = truncated_svd(u * v.adjoint());
  ASSERT_EQ(f.rank(), 1);
  EXPECT_NEAR(f.singulars(0), 6.0, 1e-12);
}

TEST(TruncatedSvd, ReconstructsRandomMatrix) {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 20; ++trial) {
    const ComplexMatrix m = oracle::random_complex(4, 3, rng);
    const SvdFactors f = truncated_svd(m);
    ComplexMatrix scaled = f.left;
    for (Eigen::Index s = 0; s < f.rank(); ++s) scaled.col(s) *= f.singulars(s);
    const ComplexMatrix back = oracle::multiply(scaled, oracle::adjoint(f.right));
    EXPECT_LT((back - m).norm(), 1e-9);
    EXPECT_LT((f.left.adjoint() * f.left - ComplexMatrix::Identity(f.rank(), f.rank())).norm(), 1e-10);
    EXPECT_LT((f.right.adjoint() * f.right - ComplexMatrix::Identity(f.rank(), f.rank())).norm(), 1e-10);
    for (Eigen::Index s = 1; s < f.rank(); ++s) EXPECT_GE(f.singulars(s - 1), f.singulars(s));
  }
}

TEST(TruncatedSvd, AdjointHasSameSingulars) {
  std::mt19937_64 rng(14);
  for (int trial = 0; trial < 20; ++trial) {
    const ComplexMatrix m = oracle::random_complex(2, 4, rng);
    const SvdFactors a = truncated_svd(m);
    const SvdFactors b = truncated_svd(m.adjoint());
    ASSERT_EQ(a.rank(), b.rank());
    EXPECT_LT((a.singulars - b.singulars).norm(), 1e-10);
  }
}

TEST(TruncatedSvd, ZeroMatrixHasRankZero) {
  EXPECT_EQ(truncated_svd(ComplexMatrix::Zero(2, 2)).rank(), 0);
}

TEST(PsdSqrt, DiagonalEntriesAreRooted) {
  ComplexMatrix q = ComplexMatrix::Zero(2, 2);
  q(0, 0) = 4.0;
  q(1, 1) = 9.0;
  const ComplexMatrix r = psd_sqrt(q);
  EXPECT_NEAR(std::abs(r(0, 0) - cd(2.0)), 0.0, 1e-12);
  EXPECT_NEAR(std::abs(r(1, 1) - cd(3.0)), 0.0, 1e-12);
  EXPECT_NEAR(std::abs(r(0, 1)), 0.0, 1e-12);
}

TEST(PsdSqrt, ZeroMapsToZero) {
  EXPECT_LT(psd_sqrt(ComplexMatrix::Zero(3, 3)).norm(), 1e-15);
}

TEST(PsdSqrt, SquareReconstructsAndCommutes) {
  std::mt19937_64 rng(15);
  for (int trial = 0; trial < 20; ++trial) {
    const ComplexMatrix q = oracle::random_hpd(3, rng, 0.0);
    const ComplexMatrix r = psd_sqrt(q);
    EXPECT_LT((oracle::multiply(r, r) - q).norm(), 1e-9);
    EXPECT_LT((oracle::multiply(r, q) - oracle::multiply(q, r)).norm(), 1e-8);
    EXPECT_TRUE(is_hermitian(r));
    EXPECT_GE(oracle::hermitian_eigenvalues(r).front(), -1e-10);
  }
}

TEST(PsdSqrt, ClampsTinyNegativeAndRejectsLargeNegative) {
  ComplexMatrix q = ComplexMatrix::Zero(2, 2);
  q(0, 0) = 1.0;
  q(1, 1) = -1e-11;
  EXPECT_NO_THROW(psd_sqrt(q));
  q(1, 1) = -1e-3;
  try {
    psd_sqrt(q);
    FAIL() << "expected not_psd";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::not_psd);
  }
}

TEST(LogDet, MatchesEliminationOracle) {
  std::mt19937_64 rng(16);
  for (int trial = 0; trial < 20; ++trial) {
    const ComplexMatrix m = oracle::random_hpd(4, rng);
    EXPECT_NEAR(log_det_hpd(m), std::log(std::abs(oracle::determinant(m))), 1e-9);
    EXPECT_LT((oracle::multiply(hpd_inverse(m), m) - ComplexMatrix::Identity(4, 4)).norm(), 1e-9);
  }
}

TEST(AllFinite, DetectsNaN) {
  ComplexMatrix m = ComplexMatrix::Identity(2, 2);
  EXPECT_TRUE(all_finite(m));
  m(1, 0) = cd(std::nan(""), 0.0);
  EXPECT_FALSE(all_finite(m));
  EXPECT_THROW(truncated_svd(m), Error);
}

}  // namespace
}  // namespace ctfa
