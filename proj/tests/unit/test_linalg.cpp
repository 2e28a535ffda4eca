#include "gma/errors.hpp"
#include "gma/linalg.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace gma;

namespace {

Mat rotation2(double a) {
  Mat q(2, 2);
  q << std::cos(a), -std::sin(a), std::sin(a), std::cos(a);
  return q;
}

SymMatrix with_spectrum(const Mat& q, const Vec& lambda) {
  return SymMatrix(Mat(q * lambda.asDiagonal() * q.transpose()));
}

SymMatrix random_sym(std::mt19937_64& rng, int d, double scale) {
  std::normal_distribution<double> n(0.0, scale);
  Mat a(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) a(i, j) = n(rng);
  return SymMatrix(Mat(0.5 * (a + a.transpose())));
}

}  // namespace

TEST(SymMatrix, EigenDescendingOrthonormal) {
  Vec lam(2);
  lam << 0.25, 3.0;
  auto a = with_spectrum(rotation2(0.3), lam);
  auto sd = a.eigen();
  EXPECT_NEAR(sd.values[0], 3.0, 1e-14);
  EXPECT_NEAR(sd.values[1], 0.25, 1e-14);
  EXPECT_NEAR((sd.vectors.transpose() * sd.vectors - Mat::Identity(2, 2)).norm(), 0.0, 1e-14);
  Mat back = sd.vectors * sd.values.asDiagonal() * sd.vectors.transpose();
  EXPECT_NEAR((back - a.matrix()).norm(), 0.0, 1e-14);
}

TEST(SymMatrix, RejectsNonSquare) { EXPECT_THROW(SymMatrix(Mat(2, 3)), InvalidArgument); }

TEST(Det2, ClosedFormOnKnownSpectrum) {
  Vec k(2);
  k << 0.5, -0.3;
  auto m = with_spectrum(rotation2(1.1), k);
  double expect = 1.5 * std::exp(-0.5) * 0.7 * std::exp(0.3);
  EXPECT_NEAR(det2(m), expect, 1e-15);
  EXPECT_NEAR(log_det2(m), std::log(expect), 1e-15);
  EXPECT_DOUBLE_EQ(det2(SymMatrix::zero(3)), 1.0);
}

TEST(Det2, AtMostOneWhenIdentityPlusKIsPsd) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    auto k = random_sym(rng, 3, 0.8);
    // shift so that I + K >= 0
    double lo = k.eigenvalues().minCoeff();
    if (lo < -1.0) k = k + SymMatrix::identity(3) * (-1.0 - lo);
    EXPECT_LE(det2(k), 1.0 + 1e-15);
  }
}

TEST(Det2, NegativeInfinityLogAtSingularity) {
  Vec k(1);
  k << -1.0;
  EXPECT_EQ(det2(SymMatrix::diagonal(k)), 0.0);
  EXPECT_EQ(log_det2(SymMatrix::diagonal(k)), -std::numeric_limits<double>::infinity());
}

TEST(Norms, MFunctionalOperatorHilbertSchmidtOrdering) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    auto a = random_sym(rng, 4, 1.0);
    double m = m_functional(a), op = op_norm(a), hs = hs_norm(a);
    EXPECT_LE(m, op + 1e-15);
    EXPECT_LE(op, hs + 1e-14);
    EXPECT_NEAR(hs, a.matrix().norm(), 1e-13);
    EXPECT_NEAR(m, a.eigenvalues().maxCoeff(), 1e-14);
    EXPECT_NEAR(op, a.eigenvalues().cwiseAbs().maxCoeff(), 1e-14);
  }
}

TEST(Norms, MIsSignedLargestEigenvalue) {
  Vec d(2);
  d << -2.0, -5.0;
  auto a = SymMatrix::diagonal(d);
  EXPECT_DOUBLE_EQ(m_functional(a), -2.0);
  EXPECT_DOUBLE_EQ(op_norm(a), 5.0);
}

TEST(SpectralHelpers, NonnegPartInverseSqrt) {
  Vec lam(2);
  lam << 4.0, -1.0;
  auto q = rotation2(0.7);
  auto a = with_spectrum(q, lam);
  Vec plus(2);
  plus << 4.0, 0.0;
  EXPECT_NEAR((nonneg_part(a).matrix() - with_spectrum(q, plus).matrix()).norm(), 0.0, 1e-14);

  lam << 4.0, 0.25;
  auto s = with_spectrum(q, lam);
  EXPECT_NEAR((spd_inverse(s).matrix() * s.matrix() - Mat::Identity(2, 2)).norm(), 0.0, 1e-14);
  auto r = spd_sqrt(s);
  EXPECT_NEAR((r.matrix() * r.matrix() - s.matrix()).norm(), 0.0, 1e-14);
  auto ri = spd_inv_sqrt(s);
  EXPECT_NEAR((ri.matrix() * s.matrix() * ri.matrix() - Mat::Identity(2, 2)).norm(), 0.0, 1e-14);
}

TEST(SpectralHelpers, InverseGuards) {
  EXPECT_THROW(spd_inverse(with_spectrum(rotation2(0.1), Vec::Constant(2, -1.0))), InvalidArgument);
  Vec lam(2);
  lam << 1.0, 1e-14;
  EXPECT_THROW(spd_inverse(with_spectrum(rotation2(0.1), lam)), InvalidArgument);
}
