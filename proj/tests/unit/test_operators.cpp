#include "gma/density.hpp"
#include "gma/errors.hpp"
#include "gma/operators.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace gma;

namespace {

Vec v2(double a, double b) {
  Vec x(2);
  x << a, b;
  return x;
}

ScalarField value_only(ScalarField f) {
  f.grad = nullptr;
  f.hess = nullptr;
  return f;
}

}  // namespace

TEST(OuOperator, QuadraticAndLinearFields) {
  Mat a(2, 2);
  a << 2.0, 0.3, 0.3, -1.0;
  auto q = quadratic_field(SymMatrix(a));
  Vec b = v2(0.5, -2.0);
  auto l = linear_field(b);
  for (double s : {-1.5, 0.0, 2.0}) {
    Vec x = v2(s, 0.5 * s + 1.0);
    EXPECT_NEAR(ou_operator(q, x), a.trace() - x.dot(a * x), 1e-13);
    EXPECT_NEAR(ou_operator(l, x), -b.dot(x), 1e-14);
    EXPECT_NEAR(ou_operator(constant_field(2, 3.0), x), 0.0, 0.0);
  }
}

TEST(OuOperator, FiniteDifferenceFallback) {
  ScalarField f;
  f.dim = 2;
  f.value = [](const Vec& x) { return std::sin(x[0]) * std::cos(0.5 * x[1]); };
  Vec x = v2(0.3, -0.8);
  // Laplacian = -(1 + 1/4) f, grad = (cos x cos(y/2), -1/2 sin x sin(y/2))
  double fv = f.value(x);
  double lap = -1.25 * fv;
  double gx = std::cos(x[0]) * std::cos(0.5 * x[1]);
  double gy = -0.5 * std::sin(x[0]) * std::sin(0.5 * x[1]);
  EXPECT_NEAR(ou_operator(f, x), lap - x[0] * gx - x[1] * gy, 1e-7);
  auto q = quadratic_field(SymMatrix::identity(2));
  EXPECT_NEAR(ou_operator(value_only(q), x), ou_operator(q, x), 1e-7);
}

TEST(IntegrationByParts, GaussianStein) {
  // int xi' dgamma = int x xi dgamma
  auto g = make_constant(1);
  auto one = constant_field(1, 1.0);
  for (const auto& xi : polynomial_test_functions(1))
    EXPECT_NEAR(ibp_residual(one, 0, g, xi, hermite_rule(32)), 0.0, 1e-13) << xi.name;
}

TEST(IntegrationByParts, MixtureAndCoupledGaussian) {
  auto mix = make_mixture_1d({0.4, 0.6}, {-1.0, 1.5}, {0.7, 1.1});
  auto f = quadratic_field(SymMatrix::identity(1));
  for (const auto& xi : polynomial_test_functions(1))
    EXPECT_NEAR(ibp_residual(f, 0, mix, xi, hermite_rule(128)), 0.0, 1e-11) << xi.name;

  Mat s(2, 2);
  s << 2.0, 0.5, 0.5, 1.0;
  auto g = make_gaussian_cov(SymMatrix(s));
  auto f2 = linear_field(v2(1.0, -1.0));
  for (int i = 0; i < 2; ++i)
    for (const auto& xi : polynomial_test_functions(2))
      EXPECT_NEAR(ibp_residual(f2, i, g, xi, default_rule(2)), 0.0, 1e-11) << xi.name << " " << i;
}

TEST(IntegrationByParts, BumpedTestFunctions) {
  auto mix = make_mixture_1d({0.4, 0.6}, {-1.0, 1.5}, {0.7, 1.1});
  auto f = linear_field(Vec::Constant(1, 1.0));
  // the quintic seam leaves a jump in the third derivative: algebraic, not spectral, convergence
  for (const auto& xi : bumped_test_functions(1)) {
    double r128 = ibp_residual(f, 0, mix, xi, hermite_rule(128));
    double r384 = ibp_residual(f, 0, mix, xi, hermite_rule(384));
    EXPECT_LT(std::abs(r128), 2e-2) << xi.name;
    EXPECT_LT(std::abs(r384), 0.2 * std::abs(r128)) << xi.name;
  }
  EXPECT_THROW(ibp_residual(f, 1, mix, f, hermite_rule(8)), InvalidArgument);
}

TEST(TestFunctions, PolynomialSet) {
  auto p2 = polynomial_test_functions(2);
  ASSERT_EQ(p2.size(), 4u);
  Vec x = v2(1.5, -2.0);
  EXPECT_DOUBLE_EQ(p2[0].value(x), 1.0);
  EXPECT_DOUBLE_EQ(p2[1].value(x), 1.5);
  EXPECT_DOUBLE_EQ(p2[2].value(x), 2.25);
  EXPECT_DOUBLE_EQ(p2[3].value(x), -3.0);
  auto p1 = polynomial_test_functions(1);
  ASSERT_EQ(p1.size(), 4u);
  EXPECT_DOUBLE_EQ(p1[3].value(Vec::Constant(1, 2.0)), 8.0);
}

TEST(TestFunctions, BumpIsTwiceContinuous) {
  auto b = bumped_test_functions(1)[0];  // 1 * bump
  EXPECT_DOUBLE_EQ(b.value(Vec::Constant(1, 4.9)), 1.0);
  EXPECT_DOUBLE_EQ(b.value(Vec::Constant(1, 6.1)), 0.0);
  EXPECT_DOUBLE_EQ(b.value(Vec::Constant(1, -6.1)), 0.0);
  // first and second derivatives vanish on both sides of the seams; the Hessian is a
  // finite difference of the analytic gradient, so it carries O(step) error there
  for (double r : {5.0, 6.0}) {
    for (double d : {-1e-5, 1e-5}) {
      Vec x = Vec::Constant(1, r + d);
      EXPECT_NEAR(b.gradient_at(x)[0], 0.0, 1e-6) << r + d;
      EXPECT_NEAR(b.hessian_at(x)(0, 0), 0.0, 2e-2) << r + d;
    }
  }
  // away from the seams the Hessian matches the quintic's second derivative
  Vec mid = Vec::Constant(1, 5.5);
  EXPECT_NEAR(b.hessian_at(mid)(0, 0), 0.0, 1e-6);
  EXPECT_THROW(bumped_test_functions(1, 6.0, 5.0), InvalidArgument);
}
