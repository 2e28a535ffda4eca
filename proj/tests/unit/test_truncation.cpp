#include "gma/errors.hpp"
#include "gma/truncation.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

using namespace gma;

namespace {

Vec vec(std::initializer_list<double> v) {
  Vec x(static_cast<Eigen::Index>(v.size()));
  int i = 0;
  for (double a : v) x[i++] = a;
  return x;
}

Density mixture(double shift) {
  return make_mixture_1d({0.5, 0.5}, {-1.0 + shift, 1.0 + shift}, {1.0, 1.0});
}

}  // namespace

TEST(Truncation, ShiftEntropyColumnIsPartialSums) {
  auto s = run_study(make_shift(vec({1.0, 0.5, 0.25})), {1, 2, 3});
  ASSERT_EQ(s.per_level.size(), 3u);
  const double expect[] = {0.5, 0.625, 0.65625};
  for (int k = 0; k < 3; ++k) {
    EXPECT_NEAR(s.per_level[k].entropy, expect[k], 1e-9);
    EXPECT_NEAR(s.per_level[k].fisher, 2.0 * expect[k], 1e-9);
    EXPECT_NEAR(s.per_level[k].talagrand_slack, 0.0, 1e-9);
  }
  auto c = check_contraction(s, 1, 2);
  EXPECT_NEAR(c.lhs, 0.125, 1e-10);
  EXPECT_NEAR(c.rhs, 0.125, 1e-10);
  EXPECT_TRUE(c.pass);
  EXPECT_TRUE(check_contraction(s, 2, 2).pass);
  EXPECT_TRUE(check_monotonicity(s).pass);
  auto d2 = check_d2_convergence(s, grid_points(3, -2.0, 2.0, 5));
  EXPECT_TRUE(d2.pass);
  EXPECT_EQ(d2.lhs, 0.0);
}

TEST(Truncation, ProductMixtureContraction) {
  auto g = make_product({mixture(0.0), mixture(0.5)});
  auto s = run_study(g, {1, 2});
  auto c = check_contraction(s, 1, 2, 1e-5);
  EXPECT_GE(c.residual_or_slack, -1e-5);
  EXPECT_TRUE(check_monotonicity(s, 1e-5).pass);
  EXPECT_TRUE(check_uniform_L_bound(s, 1e-5).pass);
  for (const auto& r : s.per_level) {
    EXPECT_GE(r.contraction_slack, -1e-5);
    EXPECT_GE(r.p210_slack, -1e-6);
    EXPECT_GE(r.talagrand_slack, -1e-6);
    // sup_n int (|grad phi_n|^2 + ||D^2 phi_n||^2) g <= 2 Ent + I
    EXPECT_LE(r.transport_cost + r.hs_energy, 2.0 * s.top_entropy + s.top_fisher + 1e-8);
  }
}

TEST(Truncation, ProductWithStandardFactorsConvergesAtNontrivialLevel) {
  auto g = make_product({mixture(0.0), make_constant(1), make_constant(1)});
  auto s = run_study(g, {1, 2, 3});
  EXPECT_NEAR(s.per_level[0].entropy, s.per_level[2].entropy, 1e-12);
  EXPECT_TRUE(check_d2_convergence(s, grid_points(3, -2.0, 2.0, 5)).pass);
}

TEST(Truncation, CoupledGaussianMonotone) {
  Mat m(3, 3);
  m << 1.5, 0.3, 0.1, 0.3, 1.2, 0.2, 0.1, 0.2, 0.8;
  auto s = run_study(make_gaussian_cov(SymMatrix(m)), {1, 2, 3});
  EXPECT_TRUE(check_monotonicity(s, 1e-8).pass);
  EXPECT_TRUE(check_contraction(s, 1, 2, 1e-6).pass);
  EXPECT_TRUE(check_contraction(s, 2, 3, 1e-6).pass);
  EXPECT_TRUE(check_d2_convergence(s, grid_points(3, -2.0, 2.0, 5)).pass);
}

TEST(Truncation, RejectsBadLevels) {
  auto g = make_shift(vec({1.0, 0.5}));
  EXPECT_THROW(run_study(g, {}), InvalidArgument);
  EXPECT_THROW(run_study(g, {2, 1}), InvalidArgument);
  EXPECT_THROW(run_study(g, {1, 3}), InvalidArgument);
  auto s = run_study(g, {1, 2});
  EXPECT_THROW(check_d2_convergence(s, grid_points(2)), InvalidArgument);
  EXPECT_THROW(check_contraction(s, 2, 1), InvalidArgument);
}

TEST(Truncation, CsvColumns) {
  auto s = run_study(make_shift(vec({1.0, 0.5})), {1, 2});
  std::istringstream in(study_csv(s));
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header, "n,entropy,fisher,talagrand_slack,p210_slack,L_weighted,contraction_slacks");
  std::string row;
  int rows = 0;
  while (std::getline(in, row)) ++rows;
  EXPECT_EQ(rows, 2);
}

TEST(Truncation, LevelRuleOrders) {
  EXPECT_EQ(level_rule(1).order(), 64);
  EXPECT_EQ(level_rule(2).order(), 32);
  EXPECT_EQ(level_rule(6).order(), 6);
  EXPECT_EQ(level_rule(2, 10).order(), 10);
}
