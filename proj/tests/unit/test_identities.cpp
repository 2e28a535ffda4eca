#include "gma/errors.hpp"
#include "gma/identities.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace gma;

namespace {

Vec v1(double x) { return Vec::Constant(1, x); }

SymMatrix sigma_example() {
  Mat s(2, 2);
  s << 2.0, 0.5, 0.5, 1.0;
  return SymMatrix(s);
}

Density mixture() { return make_mixture_1d({0.5, 0.5}, {-1.0, 1.0}, {1.0, 1.0}); }

const CheckResult& part(const CheckResult& r, const std::string& name) {
  for (const auto& p : r.parts)
    if (p.name == name) return p;
  throw std::runtime_error("no part " + name);
}

struct Case {
  Density g;
  TransportMap t;
};

Case scaling2() {
  auto g = make_scaling(v1(2.0));
  return {g, solve_auto(g)};
}

Case shift1() {
  auto g = make_shift(v1(1.0));
  return {g, solve_auto(g)};
}

Case constant1() {
  auto g = make_constant(1);
  return {g, solve_1d(g)};
}

Case mix() {
  auto g = mixture();
  return {g, solve_1d(g)};
}

const QuadratureRule r64 = hermite_rule(64);
const QuadratureRule r128 = hermite_rule(128);

}  // namespace

TEST(CheckResult, PassSemantics) {
  EXPECT_TRUE(CheckResult::identity("a", 1.0, 1.0 + 1e-9, 1e-8).pass);
  EXPECT_FALSE(CheckResult::identity("a", 1.0, 1.0 + 1e-7, 1e-8).pass);
  EXPECT_TRUE(CheckResult::inequality("b", 1.0, 1.0 + 1e-9, 1e-8).pass);
  EXPECT_FALSE(CheckResult::inequality("b", 1.0, 1.1, 1e-8).pass);
  EXPECT_DOUBLE_EQ(CheckResult::inequality("b", 3.0, 1.0, 0.0).residual_or_slack, 2.0);
  auto s = CheckResult::skipped("c", CheckKind::Identity, "why");
  EXPECT_EQ(s.status, CheckStatus::Skipped);
  EXPECT_FALSE(s.pass);
  EXPECT_EQ(s.reason, "why");
}

TEST(CheckResult, BundleMirrorsWorstPart) {
  auto b = CheckResult::bundle("bundle", {CheckResult::inequality("ok", 2.0, 1.0, 1e-8),
                                          CheckResult::inequality("bad", 1.0, 1.5, 1e-8)});
  EXPECT_EQ(b.name, "bundle");
  EXPECT_FALSE(b.pass);
  EXPECT_DOUBLE_EQ(b.residual_or_slack, -0.5);
  EXPECT_EQ(b.parts.size(), 2u);
  EXPECT_THROW(CheckResult::bundle("x", {}), InvalidArgument);
}

TEST(GridPoints, Shapes) {
  EXPECT_EQ(grid_points(1).size(), 41u);
  EXPECT_EQ(grid_points(2).size(), 41u * 41u);
  auto d3 = grid_points(3);
  EXPECT_EQ(d3.size(), 41u);
  EXPECT_DOUBLE_EQ(d3.front()[2], -4.0);
  EXPECT_DOUBLE_EQ(d3.back()[0], 4.0);
}

TEST(CovFormula, AnalyticFamiliesAndMixture) {
  auto pts = grid_points(1);
  for (auto c : {constant1(), shift1(), scaling2()}) {
    auto r = check_cov_formula(c.g, c.t, pts);
    EXPECT_TRUE(r.pass) << c.g.describe();
    EXPECT_LT(r.residual_or_slack, 1e-9) << c.g.describe();
  }
  EXPECT_LT(check_cov_formula(constant1().g, constant1().t, pts).residual_or_slack, 1e-15);
  auto g2 = make_gaussian_cov(sigma_example());
  auto r2 = check_cov_formula(g2, solve_gaussian_linear(sigma_example()), grid_points(2));
  EXPECT_LT(r2.residual_or_slack, 1e-8);
  auto m = mix();
  EXPECT_LT(check_cov_formula(m.g, m.t, pts, 1e-5).residual_or_slack, 1e-5);
}

TEST(CovFormula, DetectsWrongMap) {
  auto g = make_scaling(v1(2.0));
  auto wrong = solve_1d(make_scaling(v1(1.9)));
  EXPECT_FALSE(check_cov_formula(g, wrong, grid_points(1)).pass);
}

TEST(InverseCovFormula, ShiftAndScaling) {
  for (auto c : {shift1(), scaling2(), mix()}) {
    auto r = check_inverse_cov_formula(c.g, invert(c.t), grid_points(1));
    EXPECT_LT(r.residual_or_slack, 1e-9) << c.g.describe();
    EXPECT_DOUBLE_EQ(r.rhs, 1.0);
  }
}

TEST(Identity22, ScalingDecomposition) {
  auto c = scaling2();
  auto r = check_identity_2_2(c.g, c.t, r64);
  EXPECT_TRUE(r.pass);
  EXPECT_NEAR(*r.term("fisher"), 2.25, 1e-10);
  EXPECT_NEAR(*r.term("two_entropy"), 3.0 - 2.0 * std::log(2.0), 1e-10);
  EXPECT_NEAR(*r.term("minus_two_log_det2"), 2.0 * std::log(2.0) - 1.0, 1e-10);
  EXPECT_NEAR(*r.term("hs_energy"), 0.25, 1e-10);
  EXPECT_NEAR(*r.term("third_order"), 0.0, 1e-12);
  EXPECT_LT(r.residual_or_slack, 1e-8);
  // each right-hand term is majorized by I
  for (const auto& p : r.parts) EXPECT_TRUE(p.pass) << p.name;
}

TEST(Identity22, ShiftAndConstant) {
  auto s = shift1();
  auto r = check_identity_2_2(s.g, s.t, r64);
  EXPECT_NEAR(*r.term("two_entropy"), 1.0, 1e-10);
  EXPECT_LT(r.residual_or_slack, 1e-8);
  auto c = constant1();
  EXPECT_LT(check_identity_2_2(c.g, c.t, r64).residual_or_slack, 1e-15);
}

TEST(Identity22, MixtureAnalyticAndFiniteDifference) {
  auto m = mix();
  auto a = check_identity_2_2(m.g, m.t, r128, 1e-4, ThirdDerivativeMode::Analytic);
  auto f = check_identity_2_2(m.g, m.t, r128, 1e-4, ThirdDerivativeMode::FiniteDifference);
  EXPECT_LT(a.residual_or_slack, 1e-4);
  EXPECT_LT(f.residual_or_slack, 1e-4);
  EXPECT_GT(*a.term("third_order"), 0.0);
  EXPECT_NEAR(*a.term("third_order"), *f.term("third_order"), 1e-6);
}

TEST(Identity22, SkippedWithoutThirdDerivatives) {
  EntropicOptions opt;
  opt.eps = 0.1;
  opt.grid.points = 32;
  auto g = make_constant(2);
  auto t = solve_entropic_2d(g, opt);
  auto r = check_identity_2_2(g, t, default_rule(2));
  EXPECT_EQ(r.status, CheckStatus::Skipped);
  EXPECT_FALSE(r.reason.empty());
}

TEST(Talagrand, ShiftEqualityScalingSlack) {
  auto s = shift1();
  auto rs = check_talagrand(s.g, s.t, r64);
  EXPECT_NEAR(rs.lhs, 0.5, 1e-10);
  EXPECT_NEAR(rs.rhs, 0.5, 1e-10);
  EXPECT_NEAR(rs.residual_or_slack, 0.0, 1e-9);
  auto c = scaling2();
  auto rc = check_talagrand(c.g, c.t, r64);
  EXPECT_NEAR(rc.residual_or_slack, 1.0 - std::log(2.0), 1e-9);
}

TEST(EntropyTransport, ReductionsAndPair) {
  auto s = shift1();
  auto one = constant1();
  auto same = check_entropy_transport(s.g, s.g, s.t, s.t, r64);
  EXPECT_NEAR(same.residual_or_slack, 0.0, 1e-12);
  auto red = check_entropy_transport(s.g, one.g, s.t, one.t, r64);
  EXPECT_LT(std::abs(red.residual_or_slack), 1e-8);
  auto c = scaling2();
  auto pair = check_entropy_transport(c.g, s.g, c.t, s.t, r64, 1e-6);
  EXPECT_TRUE(pair.pass);
  EXPECT_GE(pair.residual_or_slack, -1e-6);
  EXPECT_TRUE(pair.term("trace_log").has_value());
  EXPECT_GE(part(pair, "entropy_transport.pointwise_trace_log").residual_or_slack, -1e-10);
  // Gaussian pair: KL(N(0,4) | N(1,1)) in closed form
  EXPECT_NEAR(*pair.term("relative_entropy"), 0.5 * (4.0 + 1.0 - 1.0 - std::log(4.0)), 1e-10);
}

TEST(ShiftInequality, GaussianEqualityAndMixture) {
  auto c = scaling2();
  auto r = check_shift_inequality(c.g, v1(1.0), c.t, r64);
  EXPECT_NEAR(r.lhs, 0.125, 1e-10);
  EXPECT_NEAR(r.rhs, 0.125, 1e-10);
  EXPECT_LT(std::abs(r.residual_or_slack), 1e-9);
  // the form without the 1/2 is violated
  EXPECT_LT(*r.term("printed_form_slack"), -0.1);
  auto z = check_shift_inequality(c.g, v1(0.0), c.t, r64);
  EXPECT_NEAR(z.residual_or_slack, 0.0, 1e-14);
  auto m = mix();
  EXPECT_GE(check_shift_inequality(m.g, v1(0.5), m.t, r128).residual_or_slack, -1e-6);
  EXPECT_THROW(check_shift_inequality(m.g, v1(2.5), m.t, r128), InvalidArgument);
}

TEST(SecondDerivBounds, CoordinateEqualities) {
  auto c = scaling2();
  auto r = check_second_deriv_bounds(c.g, c.t, r64);
  EXPECT_NEAR(part(r, "hs_energy").lhs, 2.25, 1e-10);
  EXPECT_NEAR(part(r, "hs_energy").rhs, 0.25, 1e-10);
  EXPECT_NEAR(part(r, "coordinate.x1").lhs, 0.25, 1e-10);
  EXPECT_NEAR(part(r, "coordinate.x1").rhs, 0.25, 1e-10);
  auto s = shift1();
  auto rs = check_second_deriv_bounds(s.g, s.t, r64);
  EXPECT_NEAR(part(rs, "coordinate.x1").lhs, 1.0, 1e-10);
  EXPECT_NEAR(part(rs, "coordinate.x1").rhs, 1.0, 1e-10);
  auto one = constant1();
  EXPECT_NEAR(part(check_second_deriv_bounds(one.g, one.t, r64), "coordinate.x1").lhs, 1.0, 1e-12);
}

TEST(MomentBounds, ScalingEqualitiesMixtureSlack) {
  auto c = scaling2();
  auto pts = grid_points(1);
  auto r = check_moment_bounds(c.g, c.t, 1.0, r64, pts);
  EXPECT_NEAR(part(r, "operator_norm_moment").lhs, 0.25, 1e-10);
  EXPECT_NEAR(part(r, "operator_norm_moment").rhs, 0.25, 1e-10);
  EXPECT_NEAR(part(r, "sup_bound").lhs, 0.25, 1e-10);
  EXPECT_NEAR(part(r, "sup_bound").rhs, 0.25, 1e-10);
  EXPECT_TRUE(r.pass);
  auto m = mix();
  auto rm = check_moment_bounds(m.g, m.t, 1.0, r128, pts, 1e-6);
  for (const auto& p : rm.parts) EXPECT_GE(p.residual_or_slack, -1e-6) << p.name;
  auto one = constant1();
  auto ro = check_moment_bounds(one.g, one.t, 2.5, r64, pts);
  EXPECT_NEAR(part(ro, "sup_bound").lhs, 1.0, 1e-12);
  EXPECT_TRUE(ro.pass);
}

TEST(ThirdDerivBound, LinearFamiliesVanishMixtureHolds) {
  for (auto c : {shift1(), scaling2()}) {
    auto r = check_third_deriv_bound(c.g, c.t, 1.5, r64);
    EXPECT_LT(std::abs(r.rhs), 1e-6) << c.g.describe();
    EXPECT_TRUE(r.pass);
  }
  auto g2 = make_gaussian_cov(sigma_example());
  auto r2 = check_third_deriv_bound(g2, solve_gaussian_linear(sigma_example()), 2.0, default_rule(2));
  EXPECT_EQ(r2.rhs, 0.0);
  auto m = mix();
  for (double p : {1.5, 2.0}) {
    auto r = check_third_deriv_bound(m.g, m.t, p, r128, 1e-5);
    EXPECT_GE(r.residual_or_slack, -1e-5) << p;
    EXPECT_GT(r.rhs, 0.0);
  }
  EXPECT_THROW(check_third_deriv_bound(m.g, m.t, 0.5, r128), InvalidArgument);
  EXPECT_THROW(check_third_deriv_bound(m.g, m.t, 2.5, r128), InvalidArgument);
}

TEST(LDuality, ScalingConstantAndMixture) {
  auto c = scaling2();
  auto r = check_L_duality(c.g, c.t, polynomial_test_functions(1), r64);
  EXPECT_LT(r.residual_or_slack, 1e-8);
  auto one = constant1();
  EXPECT_LT(check_L_duality(one.g, one.t, polynomial_test_functions(1), r64).residual_or_slack, 1e-14);
  auto m = mix();
  auto rm = check_L_duality(m.g, m.t, polynomial_test_functions(1), r128, 1e-6);
  EXPECT_LT(rm.residual_or_slack, 1e-6);
  // bumped functions are only C^2, so Hermite quadrature converges slowly on them
  auto rb = check_L_duality(m.g, m.t, bumped_test_functions(1), r128, 1e-2);
  EXPECT_LT(rb.residual_or_slack, 1e-2);
}

TEST(LWeightedBound, ClosedFormSides) {
  auto s = shift1();
  auto r = check_L_weighted_bound(s.g, s.t, r64);
  EXPECT_NEAR(r.rhs, 1.0, 1e-10);
  EXPECT_NEAR(r.lhs, 16.0, 1e-9);
  auto c = scaling2();
  auto rc = check_L_weighted_bound(c.g, c.t, r64);
  EXPECT_NEAR(rc.lhs, 36.0, 1e-9);
  EXPECT_GT(rc.residual_or_slack, 0.0);
  ASSERT_TRUE(rc.term("sharper_M").has_value());
  EXPECT_LE(*rc.term("sharper_M"), rc.lhs + 1e-9);
  auto one = constant1();
  auto ro = check_L_weighted_bound(one.g, one.t, r64);
  EXPECT_EQ(ro.lhs, 0.0);
  EXPECT_NEAR(ro.rhs, 0.0, 1e-15);
}

TEST(Properties, ToleranceMonotonicityUnderDoubledOrder) {
  auto m = mix();
  std::vector<double> prev;
  for (int order : {32, 64, 128}) {
    auto rule = hermite_rule(order);
    std::vector<double> res = {
        check_identity_2_2(m.g, m.t, rule, 1.0).residual_or_slack,
        check_L_duality(m.g, m.t, polynomial_test_functions(1), rule, 1.0).residual_or_slack};
    if (!prev.empty()) {
      for (std::size_t k = 0; k < res.size(); ++k)
        EXPECT_LE(res[k], 2.0 * prev[k] + 1e-13) << "order " << order << " check " << k;
    }
    prev = res;
  }
}

TEST(Properties, ChecksAreDeterministic) {
  auto m = mix();
  auto a = check_identity_2_2(m.g, m.t, r128);
  auto b = check_identity_2_2(m.g, m.t, r128);
  EXPECT_EQ(a.lhs, b.lhs);
  EXPECT_EQ(a.rhs, b.rhs);
}

TEST(Properties, AnalyticFamiliesPassEverywhere) {
  std::vector<Density> fams = {make_shift(v1(-0.7)), make_scaling(v1(0.6)), make_scaling(v1(3.0)),
                               make_product({make_shift(v1(0.5)), make_scaling(v1(1.5))}),
                               make_gaussian_cov(sigma_example())};
  for (const auto& g : fams) {
    auto t = solve_auto(g);
    auto rule = adapted_rule(g);
    auto pts = grid_points(g.dim(), -2.0, 2.0, 9);
    std::vector<CheckResult> rows = {
        check_cov_formula(g, t, pts), check_inverse_cov_formula(g, invert(t), pts),
        check_identity_2_2(g, t, rule), check_talagrand(g, t, rule, 1e-6),
        check_second_deriv_bounds(g, t, rule, 1e-6), check_moment_bounds(g, t, 1.0, rule, pts, 1e-6),
        check_L_duality(g, t, polynomial_test_functions(g.dim()), rule),
        check_L_weighted_bound(g, t, rule, 1e-6)};
    for (const auto& r : rows) EXPECT_TRUE(r.pass) << g.describe() << " " << r.name;
  }
}
