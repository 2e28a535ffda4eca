#pragma once

// Numerical checks of the change-of-variables formulas and the related
// identities and inequalities for transport to the standard Gaussian.

#include "gma/density.hpp"
#include "gma/gaussian.hpp"
#include "gma/operators.hpp"
#include "gma/transport.hpp"

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace gma {

enum class CheckKind { Identity, Inequality };
enum class CheckStatus { Pass, Fail, Skipped };

std::string to_string(CheckKind kind);
std::string to_string(CheckStatus status);

struct WorstSample {
  Vec point;
  double value = 0.0;
};

/// Identity rows compare lhs with rhs: pass iff |lhs - rhs| <= tolerance.
/// Inequality rows assert lhs >= rhs: pass iff lhs - rhs >= -tolerance.
/// Rows with `parts` (bundles, term bounds) pass only when every part passes too;
/// a bundle row mirrors its worst part.
struct CheckResult {
  std::string name;
  CheckKind kind = CheckKind::Identity;
  double lhs = 0.0;
  double rhs = 0.0;
  double residual_or_slack = 0.0;
  double tolerance = 0.0;
  bool pass = false;
  CheckStatus status = CheckStatus::Fail;
  std::string reason;
  std::vector<std::pair<std::string, double>> terms;
  std::optional<WorstSample> samples;
  std::vector<CheckResult> parts;
  std::vector<std::string> notes;

  static CheckResult identity(std::string name, double lhs, double rhs, double tol);
  static CheckResult inequality(std::string name, double lhs, double rhs, double tol);
  static CheckResult skipped(std::string name, CheckKind kind, std::string reason);
  /// Row summarizing `parts`; the worst part (largest residual / smallest slack) supplies lhs/rhs.
  static CheckResult bundle(std::string name, std::vector<CheckResult> parts);

  void add_term(std::string key, double value) { terms.emplace_back(std::move(key), value); }
  std::optional<double> term(const std::string& key) const;
};

enum class ThirdDerivativeMode { Analytic, FiniteDifference };

/// Evaluation points: `count` evenly spaced values in [lo, hi] per axis (tensor grid for dim 2,
/// the diagonal x = t(1,...,1) above).
std::vector<Vec> grid_points(int dim, double lo = -4.0, double hi = 4.0, int count = 41);
/// Wide window used for sup-type bounds: |x_i| <= 8.
std::vector<Vec> sup_window_points(int dim);

/// max |g - det2(D^2 phi) exp(L phi - |grad phi|^2 / 2)| over points.
/// The comparison runs in log space; the absolute residual is reported.
CheckResult check_cov_formula(const Density& g, const TransportMap& t, std::span<const Vec> points,
                              double tol = 1e-8);

/// max |g(x + grad psi) det2(D^2 psi) exp(L psi - |grad psi|^2 / 2) - 1|.
CheckResult check_inverse_cov_formula(const Density& g, const TransportMap& s,
                                      std::span<const Vec> points, double tol = 1e-8);

/// I = 2 Ent - 2 int log det2(D^2 phi) g + int ||D^2 phi||_HS^2 g + sum_i int Tr[(D^2 Phi)^{-1} (D^2 Phi)_{x_i}]^2 g,
/// with each right-hand term also required to be at most I.
CheckResult check_identity_2_2(const Density& g, const TransportMap& t, const QuadratureRule& rule,
                               double tol = 1e-8,
                               ThirdDerivativeMode mode = ThirdDerivativeMode::Analytic,
                               FDStencil fd = {});

/// Ent >= 1/2 int |grad phi|^2 g.
CheckResult check_talagrand(const Density& g, const TransportMap& t, const QuadratureRule& rule,
                            double tol = 1e-8);

/// Ent_{g gamma}(f/g) >= 1/2 int |grad Phi_f - grad Phi_g|^2 f
///                      + int (Tr[D^2Phi_g (D^2Phi_f)^{-1}] - d - log det[...]) f.
CheckResult check_entropy_transport(const Density& f, const Density& g, const TransportMap& tf,
                                    const TransportMap& tg, const QuadratureRule& rule,
                                    double tol = 1e-8);

/// For mu = e^{-V} dx = g gamma:
/// int (V(x+e) - V(x)) dmu >= 1/2 int |grad Phi(x+e) - grad Phi(x)|^2 dmu + trace-log term.
CheckResult check_shift_inequality(const Density& g, const Vec& e, const TransportMap& t,
                                   const QuadratureRule& rule, double tol = 1e-8);

/// I >= int ||D^2 phi||_HS^2 g, and per coordinate int V_{x_i}^2 dmu >= int |D^2 Phi e_i|^2 dmu
/// with V_{x_i} = x_i - g_{x_i}/g.
CheckResult check_second_deriv_bounds(const Density& g, const TransportMap& t,
                                      const QuadratureRule& rule, double tol = 1e-8);

/// Diagonal moment bound, the operator-norm moment bound and the sup bound
/// ||D^2 Phi(x)||^2 <= sup M(I + D^2 v) at every report point.
CheckResult check_moment_bounds(const Density& g, const TransportMap& t, double p,
                                const QuadratureRule& rule, std::span<const Vec> points,
                                double tol = 1e-8);

/// Third-derivative bound for p in (1, 2); p = 2 uses the sup of M(I + D^2 v) over sup_window_points.
CheckResult check_third_deriv_bound(const Density& g, const TransportMap& t, double p,
                                    const QuadratureRule& rule, double tol = 1e-8,
                                    ThirdDerivativeMode mode = ThirdDerivativeMode::Analytic,
                                    FDStencil fd = {});

/// int L phi xi g = -int <grad phi, grad xi> g - int <grad g, grad phi> xi, max residual over xi_set.
CheckResult check_L_duality(const Density& g, const TransportMap& t,
                            const std::vector<ScalarField>& xi_set, const QuadratureRule& rule,
                            double tol = 1e-8);

/// int (L phi)^2 / (1 + |grad phi|^2) g <= 16 I.
CheckResult check_L_weighted_bound(const Density& g, const TransportMap& t,
                                   const QuadratureRule& rule, double tol = 1e-8);

/// Names of all checks in canonical order.
const std::vector<std::string>& check_names();

}  // namespace gma
