#include "gma/identities.hpp"

#include "gma/errors.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <sstream>

namespace gma {

std::string to_string(CheckKind kind) {
  return kind == CheckKind::Identity ? "identity" : "inequality";
}

std::string to_string(CheckStatus status) {
  switch (status) {
    case CheckStatus::Pass: return "pass";
    case CheckStatus::Fail: return "fail";
    case CheckStatus::Skipped: return "skipped";
  }
  return "fail";
}

CheckResult CheckResult::identity(std::string name, double lhs, double rhs, double tol) {
  CheckResult r;
  r.name = std::move(name);
  r.kind = CheckKind::Identity;
  r.lhs = lhs;
  r.rhs = rhs;
  r.residual_or_slack = std::abs(lhs - rhs);
  r.tolerance = tol;
  r.pass = r.residual_or_slack <= tol;
  r.status = r.pass ? CheckStatus::Pass : CheckStatus::Fail;
  return r;
}

CheckResult CheckResult::inequality(std::string name, double lhs, double rhs, double tol) {
  CheckResult r;
  r.name = std::move(name);
  r.kind = CheckKind::Inequality;
  r.lhs = lhs;
  r.rhs = rhs;
  r.residual_or_slack = lhs - rhs;
  r.tolerance = tol;
  r.pass = r.residual_or_slack >= -tol;
  r.status = r.pass ? CheckStatus::Pass : CheckStatus::Fail;
  return r;
}

CheckResult CheckResult::skipped(std::string name, CheckKind kind, std::string reason) {
  CheckResult r;
  r.name = std::move(name);
  r.kind = kind;
  r.lhs = r.rhs = r.residual_or_slack = std::numeric_limits<double>::quiet_NaN();
  r.pass = false;
  r.status = CheckStatus::Skipped;
  r.reason = std::move(reason);
  return r;
}

namespace {

// Larger is better: negative residual for identities, slack for inequalities,
// both measured relative to the tolerance.
double margin(const CheckResult& r) {
  if (r.kind == CheckKind::Identity) return r.tolerance - r.residual_or_slack;
  return r.residual_or_slack + r.tolerance;
}

}  // namespace

CheckResult CheckResult::bundle(std::string name, std::vector<CheckResult> parts) {
  if (parts.empty()) throw InvalidArgument("CheckResult::bundle: no parts");
  const CheckResult* worst = &parts.front();
  for (const auto& p : parts) {
    if (margin(p) < margin(*worst)) worst = &p;
  }
  CheckResult r = *worst;
  r.name = std::move(name);
  r.parts.clear();
  r.terms.clear();
  r.notes.clear();
  r.reason.clear();
  r.samples.reset();
  r.pass = std::all_of(parts.begin(), parts.end(), [](const CheckResult& p) { return p.pass; });
  r.status = r.pass ? CheckStatus::Pass : CheckStatus::Fail;
  for (const auto& p : parts) {
    r.add_term(p.name + ".lhs", p.lhs);
    r.add_term(p.name + ".rhs", p.rhs);
    for (const auto& [k, v] : p.terms) r.add_term(p.name + "." + k, v);
    if (p.samples && !r.samples) r.samples = p.samples;
  }
  r.notes.push_back("worst part: " + worst->name);
  r.parts = std::move(parts);
  return r;
}

std::optional<double> CheckResult::term(const std::string& key) const {
  for (const auto& [k, v] : terms) {
    if (k == key) return v;
  }
  return std::nullopt;
}

std::vector<Vec> grid_points(int dim, double lo, double hi, int count) {
  if (dim < 1 || count < 1) throw InvalidArgument("grid_points: bad arguments");
  std::vector<double> axis(count);
  for (int k = 0; k < count; ++k) {
    axis[k] = count == 1 ? 0.5 * (lo + hi) : lo + (hi - lo) * k / (count - 1);
  }
  std::vector<Vec> pts;
  if (dim == 2) {
    for (double a : axis)
      for (double b : axis) pts.push_back((Vec(2) << a, b).finished());
  } else {
    for (double a : axis) pts.push_back(Vec::Constant(dim, a));
  }
  return pts;
}

std::vector<Vec> sup_window_points(int dim) {
  if (dim == 1) return grid_points(1, -8.0, 8.0, 321);
  if (dim == 2) return grid_points(2, -8.0, 8.0, 81);
  // Tensor grid with 7 points per axis.
  std::vector<Vec> pts;
  std::vector<int> idx(dim, 0);
  while (true) {
    Vec x(dim);
    for (int d = 0; d < dim; ++d) x[d] = -8.0 + 16.0 * idx[d] / 6.0;
    pts.push_back(x);
    int d = dim - 1;
    while (d >= 0 && ++idx[d] == 7) idx[d--] = 0;
    if (d < 0) break;
  }
  return pts;
}

namespace {

using Integrand = std::function<void(const Vec& x, std::vector<double>& out)>;

// Several integrals against gamma at once, each with pairwise reduction.
std::vector<double> integrate(const QuadratureRule& rule, std::size_t m, const Integrand& f) {
  std::vector<std::vector<double>> cols(m, std::vector<double>(rule.size()));
  std::vector<double> out(m);
  for (std::size_t k = 0; k < rule.size(); ++k) {
    if (rule.weight(k) == 0.0) continue;
    Vec x = rule.point(k);
    std::fill(out.begin(), out.end(), 0.0);
    f(x, out);
    for (std::size_t c = 0; c < m; ++c) {
      if (!std::isfinite(out[c])) {
        std::ostringstream os;
        os << "non-finite integrand at quadrature node " << k << " (x1 = " << x[0] << ")";
        throw EvaluationError(os.str());
      }
      cols[c][k] = rule.weight(k) * out[c];
    }
  }
  std::vector<double> res(m);
  for (std::size_t c = 0; c < m; ++c) res[c] = pairwise_sum(cols[c]);
  return res;
}

void require_dims(const Density& g, const TransportMap& t, const QuadratureRule* rule,
                  const char* what) {
  if (g.dim() != t.dim()) {
    throw InvalidArgument(std::string(what) + ": density and map dimensions differ");
  }
  if (rule && rule->dim() != g.dim()) {
    throw InvalidArgument(std::string(what) + ": quadrature rule dimension differs");
  }
}

double weight_of(const LogJet& j) { return std::exp(j.log_value); }

// A singular D^2 Phi at a node is a property of the map, not of the caller's arguments.
SymMatrix checked_inverse(const SymMatrix& a) {
  try {
    return spd_inverse(a);
  } catch (const InvalidArgument& e) {
    throw EvaluationError(std::string("D^2 Phi is numerically singular (") + e.what() + ")");
  }
}

// Tr[(D^2 Phi)^{-1} (D^2 Phi)_{x_i}] summed in squares over i.
double third_trace_term(const SymMatrix& hess_big_phi, const std::vector<SymMatrix>& thirds) {
  SymMatrix inv = checked_inverse(hess_big_phi);
  double s = 0.0;
  for (const auto& t : thirds) {
    double tr = (inv.matrix() * t.matrix()).trace();
    s += tr * tr;
  }
  return s;
}

std::vector<SymMatrix> third_derivatives(const TransportMap& t, const Vec& x,
                                         ThirdDerivativeMode mode, const FDStencil& fd) {
  std::vector<SymMatrix> out;
  for (int i = 0; i < t.dim(); ++i) {
    if (mode == ThirdDerivativeMode::Analytic) {
      out.push_back(t.third(x, i));
    } else {
      Mat d = fd.derivative_of([&](const Vec& y) { return Mat(t.hess_phi(y).matrix()); }, x, i);
      out.push_back(SymMatrix(Mat(0.5 * (d + d.transpose()))));
    }
  }
  return out;
}

// M(I + D^2 v) with v = -log g; the positive part is used where a power is taken.
double m_of_hess_v(const LogJet& j) {
  const auto d = j.hess.rows();
  return m_functional(SymMatrix(Mat(Mat::Identity(d, d) - j.hess)));
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

CheckResult check_cov_formula(const Density& g, const TransportMap& t, std::span<const Vec> points,
                              double tol) {
  require_dims(g, t, nullptr, "check_cov_formula");
  if (points.empty()) throw InvalidArgument("check_cov_formula: no evaluation points");
  double worst_abs = -1.0, worst_rel = 0.0, worst_l = 0.0, worst_r = 0.0;
  Vec worst_x;
  for (const auto& x : points) {
    double lg = g.log_value(x);
    Vec gp = t.grad_phi(x);
    SymMatrix hp = t.hess_phi(x);
    double log_rhs = log_det2(hp) + ou_operator(x, gp, hp) - 0.5 * gp.squaredNorm();
    double rel = std::abs(std::expm1(log_rhs - lg));
    double abs_res = std::exp(lg) * rel;
    if (!std::isfinite(abs_res)) abs_res = std::numeric_limits<double>::infinity();
    if (abs_res > worst_abs) {
      worst_abs = abs_res;
      worst_x = x;
      worst_l = std::exp(lg);
      worst_r = std::exp(log_rhs);
    }
    worst_rel = std::max(worst_rel, rel);
  }
  auto r = CheckResult::identity("cov_formula", worst_l, worst_r, tol);
  r.residual_or_slack = worst_abs;
  r.pass = worst_abs <= tol;
  r.status = r.pass ? CheckStatus::Pass : CheckStatus::Fail;
  r.add_term("max_abs_residual", worst_abs);
  r.add_term("max_rel_residual", worst_rel);
  r.add_term("points", static_cast<double>(points.size()));
  r.samples = WorstSample{worst_x, worst_abs};
  return r;
}

CheckResult check_inverse_cov_formula(const Density& g, const TransportMap& s,
                                      std::span<const Vec> points, double tol) {
  require_dims(g, s, nullptr, "check_inverse_cov_formula");
  if (points.empty()) throw InvalidArgument("check_inverse_cov_formula: no evaluation points");
  double worst = -1.0, worst_l = 1.0;
  Vec worst_x;
  for (const auto& y : points) {
    Vec gp = s.grad_phi(y);
    SymMatrix hp = s.hess_phi(y);
    double log_lhs = g.log_value(y + gp) + log_det2(hp) + ou_operator(y, gp, hp) -
                     0.5 * gp.squaredNorm();
    double res = std::abs(std::expm1(log_lhs));
    if (!std::isfinite(res)) res = std::numeric_limits<double>::infinity();
    if (res > worst) {
      worst = res;
      worst_x = y;
      worst_l = std::exp(log_lhs);
    }
  }
  auto r = CheckResult::identity("inverse_cov_formula", worst_l, 1.0, tol);
  r.residual_or_slack = worst;
  r.pass = worst <= tol;
  r.status = r.pass ? CheckStatus::Pass : CheckStatus::Fail;
  r.add_term("points", static_cast<double>(points.size()));
  r.samples = WorstSample{worst_x, worst};
  return r;
}

CheckResult check_identity_2_2(const Density& g, const TransportMap& t, const QuadratureRule& rule,
                               double tol, ThirdDerivativeMode mode, FDStencil fd) {
  require_dims(g, t, &rule, "check_identity_2_2");
  if (mode == ThirdDerivativeMode::Analytic && !t.has_third()) {
    return CheckResult::skipped("identity_2_2", CheckKind::Identity,
                                "the " + to_string(t.solver_tag()) +
                                    " solver does not expose third derivatives");
  }
  if (!t.has_third()) {
    return CheckResult::skipped("identity_2_2", CheckKind::Identity,
                                "finite differences of entropic Hessians are below noise");
  }
  auto v = integrate(rule, 5, [&](const Vec& x, std::vector<double>& o) {
    auto j = g.jet(x, 1);
    double w = weight_of(j);
    SymMatrix hp = t.hess_phi(x);
    o[0] = w * j.grad.squaredNorm();
    o[1] = w * j.log_value;
    o[2] = -2.0 * w * log_det2(hp);
    o[3] = w * hs_norm(hp) * hs_norm(hp);
    o[4] = w * third_trace_term(hp + SymMatrix::identity(t.dim()),
                                third_derivatives(t, x, mode, fd));
  });
  const double fisher = v[0], ent2 = 2.0 * v[1];
  auto r = CheckResult::identity("identity_2_2", fisher, ent2 + v[2] + v[3] + v[4], tol);
  r.add_term("fisher", fisher);
  r.add_term("two_entropy", ent2);
  r.add_term("minus_two_log_det2", v[2]);
  r.add_term("hs_energy", v[3]);
  r.add_term("third_order", v[4]);
  r.add_term("quadrature_order", rule.order());
  if (mode == ThirdDerivativeMode::FiniteDifference) {
    r.notes.push_back("third-order term from finite differences of D^2 phi, step " + fmt(fd.step));
  }
  // Each right-hand term is separately bounded by the Fisher information.
  const std::pair<const char*, double> bounded[] = {
      {"two_entropy", ent2}, {"minus_two_log_det2", v[2]}, {"hs_energy", v[3]}, {"third_order", v[4]}};
  for (const auto& [name, val] : bounded) {
    r.parts.push_back(CheckResult::inequality(std::string("term_bound.") + name, fisher, val, tol));
  }
  bool terms_ok = std::all_of(r.parts.begin(), r.parts.end(), [](auto& p) { return p.pass; });
  if (!terms_ok) r.reason = "a right-hand term exceeds the Fisher information";
  r.pass = r.pass && terms_ok;
  r.status = r.pass ? CheckStatus::Pass : CheckStatus::Fail;
  return r;
}

CheckResult check_talagrand(const Density& g, const TransportMap& t, const QuadratureRule& rule,
                            double tol) {
  require_dims(g, t, &rule, "check_talagrand");
  auto v = integrate(rule, 2, [&](const Vec& x, std::vector<double>& o) {
    auto j = g.jet(x, 0);
    double w = weight_of(j);
    o[0] = w * j.log_value;
    o[1] = 0.5 * w * t.grad_phi(x).squaredNorm();
  });
  auto r = CheckResult::inequality("talagrand", v[0], v[1], tol);
  r.add_term("entropy", v[0]);
  r.add_term("half_transport_cost", v[1]);
  return r;
}

namespace {

// Tr A - d - log det A for A = B C^{-1}, B and C positive definite.
double trace_log(const SymMatrix& b, const SymMatrix& c) {
  SymMatrix cinv = checked_inverse(c);
  Mat a = b.matrix() * cinv.matrix();
  // log det A = log det B - log det C, both from spectra of symmetric matrices.
  double ld = b.eigenvalues().array().log().sum() - c.eigenvalues().array().log().sum();
  return a.trace() - static_cast<double>(b.dim()) - ld;
}

}  // namespace

CheckResult check_entropy_transport(const Density& f, const Density& g, const TransportMap& tf,
                                    const TransportMap& tg, const QuadratureRule& rule,
                                    double tol) {
  require_dims(f, tf, &rule, "check_entropy_transport");
  require_dims(g, tg, &rule, "check_entropy_transport");
  double min_pointwise = std::numeric_limits<double>::infinity();
  Vec min_x;
  auto v = integrate(rule, 3, [&](const Vec& x, std::vector<double>& o) {
    double lf = f.log_value(x);
    double lg = g.log_value(x);
    double w = std::exp(lf);
    o[0] = w * (lf - lg);
    o[1] = 0.5 * w * (tf.grad_phi(x) - tg.grad_phi(x)).squaredNorm();
    double tl = trace_log(tg.hess_Phi(x), tf.hess_Phi(x));
    if (tl < min_pointwise) {
      min_pointwise = tl;
      min_x = x;
    }
    o[2] = w * tl;
  });
  auto main = CheckResult::inequality("entropy_transport.integral", v[0], v[1] + v[2], tol);
  auto pointwise =
      CheckResult::inequality("entropy_transport.pointwise_trace_log", min_pointwise, 0.0, 1e-10);
  pointwise.samples = WorstSample{min_x, min_pointwise};
  auto r = CheckResult::bundle("entropy_transport", {main, pointwise});
  r.add_term("relative_entropy", v[0]);
  r.add_term("half_transport_distance", v[1]);
  r.add_term("trace_log", v[2]);
  r.add_term("min_pointwise_trace_log", min_pointwise);
  return r;
}

CheckResult check_shift_inequality(const Density& g, const Vec& e, const TransportMap& t,
                                   const QuadratureRule& rule, double tol) {
  require_dims(g, t, &rule, "check_shift_inequality");
  if (e.size() != g.dim()) throw InvalidArgument("check_shift_inequality: shift dimension differs");
  if (e.norm() > 2.0 + 1e-12) throw InvalidArgument("check_shift_inequality: |e| must be <= 2");
  // mu = g gamma = e^{-V} dx, so V(x) = -log g(x) + |x|^2/2 + const.
  auto V = [&](const Vec& x) { return -g.log_value(x) + 0.5 * x.squaredNorm(); };
  auto v = integrate(rule, 3, [&](const Vec& x, std::vector<double>& o) {
    double w = g.value(x);
    Vec xe = x + e;
    o[0] = w * (V(xe) - V(x));
    Vec diff = t.apply(xe) - t.apply(x);
    o[1] = 0.5 * w * diff.squaredNorm();
    o[2] = w * trace_log(t.hess_Phi(xe), t.hess_Phi(x));
  });
  auto r = CheckResult::inequality("shift_inequality", v[0], v[1] + v[2], tol);
  r.add_term("potential_increment", v[0]);
  r.add_term("half_transport_increment", v[1]);
  r.add_term("trace_log", v[2]);
  // The form without the 1/2 on the transport term, reported for comparison only.
  r.add_term("printed_form_rhs", 2.0 * v[1] + v[2]);
  r.add_term("printed_form_slack", v[0] - 2.0 * v[1] - v[2]);
  r.notes.push_back("transport term carries the factor 1/2; printed_form_* omit it");
  return r;
}

CheckResult check_second_deriv_bounds(const Density& g, const TransportMap& t,
                                      const QuadratureRule& rule, double tol) {
  require_dims(g, t, &rule, "check_second_deriv_bounds");
  const int d = g.dim();
  auto v = integrate(rule, 2 + 2 * d, [&](const Vec& x, std::vector<double>& o) {
    auto j = g.jet(x, 1);
    double w = weight_of(j);
    SymMatrix hp = t.hess_phi(x);
    Mat big = t.hess_Phi(x).matrix();
    o[0] = w * j.grad.squaredNorm();
    o[1] = w * hs_norm(hp) * hs_norm(hp);
    for (int i = 0; i < d; ++i) {
      double vx = x[i] - j.grad[i];  // V_{x_i} for mu = e^{-V} dx
      o[2 + 2 * i] = w * vx * vx;
      o[3 + 2 * i] = w * big.col(i).squaredNorm();
    }
  });
  std::vector<CheckResult> parts;
  parts.push_back(CheckResult::inequality("hs_energy", v[0], v[1], tol));
  for (int i = 0; i < d; ++i) {
    parts.push_back(CheckResult::inequality("coordinate.x" + std::to_string(i + 1), v[2 + 2 * i],
                                            v[3 + 2 * i], tol));
  }
  auto r = CheckResult::bundle("second_deriv_bounds", std::move(parts));
  r.notes.push_back("V_{x_i} = x_i - g_{x_i}/g");
  return r;
}

CheckResult check_moment_bounds(const Density& g, const TransportMap& t, double p,
                                const QuadratureRule& rule, std::span<const Vec> points,
                                double tol) {
  require_dims(g, t, &rule, "check_moment_bounds");
  if (!(p >= 1.0) || !std::isfinite(p)) throw InvalidArgument("check_moment_bounds: p must be >= 1");
  const int d = g.dim();
  const double c = std::pow(0.5 * (p + 1.0), p);
  // Columns: per coordinate (minus convention, plus convention, |Phi_ii|^{2p}), then the operator-norm moment sides.
  auto v = integrate(rule, 3 * d + 2, [&](const Vec& x, std::vector<double>& o) {
    auto j = g.jet(x, 2);
    double w = weight_of(j);
    SymMatrix big = t.hess_Phi(x);
    for (int i = 0; i < d; ++i) {
      o[3 * i] = w * std::pow(std::abs(x[i] - j.grad[i]), 2 * p);
      o[3 * i + 1] = w * std::pow(std::abs(x[i] + j.grad[i]), 2 * p);
      o[3 * i + 2] = w * std::pow(std::abs(big(i, i)), 2 * p);
    }
    o[3 * d] = w * std::pow(std::max(m_of_hess_v(j), 0.0), p);
    o[3 * d + 1] = w * std::pow(op_norm(big), 2 * p);
  });
  std::vector<CheckResult> parts;
  for (int i = 0; i < d; ++i) {
    auto part = CheckResult::inequality("diagonal.x" + std::to_string(i + 1), c * v[3 * i],
                                        v[3 * i + 2], tol);
    part.add_term("plus_convention_rhs", c * v[3 * i + 1]);
    parts.push_back(part);
  }
  parts.push_back(CheckResult::inequality("operator_norm_moment", v[3 * d], v[3 * d + 1], tol));

  double sup_m = -std::numeric_limits<double>::infinity();
  auto window = sup_window_points(d);
  for (const auto& x : window) sup_m = std::max(sup_m, m_of_hess_v(g.jet(x, 2)));
  for (const auto& x : points) sup_m = std::max(sup_m, m_of_hess_v(g.jet(x, 2)));
  double max_norm = 0.0;
  Vec max_x;
  for (const auto& x : points) {
    double n = op_norm(t.hess_Phi(x));
    if (n * n > max_norm) {
      max_norm = n * n;
      max_x = x;
    }
  }
  auto sup = CheckResult::inequality("sup_bound", sup_m, max_norm, tol);
  if (max_x.size()) sup.samples = WorstSample{max_x, max_norm};
  parts.push_back(sup);
  auto r = CheckResult::bundle("moment_bounds", std::move(parts));
  r.add_term("p", p);
  r.notes.push_back("diagonal bound uses |x_i - g_{x_i}/g|; plus_convention_rhs reports |x_i + g_{x_i}/g|");
  r.notes.push_back("sup of M(I + D^2 v) taken over the report points and the window |x_i| <= 8");
  return r;
}

CheckResult check_third_deriv_bound(const Density& g, const TransportMap& t, double p,
                                    const QuadratureRule& rule, double tol,
                                    ThirdDerivativeMode mode, FDStencil fd) {
  require_dims(g, t, &rule, "check_third_deriv_bound");
  if (!(p > 1.0 && p <= 2.0)) {
    throw InvalidArgument("check_third_deriv_bound: p must lie in (1, 2], got " + fmt(p));
  }
  if (!t.has_third()) {
    return CheckResult::skipped("third_deriv_bound", CheckKind::Inequality,
                                "the " + to_string(t.solver_tag()) +
                                    " solver does not expose third derivatives");
  }
  const bool sup_form = p == 2.0;
  const double q = sup_form ? 1.0 : p / (2.0 - p);
  auto v = integrate(rule, 3, [&](const Vec& x, std::vector<double>& o) {
    auto j = g.jet(x, 2);
    double w = weight_of(j);
    double s = 0.0;
    for (const auto& m : third_derivatives(t, x, mode, fd)) s += std::pow(hs_norm(m), 2);
    o[0] = w * std::pow(s, 0.5 * p);
    o[1] = w * std::pow(std::max(m_of_hess_v(j), 0.0), q);
    o[2] = w * j.grad.squaredNorm();
  });
  double rhs;
  double m_term;
  if (sup_form) {
    m_term = 0.0;
    for (const auto& x : sup_window_points(g.dim())) {
      m_term = std::max(m_term, m_of_hess_v(g.jet(x, 2)));
    }
    rhs = m_term * v[2];
  } else {
    m_term = std::pow(v[1], 0.5 * (2.0 - p));
    rhs = m_term * std::pow(v[2], 0.5 * p);
  }
  auto r = CheckResult::inequality("third_deriv_bound", rhs, v[0], tol);
  r.add_term("p", p);
  r.add_term("third_order_moment", v[0]);
  r.add_term(sup_form ? "sup_M" : "M_norm_factor", m_term);
  r.add_term("fisher", v[2]);
  r.notes.push_back("(D^2 Phi)_{x_i} = (D^2 phi)_{x_i}: the two differ by the constant identity");
  if (sup_form) r.notes.push_back("sup of M(I + D^2 v) over the window |x_i| <= 8");
  if (mode == ThirdDerivativeMode::FiniteDifference) {
    r.notes.push_back("third derivatives from finite differences of D^2 phi, step " + fmt(fd.step));
  }
  return r;
}

CheckResult check_L_duality(const Density& g, const TransportMap& t,
                            const std::vector<ScalarField>& xi_set, const QuadratureRule& rule,
                            double tol) {
  require_dims(g, t, &rule, "check_L_duality");
  if (xi_set.empty()) throw InvalidArgument("check_L_duality: empty test-function set");
  const std::size_t m = xi_set.size();
  auto v = integrate(rule, 2 * m, [&](const Vec& x, std::vector<double>& o) {
    auto j = g.jet(x, 1);
    double w = weight_of(j);
    Vec gp = t.grad_phi(x);
    double lphi = ou_operator(x, gp, t.hess_phi(x));
    Vec grad_g = w * j.grad;
    for (std::size_t k = 0; k < m; ++k) {
      double xi = xi_set[k].value(x);
      Vec dxi = xi_set[k].gradient_at(x);
      o[2 * k] = lphi * xi * w;
      o[2 * k + 1] = -gp.dot(dxi) * w - grad_g.dot(gp) * xi;
    }
  });
  std::size_t worst = 0;
  for (std::size_t k = 0; k < m; ++k) {
    if (std::abs(v[2 * k] - v[2 * k + 1]) > std::abs(v[2 * worst] - v[2 * worst + 1])) worst = k;
  }
  auto r = CheckResult::identity("L_duality", v[2 * worst], v[2 * worst + 1], tol);
  for (std::size_t k = 0; k < m; ++k) {
    r.add_term("residual[" + xi_set[k].name + "]", std::abs(v[2 * k] - v[2 * k + 1]));
  }
  r.notes.push_back("worst test function: " + xi_set[worst].name);
  return r;
}

CheckResult check_L_weighted_bound(const Density& g, const TransportMap& t,
                                   const QuadratureRule& rule, double tol) {
  require_dims(g, t, &rule, "check_L_weighted_bound");
  auto v = integrate(rule, 4, [&](const Vec& x, std::vector<double>& o) {
    auto j = g.jet(x, 1);
    double w = weight_of(j);
    Vec gp = t.grad_phi(x);
    SymMatrix hp = t.hess_phi(x);
    double lphi = ou_operator(x, gp, hp);
    double n2 = gp.squaredNorm();
    o[0] = w * lphi * lphi / (1.0 + n2);
    o[1] = w * j.grad.squaredNorm();
    o[2] = w * n2;
    o[3] = w * hs_norm(hp) * hs_norm(hp);
  });
  auto r = CheckResult::inequality("L_weighted_bound", 16.0 * v[1], v[0], tol);
  double sharp = 4.0 * v[1] + 2.0 * v[2] + 10.0 * v[3];
  r.add_term("weighted_integral", v[0]);
  r.add_term("fisher", v[1]);
  r.add_term("sharper_M", sharp);
  r.add_term("sharper_M_slack", sharp - v[0]);
  return r;
}

const std::vector<std::string>& check_names() {
  static const std::vector<std::string> names = {
      "cov_formula",       "inverse_cov_formula", "identity_2_2",        "talagrand",
      "entropy_transport", "shift_inequality",    "second_deriv_bounds", "moment_bounds",
      "third_deriv_bound", "L_duality",           "L_weighted_bound"};
  return names;
}

}  // namespace gma
