#include "gma/rearrangement.hpp"

#include "gma/errors.hpp"
#include "gma/normal.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <sstream>

namespace gma {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
// Table stops once log(density) has dropped this far below its running maximum.
constexpr double kLogDrop = 1000.0;
constexpr double kMaxRange = 40.0;
constexpr double kMinRange = 6.0;
constexpr double kMaxWidth = 0.125;

// 16-point Gauss-Legendre on [-1, 1] (nodes symmetric, listed for the positive half).
constexpr std::array<double, 8> kGlX = {
    0.0950125098376374401853193, 0.2816035507792589132304605, 0.4580167776572273863424194,
    0.6178762444026437484466718, 0.7554044083550030338951012, 0.8656312023878317438804679,
    0.9445750230732325760779884, 0.9894009349916499325961542};
constexpr std::array<double, 8> kGlW = {
    0.1894506104550684962853967, 0.1826034150449235888667637, 0.1691565193950025381893121,
    0.1495959888165767320815017, 0.1246289712555338720524763, 0.0951585116824927848099251,
    0.0622535239386478928628438, 0.0271524594117540948517806};

double lse(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  double m = std::max(a, b);
  return m + std::log1p(std::exp(std::min(a, b) - m));
}

// log of int_{-inf}^0 exp(b u - a u^2 / 2) du for the local quadratic model of a tail.
double log_tail_integral(double b, double a) {
  if (a > 1e-12) {
    double c = b / std::sqrt(a);
    double log_mills = c >= 0.0 ? std::log(normal::mills_ratio(c))
                                : normal::log_sf(c) - normal::log_pdf(c);
    return log_mills - 0.5 * std::log(a);
  }
  if (b > 0.0) return -std::log(b);
  return std::numeric_limits<double>::quiet_NaN();
}

}  // namespace

Rearrangement1D::Rearrangement1D(Density g) : g_(std::move(g)) {
  if (g_.dim() != 1) throw InvalidArgument("Rearrangement1D: density must be one-dimensional");

  auto width_at = [&](double s) {
    auto j = g_.jet1(s, 2);
    if (!std::isfinite(j.log_value)) {
      std::ostringstream os;
      os << "Rearrangement1D: log density not finite at " << s;
      throw EvaluationError(os.str());
    }
    double d1 = std::abs(j.grad[0] - s);
    double d2 = std::abs(j.hess(0, 0) - 1.0);
    double w = kMaxWidth;
    if (d1 > 0) w = std::min(w, 2.0 / d1);
    if (d2 > 0) w = std::min(w, 1.0 / std::sqrt(d2));
    return std::make_pair(w, j.log_value - 0.5 * s * s - normal::kLogSqrt2Pi);
  };

  std::vector<double> right = {0.0}, left;
  double run_max = ell(0.0);
  for (double s = 0.0; s < kMaxRange;) {
    auto [w, l] = width_at(s);
    run_max = std::max(run_max, l);
    if (s >= kMinRange && l < run_max - kLogDrop) break;
    s = std::min(s + w, kMaxRange);
    right.push_back(s);
  }
  for (double s = 0.0; s > -kMaxRange;) {
    auto [w, l] = width_at(s);
    run_max = std::max(run_max, l);
    if (s <= -kMinRange && l < run_max - kLogDrop) break;
    s = std::max(s - w, -kMaxRange);
    left.push_back(s);
  }
  edges_.assign(left.rbegin(), left.rend());
  edges_.insert(edges_.end(), right.begin(), right.end());
  lo_ = edges_.front();
  hi_ = edges_.back();

  const std::size_t n = edges_.size();
  std::vector<double> panel(n - 1);
  for (std::size_t k = 0; k + 1 < n; ++k) panel[k] = log_mass(edges_[k], edges_[k + 1]);

  // Tail masses beyond the table from the local quadratic model of log density.
  auto tail = [&](double s, double sign) {
    auto j = g_.jet1(s, 2);
    double l = j.log_value - 0.5 * s * s - normal::kLogSqrt2Pi;
    double l1 = j.grad[0] - s;
    double l2 = j.hess(0, 0) - 1.0;
    double t = log_tail_integral(sign * l1, -l2);
    return std::isfinite(t) ? l + t : kNegInf;
  };
  double left_tail = tail(lo_, 1.0);
  double right_tail = tail(hi_, -1.0);

  log_f_.assign(n, kNegInf);
  log_q_.assign(n, kNegInf);
  log_f_[0] = left_tail;
  for (std::size_t k = 1; k < n; ++k) log_f_[k] = lse(log_f_[k - 1], panel[k - 1]);
  log_q_[n - 1] = right_tail;
  for (std::size_t k = n - 1; k-- > 0;) log_q_[k] = lse(log_q_[k + 1], panel[k]);
  double log_z = lse(log_f_[n - 1], right_tail);
  for (std::size_t k = 0; k < n; ++k) {
    log_f_[k] -= log_z;
    log_q_[k] -= log_z;
  }
  log_z_ = log_z;
}

double Rearrangement1D::ell(double s) const {
  return g_.jet1(s, 0).log_value - 0.5 * s * s - normal::kLogSqrt2Pi;
}

double Rearrangement1D::log_mass(double a, double b) const {
  if (b <= a) return kNegInf;
  const double c = 0.5 * (a + b);
  const double h = 0.5 * (b - a);
  std::array<double, 16> terms;
  double mx = kNegInf;
  for (int k = 0; k < 8; ++k) {
    terms[2 * k] = std::log(kGlW[k]) + ell(c - h * kGlX[k]);
    terms[2 * k + 1] = std::log(kGlW[k]) + ell(c + h * kGlX[k]);
    mx = std::max({mx, terms[2 * k], terms[2 * k + 1]});
  }
  if (mx == kNegInf) return kNegInf;
  double s = 0.0;
  for (double t : terms) s += std::exp(t - mx);
  return mx + std::log(s) + std::log(h);
}

std::pair<double, double> Rearrangement1D::log_cdf(double x) const {
  if (x < lo_ || x > hi_) {
    auto j = g_.jet1(x, 2);
    double l = j.log_value - 0.5 * x * x - normal::kLogSqrt2Pi;
    double l1 = j.grad[0] - x;
    double l2 = j.hess(0, 0) - 1.0;
    double sign = x < lo_ ? 1.0 : -1.0;
    double t = log_tail_integral(sign * l1, -l2);
    if (!std::isfinite(t)) {
      std::ostringstream os;
      os << "Rearrangement1D: tail model unusable at x = " << x;
      throw SolverError(os.str());
    }
    double small = l + t - log_z_;
    double big = std::log1p(-std::exp(small));
    return x < lo_ ? std::make_pair(small, big) : std::make_pair(big, small);
  }
  auto it = std::upper_bound(edges_.begin(), edges_.end(), x);
  std::size_t k = it == edges_.begin() ? 0 : static_cast<std::size_t>(it - edges_.begin()) - 1;
  if (k + 1 >= edges_.size()) k = edges_.size() - 2;
  double lf = lse(log_f_[k], log_mass(edges_[k], x) - log_z_);
  double lq = lse(log_q_[k + 1], log_mass(x, edges_[k + 1]) - log_z_);
  return {lf, lq};
}

double Rearrangement1D::map(double x) const {
  auto [lf, lq] = log_cdf(x);
  try {
    if (lf <= lq) return -normal::inverse_log_sf(std::min(lf, std::log(0.5)));
    return normal::inverse_log_sf(std::min(lq, std::log(0.5)));
  } catch (const SolverError& e) {
    std::ostringstream os;
    os << "CDF inversion failed at x = " << x << " (log F = " << lf << ", log(1-F) = " << lq
       << "): " << e.what();
    throw SolverError(os.str());
  }
}

MapJet1D Rearrangement1D::jet(double x) const {
  MapJet1D m;
  m.t = map(x);
  auto j = g_.jet1(x, 2);
  double l = j.log_value - 0.5 * x * x - normal::kLogSqrt2Pi;
  double l1 = j.grad[0] - x;
  double l2 = j.hess(0, 0) - 1.0;
  // phi(T) T' = exp(l): differentiate log T' = l + T^2/2 + log sqrt(2 pi) repeatedly.
  m.t1 = std::exp(l - normal::log_pdf(m.t));
  double dlog = l1 + m.t * m.t1;
  m.t2 = m.t1 * dlog;
  m.t3 = m.t2 * dlog + m.t1 * (l2 + m.t1 * m.t1 + m.t * m.t2);
  return m;
}

double Rearrangement1D::inverse(double y) const {
  if (!std::isfinite(y)) throw SolverError("Rearrangement1D::inverse: non-finite target");
  // Bracket the root of T(x) - y, then safeguarded Newton.
  double a = y - 1.0, b = y + 1.0;
  double step = 1.0;
  int guard = 0;
  while (map(a) > y) {
    a -= (step *= 2.0);
    if (++guard > 60) throw SolverError("Rearrangement1D::inverse: cannot bracket y = " + std::to_string(y));
  }
  step = 1.0;
  while (map(b) < y) {
    b += (step *= 2.0);
    if (++guard > 120) throw SolverError("Rearrangement1D::inverse: cannot bracket y = " + std::to_string(y));
  }
  double x = std::clamp(y, a, b);
  for (int it = 0; it < 200; ++it) {
    auto m = jet(x);
    double r = m.t - y;
    if (r == 0.0) return x;
    if (r > 0) b = x; else a = x;
    double next = x - r / m.t1;
    if (!(next > a && next < b) || !std::isfinite(next)) next = 0.5 * (a + b);
    if (std::abs(next - x) <= 1e-15 * (1.0 + std::abs(x)) || b - a <= 1e-15 * (1.0 + std::abs(x))) {
      return next;
    }
    x = next;
  }
  throw SolverError("Rearrangement1D::inverse: root finding did not converge for y = " +
                    std::to_string(y));
}

double Rearrangement1D::potential(double x) const {
  if (x == 0.0) return 0.0;
  const int panels = std::max(1, static_cast<int>(std::ceil(std::abs(x) / 0.5)));
  const double h = x / panels;
  double sum = 0.0;
  for (int p = 0; p < panels; ++p) {
    double c = (p + 0.5) * h;
    for (int k = 0; k < 8; ++k) {
      double s1 = c - 0.5 * h * kGlX[k];
      double s2 = c + 0.5 * h * kGlX[k];
      sum += kGlW[k] * ((map(s1) - s1) + (map(s2) - s2));
    }
  }
  return 0.5 * h * sum;
}

}  // namespace gma
