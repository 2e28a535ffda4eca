#include "gma/errors.hpp"
#include "gma/normal.hpp"
#include "gma/transport.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace gma {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
// Terms more than this far below the running maximum are dropped from log-sum-exp.
constexpr double kLseCut = 40.0;

// log sum_k exp(a[k] - c[k]) over contiguous arrays.
double lse_diff(const double* a, const double* c, int n, double* buf) {
  // Four independent maxima so the reduction does not serialize.
  double m0 = kNegInf, m1 = kNegInf, m2 = kNegInf, m3 = kNegInf;
  int k = 0;
  for (; k + 4 <= n; k += 4) {
    const double d0 = a[k] - c[k], d1 = a[k + 1] - c[k + 1];
    const double d2 = a[k + 2] - c[k + 2], d3 = a[k + 3] - c[k + 3];
    buf[k] = d0;
    buf[k + 1] = d1;
    buf[k + 2] = d2;
    buf[k + 3] = d3;
    m0 = d0 > m0 ? d0 : m0;
    m1 = d1 > m1 ? d1 : m1;
    m2 = d2 > m2 ? d2 : m2;
    m3 = d3 > m3 ? d3 : m3;
  }
  for (; k < n; ++k) {
    buf[k] = a[k] - c[k];
    m0 = buf[k] > m0 ? buf[k] : m0;
  }
  const double m = std::max(std::max(m0, m1), std::max(m2, m3));
  if (m == kNegInf) return kNegInf;
  const double cut = m - kLseCut;
  double s = 0.0;
  for (k = 0; k < n; ++k) {
    if (buf[k] > cut) s += std::exp(buf[k] - m);
  }
  return m + std::log(s);
}

struct Grid {
  int n = 0;
  double half_width = 0.0;
  double h = 0.0;
  std::vector<double> t;  // axis coordinates

  Grid(int points, double l) : n(points), half_width(l), h(2.0 * l / (points - 1)), t(points) {
    for (int k = 0; k < n; ++k) t[k] = -l + k * h;
  }
};

// Log of normalized point masses of rho(x) = g(x) phi(x1) phi(x2) on the grid,
// and the mass of the continuous density lost outside the box (Riemann estimate).
struct Marginal {
  std::vector<double> log_mass;
  double outside = 0.0;
};

Marginal discretize(const Grid& grid, const Density* g) {
  const int n = grid.n;
  Marginal m;
  m.log_mass.resize(static_cast<std::size_t>(n) * n);
  double mx = kNegInf;
  Vec x(2);
  for (int i1 = 0; i1 < n; ++i1) {
    for (int i2 = 0; i2 < n; ++i2) {
      x[0] = grid.t[i1];
      x[1] = grid.t[i2];
      double l = normal::log_pdf(x[0]) + normal::log_pdf(x[1]);
      if (g) {
        double lg = g->log_value(x);
        if (!std::isfinite(lg)) {
          std::ostringstream os;
          os << "solve_entropic_2d: density is not strictly positive at (" << x[0] << ", "
             << x[1] << ")";
          throw InvalidArgument(os.str());
        }
        l += lg;
      }
      m.log_mass[i1 * n + i2] = l;
      mx = std::max(mx, l);
    }
  }
  double s = 0.0;
  for (double l : m.log_mass) s += std::exp(l - mx);
  double log_total = mx + std::log(s);
  m.outside = std::abs(1.0 - std::exp(log_total + 2.0 * std::log(grid.h)));
  for (double& l : m.log_mass) l -= log_total;
  return m;
}

class EntropicSolver {
 public:
  EntropicSolver(const Grid& grid, std::vector<double> log_mu, std::vector<double> log_nu)
      : grid_(grid), n_(grid.n), log_mu_(std::move(log_mu)), log_nu_(std::move(log_nu)) {
    const std::size_t total = static_cast<std::size_t>(n_) * n_;
    f_.assign(total, 0.0);
    g_.assign(total, 0.0);
    c_.resize(total);
    buf_.resize(n_);
    s_.resize(total);
    st_.resize(total);
    b_.resize(total);
    r_.resize(total);
  }

  // out_i = -eps LSE_j((pot_j - c_ij)/eps + log_w_j) for the separable quadratic cost.
  void softmin(const std::vector<double>& pot, const std::vector<double>& log_w,
               std::vector<double>& out) {
    const int n = n_;
    for (std::size_t k = 0; k < pot.size(); ++k) b_[k] = pot[k] / eps_ + log_w[k];
    for (int j1 = 0; j1 < n; ++j1) {
      for (int i2 = 0; i2 < n; ++i2) {
        s_[j1 * n + i2] = lse_diff(&b_[j1 * n], &c_[i2 * n], n, buf_.data());
      }
    }
    for (int j1 = 0; j1 < n; ++j1)
      for (int i2 = 0; i2 < n; ++i2) st_[i2 * n + j1] = s_[j1 * n + i2];
    for (int i1 = 0; i1 < n; ++i1) {
      for (int i2 = 0; i2 < n; ++i2) {
        out[i1 * n + i2] = -eps_ * lse_diff(&st_[i2 * n], &c_[i1 * n], n, buf_.data());
      }
    }
  }

  void set_eps(double eps) {
    // Potentials are kept in absolute units, so only the scaled cost changes.
    eps_ = eps;
    for (int a = 0; a < n_; ++a)
      for (int b = 0; b < n_; ++b) {
        double d = grid_.t[a] - grid_.t[b];
        c_[a * n_ + b] = 0.5 * d * d / eps;
      }
  }

  // L1 deviation of the row marginal from mu given the current g, with r_ = softmin(g).
  double row_residual() {
    softmin(g_, log_nu_, r_);
    double s = 0.0;
    for (std::size_t i = 0; i < r_.size(); ++i) {
      s += std::exp(log_mu_[i]) * std::abs(std::expm1((f_[i] - r_[i]) / eps_));
    }
    return s;
  }

  // One relaxed sweep; r_ must hold softmin(g) on entry.
  void sweep(double omega) {
    for (std::size_t i = 0; i < f_.size(); ++i) f_[i] = (1.0 - omega) * f_[i] + omega * r_[i];
    softmin(f_, log_mu_, r_);
    for (std::size_t j = 0; j < g_.size(); ++j) g_[j] = (1.0 - omega) * g_[j] + omega * r_[j];
  }

  const std::vector<double>& g() const { return g_; }
  double eps() const { return eps_; }

 private:
  const Grid& grid_;
  int n_;
  std::vector<double> log_mu_, log_nu_;
  std::vector<double> f_, g_, c_, buf_, s_, st_, b_, r_;
  double eps_ = 1.0;
};

// Barycentric map of the entropic plan, extended to every x through the target potential.
class EntropicMapModel : public TransportModel {
 public:
  EntropicMapModel(Grid grid, std::vector<double> b, double eps, double accuracy)
      : grid_(std::move(grid)), b_(std::move(b)), eps_(eps), accuracy_(accuracy) {
    phi0_ = log_partition(Vec::Zero(2));
  }
  int dim() const override { return 2; }
  SolverTag tag() const override { return SolverTag::Entropic2D; }
  bool has_third() const override { return false; }
  double phi(const Vec& x) const override { return eps_ * (log_partition(x) - phi0_); }
  Vec grad_phi(const Vec& x) const override {
    Moments m = moments(x);
    return m.mean - x;
  }
  SymMatrix hess_phi(const Vec& x) const override {
    Moments m = moments(x);
    return SymMatrix(Mat(m.cov / eps_ - Mat::Identity(2, 2)));
  }
  SymMatrix third(const Vec&, int) const override {
    throw SolverError("entropic-2d solver does not expose third derivatives");
  }
  double accuracy_class() const override { return accuracy_; }

 private:
  struct Moments {
    Vec mean;
    Mat cov;
  };

  void axis_terms(const Vec& x, std::vector<double>& a1, std::vector<double>& a2) const {
    const int n = grid_.n;
    a1.resize(n);
    a2.resize(n);
    for (int k = 0; k < n; ++k) {
      double d1 = x[0] - grid_.t[k], d2 = x[1] - grid_.t[k];
      a1[k] = -0.5 * d1 * d1 / eps_;
      a2[k] = -0.5 * d2 * d2 / eps_;
    }
  }

  double max_log_weight(const std::vector<double>& a1, const std::vector<double>& a2) const {
    const int n = grid_.n;
    double m = kNegInf;
    for (int j1 = 0; j1 < n; ++j1)
      for (int j2 = 0; j2 < n; ++j2) m = std::max(m, b_[j1 * n + j2] + a1[j1] + a2[j2]);
    return m;
  }

  double log_partition(const Vec& x) const {
    std::vector<double> a1, a2;
    axis_terms(x, a1, a2);
    const int n = grid_.n;
    double m = max_log_weight(a1, a2);
    double s = 0.0;
    for (int j1 = 0; j1 < n; ++j1)
      for (int j2 = 0; j2 < n; ++j2) {
        double l = b_[j1 * n + j2] + a1[j1] + a2[j2] - m;
        if (l > -kLseCut) s += std::exp(l);
      }
    return m + std::log(s);
  }

  Moments moments(const Vec& x) const {
    std::vector<double> a1, a2;
    axis_terms(x, a1, a2);
    const int n = grid_.n;
    double m = max_log_weight(a1, a2);
    std::vector<double> w(static_cast<std::size_t>(n) * n, 0.0);
    double z = 0.0;
    Vec mean = Vec::Zero(2);
    for (int j1 = 0; j1 < n; ++j1)
      for (int j2 = 0; j2 < n; ++j2) {
        double l = b_[j1 * n + j2] + a1[j1] + a2[j2] - m;
        if (l <= -kLseCut) continue;
        double e = std::exp(l);
        w[j1 * n + j2] = e;
        z += e;
        mean[0] += e * grid_.t[j1];
        mean[1] += e * grid_.t[j2];
      }
    mean /= z;
    Mat cov = Mat::Zero(2, 2);
    for (int j1 = 0; j1 < n; ++j1)
      for (int j2 = 0; j2 < n; ++j2) {
        double e = w[j1 * n + j2];
        if (e == 0.0) continue;
        double d1 = grid_.t[j1] - mean[0], d2 = grid_.t[j2] - mean[1];
        cov(0, 0) += e * d1 * d1;
        cov(0, 1) += e * d1 * d2;
        cov(1, 1) += e * d2 * d2;
      }
    cov(1, 0) = cov(0, 1);
    return {mean, cov / z};
  }

  Grid grid_;
  std::vector<double> b_;  // g_j / eps + log nu_j
  double eps_;
  double accuracy_;
  double phi0_ = 0.0;
};

}  // namespace

TransportMap solve_entropic_2d(const Density& g, const EntropicOptions& opt, SinkhornStats* stats) {
  if (g.dim() != 2) throw InvalidArgument("solve_entropic_2d: density must be two-dimensional");
  if (!(opt.eps >= 1e-3 && opt.eps <= 1.0)) {
    throw InvalidArgument("solve_entropic_2d: eps must lie in [1e-3, 1]");
  }
  if (opt.grid.points < 8 || opt.grid.points > 1024) {
    throw InvalidArgument("solve_entropic_2d: grid points must lie in [8, 1024]");
  }

  std::optional<Grid> grid;
  Marginal mu, nu;
  auto try_width = [&](double l) {
    grid.emplace(opt.grid.points, l);
    mu = discretize(*grid, &g);
    nu = discretize(*grid, nullptr);
    return mu.outside < opt.grid.max_truncation_mass && nu.outside < opt.grid.max_truncation_mass;
  };
  if (opt.grid.half_width > 0.0) {
    if (!try_width(opt.grid.half_width)) {
      std::ostringstream os;
      os << "solve_entropic_2d: mass outside the box [-L, L]^2 with L = " << opt.grid.half_width
         << " is " << std::max(mu.outside, nu.outside) << " (limit "
         << opt.grid.max_truncation_mass << ")";
      throw InvalidArgument(os.str());
    }
  } else {
    bool ok = false;
    for (double l = 5.0; l <= 12.0 && !ok; l += 0.5) ok = try_width(l);
    if (!ok) {
      throw InvalidArgument("solve_entropic_2d: density has too much mass outside [-12, 12]^2");
    }
  }

  EntropicSolver solver(*grid, mu.log_mass, nu.log_mass);
  std::vector<double> schedule;
  for (double e = opt.eps_start; e > opt.eps; e *= 0.5) schedule.push_back(e);
  schedule.push_back(opt.eps);

  int iters = 0;
  double residual = std::numeric_limits<double>::infinity();
  for (std::size_t stage = 0; stage < schedule.size(); ++stage) {
    const bool last = stage + 1 == schedule.size();
    const double tol = last ? opt.tolerance : std::max(1e-3, opt.tolerance);
    solver.set_eps(schedule[stage]);
    double omega = 1.0;
    std::vector<double> history;
    residual = solver.row_residual();
    double best = residual;
    while (residual > tol) {
      if (iters >= opt.max_iters) {
        std::ostringstream os;
        os << "solve_entropic_2d: Sinkhorn did not converge in " << opt.max_iters
           << " iterations (eps = " << schedule[stage] << ", marginal residual = " << residual
           << ")";
        throw SolverError(os.str());
      }
      solver.sweep(omega);
      ++iters;
      double next = solver.row_residual();
      history.push_back(next);
      // Estimate the plain contraction rate once, then switch to the SOR-optimal factor.
      if (omega == 1.0 && history.size() == 12 && history[6] > 0.0) {
        double theta = std::pow(history[11] / history[6], 1.0 / 5.0);
        if (theta > 0.0 && theta < 1.0) omega = std::min(1.95, 2.0 / (1.0 + std::sqrt(1.0 - theta)));
      }
      // Over-relaxed residuals oscillate; back off only on clear divergence.
      if (next > 10.0 * best && omega > 1.0) {
        omega = 1.0 + 0.5 * (omega - 1.0);
        best = next;
      }
      best = std::min(best, next);
      residual = next;
    }
  }

  if (stats) {
    stats->iterations = iters;
    stats->marginal_residual = residual;
    stats->half_width = grid->half_width;
    stats->eps_schedule = schedule;
  }

  std::vector<double> b(solver.g().size());
  for (std::size_t j = 0; j < b.size(); ++j) b[j] = solver.g()[j] / opt.eps + nu.log_mass[j];
  return TransportMap(std::make_shared<EntropicMapModel>(*grid, std::move(b), opt.eps,
                                                         opt.accuracy_class));
}

}  // namespace gma
