#pragma once

// Monotone rearrangement T = Phi^{-1} o F_mu of a one-dimensional density g.gamma onto gamma.

#include "gma/density.hpp"

#include <vector>

namespace gma {

struct MapJet1D {
  double t = 0.0;   // T(x)
  double t1 = 0.0;  // T'(x)
  double t2 = 0.0;  // T''(x)
  double t3 = 0.0;  // T'''(x)
};

class Rearrangement1D {
 public:
  /// Tabulates log F and log(1 - F) of g.gamma. Throws InvalidArgument for
  /// non-1D input and EvaluationError when g is not positive and finite.
  explicit Rearrangement1D(Density g);

  double map(double x) const;
  MapJet1D jet(double x) const;
  /// T^{-1}(y) by safeguarded Newton; throws SolverError on failure.
  double inverse(double y) const;
  /// Returns (log F(x), log(1 - F(x))).
  std::pair<double, double> log_cdf(double x) const;
  /// phi(x) = int_0^x (T(s) - s) ds.
  double potential(double x) const;

  const Density& density() const { return g_; }
  double table_lo() const { return lo_; }
  double table_hi() const { return hi_; }

 private:
  // log of the Lebesgue density of g.gamma
  double ell(double s) const;
  double log_mass(double a, double b) const;

  Density g_;
  double lo_ = -9.0;
  double hi_ = 9.0;
  double log_z_ = 0.0;  // log of the tabulated total mass
  std::vector<double> edges_;
  std::vector<double> log_f_;  // log F at edges
  std::vector<double> log_q_;  // log(1 - F) at edges
};

}  // namespace gma
