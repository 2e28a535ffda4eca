#include "gma/normal.hpp"

#include "gma/errors.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace gma::normal {

namespace {
constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kCfSwitch = 10.0;
}  // namespace

double log_pdf(double z) { return -0.5 * z * z - kLogSqrt2Pi; }
double pdf(double z) { return std::exp(log_pdf(z)); }
double cdf(double z) { return 0.5 * std::erfc(-z * kInvSqrt2); }
double sf(double z) { return 0.5 * std::erfc(z * kInvSqrt2); }

double mills_ratio(double z) {
  if (z < kCfSwitch) return sf(z) / pdf(z);
  // R(z) = 1/(z + 1/(z + 2/(z + 3/(z + ...)))), evaluated bottom-up.
  double tail = z;
  for (int k = 80; k >= 1; --k) tail = z + k / tail;
  return 1.0 / tail;
}

double log_sf(double z) {
  if (z < 0.0) return std::log1p(-sf(-z));
  if (z < kCfSwitch) return std::log(sf(z));
  return log_pdf(z) + std::log(mills_ratio(z));
}

double inverse_log_sf(double log_p) {
  if (!(log_p <= std::log(0.5) + 1e-15)) {
    throw InvalidArgument("inverse_log_sf: log_p must not exceed log(1/2)");
  }
  if (std::isinf(log_p)) return std::numeric_limits<double>::infinity();
  // z -> log_sf(z) is concave and decreasing, so Newton from z = 0 overshoots once
  // and then decreases monotonically to the root.
  double z = 0.0;
  for (int it = 0; it < 200; ++it) {
    double h = log_sf(z) - log_p;
    double slope = -1.0 / mills_ratio(std::max(z, 0.0));
    double step = h / slope;
    double next = std::max(z - step, 0.0);
    if (std::abs(next - z) <= 4e-16 * (1.0 + std::abs(z))) return next;
    z = next;
  }
  throw SolverError("inverse_log_sf: Newton iteration did not converge for log_p = " +
                    std::to_string(log_p));
}

double quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw InvalidArgument("quantile: p must lie in (0, 1)");
  if (p < 0.5) return -inverse_log_sf(std::log(p));
  return inverse_log_sf(std::log1p(-p));
}

}  // namespace gma::normal
