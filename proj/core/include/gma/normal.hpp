#pragma once

// Standard normal distribution helpers that stay accurate far into the tails.

namespace gma::normal {

inline constexpr double kLogSqrt2Pi = 0.91893853320467274178;

double pdf(double z);
double log_pdf(double z);
double cdf(double z);
/// Upper tail 1 - Phi(z), accurate for large z.
double sf(double z);
/// log(1 - Phi(z)); finite for every finite z.
double log_sf(double z);
/// Mills ratio (1 - Phi(z)) / phi(z) for z >= 0 (continued fraction beyond z = 5).
double mills_ratio(double z);

/// z >= 0 with log_sf(z) == log_p, for log_p <= log(1/2). Newton iteration on the
/// concave map z -> log_sf(z); throws SolverError on non-convergence.
double inverse_log_sf(double log_p);
/// Phi^{-1}(p) for p in (0, 1).
double quantile(double p);

}  // namespace gma::normal
