#pragma once

// Conditional-expectation cascade g_n = E^n g with per-level transports.

#include "gma/density.hpp"
#include "gma/identities.hpp"
#include "gma/transport.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace gma {

struct LevelRecord {
  int n = 0;
  Density density;
  TransportMap map;
  double entropy = 0.0;
  double fisher = 0.0;
  double transport_cost = 0.0;  // int |grad phi_n|^2 g
  double hs_energy = 0.0;       // int ||D^2 phi_n||_HS^2 g
  double talagrand_slack = 0.0;
  double p210_slack = 0.0;
  double L_weighted = 0.0;
  double contraction_slack = 0.0;  // against the previous level (g_0 = 1, phi_0 = 0 for the first)
};

struct StudyOptions {
  EntropicOptions entropic;
  /// Per-axis quadrature order for level integrals; 0 selects by level dimension.
  int quadrature_order = 0;
};

struct TruncationStudy {
  Density base;
  std::vector<int> levels;
  std::vector<LevelRecord> per_level;
  double top_entropy = 0.0;
  double top_fisher = 0.0;
};

/// Levels must be strictly increasing within [1, dim]. Solver failures are
/// rethrown as SolverError naming the level.
TruncationStudy run_study(const Density& g, const std::vector<int>& levels,
                          const StudyOptions& opt = {});

/// Plain Hermite rule at the per-axis order used for level n; level integrals
/// run on adapted_rule(g_n) at that order.
QuadratureRule level_rule(int n, int order = 0);

/// Ent g_n - Ent g_m >= 1/2 int |grad phi_n - grad phi_m|^2 g; m and n must be study levels.
CheckResult check_contraction(const TruncationStudy& s, int m, int n, double tol = 1e-8);
/// max_n int (L phi_n)^2 / (1 + |grad phi_n|^2) g <= 16 I(g).
CheckResult check_uniform_L_bound(const TruncationStudy& s, double tol = 1e-8);
/// ||D^2 phi_n - D^2 phi||_HS at the points is nonincreasing in n and vanishes at the top level.
CheckResult check_d2_convergence(const TruncationStudy& s, std::span<const Vec> points,
                                 double tol = 1e-7);
/// Entropy and Fisher information nondecreasing in n and bounded by the top-level values.
CheckResult check_monotonicity(const TruncationStudy& s, double tol = 1e-8);

/// Columns: n, entropy, fisher, talagrand_slack, p210_slack, L_weighted, contraction_slacks.
std::string study_csv(const TruncationStudy& s);

}  // namespace gma
