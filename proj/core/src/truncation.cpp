#include "gma/truncation.hpp"

#include "gma/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace gma {

namespace {

int level_order(int n, int order) {
  static const int orders[] = {0, 64, 32, 20, 12, 8, 6};
  if (n < 1) throw InvalidArgument("level_rule: dimension must be positive");
  if (order <= 0) order = n <= 6 ? orders[n] : 3;
  return order;
}

}  // namespace

QuadratureRule level_rule(int n, int order) {
  return tensor_rule(hermite_rule(level_order(n, order)), n);
}

namespace {

// grad phi_m extended to R^n: depends on the first m coordinates, zero beyond them.
Vec extended_grad(const TransportMap& t, const Vec& x) {
  const int m = t.dim();
  Vec out = Vec::Zero(x.size());
  out.head(m) = t.grad_phi(x.head(m));
  return out;
}

const LevelRecord& record(const TruncationStudy& s, int n) {
  for (const auto& r : s.per_level) {
    if (r.n == n) return r;
  }
  throw InvalidArgument("truncation: level " + std::to_string(n) + " is not part of the study");
}

}  // namespace

TruncationStudy run_study(const Density& g, const std::vector<int>& levels,
                          const StudyOptions& opt) {
  if (levels.empty()) throw InvalidArgument("run_study: no levels");
  for (std::size_t k = 0; k < levels.size(); ++k) {
    if (levels[k] < 1 || levels[k] > g.dim()) {
      throw InvalidArgument("run_study: level " + std::to_string(levels[k]) + " outside [1, " +
                            std::to_string(g.dim()) + "]");
    }
    if (k > 0 && levels[k] <= levels[k - 1]) {
      throw InvalidArgument("run_study: levels must be strictly increasing");
    }
  }
  TruncationStudy study{g, levels, {}, entropy(g), fisher_info(g)};
  const LevelRecord* prev = nullptr;
  for (int n : levels) {
    Density gn = conditional_expectation(g, n);
    std::optional<TransportMap> tn;
    try {
      tn = solve_auto(gn, opt.entropic);
    } catch (const SolverError& e) {
      throw SolverError("level " + std::to_string(n) + ": " + e.what());
    }
    auto rule = adapted_rule(gn, level_order(n, opt.quadrature_order));
    std::vector<double> col[4];
    for (auto& c : col) c.resize(rule.size());
    for (std::size_t k = 0; k < rule.size(); ++k) {
      Vec x = rule.point(k);
      double w = rule.weight(k) * gn.value(x);
      Vec gp = tn->grad_phi(x);
      SymMatrix hp = tn->hess_phi(x);
      double lphi = ou_operator(x, gp, hp);
      col[0][k] = w * gp.squaredNorm();
      col[1][k] = w * hs_norm(hp) * hs_norm(hp);
      col[2][k] = w * lphi * lphi / (1.0 + gp.squaredNorm());
      Vec prev_grad = prev ? extended_grad(prev->map, x) : Vec::Zero(n);
      col[3][k] = 0.5 * w * (gp - prev_grad).squaredNorm();
    }
    LevelRecord rec{n, gn, *tn};
    rec.entropy = entropy(gn);
    rec.fisher = fisher_info(gn);
    rec.transport_cost = pairwise_sum(col[0]);
    rec.hs_energy = pairwise_sum(col[1]);
    rec.L_weighted = pairwise_sum(col[2]);
    rec.talagrand_slack = rec.entropy - 0.5 * rec.transport_cost;
    rec.p210_slack = rec.fisher - rec.hs_energy;
    rec.contraction_slack = rec.entropy - (prev ? prev->entropy : 0.0) - pairwise_sum(col[3]);
    study.per_level.push_back(std::move(rec));
    prev = &study.per_level.back();
  }
  return study;
}

CheckResult check_contraction(const TruncationStudy& s, int m, int n, double tol) {
  if (m > n) throw InvalidArgument("check_contraction: need m <= n");
  const auto& rn = record(s, n);
  const auto& rm = record(s, m);
  std::string name = "contraction[" + std::to_string(m) + "," + std::to_string(n) + "]";
  if (m == n) return CheckResult::inequality(name, 0.0, 0.0, tol);
  auto rule = adapted_rule(rn.density, level_order(n, 0));
  double dist = expectation(
      [&](const Vec& x) {
        return 0.5 * rn.density.value(x) * (rn.map.grad_phi(x) - extended_grad(rm.map, x)).squaredNorm();
      },
      rule);
  auto r = CheckResult::inequality(name, rn.entropy - rm.entropy, dist, tol);
  r.add_term("entropy_gap", rn.entropy - rm.entropy);
  r.add_term("half_gradient_distance", dist);
  r.notes.push_back("integrated against g_n on R^n, equal to the top-level weight for F_n-measurable integrands");
  return r;
}

CheckResult check_uniform_L_bound(const TruncationStudy& s, double tol) {
  double worst = 0.0;
  int worst_n = 0;
  for (const auto& r : s.per_level) {
    if (r.L_weighted >= worst) {
      worst = r.L_weighted;
      worst_n = r.n;
    }
  }
  auto r = CheckResult::inequality("uniform_L_bound", 16.0 * s.top_fisher, worst, tol);
  r.add_term("top_fisher", s.top_fisher);
  for (const auto& lv : s.per_level) r.add_term("L_weighted[" + std::to_string(lv.n) + "]", lv.L_weighted);
  r.notes.push_back("largest weighted integral at level " + std::to_string(worst_n));
  return r;
}

CheckResult check_d2_convergence(const TruncationStudy& s, std::span<const Vec> points, double tol) {
  if (s.per_level.size() < 3) throw InvalidArgument("check_d2_convergence: needs at least 3 levels");
  const int d = s.base.dim();
  std::optional<TransportMap> top;
  if (s.per_level.back().n == d) {
    top = s.per_level.back().map;
  } else {
    top = solve_auto(s.base);
  }
  std::vector<double> max_dist(s.per_level.size(), 0.0);
  double max_increase = -std::numeric_limits<double>::infinity();
  Vec worst_x;
  for (const auto& x : points) {
    if (x.size() != d) throw InvalidArgument("check_d2_convergence: point dimension differs");
    Mat target = top->hess_phi(x).matrix();
    double last = 0.0;
    for (std::size_t k = 0; k < s.per_level.size(); ++k) {
      const auto& lv = s.per_level[k];
      Mat emb = Mat::Zero(d, d);
      emb.topLeftCorner(lv.n, lv.n) = lv.map.hess_phi(x.head(lv.n)).matrix();
      double dist = (emb - target).norm();
      max_dist[k] = std::max(max_dist[k], dist);
      if (k > 0 && dist - last > max_increase) {
        max_increase = dist - last;
        worst_x = x;
      }
      last = dist;
    }
  }
  auto mono = CheckResult::inequality("nonincreasing", 0.0, max_increase, tol);
  if (worst_x.size()) mono.samples = WorstSample{worst_x, max_increase};
  double final_tol = std::max(tol, top->accuracy_class());
  auto fin = CheckResult::identity("final_distance", max_dist.back(), 0.0, final_tol);
  auto r = CheckResult::bundle("d2_convergence", {mono, fin});
  for (std::size_t k = 0; k < s.per_level.size(); ++k) {
    r.add_term("max_hs_distance[" + std::to_string(s.per_level[k].n) + "]", max_dist[k]);
  }
  r.notes.push_back("finite-cascade analogue: the top level is the exact target");
  return r;
}

CheckResult check_monotonicity(const TruncationStudy& s, double tol) {
  if (s.per_level.empty()) throw InvalidArgument("check_monotonicity: empty study");
  double min_de = std::numeric_limits<double>::infinity();
  double min_df = std::numeric_limits<double>::infinity();
  double max_e = -std::numeric_limits<double>::infinity();
  double max_f = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < s.per_level.size(); ++k) {
    const auto& r = s.per_level[k];
    max_e = std::max(max_e, r.entropy);
    max_f = std::max(max_f, r.fisher);
    if (k > 0) {
      min_de = std::min(min_de, r.entropy - s.per_level[k - 1].entropy);
      min_df = std::min(min_df, r.fisher - s.per_level[k - 1].fisher);
    }
  }
  if (s.per_level.size() == 1) min_de = min_df = 0.0;
  return CheckResult::bundle(
      "monotonicity",
      {CheckResult::inequality("entropy_nondecreasing", min_de, 0.0, tol),
       CheckResult::inequality("fisher_nondecreasing", min_df, 0.0, tol),
       CheckResult::inequality("entropy_bounded", s.top_entropy, max_e, tol),
       CheckResult::inequality("fisher_bounded", s.top_fisher, max_f, tol)});
}

std::string study_csv(const TruncationStudy& s) {
  std::ostringstream os;
  os << "n,entropy,fisher,talagrand_slack,p210_slack,L_weighted,contraction_slacks\n";
  char buf[512];
  for (const auto& r : s.per_level) {
    std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", r.n, r.entropy,
                  r.fisher, r.talagrand_slack, r.p210_slack, r.L_weighted, r.contraction_slack);
    os << buf;
  }
  return os.str();
}

}  // namespace gma
