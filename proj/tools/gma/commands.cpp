#include "gma/cli.hpp"

#include "gma/errors.hpp"
#include "gma/report.hpp"
#include "gma/truncation.hpp"

#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <functional>
#include <map>
#include <ostream>
#include <sstream>
#include <thread>

namespace gma::cli {
namespace {

using Task = std::function<std::vector<CheckResult>()>;

// Runs tasks on up to `jobs` threads; results keep task order.
std::vector<CheckResult> run_tasks(const std::vector<Task>& tasks, int jobs) {
  std::vector<std::vector<CheckResult>> out(tasks.size());
  std::vector<std::exception_ptr> errors(tasks.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k; (k = next++) < tasks.size();) {
      try {
        out[k] = tasks[k]();
      } catch (...) {
        errors[k] = std::current_exception();
      }
    }
  };
  const int n = std::max(1, std::min<int>(jobs, static_cast<int>(tasks.size())));
  if (n == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < n; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  std::vector<CheckResult> rows;
  for (auto& v : out)
    for (auto& r : v) rows.push_back(std::move(r));
  return rows;
}

std::string p_suffix(double p, std::size_t count) {
  if (count == 1) return "";
  return "(p=" + format_double(p) + ")";
}

// Numerical trouble inside a check becomes a failing row instead of aborting the run.
CheckResult guarded(const std::string& name, CheckKind kind, double tol,
                    const std::function<CheckResult()>& f) {
  try {
    return f();
  } catch (const EvaluationError& e) {
    CheckResult r = CheckResult::skipped(name, kind, e.what());
    r.status = CheckStatus::Fail;
    r.pass = false;
    r.lhs = r.rhs = r.residual_or_slack = std::nan("");
    r.tolerance = tol;
    return r;
  }
}

bool all_pass(const std::vector<CheckResult>& rows) {
  for (const auto& r : rows)
    if (r.status == CheckStatus::Fail) return false;
  return true;
}

void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + p.string());
  out << text;
  if (!out) throw ConfigError("failed writing " + p.string());
}

void ensure_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw ConfigError("cannot create output directory " + dir.string() + ": " + ec.message());
}

std::string jsonl(const std::vector<CheckResult>& rows) {
  std::string s;
  for (const auto& r : rows) s += to_json_line(r) + "\n";
  return s;
}

std::string describe_solver(const RunConfig& cfg) { return "solver " + cfg.solver; }

template <typename F>
int with_exit_codes(const RunConfig& cfg, std::ostream& log, F&& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    log << "gma: config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const InvalidArgument& e) {
    log << "gma: invalid configuration: " << e.what() << "\n";
    return kConfigError;
  } catch (const SolverError& e) {
    log << "gma: " << describe_solver(cfg) << " failed for density "
        << (cfg.density ? cfg.density->describe() : std::string("?")) << ": " << e.what() << "\n";
    return kSolverFailed;
  } catch (const ResourceLimitError& e) {
    log << "gma: " << describe_solver(cfg) << " exceeded a resource limit: " << e.what() << "\n";
    return kSolverFailed;
  } catch (const EvaluationError& e) {
    log << "gma: evaluation failed for density "
        << (cfg.density ? cfg.density->describe() : std::string("?")) << ": " << e.what() << "\n";
    return kSolverFailed;
  }
}

}  // namespace

CheckResult check_cross_solver(const TransportMap& a, const TransportMap& b,
                               const std::vector<Vec>& points, double budget) {
  if (a.dim() != b.dim()) throw InvalidArgument("check_cross_solver: dimension mismatch");
  double worst = 0.0;
  Vec worst_x = points.empty() ? Vec::Zero(a.dim()) : points.front();
  for (const auto& x : points) {
    double e = (a.grad_phi(x) - b.grad_phi(x)).cwiseAbs().maxCoeff();
    if (!(e <= worst)) {
      worst = e;
      worst_x = x;
    }
  }
  auto r = CheckResult::identity("cross_solver", worst, 0.0, budget);
  r.add_term("points", static_cast<double>(points.size()));
  r.samples = WorstSample{worst_x, worst};
  r.notes.push_back(to_string(a.solver_tag()) + " vs " + to_string(b.solver_tag()));
  return r;
}

std::vector<CheckResult> run_checks(const RunConfig& cfg) {
  const Density& g = *cfg.density;
  const int dim = g.dim();
  const TransportMap t = solve(cfg, g);
  const QuadratureRule rule = rule_for(cfg, g);
  const std::vector<Vec> points = report_points(cfg, dim);
  auto tol = [&](const std::string& c) { return tolerance_for(cfg, c, t); };

  std::vector<Task> tasks;
  // Every check runs guarded: evaluation trouble becomes a failing row naming the cause.
  auto add = [&](const std::string& name, CheckKind kind, std::function<CheckResult()> f,
                 std::string suffix = "") {
    tasks.push_back([=, tl = tol(name)] {
      auto r = guarded(name, kind, tl, f);
      r.name += suffix;
      return std::vector{r};
    });
  };
  const auto I = CheckKind::Identity;
  const auto Q = CheckKind::Inequality;
  for (const auto& name : cfg.checks) {
    if (name == "cov_formula") {
      add(name, I, [&] { return check_cov_formula(g, t, points, tol(name)); });
    } else if (name == "inverse_cov_formula") {
      add(name, I, [&] {
        if (!t.invertible()) {
          return CheckResult::skipped(name, I,
                                      "the " + to_string(t.solver_tag()) + " solver has no inverse map");
        }
        return check_inverse_cov_formula(g, invert(t), points, tol(name));
      });
    } else if (name == "identity_2_2") {
      add(name, I, [&] { return check_identity_2_2(g, t, rule, tol(name), cfg.third_mode); });
    } else if (name == "talagrand") {
      add(name, Q, [&] { return check_talagrand(g, t, rule, tol(name)); });
    } else if (name == "entropy_transport") {
      add(name, Q, [&] {
        const Density partner = cfg.partner ? *cfg.partner : make_constant(dim);
        return check_entropy_transport(g, partner, t, solve(cfg, partner), rule, tol(name));
      });
    } else if (name == "shift_inequality") {
      add(name, Q, [&] {
        Vec e = cfg.shift_e ? *cfg.shift_e : Vec(Vec::Unit(dim, 0));
        return check_shift_inequality(g, e, t, rule, tol(name));
      });
    } else if (name == "second_deriv_bounds") {
      add(name, Q, [&] { return check_second_deriv_bounds(g, t, rule, tol(name)); });
    } else if (name == "moment_bounds") {
      for (double p : cfg.p_moment) {
        add(name, Q, [&, p] { return check_moment_bounds(g, t, p, rule, points, tol(name)); },
            p_suffix(p, cfg.p_moment.size()));
      }
    } else if (name == "third_deriv_bound") {
      for (double p : cfg.p_third) {
        add(name, Q, [&, p] { return check_third_deriv_bound(g, t, p, rule, tol(name), cfg.third_mode); },
            p_suffix(p, cfg.p_third.size()));
      }
    } else if (name == "L_duality") {
      add(name, I, [&] {
        auto xi = cfg.bump_test_functions ? bumped_test_functions(dim) : polynomial_test_functions(dim);
        return check_L_duality(g, t, xi, rule, tol(name));
      });
    } else if (name == "L_weighted_bound") {
      add(name, Q, [&] { return check_L_weighted_bound(g, t, rule, tol(name)); });
    }
  }
  if (cfg.compare) {
    tasks.push_back([&] {
      const CompareSpec& c = *cfg.compare;
      TransportMap other = [&] {
        if (c.with == "linear-gaussian") {
          auto sigma = g.gaussian_covariance();
          if (!sigma) throw InvalidArgument("compare: density is not Gaussian");
          return solve_gaussian_linear(*sigma);
        }
        if (dim == 1) return solve_1d(g);
        // Coordinatewise 1D solves of the factors, assembled independently of solve_product.
        if (!g.has_product_structure()) throw InvalidArgument("compare: density is not a product");
        std::vector<TransportMap> maps;
        for (const auto& f : g.factors()) maps.push_back(solve_1d(f));
        struct Assembled : TransportModel {
          std::vector<TransportMap> m;
          int dim() const override { return static_cast<int>(m.size()); }
          SolverTag tag() const override { return SolverTag::ClosedForm1D; }
          double phi(const Vec& x) const override {
            double s = 0.0;
            for (int i = 0; i < dim(); ++i) s += m[i].phi(Vec::Constant(1, x[i]));
            return s;
          }
          Vec grad_phi(const Vec& x) const override {
            Vec v(dim());
            for (int i = 0; i < dim(); ++i) v[i] = m[i].grad_phi(Vec::Constant(1, x[i]))[0];
            return v;
          }
          SymMatrix hess_phi(const Vec& x) const override {
            Vec d(dim());
            for (int i = 0; i < dim(); ++i) d[i] = m[i].hess_phi(Vec::Constant(1, x[i]))(0, 0);
            return SymMatrix::diagonal(d);
          }
          bool has_third() const override { return false; }
          SymMatrix third(const Vec&, int) const override { throw SolverError("not exposed"); }
          double accuracy_class() const override { return 1e-9; }
        };
        auto model = std::make_shared<Assembled>();
        model->m = std::move(maps);
        return TransportMap(model);
      }();
      auto pts = grid_points(dim, c.lo, c.hi, c.count);
      double budget = c.budget > 0.0 ? c.budget : t.accuracy_class();
      if (auto it = cfg.tolerances.find("cross_solver"); it != cfg.tolerances.end()) budget = it->second;
      return std::vector{check_cross_solver(t, other, pts, budget * cfg.tolerance_scale)};
    });
  }

  auto rows = run_tasks(tasks, effective_jobs(cfg));
  if (auto floored = floored_nodes(g, rule); floored > 0) {
    for (auto& r : rows) r.notes.push_back("density floored at " + std::to_string(floored) + " nodes");
  }
  for (auto& r : rows) r.notes.push_back("solver " + to_string(t.solver_tag()));
  sort_by_name(rows);
  return rows;
}

int cmd_verify(const RunConfig& cfg, std::ostream& log) {
  return with_exit_codes(cfg, log, [&] {
    auto rows = run_checks(cfg);
    ensure_dir(cfg.out_dir);
    write_file(cfg.out_dir / "verify.jsonl", jsonl(rows));
    write_file(cfg.out_dir / "verify.csv", to_csv(rows));
    int failed = 0;
    for (const auto& r : rows) {
      if (r.status == CheckStatus::Fail) {
        ++failed;
        log << "FAIL " << r.name << ": residual_or_slack " << format_double(r.residual_or_slack)
            << ", tolerance " << format_double(r.tolerance)
            << (r.reason.empty() ? "" : ", " + r.reason) << "\n";
      }
    }
    log << cfg.name << ": " << rows.size() << " rows, " << failed << " failed\n";
    return failed == 0 ? kOk : kCheckFailed;
  });
}

int cmd_truncation(const RunConfig& cfg, std::ostream& log) {
  return with_exit_codes(cfg, log, [&] {
    const Density& g = *cfg.density;
    if (g.dim() < 2) {
      throw ConfigError("truncation needs a density of dimension >= 2 (got " +
                        std::to_string(g.dim()) + ")");
    }
    std::vector<int> levels = cfg.levels;
    if (levels.empty())
      for (int n = 1; n <= g.dim(); ++n) levels.push_back(n);
    if (levels.size() < 2) throw ConfigError("truncation needs at least 2 levels");

    StudyOptions opt;
    opt.entropic = cfg.entropic;
    opt.quadrature_order = cfg.quadrature_order;
    TruncationStudy study = run_study(g, levels, opt);

    // The study's maps are the per-level solver outputs; tolerances follow the top level.
    const TransportMap& top = study.per_level.back().map;
    auto tol = [&](const std::string& c) { return tolerance_for(cfg, c, top); };
    std::vector<CheckResult> gate;
    gate.push_back(check_monotonicity(study, tol("monotonicity")));
    for (std::size_t k = 0; k + 1 < study.levels.size(); ++k)
      gate.push_back(check_contraction(study, study.levels[k], study.levels[k + 1], tol("contraction")));
    std::vector<CheckResult> rows = gate;
    rows.push_back(check_uniform_L_bound(study, tol("uniform_L_bound")));
    if (study.levels.size() >= 3) {
      rows.push_back(check_d2_convergence(study, report_points(cfg, g.dim()), tol("d2_convergence")));
    } else {
      rows.push_back(CheckResult::skipped("d2_convergence", CheckKind::Inequality,
                                          "needs at least 3 levels"));
    }
    sort_by_name(rows);

    ensure_dir(cfg.out_dir);
    write_file(cfg.out_dir / "truncation.csv", study_csv(study));
    write_file(cfg.out_dir / "truncation.jsonl", jsonl(rows));
    int failed = 0;
    for (const auto& r : rows) {
      if (r.status == CheckStatus::Fail) {
        log << "FAIL " << r.name << ": residual_or_slack " << format_double(r.residual_or_slack)
            << ", tolerance " << format_double(r.tolerance) << "\n";
        ++failed;
      }
    }
    log << cfg.name << ": " << study.levels.size() << " levels, " << failed << " failed rows\n";
    return all_pass(gate) ? kOk : kCheckFailed;
  });
}

int cmd_report(const std::vector<std::filesystem::path>& paths,
               const std::filesystem::path& out_dir, std::ostream& summary, std::ostream& log) {
  if (paths.empty()) {
    log << "gma: report needs at least one JSON-lines file\n";
    return kConfigError;
  }
  struct Section {
    std::string source;
    std::vector<CheckResult> rows;
  };
  std::vector<Section> sections;
  std::map<std::string, int> seen;
  try {
    for (const auto& p : paths) {
      std::ifstream in(p);
      if (!in) {
        log << "gma: cannot open report file " << p.string() << "\n";
        return kConfigError;
      }
      // The bare file name labels a section unless another input shares it.
      int same = 0;
      for (const auto& q : paths) same += q.filename() == p.filename();
      Section s{same > 1 ? p.generic_string() : p.filename().string(), {}};
      std::string line;
      int lineno = 0;
      while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        try {
          s.rows.push_back(from_json_line(line));
        } catch (const std::exception& e) {
          log << "gma: " << p.string() << ":" << lineno << ": " << e.what() << "\n";
          return kConfigError;
        }
      }
      sort_by_name(s.rows);
      for (const auto& r : s.rows) ++seen[r.name];
      sections.push_back(std::move(s));
    }
  } catch (const std::exception& e) {
    log << "gma: " << e.what() << "\n";
    return kConfigError;
  }
  // Names present in more than one place carry their source file name.
  for (auto& s : sections)
    for (auto& r : s.rows)
      if (seen[r.name] > 1) r.name += "@" + s.source;

  std::ostringstream txt, csv;
  csv << "source,name,kind,lhs,rhs,residual_or_slack,tolerance,pass\n";
  std::size_t total = 0, failed = 0;
  for (const auto& s : sections) {
    txt << "== " << s.source << " (" << s.rows.size() << " rows)\n";
    char buf[512];
    std::snprintf(buf, sizeof buf, "%-36s %-10s %-8s %14s %12s\n", "name", "kind", "status",
                  "resid/slack", "tolerance");
    txt << buf;
    for (const auto& r : s.rows) {
      std::snprintf(buf, sizeof buf, "%-36s %-10s %-8s %14.6g %12.3g\n", r.name.c_str(),
                    to_string(r.kind).c_str(), to_string(r.status).c_str(), r.residual_or_slack,
                    r.tolerance);
      txt << buf;
      ++total;
      if (r.status == CheckStatus::Fail) ++failed;
    }
    txt << "\n";
    std::vector<CheckResult> one = s.rows;
    std::string body = to_csv(one);
    std::istringstream lines(body);
    std::string l;
    std::getline(lines, l);  // header
    while (std::getline(lines, l)) csv << csv_field(s.source) << "," << l << "\n";
  }
  txt << total << " rows, " << failed << " failed\n";
  try {
    ensure_dir(out_dir);
    write_file(out_dir / "report.txt", txt.str());
    write_file(out_dir / "report.csv", csv.str());
  } catch (const ConfigError& e) {
    log << "gma: " << e.what() << "\n";
    return kConfigError;
  }
  summary << txt.str();
  return kOk;
}

}  // namespace gma::cli
