#include "gma/cli.hpp"

#include "gma/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

namespace gma::cli {
namespace {

using Json = nlohmann::ordered_json;

[[noreturn]] void fail(const std::string& where, const std::string& what) {
  throw ConfigError(where + ": " + what);
}

void require_keys(const Json& j, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) fail(where, "expected an object");
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [k, v] : j.items()) {
    if (!ok.count(k)) fail(where, "unknown key \"" + k + "\"");
  }
}

const Json& need(const Json& j, const std::string& where, const char* key) {
  if (!j.contains(key)) fail(where, std::string("missing \"") + key + "\"");
  return j.at(key);
}

double number(const Json& j, const std::string& where) {
  if (!j.is_number()) fail(where, "expected a number");
  double v = j.get<double>();
  if (!std::isfinite(v)) fail(where, "expected a finite number");
  return v;
}

int integer(const Json& j, const std::string& where) {
  if (!j.is_number_integer()) fail(where, "expected an integer");
  return j.get<int>();
}

// A bare number is accepted where a one-element list is expected.
std::vector<double> numbers(const Json& j, const std::string& where) {
  std::vector<double> out;
  if (j.is_number()) {
    out.push_back(number(j, where));
  } else if (j.is_array()) {
    for (std::size_t i = 0; i < j.size(); ++i)
      out.push_back(number(j[i], where + "[" + std::to_string(i) + "]"));
  } else {
    fail(where, "expected a number or a list of numbers");
  }
  if (out.empty()) fail(where, "empty list");
  return out;
}

Vec to_vec(const std::vector<double>& v) {
  return Eigen::Map<const Vec>(v.data(), static_cast<Eigen::Index>(v.size()));
}

Density build_density(const Json& j, const std::string& where) {
  if (!j.is_object()) fail(where, "density must be an object");
  const Json& fam = need(j, where, "family");
  if (!fam.is_string()) fail(where + ".family", "expected a string");
  const std::string family = fam.get<std::string>();
  try {
    if (family == "constant") {
      require_keys(j, where, {"family", "dim"});
      int dim = j.contains("dim") ? integer(j["dim"], where + ".dim") : 1;
      if (dim < 1 || dim > 6) fail(where + ".dim", "must lie in [1, 6]");
      return make_constant(dim);
    }
    if (family == "shift") {
      require_keys(j, where, {"family", "a"});
      return make_shift(to_vec(numbers(need(j, where, "a"), where + ".a")));
    }
    if (family == "scaling") {
      require_keys(j, where, {"family", "sigma"});
      return make_scaling(to_vec(numbers(need(j, where, "sigma"), where + ".sigma")));
    }
    if (family == "gaussian") {
      require_keys(j, where, {"family", "cov"});
      const Json& c = need(j, where, "cov");
      if (!c.is_array() || c.empty()) fail(where + ".cov", "expected a square matrix");
      const auto n = static_cast<Eigen::Index>(c.size());
      Mat m(n, n);
      for (Eigen::Index r = 0; r < n; ++r) {
        auto row = numbers(c[r], where + ".cov[" + std::to_string(r) + "]");
        if (static_cast<Eigen::Index>(row.size()) != n) fail(where + ".cov", "not square");
        for (Eigen::Index k = 0; k < n; ++k) m(r, k) = row[k];
      }
      if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12) fail(where + ".cov", "not symmetric");
      return make_gaussian_cov(SymMatrix(m));
    }
    if (family == "mixture") {
      require_keys(j, where, {"family", "weights", "means", "sds"});
      return make_mixture_1d(numbers(need(j, where, "weights"), where + ".weights"),
                             numbers(need(j, where, "means"), where + ".means"),
                             numbers(need(j, where, "sds"), where + ".sds"));
    }
    if (family == "product") {
      require_keys(j, where, {"family", "factors"});
      const Json& fs = need(j, where, "factors");
      if (!fs.is_array() || fs.empty()) fail(where + ".factors", "expected a non-empty list");
      std::vector<Density> factors;
      for (std::size_t i = 0; i < fs.size(); ++i)
        factors.push_back(build_density(fs[i], where + ".factors[" + std::to_string(i) + "]"));
      return make_product(std::move(factors));
    }
    if (family == "ou") {
      require_keys(j, where, {"family", "t", "base"});
      double t = number(need(j, where, "t"), where + ".t");
      if (t < 0.0 || t > 10.0) fail(where + ".t", "must lie in [0, 10]");
      return ou_smooth(build_density(need(j, where, "base"), where + ".base"), t);
    }
    if (family == "conditional") {
      require_keys(j, where, {"family", "n", "base"});
      int n = integer(need(j, where, "n"), where + ".n");
      return conditional_expectation(build_density(need(j, where, "base"), where + ".base"), n);
    }
  } catch (const InvalidArgument& e) {
    fail(where, e.what());
  }
  fail(where + ".family", "unknown family \"" + family + "\"");
}

void parse_solver(const Json& j, RunConfig& cfg) {
  require_keys(j, "solver", {"kind", "eps", "eps_start", "grid", "tolerance", "max_iters",
                             "accuracy_budget"});
  if (j.contains("kind")) {
    if (!j["kind"].is_string()) fail("solver.kind", "expected a string");
    cfg.solver = j["kind"].get<std::string>();
    static const std::set<std::string> kinds = {"auto", "closed-form-1d", "product",
                                                "linear-gaussian", "entropic-2d"};
    if (!kinds.count(cfg.solver)) fail("solver.kind", "unknown solver \"" + cfg.solver + "\"");
  }
  auto& e = cfg.entropic;
  if (j.contains("eps")) e.eps = number(j["eps"], "solver.eps");
  if (j.contains("eps_start")) e.eps_start = number(j["eps_start"], "solver.eps_start");
  if (j.contains("tolerance")) e.tolerance = number(j["tolerance"], "solver.tolerance");
  if (j.contains("max_iters")) e.max_iters = integer(j["max_iters"], "solver.max_iters");
  if (j.contains("accuracy_budget"))
    e.accuracy_class = number(j["accuracy_budget"], "solver.accuracy_budget");
  if (j.contains("grid")) {
    const Json& g = j["grid"];
    require_keys(g, "solver.grid", {"L", "n", "max_truncation_mass"});
    if (g.contains("L")) e.grid.half_width = number(g["L"], "solver.grid.L");
    if (g.contains("n")) e.grid.points = integer(g["n"], "solver.grid.n");
    if (g.contains("max_truncation_mass"))
      e.grid.max_truncation_mass = number(g["max_truncation_mass"], "solver.grid.max_truncation_mass");
  }
  if (!(e.eps >= 1e-3 && e.eps <= 1.0)) fail("solver.eps", "must lie in [1e-3, 1]");
  if (e.eps_start < e.eps) fail("solver.eps_start", "must be at least eps");
  if (e.grid.points < 16 || e.grid.points > 512) fail("solver.grid.n", "must lie in [16, 512]");
  if (e.grid.half_width < 0.0 || e.grid.half_width > 12.0) fail("solver.grid.L", "must lie in [0, 12]");
  if (!(e.tolerance > 0.0)) fail("solver.tolerance", "must be positive");
  if (e.max_iters < 1) fail("solver.max_iters", "must be positive");
  if (!(e.accuracy_class > 0.0)) fail("solver.accuracy_budget", "must be positive");
}

void parse_check_params(const Json& j, RunConfig& cfg) {
  require_keys(j, "check_params",
               {"p_moment", "p_third", "shift_e", "partner", "third_derivative", "test_functions"});
  if (j.contains("p_moment")) {
    cfg.p_moment = numbers(j["p_moment"], "check_params.p_moment");
    for (double p : cfg.p_moment)
      if (p < 1.0 || p > 8.0) fail("check_params.p_moment", "p must lie in [1, 8]");
  }
  if (j.contains("p_third")) {
    cfg.p_third = numbers(j["p_third"], "check_params.p_third");
    for (double p : cfg.p_third)
      if (!(p > 1.0 && p <= 2.0)) fail("check_params.p_third", "p must lie in (1, 2]");
  }
  if (j.contains("shift_e")) cfg.shift_e = to_vec(numbers(j["shift_e"], "check_params.shift_e"));
  if (j.contains("partner")) cfg.partner = build_density(j["partner"], "check_params.partner");
  if (j.contains("third_derivative")) {
    const auto& m = j["third_derivative"];
    if (m == "analytic") cfg.third_mode = ThirdDerivativeMode::Analytic;
    else if (m == "fd") cfg.third_mode = ThirdDerivativeMode::FiniteDifference;
    else fail("check_params.third_derivative", "expected \"analytic\" or \"fd\"");
  }
  if (j.contains("test_functions")) {
    const auto& m = j["test_functions"];
    if (m == "polynomial") cfg.bump_test_functions = false;
    else if (m == "bump") cfg.bump_test_functions = true;
    else fail("check_params.test_functions", "expected \"polynomial\" or \"bump\"");
  }
}

}  // namespace

Density parse_density(const std::string& json_text) {
  Json j;
  try {
    j = Json::parse(json_text);
  } catch (const Json::parse_error& e) {
    throw ConfigError(std::string("density: ") + e.what());
  }
  return build_density(j, "density");
}

RunConfig parse_config(const std::string& json_text, const std::string& name) {
  Json j;
  try {
    j = Json::parse(json_text);
  } catch (const Json::parse_error& e) {
    throw ConfigError(name + ": " + e.what());
  }
  require_keys(j, "config",
               {"schema", "name", "density", "solver", "quadrature_order", "checks", "check_params",
                "tolerances", "points", "seed", "levels", "compare", "output", "jobs"});
  const Json& schema = need(j, "config", "schema");
  if (schema != kSchema) fail("config.schema", std::string("expected \"") + kSchema + "\"");

  RunConfig cfg;
  cfg.name = name;
  if (j.contains("name")) {
    if (!j["name"].is_string()) fail("config.name", "expected a string");
    cfg.name = j["name"].get<std::string>();
  }
  const Json& dj = need(j, "config", "density");
  cfg.density = build_density(dj, "density");
  cfg.density_text = dj.dump();
  const int dim = cfg.density->dim();

  if (j.contains("solver")) parse_solver(j["solver"], cfg);
  if (j.contains("quadrature_order")) {
    cfg.quadrature_order = integer(j["quadrature_order"], "quadrature_order");
    if (cfg.quadrature_order < 1 || cfg.quadrature_order > 512)
      fail("quadrature_order", "must lie in [1, 512]");
  }

  const auto& all = check_names();
  if (!j.contains("checks") || j["checks"] == "all") {
    cfg.checks = all;
  } else if (j["checks"].is_array()) {
    for (const auto& c : j["checks"]) {
      if (!c.is_string()) fail("checks", "expected check names");
      std::string s = c.get<std::string>();
      if (std::find(all.begin(), all.end(), s) == all.end())
        fail("checks", "unknown check \"" + s + "\"");
      if (std::find(cfg.checks.begin(), cfg.checks.end(), s) == cfg.checks.end())
        cfg.checks.push_back(s);
    }
  } else {
    fail("checks", "expected \"all\" or a list of check names");
  }

  if (j.contains("check_params")) parse_check_params(j["check_params"], cfg);
  if (cfg.shift_e && cfg.shift_e->size() != dim)
    fail("check_params.shift_e", "length must match the density dimension");
  if (cfg.partner && cfg.partner->dim() != dim)
    fail("check_params.partner", "dimension must match the density");

  if (j.contains("tolerances")) {
    const Json& t = j["tolerances"];
    if (!t.is_object()) fail("tolerances", "expected an object");
    for (const auto& [k, v] : t.items()) {
      double x = number(v, "tolerances." + k);
      if (!(x > 0.0)) fail("tolerances." + k, "must be positive");
      if (k == "default") {
        cfg.default_tolerance = x;
      } else if (k == "scale") {
        cfg.tolerance_scale = x;
      } else if (std::find(all.begin(), all.end(), k) != all.end() || k == "cross_solver" ||
                 k == "contraction" || k == "monotonicity" || k == "uniform_L_bound" ||
                 k == "d2_convergence") {
        cfg.tolerances[k] = x;
      } else {
        fail("tolerances", "unknown check \"" + k + "\"");
      }
    }
  }

  if (j.contains("points")) {
    const Json& p = j["points"];
    require_keys(p, "points", {"lo", "hi", "count", "random"});
    if (p.contains("lo")) cfg.points.lo = number(p["lo"], "points.lo");
    if (p.contains("hi")) cfg.points.hi = number(p["hi"], "points.hi");
    if (p.contains("count")) cfg.points.count = integer(p["count"], "points.count");
    if (p.contains("random")) cfg.points.random = integer(p["random"], "points.random");
    if (!(cfg.points.lo < cfg.points.hi)) fail("points", "lo must be below hi");
    if (cfg.points.count < 2 || cfg.points.count > 201) fail("points.count", "must lie in [2, 201]");
    if (cfg.points.random < 0 || cfg.points.random > 100000)
      fail("points.random", "must lie in [0, 100000]");
  }
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned()) fail("seed", "expected a non-negative integer");
    cfg.seed = j["seed"].get<std::uint64_t>();
  }
  if (j.contains("levels")) {
    const Json& l = j["levels"];
    if (!l.is_array()) fail("levels", "expected a list of integers");
    for (const auto& v : l) cfg.levels.push_back(integer(v, "levels"));
  }
  if (j.contains("compare")) {
    const Json& c = j["compare"];
    require_keys(c, "compare", {"with", "lo", "hi", "count", "budget"});
    CompareSpec cs;
    const Json& w = need(c, "compare", "with");
    if (w != "linear-gaussian" && w != "closed-form-1d")
      fail("compare.with", "expected \"linear-gaussian\" or \"closed-form-1d\"");
    cs.with = w.get<std::string>();
    if (c.contains("lo")) cs.lo = number(c["lo"], "compare.lo");
    if (c.contains("hi")) cs.hi = number(c["hi"], "compare.hi");
    if (c.contains("count")) cs.count = integer(c["count"], "compare.count");
    if (c.contains("budget")) cs.budget = number(c["budget"], "compare.budget");
    if (!(cs.lo < cs.hi) || cs.count < 2 || cs.count > 201 || cs.budget < 0.0)
      fail("compare", "invalid window or budget");
    cfg.compare = cs;
  }
  if (j.contains("output")) {
    const Json& o = j["output"];
    require_keys(o, "output", {"dir"});
    if (o.contains("dir")) {
      if (!o["dir"].is_string()) fail("output.dir", "expected a string");
      cfg.out_dir = o["dir"].get<std::string>();
    }
  }
  if (j.contains("jobs")) {
    cfg.jobs = integer(j["jobs"], "jobs");
    if (cfg.jobs < 1 || cfg.jobs > 256) fail("jobs", "must lie in [1, 256]");
  }
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.stem().string());
}

void apply(RunConfig& cfg, const Overrides& o) {
  if (o.out_dir) cfg.out_dir = *o.out_dir;
  if (o.quadrature_order) {
    if (*o.quadrature_order < 1 || *o.quadrature_order > 512)
      throw ConfigError("--quadrature-order must lie in [1, 512]");
    cfg.quadrature_order = *o.quadrature_order;
  }
  if (o.tolerance_scale) {
    if (!(*o.tolerance_scale > 0.0) || !std::isfinite(*o.tolerance_scale))
      throw ConfigError("--tolerance-scale must be positive");
    cfg.tolerance_scale = *o.tolerance_scale;
  }
  if (o.jobs) {
    if (*o.jobs < 1 || *o.jobs > 256) throw ConfigError("--jobs must lie in [1, 256]");
    cfg.jobs = *o.jobs;
  }
}

int effective_jobs(const RunConfig& cfg) {
  const char* det = std::getenv("GMA_DETERMINISTIC");
  if (det && std::string(det) == "1") return 1;
  return cfg.jobs;
}

TransportMap solve(const RunConfig& cfg, const Density& g) {
  const std::string& k = cfg.solver;
  if (k == "auto") return solve_auto(g, cfg.entropic);
  if (k == "closed-form-1d") return solve_1d(g);
  if (k == "product") return solve_product(g);
  if (k == "linear-gaussian") {
    auto sigma = g.gaussian_covariance();
    if (!sigma) throw InvalidArgument("the linear-gaussian solver needs a Gaussian density");
    return solve_gaussian_linear(*sigma);
  }
  return solve_entropic_2d(g, cfg.entropic);
}

QuadratureRule rule_for(const RunConfig& cfg, const Density& g) {
  return adapted_rule(g, cfg.quadrature_order);
}

std::vector<Vec> report_points(const RunConfig& cfg, int dim) {
  auto pts = grid_points(dim, cfg.points.lo, cfg.points.hi, cfg.points.count);
  if (cfg.points.random > 0) {
    std::mt19937_64 rng(cfg.seed);
    std::uniform_real_distribution<double> u(cfg.points.lo, cfg.points.hi);
    for (int k = 0; k < cfg.points.random; ++k) {
      Vec x(dim);
      for (int i = 0; i < dim; ++i) x[i] = u(rng);
      pts.push_back(x);
    }
  }
  return pts;
}

double tolerance_for(const RunConfig& cfg, const std::string& check, const TransportMap& t) {
  double tol;
  if (auto it = cfg.tolerances.find(check); it != cfg.tolerances.end()) {
    tol = it->second;
  } else if (cfg.default_tolerance) {
    tol = *cfg.default_tolerance;
  } else if (t.solver_tag() == SolverTag::Entropic2D) {
    tol = t.accuracy_class();
  } else {
    tol = cfg.density->affine_transport() ? 1e-8 : 1e-5;
  }
  return tol * cfg.tolerance_scale;
}

}  // namespace gma::cli
