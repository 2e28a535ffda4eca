#pragma once

// Batch front-end: JSON run configs, the verify / truncation / report commands.

#include "gma/density.hpp"
#include "gma/identities.hpp"
#include "gma/transport.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace gma::cli {

inline constexpr const char* kSchema = "gma-config/1";

enum ExitCode : int { kOk = 0, kCheckFailed = 1, kConfigError = 2, kSolverFailed = 3 };

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct PointSpec {
  double lo = -4.0;
  double hi = 4.0;
  int count = 41;
  int random = 0;  // extra uniform points in [lo, hi]^dim drawn from the seed
};

// Second solver whose grad Phi is compared with the primary one.
struct CompareSpec {
  std::string with;
  double lo = -2.0;
  double hi = 2.0;
  int count = 21;
  double budget = 0.0;  // 0: the primary solver's accuracy class
};

struct RunConfig {
  std::string name;
  std::optional<Density> density;
  std::string density_text;  // canonical JSON of the density spec
  std::optional<Density> partner;
  std::string solver = "auto";
  EntropicOptions entropic;
  int quadrature_order = 0;  // per axis; 0 selects by dimension
  std::vector<std::string> checks;
  std::optional<double> default_tolerance;
  std::map<std::string, double> tolerances;
  double tolerance_scale = 1.0;
  std::vector<double> p_moment{1.0};
  std::vector<double> p_third{2.0};
  std::optional<Vec> shift_e;
  ThirdDerivativeMode third_mode = ThirdDerivativeMode::Analytic;
  bool bump_test_functions = false;
  PointSpec points;
  std::uint64_t seed = 0;
  std::vector<int> levels;
  std::optional<CompareSpec> compare;
  std::filesystem::path out_dir = ".";
  int jobs = 1;
};

/// Density from a spec object {"family": ..., params...}. Throws ConfigError.
Density parse_density(const std::string& json_text);

RunConfig parse_config(const std::string& json_text, const std::string& name = "config");
/// Throws ConfigError when the file is missing or malformed.
RunConfig load_config(const std::filesystem::path& path);

/// Flag overrides applied after loading; unset values keep the config's.
struct Overrides {
  std::optional<std::filesystem::path> out_dir;
  std::optional<int> quadrature_order;
  std::optional<double> tolerance_scale;
  std::optional<int> jobs;
};
void apply(RunConfig& cfg, const Overrides& o);

/// jobs, or 1 when GMA_DETERMINISTIC=1 is set.
int effective_jobs(const RunConfig& cfg);

/// Primary transport selected by the config's solver kind.
TransportMap solve(const RunConfig& cfg, const Density& g);
/// Configured order (0: default) stretched to the density.
QuadratureRule rule_for(const RunConfig& cfg, const Density& g);
std::vector<Vec> report_points(const RunConfig& cfg, int dim);
/// Override, else 1e-8 for affine-transport families, 1e-5 otherwise, the
/// accuracy class for entropic maps; times tolerance_scale.
double tolerance_for(const RunConfig& cfg, const std::string& check, const TransportMap& t);

/// Max over points of the largest component of |grad Phi_a - grad Phi_b|.
CheckResult check_cross_solver(const TransportMap& a, const TransportMap& b,
                               const std::vector<Vec>& points, double budget);

/// Runs the configured checks and returns rows sorted by name.
std::vector<CheckResult> run_checks(const RunConfig& cfg);

int cmd_verify(const RunConfig& cfg, std::ostream& log);
int cmd_truncation(const RunConfig& cfg, std::ostream& log);
/// Merged summary goes to `summary` and <out_dir>/report.txt, rows to <out_dir>/report.csv.
int cmd_report(const std::vector<std::filesystem::path>& paths,
               const std::filesystem::path& out_dir, std::ostream& summary, std::ostream& log);

}  // namespace gma::cli
