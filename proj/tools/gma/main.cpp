#include "gma/cli.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <optional>

int main(int argc, char** argv) {
  using namespace gma::cli;
  CLI::App app{"Gaussian transport identity verifier"};
  app.require_subcommand(1);

  std::string config_path;
  Overrides ov;
  std::string out_dir;
  std::optional<int> quad, jobs;
  std::optional<double> tol_scale;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON run configuration")->required();
    sub->add_option("--out", out_dir, "output directory");
    sub->add_option("--quadrature-order", quad, "Gauss-Hermite order per axis");
    sub->add_option("--tolerance-scale", tol_scale, "multiplier applied to every tolerance");
    sub->add_option("--jobs", jobs, "worker threads (GMA_DETERMINISTIC=1 forces 1)");
  };
  auto* verify = app.add_subcommand("verify", "run the identity and inequality checks");
  add_common(verify);
  auto* trunc = app.add_subcommand("truncation", "run the conditional-expectation cascade");
  add_common(trunc);
  auto* report = app.add_subcommand("report", "merge JSON-lines reports");
  std::vector<std::string> inputs;
  std::string report_out = ".";
  report->add_option("files", inputs, "JSON-lines reports, merged in order");
  report->add_option("--out", report_out, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : kConfigError;
  }

  if (report->parsed()) {
    std::vector<std::filesystem::path> paths(inputs.begin(), inputs.end());
    return cmd_report(paths, report_out, std::cout, std::cerr);
  }

  if (!out_dir.empty()) ov.out_dir = out_dir;
  ov.quadrature_order = quad;
  ov.tolerance_scale = tol_scale;
  ov.jobs = jobs;
  RunConfig cfg;
  try {
    cfg = load_config(config_path);
    apply(cfg, ov);
  } catch (const ConfigError& e) {
    std::cerr << "gma: config error: " << e.what() << "\n";
    return kConfigError;
  }
  return verify->parsed() ? cmd_verify(cfg, std::cerr) : cmd_truncation(cfg, std::cerr);
}
