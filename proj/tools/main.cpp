// Command-line front end: evolve closed-curve initial data to Lorentzian
// minimal surfaces, run refinement and stability studies, validate data,
// and export analytic reference surfaces.

#include <cstdio>
#include <exception>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "minlor/driver.hpp"
#include "minlor/errors.hpp"

namespace {

using namespace minlor;

int classify(const std::exception& e) {
  if (dynamic_cast<const ConvergenceError*>(&e) ||
      dynamic_cast<const BlowupError*>(&e) ||
      dynamic_cast<const StarvationError*>(&e) ||
      dynamic_cast<const InternalError*>(&e))
    return kExitSolverFailure;
  return kExitInvariantViolation;
}

RunConfig load_config(const std::string& path,
                      const std::vector<std::string>& overrides) {
  if (path.empty()) return config_from_overrides(overrides);
  return parse_config(path, overrides);
}

void print_strip_summary(const RunReport& rep) {
  std::printf("strips: %zu\n", rep.strips.size());
  if (!rep.strips.empty()) {
    int starved = 0;
    int worst_iters = 0;
    double worst_defect = 0.0;
    for (const auto& r : rep.strips) {
      starved += r.est.starved ? 1 : 0;
      worst_iters = std::max(worst_iters, r.iterations);
      worst_defect = std::max(worst_defect, r.symmetric_defect);
    }
    std::printf("  starved: %d  max picard iterations: %d"
                "  worst symmetric defect: %.3e\n",
                starved, worst_iters, worst_defect);
  }
}

int cmd_run(const std::string& config_path,
            const std::vector<std::string>& overrides) {
  RunConfig cfg = load_config(config_path, overrides);
  RunReport rep = run(cfg);
  std::printf("%s", rep.config_echo.c_str());
  print_strip_summary(rep);
  if (!rep.validate_violations.empty()) {
    std::printf("admissibility violations: %zu\n",
                rep.validate_violations.size());
    for (const auto& v : rep.validate_violations)
      std::printf("  node %d: %s\n", v.node, v.message.c_str());
  }
  if (rep.exit_code == kExitOk && !rep.surface_path.empty()) {
    const auto& d = rep.diagnostics;
    std::printf("diagnostics: pass\n");
    std::printf("  null drift: uu %.3e vv %.3e\n", d.max_uu, d.max_vv);
    std::printf("  causal violations: %d (degenerate nodes: %d)\n",
                d.causal_violations, d.degenerate_nodes);
    std::printf("  conformal: cross %.3e trace %.3e min lambda %.3e\n",
                d.max_cross, d.max_trace, d.min_lambda);
    std::printf("  area: %.12g  energy: %.12g\n", d.area, d.energy);
    std::printf("  max residual: %.3e  worst slice defect: %.3e (%d slices)\n",
                d.max_residual, d.slice_defect, d.slices_checked);
    std::printf("surface: %s\n", rep.surface_path.c_str());
    std::printf("diagnostics: %s\n", rep.diagnostics_path.c_str());
  } else {
    std::printf("failure: %s\n", rep.failure.c_str());
    if (!rep.surface_path.empty())
      std::printf("partial surface: %s\n", rep.surface_path.c_str());
  }
  std::printf("report: %s\n", rep.report_path.c_str());
  std::printf("wall seconds: %.3f\n", rep.wall_seconds);
  return rep.exit_code;
}

int cmd_study(const std::string& config_path,
              const std::vector<std::string>& overrides) {
  RunConfig cfg = load_config(config_path, overrides);
  cfg.mode = StudyMode::Convergence;
  StudyReport sr = convergence_study(cfg, cfg.levels);
  std::printf("%-28s %8s %14s %14s %10s\n", "quantity", "n", "h", "error",
              "order");
  for (const auto& r : sr.rows)
    std::printf("%-28s %8d %14.6e %14.6e %10.3f\n", r.quantity.c_str(), r.n,
                r.h, r.error, r.order);
  std::printf("table: %s\n", sr.table_path.c_str());
  if (!sr.monotone)
    std::printf("FAIL: errors do not decrease monotonically\n");
  return sr.exit_code;
}

int cmd_validate(const std::string& config_path,
                 const std::vector<std::string>& overrides) {
  RunConfig cfg = load_config(config_path, overrides);
  MetricSpec m = metric_from_config(cfg);
  InitialCurve c = curve_from_config(cfg);
  if (cfg.project_orthogonal) c = project_orthogonal(m, c);
  const auto violations = admissibility_violations(m, c, cfg);
  std::printf("%s", echo_config(cfg).c_str());
  if (violations.empty()) {
    std::printf("admissible: yes\n");
    return kExitOk;
  }
  std::printf("admissible: no (%zu violations)\n", violations.size());
  for (const auto& v : violations)
    std::printf("  node %d: %s\n", v.node, v.message.c_str());
  return kExitInvariantViolation;
}

int cmd_oracle(const std::string& name, int n, int rows, double radius,
               double amplitude, const std::string& out_path,
               const std::string& format) {
  OracleParams p;
  p.radius = radius;
  p.amplitude = amplitude;
  const SolutionSurface s = analytic_oracle(name, p, n, rows);
  const MetricSpec m = oracle_metric(name);
  std::ostringstream os;
  export_surface(os, m, s, format);
  if (out_path.empty() || out_path == "-") {
    std::cout << os.str();
  } else {
    std::ofstream f(out_path, std::ios::binary);
    if (!f) throw ConfigError("cannot write " + out_path);
    f << os.str();
    std::printf("oracle surface: %s\n", out_path.c_str());
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Lorentzian-minimal-surface evolution of closed curves"};
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> overrides;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "INI configuration file");
    sub->add_option("--set", overrides,
                    "override a config entry, e.g. --set solver.n=128");
  };

  CLI::App* sub_run = app.add_subcommand("run", "evolve and diagnose");
  add_common(sub_run);
  CLI::App* sub_study =
      app.add_subcommand("study", "grid refinement convergence study");
  add_common(sub_study);
  CLI::App* sub_validate = app.add_subcommand(
      "validate-only", "check initial data admissibility and exit");
  add_common(sub_validate);

  std::string oracle_name = "minkowski-circle";
  int oracle_n = 64;
  int oracle_rows = 64;
  double oracle_radius = 1.0;
  double oracle_amplitude = 0.3;
  std::string oracle_out;
  std::string oracle_format = "tsv";
  CLI::App* sub_oracle =
      app.add_subcommand("oracle", "export an analytic reference surface");
  sub_oracle->add_option(
      "--name", oracle_name,
      "minkowski-circle | flat-linear | flat-travelling-wave");
  sub_oracle->add_option("--n", oracle_n, "nodes per row (power of two)");
  sub_oracle->add_option("--rows", oracle_rows, "number of time steps");
  sub_oracle->add_option("--radius", oracle_radius, "circle radius");
  sub_oracle->add_option("--amplitude", oracle_amplitude, "wave amplitude");
  sub_oracle->add_option("--out", oracle_out, "output path ('-' for stdout)");
  sub_oracle->add_option("--format", oracle_format, "tsv | json");

  CLI11_PARSE(app, argc, argv);

  try {
    if (sub_run->parsed()) return cmd_run(config_path, overrides);
    if (sub_study->parsed()) return cmd_study(config_path, overrides);
    if (sub_validate->parsed()) return cmd_validate(config_path, overrides);
    if (sub_oracle->parsed())
      return cmd_oracle(oracle_name, oracle_n, oracle_rows, oracle_radius,
                        oracle_amplitude, oracle_out, oracle_format);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return classify(e);
  }
  return kExitOk;
}
