#include "minlor/driver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "json.hpp"
#include "minlor/errors.hpp"

namespace minlor {

namespace fs = std::filesystem;
using nlohmann::json;

MetricSpec metric_from_config(const RunConfig& cfg) {
  if (cfg.metric_type == "minkowski")
    return MetricSpec::minkowski(cfg.dimension);
  if (cfg.metric_type == "flrw-constant")
    return MetricSpec::flrw(cfg.dimension, ScaleFactorKind::Constant,
                            cfg.metric_param);
  if (cfg.metric_type == "flrw-exponential")
    return MetricSpec::flrw(cfg.dimension, ScaleFactorKind::Exponential,
                            cfg.metric_param);
  if (cfg.metric_type == "flrw-polynomial")
    return MetricSpec::flrw(cfg.dimension, ScaleFactorKind::Polynomial,
                            cfg.metric_param);
  throw ConfigError("unknown metric.type '" + cfg.metric_type + "'");
}

namespace {

InitialCurve curve_from_config_n(const RunConfig& cfg, int n_nodes) {
  if (cfg.curve_type == "circle")
    return circle_curve(cfg.dimension, n_nodes, cfg.radius, cfg.k1_time);
  if (cfg.curve_type == "ellipse")
    return ellipse_curve(cfg.dimension, n_nodes, cfg.semi_a, cfg.semi_b,
                         cfg.k1_time);
  if (cfg.curve_type == "file") {
    InitialCurve c = curve_from_node_file(cfg.curve_file);
    if (c.dimension() != cfg.dimension)
      throw ConfigError("curve file dimension " +
                        std::to_string(c.dimension()) +
                        " does not match metric.dimension " +
                        std::to_string(cfg.dimension));
    if (c.n_nodes() != n_nodes)
      throw ConfigError("curve file node count " +
                        std::to_string(c.n_nodes()) +
                        " does not match solver.n " + std::to_string(n_nodes));
    return c;
  }
  throw ConfigError("unknown curve.type '" + cfg.curve_type + "'");
}

constexpr double kTwoPi = 2.0 * M_PI;

int failure_exit_code(const std::exception& e) {
  if (dynamic_cast<const ConvergenceError*>(&e) ||
      dynamic_cast<const BlowupError*>(&e) ||
      dynamic_cast<const StarvationError*>(&e) ||
      dynamic_cast<const InternalError*>(&e))
    return kExitSolverFailure;
  return kExitInvariantViolation;
}

std::string fmt(double x) {
  std::ostringstream os;
  os << std::setprecision(17) << x;
  return os.str();
}

struct PreparedCurve {
  InitialCurve curve;
  double scale = 1.0;
  std::vector<Violation> violations;  // nonempty: not admissible
};

PreparedCurve prepare_curve(const MetricSpec& m, const RunConfig& cfg,
                            int n_nodes, const Matrix* k0_perturbation) {
  PreparedCurve out;
  out.curve = curve_from_config_n(cfg, n_nodes);
  if (k0_perturbation) out.curve.k0 += *k0_perturbation;
  if (cfg.mode == StudyMode::Backward) out.curve.k1 = -out.curve.k1;
  if (cfg.project_orthogonal)
    out.curve = project_orthogonal(m, out.curve);

  out.violations = admissibility_violations(m, out.curve, cfg);
  if (!out.violations.empty()) return out;

  if (cfg.conformalize) out.curve = conformalize(m, out.curve);
  if (out.curve.period != kTwoPi) {
    out.scale = out.curve.period / kTwoPi;
    out.curve = rescale_period(out.curve, kTwoPi);
  }
  return out;
}

SolverOptions solver_options(const RunConfig& cfg) {
  SolverOptions so;
  so.tol = cfg.tol;
  so.max_iter = cfg.max_iter;
  so.delta = cfg.delta;
  so.orientation = cfg.mode == StudyMode::Backward ? -1 : 1;
  return so;
}

double row0_flip_scale(const MetricSpec& m, const SolutionSurface& s) {
  double sc = 0.0;
  const GridRow& r = s.rows.front();
  for (int j = 0; j < r.n_nodes(); ++j) {
    const Vector at = r.y.row(j);
    sc = std::max(sc, flip_norm_sq(m, at, Vector(r.u.row(j))) +
                          flip_norm_sq(m, at, Vector(r.v.row(j))));
  }
  return sc;
}

struct SliceSweep {
  int checked = 0;
  int failed = 0;
  double worst_defect = 0.0;
  std::string first_failure;
};

SliceSweep sweep_slices(const SolutionSurface& s, int n_slices) {
  SliceSweep sw;
  const int dir = s.time_orientation;
  const Vector first = s.rows.front().y.col(0);
  const Vector last = s.rows.back().y.col(0);
  const double a = dir > 0 ? first.maxCoeff() : first.minCoeff();
  const double b = dir > 0 ? last.minCoeff() : last.maxCoeff();
  if (dir * (b - a) <= 0.0) return sw;
  for (int k = 1; k <= n_slices; ++k) {
    const double T = a + (b - a) * k / (n_slices + 1.0);
    try {
      const SliceGraph g = time_slice_preimage(s, T);
      sw.worst_defect = std::max(sw.worst_defect, g.lipschitz_defect);
    } catch (const GeometryError& e) {
      ++sw.failed;
      if (sw.first_failure.empty()) sw.first_failure = e.what();
    }
    ++sw.checked;
  }
  return sw;
}

json violations_json(const std::vector<Violation>& vs) {
  json arr = json::array();
  for (const auto& v : vs)
    arr.push_back({{"message", v.message},
                   {"node", v.node},
                   {"magnitude", v.magnitude}});
  return arr;
}

json strips_json(const std::vector<StripRecord>& strips) {
  json arr = json::array();
  for (const auto& r : strips) {
    arr.push_back({{"first_row", r.first_row},
                   {"n_rows", r.est.n_rows},
                   {"R_k", r.est.R_k},
                   {"delta", r.est.delta},
                   {"G", r.est.G},
                   {"u_bar", r.est.u_bar},
                   {"v_bar", r.est.v_bar},
                   {"L_k", r.est.L_k},
                   {"l", r.est.l},
                   {"K", r.est.K},
                   {"K_prime", r.est.K_prime},
                   {"starved", r.est.starved},
                   {"iterations", r.iterations},
                   {"last_contraction_ratio", r.last_contraction_ratio},
                   {"symmetric_defect", r.symmetric_defect}});
  }
  return arr;
}

// Diagnostics gates. Discretization allowances scale with h^2 and the row-0
// flip magnitude of the data; they catch broken transport, not truncation.
struct GateResult {
  DiagnosticsSummary summary;
  json detail;
};

GateResult run_diagnostics(const MetricSpec& m, const SolutionSurface& s,
                           const RunConfig& cfg) {
  GateResult out;
  DiagnosticsSummary& d = out.summary;
  d.null_data = cfg.conformalize;

  const double uscale = std::max(1.0, row0_flip_scale(m, s));
  const double h2 = s.h * s.h;
  const double drift_gate = std::max(1e3 * cfg.tol_null, h2) * uscale;

  const DriftReport drift = null_drift(m, s);
  d.max_uu = drift.max_uu;
  d.max_vv = drift.max_vv;
  const bool drift_ok =
      !d.null_data || std::max(drift.max_uu, drift.max_vv) <= drift_gate;

  const CausalReport causal = causal_check(m, s, cfg.tol_causal);
  d.causal_violations = static_cast<int>(causal.violations.size());
  d.degenerate_nodes = causal.degenerate_count;
  const bool causal_ok = causal.violations.empty();

  const ConformalReport conf = conformal_factor(m, s);
  d.max_cross = conf.max_cross;
  d.max_trace = conf.max_trace;
  d.min_lambda = conf.min_lambda;
  const bool conformal_ok =
      !d.null_data || (conf.max_cross <= drift_gate &&
                       conf.max_trace <= drift_gate &&
                       conf.min_lambda >= -drift_gate);

  const FunctionalReport area = area_functional(m, s);
  const FunctionalReport energy = energy_functional(m, s);
  d.area = area.value;
  d.energy = energy.value;
  d.riemannian_nodes = area.riemannian_nodes;
  const bool lorentzian_ok = area.riemannian_nodes == 0;

  const Matrix resid = wave_map_residual(m, s);
  d.max_residual = resid.maxCoeff();
  const bool residual_ok = d.max_residual <= 100.0 * h2 * uscale;

  const SliceSweep sweep = sweep_slices(s, 10);
  d.slices_checked = sweep.checked;
  d.slice_defect = sweep.worst_defect;
  const bool slices_ok =
      sweep.failed == 0 && sweep.worst_defect <= 2.0 * s.h;

  // The two path reconstructions (y along xi, z along eta) agree only up to
  // quadrature truncation, O(h^3) per strip row, so the consistency gate
  // scales with the strip height rather than the Picard tolerance.
  double worst_strip_defect = 0.0;
  int max_strip_rows = 1;
  for (const auto& r : s.strips) {
    worst_strip_defect = std::max(worst_strip_defect, r.symmetric_defect);
    max_strip_rows = std::max(max_strip_rows, r.est.n_rows);
  }
  const double collapse_gate =
      std::max(10.0 * cfg.tol, 5.0 * h2 * s.h * max_strip_rows * uscale);
  const bool collapse_ok = worst_strip_defect <= collapse_gate;

  d.passed = drift_ok && causal_ok && conformal_ok && lorentzian_ok &&
             residual_ok && slices_ok && collapse_ok;

  json checks;
  checks["null_drift"] = {{"pass", drift_ok},
                          {"gated", d.null_data},
                          {"max_uu", drift.max_uu},
                          {"max_vv", drift.max_vv},
                          {"gate", drift_gate}};
  checks["causal"] = {{"pass", causal_ok},
                      {"violations", d.causal_violations},
                      {"degenerate_nodes", causal.degenerate_count},
                      {"tol", causal.tol}};
  checks["conformal"] = {{"pass", conformal_ok},
                         {"gated", d.null_data},
                         {"max_cross", conf.max_cross},
                         {"max_trace", conf.max_trace},
                         {"min_lambda", conf.min_lambda}};
  checks["geometry_lorentzian"] = {{"pass", lorentzian_ok},
                                   {"riemannian_nodes", area.riemannian_nodes},
                                   {"worst_det", area.worst_riemannian}};
  checks["residual"] = {{"pass", residual_ok},
                        {"max", d.max_residual},
                        {"gate", 100.0 * h2 * uscale}};
  checks["slice_graphs"] = {{"pass", slices_ok},
                            {"checked", sweep.checked},
                            {"failed", sweep.failed},
                            {"worst_defect", sweep.worst_defect},
                            {"gate", 2.0 * s.h}};
  if (!sweep.first_failure.empty())
    checks["slice_graphs"]["first_failure"] = sweep.first_failure;
  checks["symmetric_collapse"] = {{"pass", collapse_ok},
                                  {"worst_defect", worst_strip_defect},
                                  {"gate", collapse_gate}};

  json per_row = json::array();
  for (int i = 0; i < drift.per_row.rows(); ++i)
    per_row.push_back({drift.per_row(i, 0), drift.per_row(i, 1)});

  out.detail = {{"checks", checks},
                {"pass", d.passed},
                {"functionals",
                 {{"area", area.value},
                  {"area_degenerate_nodes", area.degenerate_nodes},
                  {"energy", energy.value}}},
                {"per_row_drift", per_row},
                {"grid",
                 {{"n", s.n_nodes()},
                  {"h", s.h},
                  {"rows", static_cast<int>(s.rows.size())},
                  {"period", s.period},
                  {"scale", s.scale},
                  {"orientation", s.time_orientation}}}};
  return out;
}

void write_text(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot write " + path);
  f << content;
}

}  // namespace

InitialCurve curve_from_config(const RunConfig& cfg) {
  return curve_from_config_n(cfg, cfg.n);
}

std::vector<Violation> admissibility_violations(const MetricSpec& m,
                                                const InitialCurve& c,
                                                const RunConfig& cfg) {
  ValidateOptions vo;
  vo.require_conformal = false;
  std::vector<Violation> out = validate(m, c, vo);
  if (cfg.conformalize) {
    ValidateOptions full;  // defaults require conformality
    for (const auto& v : validate(m, c, full))
      if (v.kind == ViolationKind::NotOrthogonal) out.push_back(v);
  } else {
    // Weakly spacelike nodes (k0' null, e.g. point curves) are acceptable
    // for plain wave-map runs; only genuinely timelike tangents remain.
    std::erase_if(out, [](const Violation& x) {
      return x.kind == ViolationKind::NotSpacelike && x.magnitude <= 1e-12;
    });
  }
  return out;
}

void export_surface(std::ostream& os, const MetricSpec& m,
                    const SolutionSurface& s, const std::string& format) {
  const int N = s.n_nodes();
  const int dim = s.dimension();
  if (format == "tsv") {
    os << "# surface export\n";
    os << "# period=" << fmt(s.period) << " h=" << fmt(s.h)
       << " scale=" << fmt(s.scale) << " orientation=" << s.time_orientation
       << " n=" << N << " dim=" << dim << " rows=" << s.rows.size() << "\n";
    os << "# columns: x t";
    for (int d = 0; d < dim; ++d) os << " y" << d;
    for (int d = 0; d < dim; ++d) os << " u" << d;
    for (int d = 0; d < dim; ++d) os << " v" << d;
    os << " uu vv lambda\n";
    for (const GridRow& r : s.rows) {
      for (int j = 0; j < N; ++j) {
        if (!r.valid[j]) continue;
        const Vector at = r.y.row(j);
        const Vector u = r.u.row(j), v = r.v.row(j);
        const Vector yx = 0.5 * (u - v);
        os << fmt(j * s.h) << "\t" << fmt(r.t);
        for (int d = 0; d < dim; ++d) os << "\t" << fmt(r.y(j, d));
        for (int d = 0; d < dim; ++d) os << "\t" << fmt(u[d]);
        for (int d = 0; d < dim; ++d) os << "\t" << fmt(v[d]);
        os << "\t" << fmt(lorentz_inner(m, at, u, u)) << "\t"
           << fmt(lorentz_inner(m, at, v, v)) << "\t"
           << fmt(lorentz_inner(m, at, yx, yx)) << "\n";
      }
    }
    return;
  }
  if (format == "json") {
    json root;
    root["period"] = s.period;
    root["h"] = s.h;
    root["scale"] = s.scale;
    root["orientation"] = s.time_orientation;
    root["n"] = N;
    root["dim"] = dim;
    json rows = json::array();
    for (const GridRow& r : s.rows) {
      json row;
      row["t"] = r.t;
      json ys = json::array(), us = json::array(), vs = json::array(),
           valid = json::array();
      for (int j = 0; j < N; ++j) {
        json y = json::array(), u = json::array(), v = json::array();
        for (int d = 0; d < dim; ++d) {
          y.push_back(r.y(j, d));
          u.push_back(r.u(j, d));
          v.push_back(r.v(j, d));
        }
        ys.push_back(y);
        us.push_back(u);
        vs.push_back(v);
        valid.push_back(static_cast<int>(r.valid[j]));
      }
      row["y"] = ys;
      row["u"] = us;
      row["v"] = vs;
      row["valid"] = valid;
      rows.push_back(row);
    }
    root["rows"] = rows;
    os << root.dump(1, '\t') << "\n";
    return;
  }
  throw ConfigError("unknown surface format '" + format + "'");
}

SolutionSurface import_surface(std::istream& is, const std::string& format) {
  SolutionSurface s;
  if (format == "tsv") {
    std::string line;
    int N = 0, dim = 0, n_rows = 0;
    bool meta = false;
    std::vector<std::vector<double>> records;
    while (std::getline(is, line)) {
      if (line.empty()) continue;
      if (line.front() == '#') {
        std::istringstream ls(line.substr(1));
        std::string tok;
        while (ls >> tok) {
          const auto eq = tok.find('=');
          if (eq == std::string::npos) continue;
          const std::string key = tok.substr(0, eq);
          const std::string val = tok.substr(eq + 1);
          if (key == "period") s.period = std::stod(val);
          else if (key == "h") s.h = std::stod(val);
          else if (key == "scale") s.scale = std::stod(val);
          else if (key == "orientation") s.time_orientation = std::stoi(val);
          else if (key == "n") N = std::stoi(val);
          else if (key == "dim") dim = std::stoi(val);
          else if (key == "rows") n_rows = std::stoi(val);
          meta = true;
        }
        continue;
      }
      std::istringstream ls(line);
      std::vector<double> vals;
      double x;
      while (ls >> x) vals.push_back(x);
      records.push_back(std::move(vals));
    }
    if (!meta || N <= 0 || dim <= 0 || n_rows <= 0)
      throw ConfigError("surface import: missing or bad metadata header");
    const size_t want = 2 + 3 * static_cast<size_t>(dim) + 3;
    s.rows.assign(n_rows, GridRow{});
    for (int i = 0; i < n_rows; ++i) {
      s.rows[i].y = Matrix::Zero(N, dim);
      s.rows[i].u = Matrix::Zero(N, dim);
      s.rows[i].v = Matrix::Zero(N, dim);
      s.rows[i].valid.assign(N, 0);
    }
    for (const auto& rec : records) {
      if (rec.size() != want)
        throw ConfigError("surface import: bad record width");
      const int j = static_cast<int>(std::lround(rec[0] / s.h));
      const int i = static_cast<int>(std::lround(rec[1] / s.h));
      if (i < 0 || i >= n_rows || j < 0 || j >= N)
        throw ConfigError("surface import: record outside grid");
      s.rows[i].t = rec[1];
      for (int d = 0; d < dim; ++d) {
        s.rows[i].y(j, d) = rec[2 + d];
        s.rows[i].u(j, d) = rec[2 + dim + d];
        s.rows[i].v(j, d) = rec[2 + 2 * dim + d];
      }
      s.rows[i].valid[j] = 1;
    }
    // Row times for fully invalid rows are still well defined on the lattice.
    for (int i = 0; i < n_rows; ++i) s.rows[i].t = i * s.h;
    return s;
  }
  if (format == "json") {
    json root = json::parse(is);
    s.period = root.at("period").get<double>();
    s.h = root.at("h").get<double>();
    s.scale = root.at("scale").get<double>();
    s.time_orientation = root.at("orientation").get<int>();
    const int N = root.at("n").get<int>();
    const int dim = root.at("dim").get<int>();
    for (const auto& row : root.at("rows")) {
      GridRow r;
      r.t = row.at("t").get<double>();
      r.y.resize(N, dim);
      r.u.resize(N, dim);
      r.v.resize(N, dim);
      r.valid.assign(N, 1);
      for (int j = 0; j < N; ++j) {
        for (int d = 0; d < dim; ++d) {
          r.y(j, d) = row.at("y")[j][d].get<double>();
          r.u(j, d) = row.at("u")[j][d].get<double>();
          r.v(j, d) = row.at("v")[j][d].get<double>();
        }
        r.valid[j] = row.at("valid")[j].get<int>() != 0;
      }
      s.rows.push_back(std::move(r));
    }
    return s;
  }
  throw ConfigError("unknown surface format '" + format + "'");
}

namespace {

struct StabilityRow {
  double eps = 0.0;
  double e0 = 0.0;
  double fitted_rate = 0.0;
  double k_emp = 0.0;
};

std::vector<StabilityRow> stability_study(const MetricSpec& m,
                                          const RunConfig& cfg) {
  PreparedCurve base = prepare_curve(m, cfg, cfg.n, nullptr);
  if (!base.violations.empty())
    throw GeometryError("stability study: base curve inadmissible: " +
                        base.violations.front().message);
  SolutionSurface s_base =
      continue_to_time(m, base.curve, cfg.t_target, solver_options(cfg));
  s_base.scale = base.scale;

  std::vector<StabilityRow> out;
  const int comp = cfg.dimension > 1 ? 1 : 0;
  for (double eps : cfg.epsilons) {
    Matrix pert = Matrix::Zero(cfg.n, cfg.dimension);
    for (int j = 0; j < cfg.n; ++j)
      pert(j, comp) = eps * std::sin(kTwoPi * j / cfg.n);
    PreparedCurve pc = prepare_curve(m, cfg, cfg.n, &pert);
    if (!pc.violations.empty())
      throw GeometryError("stability study: perturbed curve inadmissible: " +
                          pc.violations.front().message);
    SolutionSurface s_eps =
        continue_to_time(m, pc.curve, cfg.t_target, solver_options(cfg));
    const StabilityReport rep = energy_stability(s_eps, s_base, cfg.tol);
    out.push_back({eps, rep.e0, rep.fitted_rate, rep.K_emp});
  }
  return out;
}

}  // namespace

RunReport run(const RunConfig& cfg) {
  const auto t_start = std::chrono::steady_clock::now();
  RunReport rep;
  rep.config_echo = echo_config(cfg);
  const fs::path outdir(cfg.output_dir);
  fs::create_directories(outdir);
  rep.report_path = (outdir / "report.json").string();

  json report;
  report["config"] = rep.config_echo;

  const auto finish = [&](int code, const std::string& failure) {
    rep.exit_code = code;
    rep.failure = failure;
    rep.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                      t_start)
            .count();
    report["exit_code"] = code;
    report["failure"] = failure;
    report["timing_seconds"] = rep.wall_seconds;
    write_text(rep.report_path, report.dump(1, '\t') + "\n");
    return rep;
  };

  MetricSpec m = MetricSpec::minkowski(2);
  SolutionSurface s;
  try {
    m = metric_from_config(cfg);

    if (cfg.mode == StudyMode::Convergence) {
      const StudyReport sr = convergence_study(cfg, cfg.levels);
      report["study_table"] = sr.table_path;
      report["study_monotone"] = sr.monotone;
      return finish(sr.exit_code,
                    sr.exit_code == kExitOk ? "" : "non-monotone study errors");
    }
    if (cfg.mode == StudyMode::Stability) {
      const auto rows = stability_study(m, cfg);
      std::ostringstream table;
      table << "# columns: epsilon E0 fitted_rate K_emp\n";
      json jrows = json::array();
      for (const auto& r : rows) {
        table << fmt(r.eps) << "\t" << fmt(r.e0) << "\t" << fmt(r.fitted_rate)
              << "\t" << fmt(r.k_emp) << "\n";
        jrows.push_back({{"epsilon", r.eps},
                         {"E0", r.e0},
                         {"fitted_rate", r.fitted_rate},
                         {"K_emp", r.k_emp}});
      }
      const std::string path = (outdir / "stability.tsv").string();
      write_text(path, table.str());
      report["stability"] = jrows;
      report["stability_table"] = path;
      return finish(kExitOk, "");
    }

    PreparedCurve pc = prepare_curve(m, cfg, cfg.n, nullptr);
    rep.validate_violations = pc.violations;
    report["validate_violations"] = violations_json(pc.violations);
    if (!pc.violations.empty())
      return finish(kExitInvariantViolation,
                    "initial data violate admissibility hypotheses");

    try {
      continue_to_time(m, pc.curve, cfg.t_target, solver_options(cfg), &s);
      s.scale = pc.scale;
    } catch (const std::exception& e) {
      // Post-mortem: whatever rows exist are still worth exporting.
      s.scale = pc.scale;
      if (!s.rows.empty()) {
        const std::string ext = cfg.surface_format == "json" ? "json" : "tsv";
        rep.surface_path = (outdir / ("surface_partial." + ext)).string();
        std::ostringstream os;
        export_surface(os, m, s, cfg.surface_format);
        write_text(rep.surface_path, os.str());
        report["surface_partial"] = rep.surface_path;
        report["strips"] = strips_json(s.strips);
      }
      return finish(failure_exit_code(e), e.what());
    }
  } catch (const std::exception& e) {
    return finish(failure_exit_code(e), e.what());
  }

  rep.strips = s.strips;
  report["strips"] = strips_json(s.strips);

  try {
    const GateResult gates = run_diagnostics(m, s, cfg);
    rep.diagnostics = gates.summary;

    const std::string ext = cfg.surface_format == "json" ? "json" : "tsv";
    rep.surface_path = (outdir / ("surface." + ext)).string();
    std::ostringstream os;
    export_surface(os, m, s, cfg.surface_format);
    write_text(rep.surface_path, os.str());

    rep.diagnostics_path = (outdir / "diagnostics.json").string();
    write_text(rep.diagnostics_path, gates.detail.dump(1, '\t') + "\n");

    report["surface"] = rep.surface_path;
    report["diagnostics"] = rep.diagnostics_path;
    report["diagnostics_pass"] = gates.summary.passed;

    return finish(gates.summary.passed ? kExitOk : kExitInvariantViolation,
                  gates.summary.passed ? "" : "diagnostics gates failed");
  } catch (const std::exception& e) {
    return finish(failure_exit_code(e), e.what());
  }
}

namespace {

// Max flip-norm distance between a coarse surface and the same problem at
// doubled resolution, over the rows and nodes the coarse grid shares.
double coarse_fine_distance(const MetricSpec& m, const SolutionSurface& c,
                            const SolutionSurface& f) {
  double worst = 0.0;
  const int rows = std::min(static_cast<int>(c.rows.size()),
                            (static_cast<int>(f.rows.size()) + 1) / 2);
  for (int i = 0; i < rows; ++i) {
    if (2 * i >= static_cast<int>(f.rows.size())) break;
    const GridRow& rc = c.rows[i];
    const GridRow& rf = f.rows[2 * i];
    for (int j = 0; j < rc.n_nodes(); ++j) {
      const Vector at = rc.y.row(j);
      worst = std::max(worst, flip_norm_sq(m, at,
                                           Vector(rc.y.row(j) - rf.y.row(2 * j))));
    }
  }
  return std::sqrt(worst);
}

}  // namespace

StudyReport convergence_study(const RunConfig& cfg, int levels) {
  if (levels < 2) throw ConfigError("convergence study needs >= 2 levels");
  const MetricSpec m = metric_from_config(cfg);
  const fs::path outdir(cfg.output_dir);
  fs::create_directories(outdir);

  const bool oracle_backed =
      cfg.metric_type == "minkowski" && cfg.dimension == 3 &&
      cfg.curve_type == "circle" && std::abs(cfg.radius - 1.0) < 1e-14 &&
      cfg.k1_time == 1.0 && cfg.mode != StudyMode::Backward;

  std::vector<SolutionSurface> surfaces;
  std::vector<int> ns;
  for (int k = 0; k < levels; ++k) {
    RunConfig level_cfg = cfg;
    level_cfg.n = cfg.n << k;
    level_cfg.mode = StudyMode::Single;
    PreparedCurve pc = prepare_curve(m, level_cfg, level_cfg.n, nullptr);
    if (!pc.violations.empty())
      throw GeometryError("study level " + std::to_string(level_cfg.n) +
                          ": curve inadmissible: " +
                          pc.violations.front().message);
    SolutionSurface s =
        continue_to_time(m, pc.curve, cfg.t_target, solver_options(level_cfg));
    s.scale = pc.scale;
    surfaces.push_back(std::move(s));
    ns.push_back(level_cfg.n);
  }

  StudyReport out;
  const double exact_floor = 1e-10;

  auto push_rows = [&](const std::string& quantity,
                       const std::vector<double>& errs,
                       const std::vector<int>& level_ns) {
    for (size_t k = 0; k < errs.size(); ++k) {
      StudyRow row;
      row.quantity = quantity;
      row.n = level_ns[k];
      row.h = kTwoPi / level_ns[k];
      row.error = errs[k];
      row.order =
          k > 0 && errs[k] > 0.0 ? std::log2(errs[k - 1] / errs[k]) : 0.0;
      out.rows.push_back(row);
      if (k > 0 && errs[k] > errs[k - 1] * 1.05 && errs[k] > exact_floor)
        out.monotone = false;
    }
  };

  if (oracle_backed) {
    std::vector<double> errs;
    for (size_t k = 0; k < surfaces.size(); ++k) {
      const SolutionSurface& s = surfaces[k];
      OracleParams p;
      p.radius = cfg.radius;
      const SolutionSurface ora = analytic_oracle(
          "minkowski-circle", p, ns[k], static_cast<int>(s.rows.size()) - 1);
      errs.push_back(surface_distance(m, s, ora));
    }
    push_rows("surface_error_vs_oracle", errs, ns);
  } else {
    std::vector<double> errs;
    std::vector<int> level_ns;
    for (size_t k = 0; k + 1 < surfaces.size(); ++k) {
      errs.push_back(coarse_fine_distance(m, surfaces[k], surfaces[k + 1]));
      level_ns.push_back(ns[k]);
    }
    push_rows("surface_error_vs_finer", errs, level_ns);
  }

  if (cfg.conformalize) {
    std::vector<double> drifts;
    for (const auto& s : surfaces) {
      const DriftReport dr = null_drift(m, s);
      drifts.push_back(std::max(dr.max_uu, dr.max_vv));
    }
    push_rows("null_drift", drifts, ns);
  }

  std::ostringstream table;
  table << "# columns: quantity n h error order\n";
  for (const auto& r : out.rows) {
    table << r.quantity << "\t" << r.n << "\t" << fmt(r.h) << "\t"
          << fmt(r.error) << "\t";
    if (r.error <= exact_floor) {
      table << "exact";
    } else {
      table << fmt(r.order);
    }
    table << "\n";
  }
  out.table_path = (outdir / "study.tsv").string();
  write_text(out.table_path, table.str());
  out.exit_code = out.monotone ? kExitOk : kExitInvariantViolation;
  return out;
}

}  // namespace minlor
