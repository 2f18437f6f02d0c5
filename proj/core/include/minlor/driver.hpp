#ifndef MINLOR_DRIVER_HPP_
#define MINLOR_DRIVER_HPP_

#include <iosfwd>
#include <string>
#include <vector>

#include "minlor/config.hpp"
#include "minlor/diagnostics.hpp"
#include "minlor/initial_data.hpp"
#include "minlor/solver.hpp"

namespace minlor {

// Exit-code contract shared by the library pipeline and the CLI.
inline constexpr int kExitOk = 0;
inline constexpr int kExitInvariantViolation = 2;
inline constexpr int kExitSolverFailure = 3;

struct DiagnosticsSummary {
  double max_uu = 0.0, max_vv = 0.0;
  int causal_violations = 0;
  int degenerate_nodes = 0;
  double max_cross = 0.0, max_trace = 0.0, min_lambda = 0.0;
  double area = 0.0, energy = 0.0;
  int riemannian_nodes = 0;
  double max_residual = 0.0;
  double slice_defect = 0.0;  // worst over the slice sweep
  int slices_checked = 0;
  bool null_data = false;  // data were conformalized, so drift must be small
  bool passed = false;
};

struct RunReport {
  std::string config_echo;
  std::vector<StripRecord> strips;
  std::vector<Violation> validate_violations;
  DiagnosticsSummary diagnostics;
  double wall_seconds = 0.0;
  int exit_code = kExitOk;
  std::string failure;  // empty on success
  std::string surface_path, diagnostics_path, report_path;
};

// validate -> (project) -> conformalize -> null_decompose -> continue_to_time
// -> diagnostics -> exports. Solver failures still export the partial surface.
RunReport run(const RunConfig& cfg);

struct StudyRow {
  int n = 0;
  double h = 0.0;
  double error = 0.0;    // vs oracle, or vs next-finer run (Richardson)
  double order = 0.0;    // log2(error_coarse / error_this)
  std::string quantity;  // which diagnostic the error measures
};

struct StudyReport {
  std::vector<StudyRow> rows;
  bool monotone = true;
  std::string table_path;
  int exit_code = kExitOk;
};

// Runs `levels` resolutions n, 2n, ...; oracle-backed error when the
// configured problem has a closed form, self-convergence otherwise.
StudyReport convergence_study(const RunConfig& cfg, int levels);

// Surface export: header line, then one record per valid node in row-major
// order (x, t, y, u, v, <u,u>, <v,v>, lambda).
void export_surface(std::ostream& os, const MetricSpec& m,
                    const SolutionSurface& s, const std::string& format);
SolutionSurface import_surface(std::istream& is, const std::string& format);

// Builders shared by run() and the CLI verbs.
MetricSpec metric_from_config(const RunConfig& cfg);
InitialCurve curve_from_config(const RunConfig& cfg);

// Hypotheses the configured pipeline will actually rely on. With
// conformalize on: spacelike/timelike/nondegenerate plus orthogonality (the
// reparametrization repairs the norm condition, so that is not demanded).
// With conformalize off: plain wave-map admission, where weakly spacelike
// nodes (|<k0',k0'>| below round-off) are acceptable.
std::vector<Violation> admissibility_violations(const MetricSpec& m,
                                                const InitialCurve& c,
                                                const RunConfig& cfg);

}  // namespace minlor

#endif  // MINLOR_DRIVER_HPP_
