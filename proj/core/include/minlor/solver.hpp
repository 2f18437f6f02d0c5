#ifndef MINLOR_SOLVER_HPP_
#define MINLOR_SOLVER_HPP_

#include <cstdint>
#include <vector>

#include "minlor/initial_data.hpp"
#include "minlor/metric.hpp"
#include "minlor/types.hpp"

namespace minlor {

// One lattice row at fixed grid time t. Columns are x_j = j h, periodic.
struct GridRow {
  double t = 0.0;
  Matrix y;  // N x n
  Matrix u;  // N x n, u = dy/dxi  (xi = (t+x)/2)
  Matrix v;  // N x n, v = dy/deta (eta = (t-x)/2)
  std::vector<std::uint8_t> valid;  // discrete domain mask

  int n_nodes() const { return static_cast<int>(y.rows()); }
  bool all_valid() const;
};

// Strip sizing constants. With G = 0 the 1/(11 G) term is +infinity.
struct StepEstimate {
  double R_k = 0.0;      // injectivity radius
  double delta = 0.0;    // neighborhood radius used for G
  double G = 0.0;        // Christoffel operator-norm bound over the region
  double u_bar = 0.0;    // C^1 flip-norm bound of u over the row
  double v_bar = 0.0;
  double L_k = 0.0;      // min{R_k/5, 1/(11 G), delta/5}
  double l = 0.0;        // L_k / (u_bar + v_bar)
  double K = 0.0;        // 3 (u_bar + v_bar) / l
  double K_prime = 0.0;  // 4 (u_bar + v_bar)
  int n_rows = 1;        // rows this strip advances: max(1, floor(l/(sqrt(2) h)))
  bool starved = false;  // l/sqrt(2) < h: the guaranteed height is below one row
};

// Doubled fields on a strip; index 0 is the base row.
struct StripFields {
  std::vector<Matrix> y, z, u, v, uh, vh;
};

// State of the fixed-point iteration on one strip.
struct PicardState {
  int iterations = 0;
  bool converged = false;
  double last_change = 0.0;             // sup flip-norm change, all six fields
  double last_contraction_ratio = 0.0;  // change_m / change_{m-1}
  double symmetric_defect = 0.0;        // max node flip-norm of y - z
  std::vector<double> changes;          // per-iterate sup change
  StripFields fields;                   // final iterate, for inspection
};

struct StripResult {
  std::vector<GridRow> rows;  // n_rows new rows above the base
  PicardState state;
};

struct StripRecord {
  int first_row = 0;  // surface row index of the strip's first new row
  StepEstimate est;
  int iterations = 0;
  double last_contraction_ratio = 0.0;
  double symmetric_defect = 0.0;
};

struct SolutionSurface {
  double period = 2.0 * M_PI;
  double h = 0.0;
  double scale = 1.0;        // parameter rescale applied during conformalize
  int time_orientation = 1;  // +1: y^0 increases with grid t; -1: decreases
  std::vector<GridRow> rows;
  std::vector<StripRecord> strips;

  int n_nodes() const { return rows.empty() ? 0 : rows.front().n_nodes(); }
  int dimension() const {
    return rows.empty() ? 0 : static_cast<int>(rows.front().y.cols());
  }
};

struct SolverOptions {
  double tol = 1e-10;       // sup flip-norm change across Picard iterates
  int max_iter = 50;
  double delta = 0.0;       // 0: auto, 5 h (u_bar + v_bar) per strip
  int bounds_samples = 64;  // Halton samples for the G bound
  double bounds_safety = 1.5;
  int orientation = 1;      // requested time direction of the march
  long max_total_rows = 4000000;
  // Nonzero: offset added to one component of the constant-extension Picard
  // seed on every strip; the fixed point must not depend on it.
  double seed_perturbation = 0.0;
};

// Sizes the next strip from the newest row per the closed-form constants.
StepEstimate strip_estimate(const MetricSpec& m, const GridRow& row,
                            const ChartBounds& bounds, double delta, double h);

// One explicit-midpoint step of the linear transport d/ds U = -Gamma(y)(U, w)
// along a characteristic segment of length ds; backgrounds are sampled at the
// segment ends and averaged for the midpoint stage.
Vector transport_step(const MetricSpec& m, const Vector& u_start,
                      const Vector& y_start, const Vector& y_end,
                      const Vector& w_start, const Vector& w_end, double ds);

// Solves one strip of est.n_rows rows above `base` by fixed-point iteration
// of the doubled transport system; returns the collapsed rows
// (u := (u+uh)/2, v := (v+vh)/2, y := (y+z)/2).
StripResult picard_strip_solve(const MetricSpec& m, const GridRow& base,
                               const StepEstimate& est, double period,
                               double tol, int max_iter,
                               double seed_perturbation = 0.0);

// Marches strips until every column of the newest row has crossed y^0 =
// T_target (in the requested orientation). Initial data are taken as-is;
// conformalize beforehand for null data. When `progress` is given the surface
// is built in place there, so a throw leaves the partial surface available
// for post-mortem export.
SolutionSurface continue_to_time(const MetricSpec& m, const InitialCurve& c,
                                 double T_target, const SolverOptions& opt = {},
                                 SolutionSurface* progress = nullptr);

// Flip-norm of the discrete wave-map operator per node; boundary rows (no
// t-neighbors) are zero. Columns are periodic, so every x is interior.
Matrix wave_map_residual(const MetricSpec& m, const SolutionSurface& s);

}  // namespace minlor

#endif  // MINLOR_SOLVER_HPP_
