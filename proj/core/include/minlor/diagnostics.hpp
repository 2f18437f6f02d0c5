#ifndef MINLOR_DIAGNOSTICS_HPP_
#define MINLOR_DIAGNOSTICS_HPP_

#include <string>
#include <vector>

#include "minlor/metric.hpp"
#include "minlor/solver.hpp"
#include "minlor/types.hpp"

namespace minlor {

// Nodes where u and v coincide map the light-cone-touching degeneracy; they
// are classified, never errors.
bool is_degenerate_node(const MetricSpec& m, const Vector& y, const Vector& u,
                        const Vector& v, double rel_tol = 1e-8);

struct DriftReport {
  double max_uu = 0.0;  // max |<u,u>| over valid nodes
  double max_vv = 0.0;
  Matrix per_row;       // rows x 2: row maxima of |<u,u>|, |<v,v>|
};

// g-inner products of the characteristic derivatives; zero for exactly
// conformal surfaces.
DriftReport null_drift(const MetricSpec& m, const SolutionSurface& s);

enum class CausalViolationKind {
  TimeDerivativeNotCausal,   // <dt y, dt y> > tol
  TimeDerivativeNotFuture,   // orientation * (dt y)^0 <= 0
  SpaceDerivativeNotSpacelike,  // <dx y, dx y> < -tol and not degenerate
};

struct CausalViolation {
  int row = 0;
  int col = 0;
  CausalViolationKind kind;
  double magnitude = 0.0;
};

struct CausalReport {
  std::vector<CausalViolation> violations;
  int degenerate_count = 0;
  double tol = 0.0;
};

// Checks that dt y = (u+v)/2 is causal and future-directed (w.r.t. the given
// orientation; 0 means use the surface's own) and dx y = (u-v)/2 spacelike or
// lightlike. Degenerate nodes are counted, not flagged.
CausalReport causal_check(const MetricSpec& m, const SolutionSurface& s,
                          double tol_causal = 1e-8, int orientation = 0);

struct ConformalReport {
  Matrix lambda;          // rows x N: <dx y, dx y> per node
  double max_cross = 0.0; // max |<dx y, dt y>|
  double max_trace = 0.0; // max |<dt y, dt y> + lambda|
  double min_lambda = 0.0;
};

// Conformal factor of the pulled-back metric and the off-diagonal/trace
// residuals that vanish on conformal solutions.
ConformalReport conformal_factor(const MetricSpec& m,
                                 const SolutionSurface& s);

struct FunctionalReport {
  double value = 0.0;
  int degenerate_nodes = 0;  // contributed 0
  int riemannian_nodes = 0;  // non-degenerate nodes with det y*g >= 0
  double worst_riemannian = 0.0;
};

// area  = sum over valid nodes of sqrt(-det y*g) h^2
// energy = sum over valid nodes of (<dx y, dx y> - <dt y, dt y>) h^2
FunctionalReport area_functional(const MetricSpec& m,
                                 const SolutionSurface& s);
FunctionalReport energy_functional(const MetricSpec& m,
                                   const SolutionSurface& s);

struct SliceGraph {
  double T = 0.0;
  Vector f;  // per column: grid t with y^0(x_j, f_j) = T, linear interpolation
  double lipschitz_defect = 0.0;  // max(0, max_j |f_{j+1}-f_j|/h - 1)
};

// Per-column monotone root find of y^0 = T. Throws GeometryError naming the
// first column that does not cross.
SliceGraph time_slice_preimage(const SolutionSurface& s, double T);

struct StabilityReport {
  Vector s_values;  // grid times relative to the shared base row
  Vector energy;    // E(s) = sum_x w^T w h, w = (V_x, V_t, V)
  double e0 = 0.0;
  double fitted_rate = 0.0;  // least-squares slope of log E(s)
  double K_emp = 0.0;        // max_s log(E(s)/E(0)) / s, clipped at 0
  bool base_coincides = false;
};

// Difference-energy history of two surfaces on the same grid, Euclidean in
// coordinates as the symmetric-hyperbolic estimate requires. When the base
// rows coincide, every E(s) must stay at the iteration noise floor.
StabilityReport energy_stability(const SolutionSurface& s1,
                                 const SolutionSurface& s2,
                                 double picard_tol = 1e-10);

struct OracleParams {
  double radius = 1.0;     // minkowski-circle
  double amplitude = 0.3;  // flat-travelling-wave
  int profile = 0;         // travelling-wave profile id
  Vector drift;            // flat-linear spatial velocity (default 0.3 e_1)
};

// Closed-form solutions sampled exactly on the lattice:
//   minkowski-circle  y(x,t) = (t, r cos t sin x, r cos t cos x)
//   flat-linear       y(x,t) = (t, p0 + t * drift)
//   flat-travelling-wave  y(x,t) = (t, A F(x+t), A G(x-t))
SolutionSurface analytic_oracle(const std::string& name,
                                const OracleParams& params, int n_nodes,
                                int n_rows);

// Metric matching each oracle's target (Minkowski R^{1,2} for all three).
MetricSpec oracle_metric(const std::string& name);

// Grid time at which the row-minimum of flip_norm_sq(u - v) bottoms out,
// refined by bisection on a monotone bracket; locates light-cone collapse.
double degenerate_time_estimate(const MetricSpec& m,
                                const SolutionSurface& s);

// max over nodes of flip-norm of (a.y - b.y); grids must match.
double surface_distance(const MetricSpec& m, const SolutionSurface& a,
                        const SolutionSurface& b);

}  // namespace minlor

#endif  // MINLOR_DIAGNOSTICS_HPP_
