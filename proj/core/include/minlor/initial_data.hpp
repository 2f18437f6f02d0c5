#ifndef MINLOR_INITIAL_DATA_HPP_
#define MINLOR_INITIAL_DATA_HPP_

#include <iosfwd>
#include <string>
#include <vector>

#include "minlor/metric.hpp"
#include "minlor/types.hpp"

namespace minlor {

enum class CurveTag { Raw, Conformalized };

// Closed curve (k0, k1) in TM sampled at x_j = j * period / N. Row j of k0
// holds the spacetime position, row j of k1 the velocity based there.
struct InitialCurve {
  double period = 2.0 * M_PI;
  Matrix k0;  // N x n
  Matrix k1;  // N x n
  CurveTag tag = CurveTag::Raw;

  int n_nodes() const { return static_cast<int>(k0.rows()); }
  int dimension() const { return static_cast<int>(k0.cols()); }
  double node_x(int j) const { return period * j / n_nodes(); }

  SpacetimePoint point_at(int j) const { return SpacetimePoint{k0.row(j)}; }
  TangentVector velocity_at(int j) const {
    return TangentVector{point_at(j), k1.row(j)};
  }
};

// 4th-order central difference along rows with periodic wraparound;
// h = period / n_rows.
Matrix fd4_periodic_derivative(const Matrix& samples, double period);

enum class ViolationKind {
  NotSpacelike,     // <k0',k0'> <= 0
  NotTimelike,      // <k1,k1> >= 0
  DegeneratePlus,   // flip(k1 + k0') == 0
  DegenerateMinus,  // flip(k1 - k0') == 0
  NotOrthogonal,    // <k0',k1> != 0
  NormMismatch,     // <k0',k0'> != -<k1,k1>
  Malformed,        // shape/finiteness problems
};

struct Violation {
  ViolationKind kind;
  int node;          // worst offender
  double magnitude;  // worst relative magnitude
  std::string message;
};

struct ValidateOptions {
  double tol_orthogonal = 1e-8;  // relative to flip-norm scale
  double tol_norm = 1e-8;
  bool require_conformal = true;  // include orthogonality + norm condition
};

// Checks the admissibility hypotheses node by node. Violations are data.
// Empty result (with require_conformal) means the curve is admissible for
// the conformal pipeline.
std::vector<Violation> validate(const MetricSpec& m, const InitialCurve& c,
                                const ValidateOptions& opt = {});

struct ConformalizeOptions {
  int ode_refine = 8;               // RK4 substeps per output node
  double aliasing_threshold = 1e-6; // Nyquist power fraction triggering error
};

// Reparametrizes the curve so that <c'(x), c'(x)> = -<k1(x), k1(x)> at every
// point, then rescales the parameter back to the original period (velocities
// pick up the scale). Requires spacelike/timelike/non-degeneracy and
// orthogonality; does not project.
InitialCurve conformalize(const MetricSpec& m, const InitialCurve& c,
                          const ConformalizeOptions& opt = {});

// Replaces k1 by its component g-orthogonal to k0'. Optional preprocessing
// for data that fail the orthogonality hypothesis; changes <k1,k1>.
InitialCurve project_orthogonal(const MetricSpec& m, InitialCurve c);

// Linear worldsheet rescale (x,t) -> (new_period/period)(x,t): node positions
// are untouched, velocities pick up the scale, conformality is preserved.
InitialCurve rescale_period(const InitialCurve& c, double new_period);

// Characteristic data on the base circle.
struct NullData {
  Matrix u;  // N x n, u_j = k0'(x_j) + k1(x_j)
  Matrix v;  // N x n, v_j = -k0'(x_j) + k1(x_j)
  double u_bar = 0.0;  // max over nodes of flip-norm of value and derivative
  double v_bar = 0.0;
};

NullData null_decompose(const MetricSpec& m, const InitialCurve& c);

// Curve catalog.
InitialCurve circle_curve(int dimension, int n_nodes, double radius,
                          double k1_time = 1.0);
InitialCurve ellipse_curve(int dimension, int n_nodes, double semi_a,
                           double semi_b, double k1_time = 1.0);
// One node per line: x_j, then n coordinates of k0, then n components of k1,
// whitespace separated; blank lines and '#' comments ignored. Node count must
// be a power of two; x_j must be a uniform grid starting at 0.
InitialCurve curve_from_node_file(const std::string& path);
InitialCurve curve_from_node_stream(std::istream& in);

}  // namespace minlor

#endif  // MINLOR_INITIAL_DATA_HPP_
