#ifndef MINLOR_METRIC_HPP_
#define MINLOR_METRIC_HPP_

#include <functional>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "minlor/types.hpp"

namespace minlor {

// Rank-3 connection coefficients Gamma^a_{bc}; comp[a](b,c).
struct ChristoffelTensor {
  std::vector<Matrix> comp;

  int dimension() const { return static_cast<int>(comp.size()); }

  // Gamma(v,w)^a = Gamma^a_{bc} v^b w^c
  Vector apply(const Vector& v, const Vector& w) const {
    const int n = dimension();
    Vector out(n);
    for (int a = 0; a < n; ++a) out[a] = v.dot(comp[a] * w);
    return out;
  }

  double max_abs() const {
    double m = 0.0;
    for (const auto& c : comp) m = std::max(m, c.cwiseAbs().maxCoeff());
    return m;
  }
};

enum class ScaleFactorKind { Constant, Exponential, Polynomial };

// Globally hyperbolic product metric g = -dt^2 + g_ij(t,x) dx^i dx^j in one
// global chart. Immutable after construction; safe to share across threads.
class MetricSpec {
 public:
  using SpatialFn = std::function<Matrix(const Vector&)>;       // g_ij at p
  using ChristoffelFn = std::function<ChristoffelTensor(const Vector&)>;

  static MetricSpec minkowski(int dimension);
  // a(t) from a fixed catalog: constant a0, exponential e^{H t},
  // polynomial 1 + eps t^2.
  static MetricSpec flrw(int dimension, ScaleFactorKind kind, double param);
  static MetricSpec user(int dimension, SpatialFn spatial,
                         ChristoffelFn analytic_christoffel = nullptr,
                         double injectivity_radius =
                             std::numeric_limits<double>::infinity(),
                         double fd_step = 1e-5);

  int dimension() const { return dim_; }
  bool is_flat() const;
  bool has_analytic_christoffel() const;
  double fd_step() const { return fd_step_; }
  double injectivity_radius() const { return injectivity_radius_; }
  std::string describe() const;

  double scale_factor(double t) const;       // FLRW only
  double scale_factor_dot(double t) const;   // FLRW only

 private:
  enum class Kind { Minkowski, Flrw, User };
  MetricSpec() = default;

  Kind kind_ = Kind::Minkowski;
  int dim_ = 0;
  ScaleFactorKind sf_kind_ = ScaleFactorKind::Constant;
  double sf_param_ = 1.0;
  SpatialFn spatial_;
  ChristoffelFn analytic_christoffel_;
  double injectivity_radius_ = std::numeric_limits<double>::infinity();
  double fd_step_ = 1e-5;

  friend Matrix metric_eval(const MetricSpec&, const SpacetimePoint&);
  friend ChristoffelTensor christoffel(const MetricSpec&, const SpacetimePoint&);
  friend Vector christoffel_apply(const MetricSpec&, const Vector&,
                                  const Vector&, const Vector&);
};

// g_{ab}(p) as a full n x n matrix: g_00 = -1, g_0i = 0, spatial block
// positive definite (checked by Cholesky on every evaluation).
Matrix metric_eval(const MetricSpec& m, const SpacetimePoint& p);

// Flip metric h = +dt^2 + g_ij dx^i dx^j; h(v,v) = g(v,v) + 2 (v^0)^2 >= 0.
double flip_norm_sq(const MetricSpec& m, const TangentVector& v);
double flip_norm_sq(const MetricSpec& m, const Vector& at, const Vector& v);

double lorentz_inner(const MetricSpec& m, const TangentVector& v,
                     const TangentVector& w);
double lorentz_inner(const MetricSpec& m, const Vector& at, const Vector& v,
                     const Vector& w);

// Levi-Civita connection of g. Analytic for builtin metrics (and user metrics
// that supply one), otherwise central finite differences of metric_eval.
ChristoffelTensor christoffel(const MetricSpec& m, const SpacetimePoint& p);
ChristoffelTensor christoffel_at(const MetricSpec& m, const Vector& coords);

// Gamma(v,w) at `at` without assembling the tensor; hot path of the
// transport loops.
Vector christoffel_apply(const MetricSpec& m, const Vector& at, const Vector& v,
                         const Vector& w);

// Operator norm of the bilinear map (v,w) -> Gamma(v,w) measured in the flip
// metric at p. Sampled unit-sphere pairs plus alternating SVD refinement.
double christoffel_operator_norm(const MetricSpec& m, const SpacetimePoint& p);

// Region-level bounds feeding the strip size estimates: an injectivity radius
// R and a sampler returning G >= max operator norm of Gamma over a box.
struct ChartBounds {
  double injectivity_radius = std::numeric_limits<double>::infinity();
  std::function<double(const ChartBox&)> christoffel_bound_sampler;
};

// G = safety_factor * max of christoffel_operator_norm over a deterministic
// low-discrepancy (Halton) sample of the region; prefix property makes G
// monotone in n_samples.
ChartBounds sample_bounds(const MetricSpec& m, const ChartBox& region,
                          int n_samples, double safety_factor = 1.5);

double christoffel_bound_over(const MetricSpec& m, const ChartBox& region,
                              int n_samples, double safety_factor = 1.5);

}  // namespace minlor

#endif  // MINLOR_METRIC_HPP_
