#ifndef MINLOR_TYPES_HPP_
#define MINLOR_TYPES_HPP_

#include <Eigen/Dense>

#include "minlor/errors.hpp"

namespace minlor {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Point of the product spacetime M = R x N in the global chart.
// Component 0 is the global time function t, components 1..n-1 are spatial
// chart coordinates.
struct SpacetimePoint {
  Vector coords;

  SpacetimePoint() = default;
  explicit SpacetimePoint(Vector c) : coords(std::move(c)) {}

  int dimension() const { return static_cast<int>(coords.size()); }
  double time() const { return coords[0]; }
  bool is_finite() const { return coords.allFinite(); }
};

// Tangent vector attached to a point; components in the same chart basis.
struct TangentVector {
  SpacetimePoint base;
  Vector components;

  TangentVector() = default;
  TangentVector(SpacetimePoint p, Vector c)
      : base(std::move(p)), components(std::move(c)) {
    if (base.coords.size() != components.size())
      throw ContractViolation("TangentVector: base and components dimension mismatch");
  }

  int dimension() const { return static_cast<int>(components.size()); }
};

inline void require_same_base(const TangentVector& v, const TangentVector& w) {
  if (v.base.coords.size() != w.base.coords.size() ||
      v.base.coords != w.base.coords)
    throw ContractViolation("tangent vectors do not share a base point");
}

// Axis-aligned box in chart coordinates.
struct ChartBox {
  Vector lo;
  Vector hi;

  int dimension() const { return static_cast<int>(lo.size()); }
  bool contains(const Vector& p, double slack = 0.0) const {
    for (int i = 0; i < dimension(); ++i)
      if (p[i] < lo[i] - slack || p[i] > hi[i] + slack) return false;
    return true;
  }
  ChartBox expanded(double margin) const {
    ChartBox b{lo.array() - margin, hi.array() + margin};
    return b;
  }
};

}  // namespace minlor

#endif  // MINLOR_TYPES_HPP_
