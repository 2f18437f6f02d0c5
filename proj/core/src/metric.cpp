#include "minlor/metric.hpp"

#include <Eigen/Cholesky>
#include <Eigen/SVD>
#include <cmath>
#include <random>
#include <sstream>

namespace minlor {

namespace {

std::string point_to_string(const Vector& p) {
  std::ostringstream os;
  os << "(";
  for (int i = 0; i < p.size(); ++i) os << (i ? ", " : "") << p[i];
  os << ")";
  return os.str();
}

}  // namespace

MetricSpec MetricSpec::minkowski(int dimension) {
  if (dimension < 2) throw ContractViolation("metric dimension must be >= 2");
  MetricSpec m;
  m.kind_ = Kind::Minkowski;
  m.dim_ = dimension;
  return m;
}

MetricSpec MetricSpec::flrw(int dimension, ScaleFactorKind kind, double param) {
  if (dimension < 2) throw ContractViolation("metric dimension must be >= 2");
  if (kind == ScaleFactorKind::Constant && param <= 0.0)
    throw ContractViolation("constant scale factor must be positive");
  MetricSpec m;
  m.kind_ = Kind::Flrw;
  m.dim_ = dimension;
  m.sf_kind_ = kind;
  m.sf_param_ = param;
  return m;
}

MetricSpec MetricSpec::user(int dimension, SpatialFn spatial,
                            ChristoffelFn analytic_christoffel,
                            double injectivity_radius, double fd_step) {
  if (dimension < 2) throw ContractViolation("metric dimension must be >= 2");
  if (!spatial) throw ContractViolation("user metric needs a spatial block function");
  if (!(injectivity_radius > 0.0))
    throw ContractViolation("injectivity radius must be positive");
  if (!(fd_step > 0.0)) throw ContractViolation("fd_step must be positive");
  MetricSpec m;
  m.kind_ = Kind::User;
  m.dim_ = dimension;
  m.spatial_ = std::move(spatial);
  m.analytic_christoffel_ = std::move(analytic_christoffel);
  m.injectivity_radius_ = injectivity_radius;
  m.fd_step_ = fd_step;
  return m;
}

bool MetricSpec::is_flat() const {
  if (kind_ == Kind::Minkowski) return true;
  // Constant scale factor has vanishing connection in this chart.
  return kind_ == Kind::Flrw && sf_kind_ == ScaleFactorKind::Constant;
}

bool MetricSpec::has_analytic_christoffel() const {
  return kind_ != Kind::User || static_cast<bool>(analytic_christoffel_);
}

double MetricSpec::scale_factor(double t) const {
  switch (sf_kind_) {
    case ScaleFactorKind::Constant: return sf_param_;
    case ScaleFactorKind::Exponential: return std::exp(sf_param_ * t);
    case ScaleFactorKind::Polynomial: return 1.0 + sf_param_ * t * t;
  }
  return 1.0;
}

double MetricSpec::scale_factor_dot(double t) const {
  switch (sf_kind_) {
    case ScaleFactorKind::Constant: return 0.0;
    case ScaleFactorKind::Exponential: return sf_param_ * std::exp(sf_param_ * t);
    case ScaleFactorKind::Polynomial: return 2.0 * sf_param_ * t;
  }
  return 0.0;
}

std::string MetricSpec::describe() const {
  std::ostringstream os;
  switch (kind_) {
    case Kind::Minkowski: os << "minkowski(n=" << dim_ << ")"; break;
    case Kind::Flrw:
      os << "flrw(n=" << dim_ << ", ";
      switch (sf_kind_) {
        case ScaleFactorKind::Constant: os << "a=" << sf_param_; break;
        case ScaleFactorKind::Exponential: os << "a=exp(" << sf_param_ << " t)"; break;
        case ScaleFactorKind::Polynomial: os << "a=1+" << sf_param_ << " t^2"; break;
      }
      os << ")";
      break;
    case Kind::User: os << "user(n=" << dim_ << ")"; break;
  }
  return os.str();
}

Matrix metric_eval(const MetricSpec& m, const SpacetimePoint& p) {
  const int n = m.dimension();
  if (p.dimension() != n)
    throw ContractViolation("point dimension does not match metric");
  if (!p.is_finite())
    throw GeometryError("metric evaluation at non-finite point " +
                        point_to_string(p.coords));

  Matrix g = Matrix::Zero(n, n);
  g(0, 0) = -1.0;
  const int ns = n - 1;
  Matrix s(ns, ns);
  switch (m.kind_) {
    case MetricSpec::Kind::Minkowski:
      s = Matrix::Identity(ns, ns);
      break;
    case MetricSpec::Kind::Flrw: {
      const double a = m.scale_factor(p.time());
      s = (a * a) * Matrix::Identity(ns, ns);
      break;
    }
    case MetricSpec::Kind::User:
      s = m.spatial_(p.coords);
      if (s.rows() != ns || s.cols() != ns)
        throw GeometryError("user spatial metric has wrong shape at " +
                            point_to_string(p.coords));
      break;
  }
  if (!s.allFinite())
    throw GeometryError("non-finite metric entries at " +
                        point_to_string(p.coords));
  // Positive definiteness of the spatial block is part of the global
  // hyperbolicity hypothesis; abort with the offending point otherwise.
  Eigen::LLT<Matrix> llt(s);
  if (llt.info() != Eigen::Success)
    throw GeometryError("spatial metric not positive definite at " +
                        point_to_string(p.coords));
  g.block(1, 1, ns, ns) = s;
  return g;
}

namespace {

Matrix spatial_at(const MetricSpec& m, const Vector& coords) {
  SpacetimePoint p{coords};
  Matrix g = metric_eval(m, p);
  const int ns = m.dimension() - 1;
  return g.block(1, 1, ns, ns);
}

}  // namespace

double lorentz_inner(const MetricSpec& m, const Vector& at, const Vector& v,
                     const Vector& w) {
  const Matrix s = spatial_at(m, at);
  const int ns = m.dimension() - 1;
  return -v[0] * w[0] + v.tail(ns).dot(s * w.tail(ns));
}

double lorentz_inner(const MetricSpec& m, const TangentVector& v,
                     const TangentVector& w) {
  require_same_base(v, w);
  return lorentz_inner(m, v.base.coords, v.components, w.components);
}

double flip_norm_sq(const MetricSpec& m, const Vector& at, const Vector& v) {
  return lorentz_inner(m, at, v, v) + 2.0 * v[0] * v[0];
}

double flip_norm_sq(const MetricSpec& m, const TangentVector& v) {
  return flip_norm_sq(m, v.base.coords, v.components);
}

namespace {

ChristoffelTensor zero_christoffel(int n) {
  ChristoffelTensor t;
  t.comp.assign(n, Matrix::Zero(n, n));
  return t;
}

ChristoffelTensor flrw_christoffel(const MetricSpec& m, const Vector& p) {
  const int n = m.dimension();
  const double t = p[0];
  const double a = m.scale_factor(t);
  const double adot = m.scale_factor_dot(t);
  ChristoffelTensor g = zero_christoffel(n);
  // Gamma^0_{ij} = a adot delta_ij, Gamma^i_{0j} = Gamma^i_{j0} = (adot/a) delta^i_j
  for (int i = 1; i < n; ++i) {
    g.comp[0](i, i) = a * adot;
    g.comp[i](0, i) = adot / a;
    g.comp[i](i, 0) = adot / a;
  }
  return g;
}

// Levi-Civita from central differences of the metric. Works for any product
// metric with g_00 = -1, g_0i = 0, so the inverse is block diagonal.
ChristoffelTensor finite_difference_christoffel(const MetricSpec& m,
                                                const Vector& p) {
  const int n = m.dimension();
  const double step = m.fd_step();
  std::vector<Matrix> dg(n);  // dg[mu](a,b) = d_mu g_ab
  for (int mu = 0; mu < n; ++mu) {
    Vector pp = p, pm = p;
    pp[mu] += step;
    pm[mu] -= step;
    dg[mu] = (metric_eval(m, SpacetimePoint{pp}) -
              metric_eval(m, SpacetimePoint{pm})) /
             (2.0 * step);
  }

  const Matrix g = metric_eval(m, SpacetimePoint{p});
  const int ns = n - 1;
  Matrix ginv = Matrix::Zero(n, n);
  ginv(0, 0) = -1.0;
  Eigen::LLT<Matrix> llt(g.block(1, 1, ns, ns));
  if (llt.info() != Eigen::Success)
    throw GeometryError("singular metric at " + point_to_string(p));
  ginv.block(1, 1, ns, ns) = llt.solve(Matrix::Identity(ns, ns));

  ChristoffelTensor out = zero_christoffel(n);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int c = b; c < n; ++c) {
        double sum = 0.0;
        for (int l = 0; l < n; ++l)
          sum += ginv(a, l) * (dg[b](l, c) + dg[c](l, b) - dg[l](b, c));
        const double val = 0.5 * sum;
        out.comp[a](b, c) = val;
        out.comp[a](c, b) = val;  // symmetric by construction
      }
  return out;
}

}  // namespace

ChristoffelTensor christoffel_at(const MetricSpec& m, const Vector& coords) {
  return christoffel(m, SpacetimePoint{coords});
}

ChristoffelTensor christoffel(const MetricSpec& m, const SpacetimePoint& p) {
  const int n = m.dimension();
  if (p.dimension() != n)
    throw ContractViolation("point dimension does not match metric");
  switch (m.kind_) {
    case MetricSpec::Kind::Minkowski:
      return zero_christoffel(n);
    case MetricSpec::Kind::Flrw:
      return flrw_christoffel(m, p.coords);
    case MetricSpec::Kind::User:
      if (m.analytic_christoffel_) return m.analytic_christoffel_(p.coords);
      return finite_difference_christoffel(m, p.coords);
  }
  return zero_christoffel(n);
}

Vector christoffel_apply(const MetricSpec& m, const Vector& at, const Vector& v,
                         const Vector& w) {
  // Fast path for the transport loops: no tensor assembly for the builtins.
  const int n = m.dimension();
  switch (m.kind_) {
    case MetricSpec::Kind::Minkowski:
      return Vector::Zero(n);
    case MetricSpec::Kind::Flrw: {
      if (m.sf_kind_ == ScaleFactorKind::Constant) return Vector::Zero(n);
      const double t = at[0];
      const double a = m.scale_factor(t);
      const double adot = m.scale_factor_dot(t);
      Vector out(n);
      out[0] = a * adot * v.tail(n - 1).dot(w.tail(n - 1));
      out.tail(n - 1) =
          (adot / a) * (v[0] * w.tail(n - 1) + w[0] * v.tail(n - 1));
      return out;
    }
    case MetricSpec::Kind::User:
      break;
  }
  return christoffel_at(m, at).apply(v, w);
}

namespace {

// Flip metric as a matrix at p.
Matrix flip_matrix(const MetricSpec& m, const Vector& p) {
  Matrix h = metric_eval(m, SpacetimePoint{p});
  h(0, 0) = 1.0;
  return h;
}

double tensor_bilinear_sup(const std::vector<Matrix>& comp, int n,
                           std::vector<Vector> seeds_v,
                           std::vector<Vector> seeds_w) {
  // Alternating maximization: with one argument fixed the map is linear, so
  // the optimum over the other is a top singular pair.
  auto value = [&](const Vector& v, const Vector& w) {
    double s = 0.0;
    for (int a = 0; a < n; ++a) {
      const double c = v.dot(comp[a] * w);
      s += c * c;
    }
    return std::sqrt(s);
  };

  double best = 0.0;
  Vector best_v, best_w;
  for (size_t i = 0; i < seeds_v.size(); ++i) {
    const double val = value(seeds_v[i], seeds_w[i]);
    if (val > best) {
      best = val;
      best_v = seeds_v[i];
      best_w = seeds_w[i];
    }
  }
  if (best == 0.0) {
    // Flat tensor or degenerate seeds; scan basis pairs to be sure.
    bool all_zero = true;
    for (const auto& c : comp)
      if (c.cwiseAbs().maxCoeff() > 0.0) all_zero = false;
    if (all_zero) return 0.0;
    best_v = Vector::Unit(n, 0);
    best_w = Vector::Unit(n, 0);
  }

  Vector v = best_v, w = best_w;
  double prev = best;
  for (int it = 0; it < 60; ++it) {
    // A(v)[a,c] = sum_b comp[a](b,c) v_b; best w is its top right singular vector.
    Matrix A(n, n);
    for (int a = 0; a < n; ++a) A.row(a) = (v.transpose() * comp[a]);
    Eigen::JacobiSVD<Matrix> svd_a(A, Eigen::ComputeThinV);
    w = svd_a.matrixV().col(0);
    Matrix B(n, n);
    for (int a = 0; a < n; ++a) B.row(a) = (comp[a] * w).transpose();
    Eigen::JacobiSVD<Matrix> svd_b(B, Eigen::ComputeThinV);
    v = svd_b.matrixV().col(0);
    const double cur = value(v, w);
    if (cur <= prev * (1.0 + 1e-14)) {
      prev = std::max(prev, cur);
      break;
    }
    prev = cur;
  }
  return std::max(best, prev);
}

}  // namespace

double christoffel_operator_norm(const MetricSpec& m, const SpacetimePoint& p) {
  const int n = m.dimension();
  if (m.is_flat()) return 0.0;
  const ChristoffelTensor gamma = christoffel(m, p);

  // Move to flip-orthonormal coordinates: with H = L L^T, a vector v has
  // ||v||_h = |L^T v|, so the transformed tensor acts on Euclidean unit
  // vectors and its output is measured in the Euclidean norm.
  const Matrix H = flip_matrix(m, p.coords);
  Eigen::LLT<Matrix> llt(H);
  if (llt.info() != Eigen::Success)
    throw GeometryError("flip metric not positive definite at " +
                        point_to_string(p.coords));
  const Matrix L = llt.matrixL();
  const Matrix Linv = L.triangularView<Eigen::Lower>().solve(Matrix::Identity(n, n));
  // comp~[a'] = sum_a L(a,a') Linv comp[a] Linv^T
  std::vector<Matrix> tcomp(n, Matrix::Zero(n, n));
  for (int ap = 0; ap < n; ++ap)
    for (int a = 0; a < n; ++a)
      if (L(a, ap) != 0.0)
        tcomp[ap] += L(a, ap) * (Linv * gamma.comp[a] * Linv.transpose());

  // Seeds: all basis pairs plus a fixed batch of deterministic directions.
  std::vector<Vector> sv, sw;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      sv.push_back(Vector::Unit(n, i));
      sw.push_back(Vector::Unit(n, j));
    }
  std::mt19937 rng(0x5eed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int k = 0; k < 64; ++k) {
    Vector a(n), b(n);
    for (int i = 0; i < n; ++i) a[i] = gauss(rng);
    for (int i = 0; i < n; ++i) b[i] = gauss(rng);
    if (a.norm() == 0.0 || b.norm() == 0.0) continue;
    sv.push_back(a.normalized());
    sw.push_back(b.normalized());
  }
  return tensor_bilinear_sup(tcomp, n, std::move(sv), std::move(sw));
}

namespace {

double halton(int index, int base) {
  double f = 1.0, r = 0.0;
  int i = index;
  while (i > 0) {
    f /= base;
    r += f * (i % base);
    i /= base;
  }
  return r;
}

constexpr int kPrimes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29};

}  // namespace

double christoffel_bound_over(const MetricSpec& m, const ChartBox& region,
                              int n_samples, double safety_factor) {
  if (n_samples < 1) throw ContractViolation("n_samples must be >= 1");
  const int n = m.dimension();
  if (region.dimension() != n)
    throw ContractViolation("region dimension does not match metric");
  for (int i = 0; i < n; ++i)
    if (!(region.hi[i] >= region.lo[i]))
      throw ContractViolation("degenerate sampling region");
  if (m.is_flat()) return 0.0;

  double gmax = 0.0;
  auto visit = [&](const Vector& p) {
    gmax = std::max(gmax, christoffel_operator_norm(m, SpacetimePoint{p}));
  };
  // Corners and center first (fixed set), then the Halton prefix; doubling
  // n_samples extends the sample set, so the bound is monotone.
  Vector center = 0.5 * (region.lo + region.hi);
  visit(center);
  if (n <= 10) {
    for (int mask = 0; mask < (1 << n); ++mask) {
      Vector p(n);
      for (int i = 0; i < n; ++i)
        p[i] = (mask >> i & 1) ? region.hi[i] : region.lo[i];
      visit(p);
    }
  }
  for (int k = 0; k < n_samples; ++k) {
    Vector p(n);
    for (int i = 0; i < n; ++i) {
      const double u = halton(k + 1, kPrimes[i % 10]);
      p[i] = region.lo[i] + u * (region.hi[i] - region.lo[i]);
    }
    visit(p);
  }
  return safety_factor * gmax;
}

ChartBounds sample_bounds(const MetricSpec& m, const ChartBox& region,
                          int n_samples, double safety_factor) {
  ChartBounds b;
  b.injectivity_radius = m.injectivity_radius();
  b.christoffel_bound_sampler = [&m, n_samples, safety_factor](const ChartBox& r) {
    return christoffel_bound_over(m, r, n_samples, safety_factor);
  };
  // Validate the seed region eagerly so bad boxes fail here, not mid-run.
  (void)christoffel_bound_over(m, region, n_samples, safety_factor);
  return b;
}

}  // namespace minlor
