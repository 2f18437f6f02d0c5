#include "minlor/diagnostics.hpp"

#include <algorithm>
#include <cmath>

#include "minlor/errors.hpp"
#include "minlor/fourier.hpp"

namespace minlor {

bool is_degenerate_node(const MetricSpec& m, const Vector& y, const Vector& u,
                        const Vector& v, double rel_tol) {
  const double diff = flip_norm_sq(m, y, Vector(u - v));
  const double sum = flip_norm_sq(m, y, Vector(u + v));
  return diff < rel_tol * sum;
}

DriftReport null_drift(const MetricSpec& m, const SolutionSurface& s) {
  const int rows = static_cast<int>(s.rows.size());
  if (rows == 0) throw ContractViolation("empty surface");
  DriftReport rep;
  rep.per_row = Matrix::Zero(rows, 2);
  for (int i = 0; i < rows; ++i) {
    const GridRow& r = s.rows[i];
    for (int j = 0; j < r.n_nodes(); ++j) {
      if (!r.valid[j]) continue;
      const Vector at = r.y.row(j);
      const double uu = std::abs(lorentz_inner(m, at, Vector(r.u.row(j)),
                                               Vector(r.u.row(j))));
      const double vv = std::abs(lorentz_inner(m, at, Vector(r.v.row(j)),
                                               Vector(r.v.row(j))));
      rep.per_row(i, 0) = std::max(rep.per_row(i, 0), uu);
      rep.per_row(i, 1) = std::max(rep.per_row(i, 1), vv);
    }
    rep.max_uu = std::max(rep.max_uu, rep.per_row(i, 0));
    rep.max_vv = std::max(rep.max_vv, rep.per_row(i, 1));
  }
  return rep;
}

CausalReport causal_check(const MetricSpec& m, const SolutionSurface& s,
                          double tol_causal, int orientation) {
  if (s.rows.empty()) throw ContractViolation("empty surface");
  const int dir = orientation != 0 ? orientation : s.time_orientation;
  CausalReport rep;
  rep.tol = tol_causal;
  for (int i = 0; i < static_cast<int>(s.rows.size()); ++i) {
    const GridRow& r = s.rows[i];
    for (int j = 0; j < r.n_nodes(); ++j) {
      if (!r.valid[j]) continue;
      const Vector at = r.y.row(j);
      const Vector u = r.u.row(j), v = r.v.row(j);
      const Vector yt = 0.5 * (u + v);
      const Vector yx = 0.5 * (u - v);
      const double tt = lorentz_inner(m, at, yt, yt);
      if (tt > tol_causal)
        rep.violations.push_back(
            {i, j, CausalViolationKind::TimeDerivativeNotCausal, tt});
      if (!(dir * yt[0] > 0.0))
        rep.violations.push_back(
            {i, j, CausalViolationKind::TimeDerivativeNotFuture,
             -dir * yt[0]});
      if (is_degenerate_node(m, at, u, v)) {
        ++rep.degenerate_count;  // dx y on the light cone by collapse
        continue;
      }
      const double xx = lorentz_inner(m, at, yx, yx);
      if (xx < -tol_causal)
        rep.violations.push_back(
            {i, j, CausalViolationKind::SpaceDerivativeNotSpacelike, -xx});
    }
  }
  return rep;
}

ConformalReport conformal_factor(const MetricSpec& m,
                                 const SolutionSurface& s) {
  const int rows = static_cast<int>(s.rows.size());
  if (rows == 0) throw ContractViolation("empty surface");
  const int N = s.n_nodes();
  ConformalReport rep;
  rep.lambda = Matrix::Zero(rows, N);
  rep.min_lambda = std::numeric_limits<double>::infinity();
  for (int i = 0; i < rows; ++i) {
    const GridRow& r = s.rows[i];
    for (int j = 0; j < N; ++j) {
      if (!r.valid[j]) continue;
      const Vector at = r.y.row(j);
      const Vector yt = 0.5 * (r.u.row(j) + r.v.row(j));
      const Vector yx = 0.5 * (r.u.row(j) - r.v.row(j));
      const double lam = lorentz_inner(m, at, yx, yx);
      rep.lambda(i, j) = lam;
      rep.min_lambda = std::min(rep.min_lambda, lam);
      rep.max_cross =
          std::max(rep.max_cross, std::abs(lorentz_inner(m, at, yx, yt)));
      rep.max_trace = std::max(
          rep.max_trace, std::abs(lorentz_inner(m, at, yt, yt) + lam));
    }
  }
  return rep;
}

namespace {

enum class Functional { Area, Energy };

FunctionalReport integrate(const MetricSpec& m, const SolutionSurface& s,
                           Functional which) {
  if (s.rows.empty()) throw ContractViolation("empty surface");
  FunctionalReport rep;
  const double cell = s.h * s.h;
  for (const GridRow& r : s.rows) {
    for (int j = 0; j < r.n_nodes(); ++j) {
      if (!r.valid[j]) continue;
      const Vector at = r.y.row(j);
      const Vector u = r.u.row(j), v = r.v.row(j);
      if (is_degenerate_node(m, at, u, v)) {
        ++rep.degenerate_nodes;  // lambda -> 0 limit contributes nothing
        continue;
      }
      const Vector yt = 0.5 * (u + v);
      const Vector yx = 0.5 * (u - v);
      const double ett = lorentz_inner(m, at, yt, yt);
      const double exx = lorentz_inner(m, at, yx, yx);
      const double etx = lorentz_inner(m, at, yt, yx);
      if (which == Functional::Energy) {
        rep.value += (exx - ett) * cell;
        continue;
      }
      const double det = ett * exx - etx * etx;
      if (det >= 0.0) {
        ++rep.riemannian_nodes;  // pulled-back metric not Lorentzian here
        rep.worst_riemannian = std::max(rep.worst_riemannian, det);
        continue;
      }
      rep.value += std::sqrt(-det) * cell;
    }
  }
  return rep;
}

}  // namespace

FunctionalReport area_functional(const MetricSpec& m,
                                 const SolutionSurface& s) {
  return integrate(m, s, Functional::Area);
}

FunctionalReport energy_functional(const MetricSpec& m,
                                   const SolutionSurface& s) {
  return integrate(m, s, Functional::Energy);
}

SliceGraph time_slice_preimage(const SolutionSurface& s, double T) {
  const int rows = static_cast<int>(s.rows.size());
  if (rows < 2) throw ContractViolation("surface needs at least two rows");
  const int N = s.n_nodes();
  SliceGraph g;
  g.T = T;
  g.f.resize(N);
  for (int j = 0; j < N; ++j) {
    bool found = false;
    for (int i = 0; i + 1 < rows; ++i) {
      const double a = s.rows[i].y(j, 0) - T;
      const double b = s.rows[i + 1].y(j, 0) - T;
      if (a == 0.0) {
        g.f[j] = s.rows[i].t;
        found = true;
        break;
      }
      if (a * b <= 0.0) {
        // y^0 is strictly monotone along the column, so the bracket is unique.
        const double frac = a / (a - b);
        g.f[j] = s.rows[i].t + frac * (s.rows[i + 1].t - s.rows[i].t);
        found = true;
        break;
      }
    }
    if (!found)
      throw GeometryError("time slice y^0 = " + std::to_string(T) +
                          " not crossed by column " + std::to_string(j));
  }
  for (int j = 0; j < N; ++j) {
    const double df = std::abs(g.f[(j + 1) % N] - g.f[j]) / s.h;
    g.lipschitz_defect = std::max(g.lipschitz_defect, df - 1.0);
  }
  g.lipschitz_defect = std::max(0.0, g.lipschitz_defect);
  return g;
}

StabilityReport energy_stability(const SolutionSurface& s1,
                                 const SolutionSurface& s2,
                                 double picard_tol) {
  const int rows =
      static_cast<int>(std::min(s1.rows.size(), s2.rows.size()));
  if (rows < 2) throw ContractViolation("surfaces need at least two rows");
  if (s1.n_nodes() != s2.n_nodes() || s1.h != s2.h ||
      s1.period != s2.period || s1.dimension() != s2.dimension())
    throw ContractViolation("surface grids do not match");
  const int N = s1.n_nodes();
  const double h = s1.h;

  std::vector<Matrix> V(rows);
  for (int i = 0; i < rows; ++i) V[i] = s1.rows[i].y - s2.rows[i].y;

  StabilityReport rep;
  rep.s_values.resize(rows);
  rep.energy.resize(rows);
  rep.base_coincides = V[0].cwiseAbs().maxCoeff() == 0.0;
  for (int i = 0; i < rows; ++i) {
    rep.s_values[i] = s1.rows[i].t - s1.rows[0].t;
    // V_t: central differences inside, one-sided at the end rows.
    const Matrix vt =
        i == 0 ? Matrix((V[1] - V[0]) / h)
               : (i == rows - 1 ? Matrix((V[i] - V[i - 1]) / h)
                                : Matrix((V[i + 1] - V[i - 1]) / (2.0 * h)));
    double e = 0.0;
    for (int j = 0; j < N; ++j) {
      const int jp = (j + 1) % N, jm = (j + N - 1) % N;
      const Vector vx = (V[i].row(jp) - V[i].row(jm)) / (2.0 * h);
      e += (vx.squaredNorm() + vt.row(j).squaredNorm() +
            V[i].row(j).squaredNorm()) *
           h;
    }
    rep.energy[i] = e;
  }
  rep.e0 = rep.energy[0];

  // Least-squares slope of log E over rows with positive energy.
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int cnt = 0;
  for (int i = 0; i < rows; ++i) {
    if (!(rep.energy[i] > 0.0)) continue;
    const double x = rep.s_values[i], y = std::log(rep.energy[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++cnt;
  }
  if (cnt >= 2 && sxx * cnt - sx * sx > 0.0)
    rep.fitted_rate = (sxy * cnt - sx * sy) / (sxx * cnt - sx * sx);
  if (rep.e0 > 0.0)
    for (int i = 1; i < rows; ++i)
      if (rep.energy[i] > 0.0)
        rep.K_emp = std::max(
            rep.K_emp, std::log(rep.energy[i] / rep.e0) / rep.s_values[i]);

  if (rep.base_coincides) {
    // Identical base data: the whole history must sit at the iteration noise
    // floor (the discrete time derivative carries a 1/h factor).
    const double floor_e =
        100.0 * picard_tol * picard_tol * N * std::max(1.0, 1.0 / h);
    for (int i = 0; i < rows; ++i)
      if (rep.energy[i] > floor_e)
        throw InternalError(
            "difference energy above the noise floor for coincident bases: E(" +
            std::to_string(rep.s_values[i]) + ") = " +
            std::to_string(rep.energy[i]));
  }
  return rep;
}

namespace {

constexpr double kTwoPi = 2.0 * M_PI;

void oracle_node(const std::string& name, const OracleParams& p, double x,
                 double t, Vector& y, Vector& u, Vector& v) {
  if (name == "minkowski-circle") {
    const double r = p.radius;
    y << t, r * std::cos(t) * std::sin(x), r * std::cos(t) * std::cos(x);
    const Vector yt{{1.0, -r * std::sin(t) * std::sin(x),
                     -r * std::sin(t) * std::cos(x)}};
    const Vector yx{{0.0, r * std::cos(t) * std::cos(x),
                     -r * std::cos(t) * std::sin(x)}};
    u = yt + yx;
    v = yt - yx;
    return;
  }
  if (name == "flat-linear") {
    const Vector drift = p.drift.size() ? p.drift : Vector{{0.3, 0.0}};
    y.resize(drift.size() + 1);
    y[0] = t;
    y.tail(drift.size()) = drift * t;
    y[1] += 1.0;  // base point offset, keeps the curve away from the origin
    Vector yt(y.size());
    yt[0] = 1.0;
    yt.tail(drift.size()) = drift;
    u = yt;
    v = yt;
    return;
  }
  if (name == "flat-travelling-wave") {
    const double A = p.amplitude;
    double F, Fp, G, Gp;
    if (p.profile == 0) {
      F = std::sin(x + t), Fp = std::cos(x + t);
      G = std::cos(x - t), Gp = -std::sin(x - t);
    } else if (p.profile == 1) {
      F = std::cos(x + t), Fp = -std::sin(x + t);
      G = std::sin(x - t), Gp = std::cos(x - t);
    } else {
      throw ContractViolation("unknown travelling-wave profile id");
    }
    y << t, A * F, A * G;
    const Vector yt{{1.0, A * Fp, -A * Gp}};
    const Vector yx{{0.0, A * Fp, A * Gp}};
    u = yt + yx;
    v = yt - yx;
    return;
  }
  throw ContractViolation("unknown oracle catalog id: " + name);
}

}  // namespace

MetricSpec oracle_metric(const std::string& name) {
  if (name != "minkowski-circle" && name != "flat-linear" &&
      name != "flat-travelling-wave")
    throw ContractViolation("unknown oracle catalog id: " + name);
  return MetricSpec::minkowski(3);
}

SolutionSurface analytic_oracle(const std::string& name,
                                const OracleParams& params, int n_nodes,
                                int n_rows) {
  if (!is_power_of_two(n_nodes) || n_nodes < 8)
    throw ContractViolation("oracle grid needs a power-of-two node count >= 8");
  if (n_rows < 1) throw ContractViolation("oracle needs at least one row");
  (void)oracle_metric(name);  // validates the id

  SolutionSurface s;
  s.period = kTwoPi;
  s.h = kTwoPi / n_nodes;
  s.time_orientation = 1;
  const int dim = 3;
  Vector y(dim), u(dim), v(dim);
  for (int i = 0; i <= n_rows; ++i) {
    GridRow row;
    row.t = i * s.h;
    row.y.resize(n_nodes, dim);
    row.u.resize(n_nodes, dim);
    row.v.resize(n_nodes, dim);
    row.valid.assign(n_nodes, 1);
    for (int j = 0; j < n_nodes; ++j) {
      oracle_node(name, params, j * s.h, row.t, y, u, v);
      row.y.row(j) = y;
      row.u.row(j) = u;
      row.v.row(j) = v;
    }
    s.rows.push_back(std::move(row));
  }
  return s;
}

double degenerate_time_estimate(const MetricSpec& m,
                                const SolutionSurface& s) {
  const int rows = static_cast<int>(s.rows.size());
  if (rows < 3) throw ContractViolation("need at least three rows");
  Vector prof(rows);
  for (int i = 0; i < rows; ++i) {
    double worst = std::numeric_limits<double>::infinity();
    const GridRow& r = s.rows[i];
    for (int j = 0; j < r.n_nodes(); ++j) {
      if (!r.valid[j]) continue;
      const Vector at = r.y.row(j);
      worst = std::min(worst, flip_norm_sq(m, at,
                                           Vector(r.u.row(j) - r.v.row(j))));
    }
    prof[i] = worst;
  }
  int imin = 0;
  for (int i = 1; i < rows; ++i)
    if (prof[i] < prof[imin]) imin = i;
  if (imin == 0 || imin == rows - 1) return s.rows[imin].t;
  // Quadratic refinement of the sampled minimum; clamped to the bracket.
  const double d0 = prof[imin - 1], d1 = prof[imin], d2 = prof[imin + 1];
  const double denom = d0 - 2.0 * d1 + d2;
  double shift = 0.0;
  if (denom > 0.0) shift = 0.5 * (d0 - d2) / denom;
  shift = std::clamp(shift, -1.0, 1.0);
  return s.rows[imin].t + shift * s.h;
}

double surface_distance(const MetricSpec& m, const SolutionSurface& a,
                        const SolutionSurface& b) {
  if (a.n_nodes() != b.n_nodes() || a.h != b.h || a.dimension() != b.dimension())
    throw ContractViolation("surface grids do not match");
  if (a.rows.size() != b.rows.size())
    throw ContractViolation("surface row counts do not match");
  const int rows = static_cast<int>(a.rows.size());
  double worst = 0.0;
  for (int i = 0; i < rows; ++i) {
    // Row times accumulate differently (strip chaining vs i*h), so allow
    // round-off while rejecting genuinely different grids.
    if (std::abs(a.rows[i].t - b.rows[i].t) > 1e-9 * (1.0 + std::abs(a.rows[i].t)))
      throw ContractViolation("surface row times do not match");
    for (int j = 0; j < a.n_nodes(); ++j) {
      if (!a.rows[i].valid[j] || !b.rows[i].valid[j]) continue;
      const Vector at = a.rows[i].y.row(j);
      worst = std::max(
          worst,
          flip_norm_sq(m, at, Vector(a.rows[i].y.row(j) - b.rows[i].y.row(j))));
    }
  }
  return std::sqrt(worst);
}

}  // namespace minlor
