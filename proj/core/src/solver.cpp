#include "minlor/solver.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "minlor/errors.hpp"
#include "minlor/fourier.hpp"

namespace minlor {

bool GridRow::all_valid() const {
  return std::all_of(valid.begin(), valid.end(),
                     [](std::uint8_t b) { return b != 0; });
}

namespace {

void check_row(const MetricSpec& m, const GridRow& row) {
  const int n = row.n_nodes();
  if (n < 8 || !is_power_of_two(n))
    throw ContractViolation("row node count must be a power of two >= 8");
  if (row.u.rows() != n || row.v.rows() != n || row.y.cols() != m.dimension() ||
      row.u.cols() != m.dimension() || row.v.cols() != m.dimension())
    throw ContractViolation("row field shapes do not match");
  if (!row.y.allFinite() || !row.u.allFinite() || !row.v.allFinite())
    throw ContractViolation("non-finite row data");
}

// C^1 flip-norm bounds of a row field: max over nodes of the value norm and
// of the discrete-derivative norm.
double c1_flip_bound(const MetricSpec& m, const Matrix& y, const Matrix& f,
                     double period) {
  const Matrix df = fd4_periodic_derivative(f, period);
  double b = 0.0;
  for (int j = 0; j < f.rows(); ++j) {
    const Vector at = y.row(j);
    b = std::max({b, std::sqrt(flip_norm_sq(m, at, Vector(f.row(j)))),
                  std::sqrt(flip_norm_sq(m, at, Vector(df.row(j))))});
  }
  return b;
}

}  // namespace

StepEstimate strip_estimate(const MetricSpec& m, const GridRow& row,
                            const ChartBounds& bounds, double delta, double h) {
  check_row(m, row);
  if (!(delta > 0.0)) throw ContractViolation("delta must be positive");
  if (!(h > 0.0)) throw ContractViolation("h must be positive");
  const double period = h * row.n_nodes();

  StepEstimate est;
  est.delta = delta;
  est.R_k = bounds.injectivity_radius;
  est.u_bar = c1_flip_bound(m, row.y, row.u, period);
  est.v_bar = c1_flip_bound(m, row.y, row.v, period);
  const double uv = est.u_bar + est.v_bar;
  if (!(uv > 0.0))
    throw GeometryError("stationary degenerate row: u_bar + v_bar = 0, "
                        "cannot size strip");

  if (bounds.christoffel_bound_sampler) {
    ChartBox box;
    box.lo = row.y.colwise().minCoeff().transpose().array() - delta;
    box.hi = row.y.colwise().maxCoeff().transpose().array() + delta;
    est.G = bounds.christoffel_bound_sampler(box);
  } else {
    est.G = 0.0;
  }

  // 1/(11 G) is +infinity at G = 0 by IEEE division.
  est.L_k = std::min({est.R_k / 5.0, 1.0 / (11.0 * est.G), delta / 5.0});
  est.l = est.L_k / uv;
  est.K_prime = 4.0 * uv;
  est.K = 3.0 * uv / est.l;
  const double height = est.l / std::sqrt(2.0);
  est.n_rows = std::max(1, static_cast<int>(std::floor(height / h)));
  est.starved = height < h;
  return est;
}

Vector transport_step(const MetricSpec& m, const Vector& u_start,
                      const Vector& y_start, const Vector& y_end,
                      const Vector& w_start, const Vector& w_end, double ds) {
  const Vector k1 = -christoffel_apply(m, y_start, u_start, w_start);
  const Vector u_mid = u_start + (0.5 * ds) * k1;
  const Vector y_mid = 0.5 * (y_start + y_end);
  const Vector w_mid = 0.5 * (w_start + w_end);
  const Vector k2 = -christoffel_apply(m, y_mid, u_mid, w_mid);
  return u_start + ds * k2;
}

namespace {

StripFields make_seed(const GridRow& base, int n_rows, double h,
                      double perturbation) {
  const int fields_rows = n_rows + 1;
  StripFields f;
  f.y.assign(fields_rows, base.y);
  f.z.assign(fields_rows, base.y);
  f.u.assign(fields_rows, base.u);
  f.uh.assign(fields_rows, base.u);
  f.v.assign(fields_rows, base.v);
  f.vh.assign(fields_rows, base.v);
  // Constant vertical extension for the derivative fields; y and z by exact
  // trapezoid of the (constant) time derivative (u+v)/2.
  const Matrix yt = 0.5 * (base.u + base.v);
  for (int i = 1; i <= n_rows; ++i) {
    f.y[i] = base.y + (i * h) * yt;
    f.z[i] = f.y[i];
    if (perturbation != 0.0) {
      const int comp = base.u.cols() > 1 ? 1 : 0;
      f.u[i].col(comp).array() += perturbation;
    }
  }
  return f;
}

double sup_flip_change(const MetricSpec& m, const StripFields& a,
                       const StripFields& b) {
  double worst = 0.0;
  const int rows = static_cast<int>(a.y.size());
  const int n = static_cast<int>(a.y.front().rows());
  auto meas = [&](const Matrix& at_rows, const Matrix& fa, const Matrix& fb) {
    for (int j = 0; j < n; ++j) {
      const Vector at = at_rows.row(j);
      worst = std::max(
          worst, flip_norm_sq(m, at, Vector(fa.row(j) - fb.row(j))));
    }
  };
  for (int i = 1; i < rows; ++i) {
    meas(a.y[i], a.y[i], b.y[i]);
    meas(a.y[i], a.z[i], b.z[i]);
    meas(a.y[i], a.u[i], b.u[i]);
    meas(a.y[i], a.uh[i], b.uh[i]);
    meas(a.y[i], a.v[i], b.v[i]);
    meas(a.y[i], a.vh[i], b.vh[i]);
  }
  return std::sqrt(worst);
}

bool fields_finite(const StripFields& f) {
  for (const auto* set : {&f.y, &f.z, &f.u, &f.uh, &f.v, &f.vh})
    for (const auto& mat : *set)
      if (!mat.allFinite()) return false;
  return true;
}

}  // namespace

StripResult picard_strip_solve(const MetricSpec& m, const GridRow& base,
                               const StepEstimate& est, double period,
                               double tol, int max_iter,
                               double seed_perturbation) {
  check_row(m, base);
  if (!(tol > 0.0)) throw ContractViolation("tol must be positive");
  if (max_iter < 1) throw ContractViolation("max_iter must be >= 1");
  if (est.n_rows < 1) throw ContractViolation("strip must advance >= 1 row");

  const int N = base.n_nodes();
  const int n = m.dimension();
  const double h = period / N;
  const int R = est.n_rows;

  StripFields cur = make_seed(base, R, h, seed_perturbation);
  StripFields nxt = cur;

  PicardState state;
  Vector sv(n), svh(n), k1v(n), k1vh(n), vm(n), vhm(n);
  for (int iter = 1; iter <= max_iter; ++iter) {
    for (int i = 0; i < R; ++i) {
      for (int j = 0; j < N; ++j) {
        const int jp = (j + 1) % N;
        const int jm = (j + N - 1) % N;

        // Transport of u against (z_m, vh_m) and of uh against (y_m, v_m)
        // along the eta-diagonal (i, j+1) -> (i+1, j).
        nxt.u[i + 1].row(j) =
            transport_step(m, nxt.u[i].row(jp), cur.z[i].row(jp),
                           cur.z[i + 1].row(j), cur.vh[i].row(jp),
                           cur.vh[i + 1].row(j), h)
                .transpose();
        nxt.uh[i + 1].row(j) =
            transport_step(m, nxt.uh[i].row(jp), cur.y[i].row(jp),
                           cur.y[i + 1].row(j), cur.v[i].row(jp),
                           cur.v[i + 1].row(j), h)
                .transpose();

        // Cross-coupled pair along the xi-diagonal (i, j-1) -> (i+1, j):
        // d v/dxi = -Gamma(z_m)(vh, u_m), d vh/dxi = -Gamma(y_m)(v, uh_m).
        sv = nxt.v[i].row(jm);
        svh = nxt.vh[i].row(jm);
        const Vector z_s = cur.z[i].row(jm), z_e = cur.z[i + 1].row(j);
        const Vector y_s = cur.y[i].row(jm), y_e = cur.y[i + 1].row(j);
        const Vector u_s = cur.u[i].row(jm), u_e = cur.u[i + 1].row(j);
        const Vector uh_s = cur.uh[i].row(jm), uh_e = cur.uh[i + 1].row(j);
        k1v = -christoffel_apply(m, z_s, svh, u_s);
        k1vh = -christoffel_apply(m, y_s, sv, uh_s);
        vm = sv + (0.5 * h) * k1v;
        vhm = svh + (0.5 * h) * k1vh;
        nxt.v[i + 1].row(j) =
            (sv - h * christoffel_apply(m, Vector(0.5 * (z_s + z_e)), vhm,
                                        Vector(0.5 * (u_s + u_e))))
                .transpose();
        nxt.vh[i + 1].row(j) =
            (svh - h * christoffel_apply(m, Vector(0.5 * (y_s + y_e)), vm,
                                         Vector(0.5 * (uh_s + uh_e))))
                .transpose();
      }
      // Path reconstruction: y along xi-lines from u, z along eta-lines
      // from vh, both by the trapezoid rule.
      for (int j = 0; j < N; ++j) {
        const int jp = (j + 1) % N;
        const int jm = (j + N - 1) % N;
        nxt.y[i + 1].row(j) =
            nxt.y[i].row(jm) +
            (0.5 * h) * (nxt.u[i].row(jm) + nxt.u[i + 1].row(j));
        nxt.z[i + 1].row(j) =
            nxt.z[i].row(jp) +
            (0.5 * h) * (nxt.vh[i].row(jp) + nxt.vh[i + 1].row(j));
      }
    }

    if (!fields_finite(nxt)) {
      std::ostringstream os;
      os << "transport blew up on strip starting at t = " << base.t
         << " (iterate " << iter << ")";
      throw BlowupError(os.str());
    }

    const double change = sup_flip_change(m, nxt, cur);
    state.changes.push_back(change);
    state.iterations = iter;
    state.last_change = change;
    state.last_contraction_ratio =
        state.changes.size() > 1 && state.changes[state.changes.size() - 2] > 0.0
            ? change / state.changes[state.changes.size() - 2]
            : 0.0;
    std::swap(cur, nxt);
    if (change <= tol) {
      state.converged = true;
      break;
    }
  }

  double defect = 0.0;
  for (int i = 1; i <= R; ++i)
    for (int j = 0; j < N; ++j) {
      const Vector at = cur.y[i].row(j);
      defect = std::max(
          defect, flip_norm_sq(m, at, Vector(cur.y[i].row(j) - cur.z[i].row(j))));
    }
  state.symmetric_defect = std::sqrt(defect);
  state.fields = cur;

  StripResult out;
  out.state = std::move(state);
  out.rows.reserve(R);
  for (int i = 1; i <= R; ++i) {
    GridRow row;
    row.t = base.t + i * h;
    row.y = 0.5 * (out.state.fields.y[i] + out.state.fields.z[i]);
    row.u = 0.5 * (out.state.fields.u[i] + out.state.fields.uh[i]);
    row.v = 0.5 * (out.state.fields.v[i] + out.state.fields.vh[i]);
    row.valid.assign(N, 1);
    out.rows.push_back(std::move(row));
  }
  return out;
}

namespace {

// Signed extreme of y^0 on the newest row in the marching direction: the
// slowest column decides whether the target slice is crossed.
double frontier(const GridRow& row, int orientation) {
  return orientation > 0 ? row.y.col(0).minCoeff() : row.y.col(0).maxCoeff();
}

}  // namespace

SolutionSurface continue_to_time(const MetricSpec& m, const InitialCurve& c,
                                 double T_target, const SolverOptions& opt,
                                 SolutionSurface* progress) {
  if (!std::isfinite(T_target)) throw ContractViolation("T_target must be finite");
  if (opt.orientation != 1 && opt.orientation != -1)
    throw ContractViolation("orientation must be +1 or -1");

  const NullData nd = null_decompose(m, c);
  const int N = c.n_nodes();
  const double h = c.period / N;

  GridRow base;
  base.t = 0.0;
  base.y = c.k0;
  base.u = nd.u;
  base.v = nd.v;
  base.valid.assign(N, 1);

  // The data's time direction must match the requested march.
  for (int j = 0; j < N; ++j) {
    const double yt0 = 0.5 * (base.u(j, 0) + base.v(j, 0));
    if (!(yt0 * opt.orientation > 0.0))
      throw ContractViolation(
          "initial time derivative opposes the requested orientation at node " +
          std::to_string(j));
  }
  if (!(opt.orientation * (T_target - frontier(base, opt.orientation)) > 0.0))
    throw ContractViolation("T_target is not ahead of the initial curve");

  ChartBox seed_box;
  seed_box.lo = c.k0.colwise().minCoeff().transpose().array() - 1.0;
  seed_box.hi = c.k0.colwise().maxCoeff().transpose().array() + 1.0;
  const ChartBounds bounds =
      sample_bounds(m, seed_box, opt.bounds_samples, opt.bounds_safety);

  SolutionSurface local;
  SolutionSurface& s = progress ? *progress : local;
  s = SolutionSurface{};
  s.period = c.period;
  s.h = h;
  s.time_orientation = opt.orientation;
  s.rows.push_back(base);

  long total_rows = 1;
  while (opt.orientation *
             (T_target - frontier(s.rows.back(), opt.orientation)) >
         0.0) {
    const GridRow& row = s.rows.back();
    const double uv = c1_flip_bound(m, row.y, row.u, c.period) +
                      c1_flip_bound(m, row.y, row.v, c.period);
    const double delta = opt.delta > 0.0 ? opt.delta : 5.0 * h * uv;
    StepEstimate est = strip_estimate(m, row, bounds, delta, h);

    // Do not overshoot the target by more than one strip: cap rows by the
    // crossing estimate from the slowest time rate on this row.
    double min_rate = std::numeric_limits<double>::infinity();
    for (int j = 0; j < N; ++j)
      min_rate = std::min(min_rate,
                          std::abs(0.5 * (row.u(j, 0) + row.v(j, 0))));
    if (min_rate > 0.0) {
      const double gap =
          std::abs(T_target - frontier(row, opt.orientation));
      const int cap =
          static_cast<int>(std::min<double>(std::ceil(gap / (h * min_rate)) + 2,
                                            1 << 24));
      est.n_rows = std::max(1, std::min(est.n_rows, cap));
    }

    StripResult strip;
    try {
      strip = picard_strip_solve(m, row, est, c.period, opt.tol, opt.max_iter,
                                 opt.seed_perturbation);
    } catch (const BlowupError&) {
      if (est.starved)
        throw StarvationError(
            "step-starved strip blew up at t = " + std::to_string(row.t) +
            " (l/sqrt(2) = " + std::to_string(est.l / std::sqrt(2.0)) +
            " < h = " + std::to_string(h) + ")");
      throw;
    }
    if (!strip.state.converged) {
      std::ostringstream os;
      os << "Picard iteration did not converge on strip at t = " << row.t
         << " after " << strip.state.iterations
         << " iterations (last change " << strip.state.last_change << ")";
      if (est.starved)
        throw StarvationError(os.str() + "; strip was step-starved, h = " +
                              std::to_string(h) + " exceeds l/sqrt(2) = " +
                              std::to_string(est.l / std::sqrt(2.0)));
      throw ConvergenceError(os.str(), strip.state.last_contraction_ratio);
    }

    StripRecord rec;
    rec.first_row = static_cast<int>(s.rows.size());
    rec.est = est;
    rec.iterations = strip.state.iterations;
    rec.last_contraction_ratio = strip.state.last_contraction_ratio;
    rec.symmetric_defect = strip.state.symmetric_defect;
    s.strips.push_back(rec);

    for (auto& r : strip.rows) {
      // y^0 must advance monotonically in the marching direction on every
      // column; a reversal means the scheme left its validity regime.
      const GridRow& prev = s.rows.back();
      for (int j = 0; j < N; ++j) {
        const double dy0 = opt.orientation * (r.y(j, 0) - prev.y(j, 0));
        if (dy0 <= -1e-10)
          throw InternalError(
              "y^0 monotonicity violated at t = " + std::to_string(r.t) +
              ", node " + std::to_string(j) + " (delta " +
              std::to_string(dy0) + ")");
      }
      s.rows.push_back(std::move(r));
      ++total_rows;
    }
    if (total_rows > opt.max_total_rows)
      throw StarvationError(
          "target time not reached within the row budget; the march is "
          "stalling (reached y^0 frontier " +
          std::to_string(frontier(s.rows.back(), opt.orientation)) + ")");
  }
  if (progress) return *progress;
  return std::move(local);
}

Matrix wave_map_residual(const MetricSpec& m, const SolutionSurface& s) {
  const int rows = static_cast<int>(s.rows.size());
  if (rows == 0) throw ContractViolation("empty surface");
  const int N = s.n_nodes();
  const double h = s.h;
  Matrix out = Matrix::Zero(rows, N);
  for (int i = 1; i + 1 < rows; ++i) {
    const Matrix& ym = s.rows[i - 1].y;
    const Matrix& y0 = s.rows[i].y;
    const Matrix& yp = s.rows[i + 1].y;
    for (int j = 0; j < N; ++j) {
      if (!s.rows[i].valid[j] || !s.rows[i - 1].valid[j] ||
          !s.rows[i + 1].valid[j])
        continue;
      const int jp = (j + 1) % N;
      const int jm = (j + N - 1) % N;
      const Vector ytt =
          (yp.row(j) - 2.0 * y0.row(j) + ym.row(j)) / (h * h);
      const Vector yxx =
          (y0.row(jp) - 2.0 * y0.row(j) + y0.row(jm)) / (h * h);
      const Vector yt = (yp.row(j) - ym.row(j)) / (2.0 * h);
      const Vector yx = (y0.row(jp) - y0.row(jm)) / (2.0 * h);
      const Vector at = y0.row(j);
      const Vector res = ytt - yxx + christoffel_apply(m, at, yt, yt) -
                         christoffel_apply(m, at, yx, yx);
      out(i, j) = std::sqrt(flip_norm_sq(m, at, res));
    }
  }
  return out;
}

}  // namespace minlor
