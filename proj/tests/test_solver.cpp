#include <cmath>

#include "doctest.h"
#include "minlor/diagnostics.hpp"
#include "minlor/errors.hpp"
#include "minlor/initial_data.hpp"
#include "minlor/metric.hpp"
#include "minlor/solver.hpp"
#include "oracles.hpp"

using namespace minlor;

namespace {

GridRow row_from_curve(const MetricSpec& m, const InitialCurve& c) {
  const NullData nd = null_decompose(m, c);
  GridRow base;
  base.t = 0.0;
  base.y = c.k0;
  base.u = nd.u;
  base.v = nd.v;
  base.valid.assign(c.n_nodes(), 1);
  return base;
}

ChartBounds wide_bounds(const MetricSpec& m) {
  ChartBox box{Vector::Constant(m.dimension(), -4.0),
               Vector::Constant(m.dimension(), 4.0)};
  return sample_bounds(m, box, 64, 1.5);
}

}  // namespace

TEST_CASE("strip constants come out exactly in flat space") {
  // Constant fields u = v = (2,0,0): flip norm 2 each, derivatives zero, so
  // u_bar + v_bar = 4 with no rounding. With G = 0 and R = infinity, only
  // delta/5 bounds L.
  const MetricSpec m = MetricSpec::minkowski(3);
  const int n = 64;
  GridRow base;
  base.t = 0.0;
  base.y = Matrix::Zero(n, 3);
  for (int j = 0; j < n; ++j) {
    const double x = 2.0 * M_PI * j / n;
    base.y(j, 1) = std::sin(x);
    base.y(j, 2) = std::cos(x);
  }
  base.u = Matrix::Zero(n, 3);
  base.v = Matrix::Zero(n, 3);
  base.u.col(0).setConstant(2.0);
  base.v.col(0).setConstant(2.0);
  base.valid.assign(n, 1);

  const double h = 2.0 * M_PI / n;
  const StepEstimate est = strip_estimate(m, base, wide_bounds(m), 1.0, h);

  CHECK(est.G == 0.0);
  CHECK(std::isinf(est.R_k));
  CHECK(est.u_bar == 2.0);
  CHECK(est.v_bar == 2.0);
  CHECK(est.L_k == 0.2);  // delta/5 with delta = 1
  CHECK(est.l == 0.05);   // L / (u_bar + v_bar)
  CHECK(est.K_prime == 16.0);
  CHECK(est.K == 12.0 / 0.05);  // 3 (u_bar+v_bar) / l, not the literal 240
  CHECK(est.n_rows == 1);  // floor(l / (sqrt(2) h)) = 0 bumped to one row
  CHECK(est.starved);
}

TEST_CASE("strip estimate takes the smallest of the three length scales") {
  const MetricSpec m = MetricSpec::flrw(3, ScaleFactorKind::Exponential, 0.5);
  const InitialCurve c = circle_curve(3, 64, 1.0, 1.0);
  const GridRow base = row_from_curve(m, c);
  const double h = c.period / 64;
  const StepEstimate est = strip_estimate(m, base, wide_bounds(m), 0.5, h);
  CHECK(est.G > 0.0);
  const double expect =
      std::min({est.R_k / 5.0, 1.0 / (11.0 * est.G), est.delta / 5.0});
  CHECK(est.L_k == expect);
  CHECK(est.l == est.L_k / (est.u_bar + est.v_bar));
}

TEST_CASE("transport step is the identity in flat space") {
  const MetricSpec m = MetricSpec::minkowski(3);
  Vector u(3), ys(3), ye(3), ws(3), we(3);
  u << 1.0, 0.3, -0.2;
  ys << 0.0, 1.0, 0.0;
  ye << 0.1, 1.0, 0.1;
  ws << 1.0, -0.5, 0.2;
  we << 1.0, -0.4, 0.25;
  const Vector out = transport_step(m, u, ys, ye, ws, we, 0.1);
  CHECK(out[0] == u[0]);
  CHECK(out[1] == u[1]);
  CHECK(out[2] == u[2]);
}

TEST_CASE("transport step converges at third order to the substepped flow") {
  const MetricSpec m = MetricSpec::flrw(3, ScaleFactorKind::Exponential, 0.4);
  Vector u(3), ys(3), ws(3), we(3);
  u << 1.0, 0.4, -0.3;
  ys << 0.2, 0.5, -0.1;
  ws << 1.0, -0.6, 0.2;
  we << 1.0, -0.5, 0.3;

  // Endpoint data must scale like samples of a smooth field along the
  // segment, otherwise the effective coefficient gradient grows as 1/ds and
  // the midpoint order degrades.
  auto err_at = [&](double ds) {
    Vector ye = ys;
    ye[0] += ds;  // segment climbs the time axis
    ye[1] += 0.4 * ds;
    const Vector we_ds = ws + ds * (we - ws);
    const Vector got = transport_step(m, u, ys, ye, ws, we_ds, ds);
    const Vector ref =
        oracles::reference_transport(m, u, ys, ye, ws, we_ds, ds, 64);
    return (got - ref).cwiseAbs().maxCoeff();
  };
  const double e1 = err_at(0.1);
  const double e2 = err_at(0.05);
  CHECK(e1 / e2 >= 6.0);  // one midpoint step: local error O(ds^3)
  CHECK(e1 / e2 <= 10.0);
  CHECK(e1 <= 1e-4);
}

TEST_CASE("transport leading error term matches the connection") {
  // d/ds U = -Gamma(U, w); over a short segment the spatial components move
  // by -ds (adot/a)(U^0 w^i + U^i w^0) to first order.
  const double H = 0.3;
  const MetricSpec m = MetricSpec::flrw(3, ScaleFactorKind::Exponential, H);
  Vector u(3), ys(3), ws(3);
  u << 1.0, 0.2, 0.0;
  ys << 0.5, 0.3, -0.2;
  ws << 1.0, -0.7, 0.4;
  const double ds = 1e-4;
  Vector ye = ys;
  ye[0] += ds;
  const Vector got = transport_step(m, u, ys, ye, ws, ws, ds);
  for (int i = 1; i < 3; ++i) {
    const double want = u[i] - ds * H * (u[0] * ws[i] + u[i] * ws[0]);
    CHECK(got[i] == doctest::Approx(want).epsilon(1e-6));
  }
}

TEST_CASE("transport approximately preserves the lorentz norm") {
  const MetricSpec m = MetricSpec::flrw(3, ScaleFactorKind::Polynomial, 0.5);
  Vector u(3), ys(3), ws(3);
  u << 1.0, 0.5, -0.1;
  ys << 0.3, 0.2, 0.4;
  ws << 1.0, -0.2, 0.3;  // transport velocity = segment velocity
  auto drift_at = [&](double ds) {
    Vector ye = ys + ds * ws;
    const Vector out = transport_step(m, u, ys, ye, ws, ws, ds);
    return std::abs(lorentz_inner(m, ye, out, out) -
                    lorentz_inner(m, ys, u, u));
  };
  const double d1 = drift_at(0.1);
  const double d2 = drift_at(0.05);
  CHECK(d1 <= 1e-4);
  CHECK(d1 / d2 >= 6.0);
  CHECK(d1 / d2 <= 10.0);
}

TEST_CASE("flat strips converge in two sweeps with exact doubling symmetry") {
  const MetricSpec m = MetricSpec::minkowski(3);
  const InitialCurve c = circle_curve(3, 64, 1.0, 1.0);
  const GridRow base = row_from_curve(m, c);
  const double h = c.period / 64;
  StepEstimate est = strip_estimate(m, base, wide_bounds(m), 1.0, h);
  est.n_rows = 4;  // exercise a multi-row strip regardless of the bound

  const StripResult r = picard_strip_solve(m, base, est, c.period, 1e-12, 50);
  CHECK(r.state.converged);
  CHECK(r.state.iterations == 2);  // flat transports land on the fixed point
  CHECK(r.state.changes.size() == 2);
  CHECK(r.state.changes[1] == 0.0);
  REQUIRE(static_cast<int>(r.rows.size()) == 4);
  for (const auto& row : r.rows) CHECK(row.all_valid());

  SUBCASE("hatted and unhatted fields coincide bitwise in flat space") {
    const StripFields& f = r.state.fields;
    for (size_t i = 0; i < f.u.size(); ++i) {
      CHECK((f.u[i] - f.uh[i]).cwiseAbs().maxCoeff() == 0.0);
      CHECK((f.v[i] - f.vh[i]).cwiseAbs().maxCoeff() == 0.0);
    }
  }
  SUBCASE("flat transports shift the null fields along characteristics") {
    const int n = base.n_nodes();
    for (int j = 0; j < n; ++j) {
      CHECK(r.rows[0].u(j, 1) == base.u((j + 1) % n, 1));
      CHECK(r.rows[0].v(j, 1) == base.v((j + n - 1) % n, 1));
    }
  }
}

TEST_CASE("a vanishing forward field is fixed in one sweep even when curved") {
  // k1 = -k0' makes u = k0' + k1 cancel exactly; Gamma(u, .) = 0 then kills
  // every coupling, so the first sweep already lands on the fixed point and
  // v rides its characteristic unchanged, whatever the metric.
  const InitialCurve c0 = circle_curve(3, 64, 1.0, 1.0);
  InitialCurve c = c0;
  c.k1 = -fd4_periodic_derivative(c.k0, c.period);

  auto check_metric = [&](const MetricSpec& m) {
    const GridRow base = row_from_curve(m, c);
    REQUIRE(base.u.cwiseAbs().maxCoeff() == 0.0);
    const double h = c.period / 64;
    StepEstimate est = strip_estimate(m, base, wide_bounds(m), 1.0, h);
    est.n_rows = 3;
    const StripResult r =
        picard_strip_solve(m, base, est, c.period, 1e-12, 50);
    CHECK(r.state.converged);
    CHECK(r.state.iterations == 2);
    CHECK(r.state.changes[1] == 0.0);
    const int n = base.n_nodes();
    for (const auto& row : r.rows) CHECK(row.u.cwiseAbs().maxCoeff() == 0.0);
    for (int j = 0; j < n; ++j) {
      CHECK(r.rows[0].v(j, 2) == base.v((j + n - 1) % n, 2));
      CHECK(r.rows[1].v(j, 2) == base.v((j + n - 2) % n, 2));
    }
  };
  check_metric(MetricSpec::minkowski(3));
  check_metric(MetricSpec::flrw(3, ScaleFactorKind::Exponential, 0.3));
  check_metric(MetricSpec::flrw(3, ScaleFactorKind::Polynomial, 0.4));
}

TEST_CASE("curved strips contract well inside the guaranteed ratio") {
  const MetricSpec m = MetricSpec::flrw(3, ScaleFactorKind::Exponential, 0.3);
  const InitialCurve c = circle_curve(3, 128, 1.0, 1.0);
  const GridRow base = row_from_curve(m, c);
  const double h = c.period / 128;
  StepEstimate est = strip_estimate(m, base, wide_bounds(m), 1.0, h);
  est.n_rows = 4;
  const StripResult r = picard_strip_solve(m, base, est, c.period, 1e-12, 50);
  CHECK(r.state.converged);
  CHECK(r.state.iterations >= 3);  // curvature actually couples the fields
  CHECK(r.state.last_contraction_ratio > 0.0);
  CHECK(r.state.last_contraction_ratio < 0.9);
  CHECK(r.state.symmetric_defect <= 10.0 * h * h * h);
}

TEST_CASE("the march reaches the target time on monotone rows") {
  const MetricSpec m = MetricSpec::minkowski(3);
  const InitialCurve c = circle_curve(3, 64, 1.0, 1.0);
  SolverOptions opt;
  const SolutionSurface s = continue_to_time(m, c, 1.2, opt);

  REQUIRE(s.rows.size() >= 2);
  CHECK(s.h == doctest::Approx(2.0 * M_PI / 64).epsilon(1e-15));
  CHECK(s.time_orientation == 1);
  const int n = s.n_nodes();
  const GridRow& last = s.rows.back();
  for (int j = 0; j < n; ++j) CHECK(last.y(j, 0) >= 1.2);

  SUBCASE("grid time and coordinate time advance strictly per column") {
    for (size_t i = 1; i < s.rows.size(); ++i) {
      CHECK(s.rows[i].t > s.rows[i - 1].t);
      for (int j = 0; j < n; ++j)
        CHECK(s.rows[i].y(j, 0) > s.rows[i - 1].y(j, 0));
    }
  }
  SUBCASE("the computed surface tracks the rotating-circle solution") {
    oracles::CircleSolution sol;
    double worst = 0.0;
    for (size_t i = 0; i < s.rows.size(); ++i)
      for (int j = 0; j < n; ++j) {
        const Vector want = sol.y(s.rows[i].t, c.node_x(j));
        const Vector diff = s.rows[i].y.row(j).transpose() - want;
        worst = std::max(worst, std::sqrt(flip_norm_sq(m, want, diff)));
      }
    CHECK(worst <= 5e-3);  // second-order scheme at h ~ 0.1
  }
  SUBCASE("strip records cover every computed row") {
    CHECK(!s.strips.empty());
    CHECK(s.strips.front().first_row == 1);
    int covered = 1;
    for (const auto& rec : s.strips) {
      CHECK(rec.first_row == covered);
      covered += rec.est.n_rows;
      CHECK(rec.est.starved);  // auto delta = 5 h (u+v) always starves
      CHECK(rec.iterations >= 1);
    }
    CHECK(covered == static_cast<int>(s.rows.size()));
  }
}

TEST_CASE("the fixed point ignores the picard seed") {
  const MetricSpec m = MetricSpec::flrw(3, ScaleFactorKind::Exponential, 0.2);
  const InitialCurve c = circle_curve(3, 64, 1.0, 1.0);
  SolverOptions plain;
  plain.tol = 1e-11;
  SolverOptions nudged = plain;
  nudged.seed_perturbation = 0.1;
  const SolutionSurface a = continue_to_time(m, c, 0.8, plain);
  const SolutionSurface b = continue_to_time(m, c, 0.8, nudged);
  REQUIRE(a.rows.size() == b.rows.size());
  CHECK(surface_distance(m, a, b) <= 10.0 * plain.tol);
}

TEST_CASE("marching backward mirrors the forward solution in flat space") {
  const MetricSpec m = MetricSpec::minkowski(3);
  InitialCurve c = circle_curve(3, 64, 1.0, 1.0);
  c.k1.col(0).setConstant(-1.0);  // past-directed velocity
  SolverOptions opt;
  opt.orientation = -1;
  const SolutionSurface s = continue_to_time(m, c, -0.7, opt);
  CHECK(s.time_orientation == -1);
  const GridRow& last = s.rows.back();
  for (int j = 0; j < s.n_nodes(); ++j) CHECK(last.y(j, 0) <= -0.7);
  // Grid time still increases row by row; coordinate time runs against it.
  // cos is even, so the spatial profile retraces the forward solution.
  oracles::CircleSolution sol;
  double worst = 0.0;
  for (size_t i = 0; i < s.rows.size(); ++i)
    for (int j = 0; j < s.n_nodes(); ++j) {
      Vector want = sol.y(s.rows[i].t, c.node_x(j));
      want[0] = -s.rows[i].t;
      const Vector diff = s.rows[i].y.row(j).transpose() - want;
      worst = std::max(worst, std::sqrt(flip_norm_sq(m, want, diff)));
    }
  CHECK(worst <= 5e-3);
}

TEST_CASE("solver contract violations") {
  const MetricSpec m = MetricSpec::minkowski(3);
  const InitialCurve c = circle_curve(3, 64, 1.0, 1.0);

  SUBCASE("orientation opposing the data") {
    SolverOptions opt;
    opt.orientation = -1;
    CHECK_THROWS_AS(continue_to_time(m, c, -1.0, opt), ContractViolation);
  }
  SUBCASE("target behind the curve") {
    CHECK_THROWS_AS(continue_to_time(m, c, -0.5), ContractViolation);
  }
  SUBCASE("non-finite target") {
    CHECK_THROWS_AS(
        continue_to_time(m, c, std::numeric_limits<double>::infinity()),
        ContractViolation);
  }
  SUBCASE("row budget exhausted") {
    SolverOptions opt;
    opt.max_total_rows = 4;
    CHECK_THROWS_AS(continue_to_time(m, c, 1.2, opt), StarvationError);
  }
  SUBCASE("iteration budget too small for a curved run") {
    const MetricSpec f = MetricSpec::flrw(3, ScaleFactorKind::Exponential, 0.3);
    SolverOptions opt;
    opt.max_iter = 1;
    // Starved strips report the starvation, roomy ones the convergence miss;
    // either way the march fails loudly instead of accepting the iterate.
    CHECK_THROWS_AS(continue_to_time(f, c, 1.0, opt), std::runtime_error);
  }
}

TEST_CASE("partial surface survives a mid-march failure") {
  const MetricSpec m = MetricSpec::minkowski(3);
  const InitialCurve c = circle_curve(3, 64, 1.0, 1.0);
  SolverOptions opt;
  opt.max_total_rows = 6;
  SolutionSurface progress;
  CHECK_THROWS_AS(continue_to_time(m, c, 1.2, opt, &progress),
                  StarvationError);
  CHECK(static_cast<int>(progress.rows.size()) >= 5);
  CHECK(progress.rows.back().all_valid());
}

TEST_CASE("wave map residual vanishes for straight lines and shrinks at h^2") {
  SUBCASE("drifting point: identically zero forcing") {
    const SolutionSurface s = analytic_oracle("flat-linear", {}, 64, 20);
    const MetricSpec m = oracle_metric("flat-linear");
    const Matrix r = wave_map_residual(m, s);
    CHECK(r.cwiseAbs().maxCoeff() <= 1e-12);
  }
  SUBCASE("sampled rotating circle: every even derivative pair cancels") {
    // d_t^2 y = d_x^2 y = -y for cos(t) sin(x) profiles, so the central
    // differences agree to all orders and only round-off (amplified by h^-2)
    // remains.
    const MetricSpec m = oracle_metric("minkowski-circle");
    const SolutionSurface s = analytic_oracle("minkowski-circle", {}, 64, 16);
    CHECK(wave_map_residual(m, s).maxCoeff() <= 1e-10);
  }
  SUBCASE("discrete operator converges to the continuous one at h^2") {
    // Non-solution surface y = (t, cos(2t) sin x, cos x): the operator value
    // is (0, -3 cos(2t) sin x, cos x), nonzero and smooth.
    const MetricSpec m = MetricSpec::minkowski(3);
    auto node_errors = [&](int n) {
      SolutionSurface s;
      s.period = 2.0 * M_PI;
      s.h = s.period / n;
      const int rows = n / 4;
      for (int i = 0; i <= rows; ++i) {
        GridRow r;
        r.t = i * s.h;
        r.y = Matrix::Zero(n, 3);
        for (int j = 0; j < n; ++j) {
          const double x = s.period * j / n;
          r.y(j, 0) = r.t;
          r.y(j, 1) = std::cos(2.0 * r.t) * std::sin(x);
          r.y(j, 2) = std::cos(x);
        }
        r.u = Matrix::Zero(n, 3);
        r.v = Matrix::Zero(n, 3);
        r.valid.assign(n, 1);
        s.rows.push_back(std::move(r));
      }
      const Matrix res = wave_map_residual(m, s);
      double worst = 0.0;
      for (int i = 1; i < rows; ++i)
        for (int j = 0; j < n; ++j) {
          const double t = i * s.h, x = s.period * j / n;
          const double want = std::hypot(-3.0 * std::cos(2.0 * t) * std::sin(x),
                                         std::cos(x));
          worst = std::max(worst, std::abs(res(i, j) - want));
        }
      return worst;
    };
    const double e64 = node_errors(64);
    const double e128 = node_errors(128);
    CHECK(e64 / e128 >= 3.4);
    CHECK(e64 / e128 <= 4.6);
  }
  SUBCASE("solver output meets the second-order residual scale") {
    const MetricSpec m = MetricSpec::minkowski(3);
    const InitialCurve c = circle_curve(3, 64, 1.0, 1.0);
    const SolutionSurface s = continue_to_time(m, c, 1.0);
    const double h2 = s.h * s.h;
    CHECK(wave_map_residual(m, s).maxCoeff() <= h2);
  }
}
