#include <cmath>

#include "doctest.h"
#include "minlor/errors.hpp"
#include "minlor/metric.hpp"
#include "oracles.hpp"

using namespace minlor;

namespace {

Vector vec3(double a, double b, double c) {
  Vector v(3);
  v << a, b, c;
  return v;
}

}  // namespace

TEST_CASE("minkowski metric is diag(-1, 1, ..., 1) everywhere") {
  const MetricSpec m = MetricSpec::minkowski(4);
  const Vector p = (Vector(4) << 0.3, -1.0, 2.0, 5.0).finished();
  const Matrix g = metric_eval(m, SpacetimePoint{p});
  Matrix want = Matrix::Identity(4, 4);
  want(0, 0) = -1.0;
  CHECK((g - want).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("flrw catalog metrics match their scale factors") {
  const Vector p = vec3(0.7, 1.0, -2.0);

  SUBCASE("constant") {
    const MetricSpec m = MetricSpec::flrw(3, ScaleFactorKind::Constant, 2.0);
    const Matrix g = metric_eval(m, SpacetimePoint{p});
    CHECK(g(0, 0) == -1.0);
    CHECK(g(1, 1) == doctest::Approx(4.0).epsilon(1e-15));
    CHECK(g(2, 2) == doctest::Approx(4.0).epsilon(1e-15));
    CHECK(g(1, 2) == 0.0);
  }
  SUBCASE("exponential") {
    const MetricSpec m = MetricSpec::flrw(3, ScaleFactorKind::Exponential, 0.1);
    const Matrix g = metric_eval(m, SpacetimePoint{p});
    const double a = std::exp(0.1 * 0.7);
    CHECK(g(1, 1) == doctest::Approx(a * a).epsilon(1e-15));
  }
  SUBCASE("polynomial") {
    const MetricSpec m = MetricSpec::flrw(3, ScaleFactorKind::Polynomial, 0.5);
    const Matrix g = metric_eval(m, SpacetimePoint{p});
    const double a = 1.0 + 0.5 * 0.7 * 0.7;
    CHECK(g(2, 2) == doctest::Approx(a * a).epsilon(1e-15));
  }
}

TEST_CASE("metric factories reject malformed requests") {
  CHECK_THROWS_AS(MetricSpec::minkowski(1), ContractViolation);
  CHECK_THROWS_AS(MetricSpec::flrw(3, ScaleFactorKind::Constant, 0.0),
                  ContractViolation);
  CHECK_THROWS_AS(MetricSpec::flrw(3, ScaleFactorKind::Constant, -1.0),
                  ContractViolation);
  CHECK_THROWS_AS(MetricSpec::user(3, nullptr), ContractViolation);
}

TEST_CASE("flip norm equals g(v,v) + 2 (v^0)^2") {
  const MetricSpec m = MetricSpec::flrw(3, ScaleFactorKind::Exponential, 0.2);
  const Vector p = vec3(0.4, 0.0, 1.0);
  const Vector v = vec3(1.3, -0.2, 0.8);
  const double flip = flip_norm_sq(m, p, v);
  const double inner = lorentz_inner(m, p, v, v);
  CHECK(flip == doctest::Approx(inner + 2.0 * v[0] * v[0]).epsilon(1e-15));
  CHECK(flip >= 0.0);

  const Matrix h = oracles::flip_matrix(m, p);
  CHECK(flip == doctest::Approx(v.dot(h * v)).epsilon(1e-14));
}

TEST_CASE("lorentz_inner is symmetric and bilinear") {
  const MetricSpec m = MetricSpec::flrw(3, ScaleFactorKind::Polynomial, 0.3);
  const Vector p = vec3(0.2, 0.5, -0.1);
  const Vector v = vec3(0.7, 1.1, -0.4);
  const Vector w = vec3(-0.3, 0.9, 2.0);
  CHECK(lorentz_inner(m, p, v, w) ==
        doctest::Approx(lorentz_inner(m, p, w, v)).epsilon(1e-15));
  CHECK(lorentz_inner(m, p, Vector(2.0 * v), w) ==
        doctest::Approx(2.0 * lorentz_inner(m, p, v, w)).epsilon(1e-14));
  CHECK(lorentz_inner(m, p, Vector(v + w), w) ==
        doctest::Approx(lorentz_inner(m, p, v, w) + lorentz_inner(m, p, w, w))
            .epsilon(1e-14));
}

TEST_CASE("tangent vector dimension mismatch is rejected") {
  const Vector p3 = vec3(0.0, 0.0, 0.0);
  Vector v4(4);
  v4 << 1.0, 0.0, 0.0, 0.0;
  CHECK_THROWS_AS(TangentVector(SpacetimePoint{p3}, v4), ContractViolation);
}

TEST_CASE("minkowski christoffel vanishes") {
  const MetricSpec m = MetricSpec::minkowski(3);
  const ChristoffelTensor g = christoffel_at(m, vec3(0.3, 1.0, 2.0));
  CHECK(g.max_abs() == 0.0);
  CHECK(christoffel_apply(m, vec3(0, 1, 2), vec3(1, 2, 3), vec3(4, 5, 6))
            .cwiseAbs()
            .maxCoeff() == 0.0);
}

TEST_CASE("flrw christoffel matches the closed form") {
  const double H = 0.1;
  const MetricSpec m = MetricSpec::flrw(3, ScaleFactorKind::Exponential, H);
  const double t = 0.6;
  const double a = std::exp(H * t);
  const double adot = H * a;
  const ChristoffelTensor g = christoffel_at(m, vec3(t, 0.2, -0.4));

  for (int i = 1; i < 3; ++i) {
    CHECK(g.comp[0](i, i) == doctest::Approx(a * adot).epsilon(1e-13));
    CHECK(g.comp[i](0, i) == doctest::Approx(adot / a).epsilon(1e-13));
    CHECK(g.comp[i](i, 0) == doctest::Approx(adot / a).epsilon(1e-13));
  }
  CHECK(g.comp[0](0, 0) == 0.0);
  CHECK(g.comp[0](1, 2) == 0.0);
  CHECK(g.comp[1](1, 1) == 0.0);
}

TEST_CASE("christoffel_apply agrees with tensor assembly") {
  const MetricSpec m = MetricSpec::flrw(3, ScaleFactorKind::Polynomial, 0.4);
  const Vector p = vec3(0.8, 0.1, 0.7);
  const Vector v = vec3(1.0, 0.3, -0.5);
  const Vector w = vec3(0.2, -1.1, 0.6);
  const Vector fast = christoffel_apply(m, p, v, w);
  const Vector slow = christoffel_at(m, p).apply(v, w);
  CHECK((fast - slow).cwiseAbs().maxCoeff() <= 1e-14);

  SUBCASE("symmetric in its two arguments") {
    const Vector rev = christoffel_apply(m, p, w, v);
    CHECK((fast - rev).cwiseAbs().maxCoeff() <= 1e-14);
  }
}

TEST_CASE("finite-difference christoffel pipeline vs analytic flrw") {
  const double H = 0.1;
  const MetricSpec exact = MetricSpec::flrw(3, ScaleFactorKind::Exponential, H);
  const MetricSpec fd = MetricSpec::user(
      3,
      [exact](const Vector& at) {
        return metric_eval(exact, SpacetimePoint{at}).bottomRightCorner(2, 2);
      });
  REQUIRE(!fd.has_analytic_christoffel());

  double worst = 0.0;
  for (int k = 0; k < 100; ++k) {
    const double t = -1.0 + 0.02 * k;
    const Vector p = vec3(t, 0.1 * k, -0.05 * k);
    const ChristoffelTensor ga = christoffel_at(exact, p);
    const ChristoffelTensor gn = christoffel_at(fd, p);
    double scale = ga.max_abs();
    for (int a = 0; a < 3; ++a)
      worst = std::max(worst, (ga.comp[a] - gn.comp[a]).cwiseAbs().maxCoeff() /
                                  scale);
  }
  CHECK(worst <= 1e-6);
}

TEST_CASE("finite-difference christoffel vs independent dense reference") {
  const MetricSpec m = MetricSpec::flrw(3, ScaleFactorKind::Polynomial, 0.7);
  const Vector p = vec3(0.9, 0.3, 0.2);
  const ChristoffelTensor lib = christoffel_at(m, p);
  const ChristoffelTensor ref = oracles::fd_christoffel_reference(m, p);
  for (int a = 0; a < 3; ++a)
    CHECK((lib.comp[a] - ref.comp[a]).cwiseAbs().maxCoeff() <= 1e-7);
}

TEST_CASE("christoffel operator norm dominates random probes") {
  const MetricSpec m = MetricSpec::flrw(3, ScaleFactorKind::Exponential, 0.3);
  const Vector p = vec3(0.5, 0.0, 0.0);
  const double norm = christoffel_operator_norm(m, SpacetimePoint{p});
  const double brute = oracles::brute_force_gamma_norm(m, p, 20000);
  CHECK(norm >= brute * (1.0 - 1e-9));
  CHECK(norm <= brute * 1.25);  // brute probes come close in 3 dimensions
  CHECK(norm > 0.0);
}

TEST_CASE("christoffel_bound_over is monotone in the sample count") {
  const MetricSpec m = MetricSpec::flrw(3, ScaleFactorKind::Exponential, 0.2);
  ChartBox box{vec3(0.0, -1.0, -1.0), vec3(1.0, 1.0, 1.0)};
  const double g16 = christoffel_bound_over(m, box, 16);
  const double g64 = christoffel_bound_over(m, box, 64);
  const double g256 = christoffel_bound_over(m, box, 256);
  CHECK(g16 <= g64);
  CHECK(g64 <= g256);

  SUBCASE("safety factor scales the bound") {
    const double g1 = christoffel_bound_over(m, box, 64, 1.0);
    const double g2 = christoffel_bound_over(m, box, 64, 2.0);
    CHECK(g2 == doctest::Approx(2.0 * g1).epsilon(1e-15));
  }

  SUBCASE("bound dominates the norm at the box center") {
    const Vector c = vec3(0.5, 0.0, 0.0);
    CHECK(christoffel_bound_over(m, box, 16, 1.0) >=
          christoffel_operator_norm(m, SpacetimePoint{c}) * (1.0 - 1e-12));
  }
}

TEST_CASE("minkowski bound is exactly zero so 1/(11 G) is +infinity") {
  const MetricSpec m = MetricSpec::minkowski(3);
  ChartBox box{vec3(-1, -1, -1), vec3(1, 1, 1)};
  const double g = christoffel_bound_over(m, box, 32);
  CHECK(g == 0.0);
  CHECK(std::isinf(1.0 / (11.0 * g)));
}

TEST_CASE("degenerate spatial metric raises a geometry error") {
  const MetricSpec bad = MetricSpec::user(3, [](const Vector& at) {
    Matrix s = Matrix::Identity(2, 2);
    s(1, 1) = -1.0;  // not positive definite
    (void)at;
    return s;
  });
  CHECK_THROWS_AS(metric_eval(bad, SpacetimePoint{vec3(0, 0, 0)}),
                  GeometryError);
}

TEST_CASE("sample_bounds carries the injectivity radius and a live sampler") {
  const MetricSpec m = MetricSpec::flrw(3, ScaleFactorKind::Constant, 1.5);
  ChartBox box{vec3(-1, -1, -1), vec3(1, 1, 1)};
  const ChartBounds b = sample_bounds(m, box, 32);
  CHECK(std::isinf(b.injectivity_radius));
  REQUIRE(b.christoffel_bound_sampler);
  CHECK(b.christoffel_bound_sampler(box) == 0.0);  // constant a: flat
}
