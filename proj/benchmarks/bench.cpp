#include <benchmark/benchmark.h>

#include "minlor/diagnostics.hpp"
#include "minlor/initial_data.hpp"
#include "minlor/metric.hpp"
#include "minlor/solver.hpp"

namespace {

using namespace minlor;

void bm_metric_eval(benchmark::State& state) {
  const MetricSpec m =
      MetricSpec::flrw(3, ScaleFactorKind::Exponential, 0.1);
  Vector at(3);
  at << 0.3, 1.0, -0.5;
  const SpacetimePoint p{at};
  for (auto _ : state) {
    benchmark::DoNotOptimize(metric_eval(m, p));
  }
}
BENCHMARK(bm_metric_eval);

void bm_christoffel_analytic(benchmark::State& state) {
  const MetricSpec m =
      MetricSpec::flrw(3, ScaleFactorKind::Exponential, 0.1);
  Vector at(3), v(3), w(3);
  at << 0.3, 1.0, -0.5;
  v << 1.0, 0.2, 0.1;
  w << 0.5, -0.3, 0.4;
  for (auto _ : state) {
    benchmark::DoNotOptimize(christoffel_apply(m, at, v, w));
  }
}
BENCHMARK(bm_christoffel_analytic);

void bm_christoffel_fd(benchmark::State& state) {
  const MetricSpec flrw =
      MetricSpec::flrw(3, ScaleFactorKind::Exponential, 0.1);
  const MetricSpec m = MetricSpec::user(
      3,
      [flrw](const Vector& at) {
        return Matrix(
            metric_eval(flrw, SpacetimePoint{at}).bottomRightCorner(2, 2));
      });
  Vector at(3), v(3), w(3);
  at << 0.3, 1.0, -0.5;
  v << 1.0, 0.2, 0.1;
  w << 0.5, -0.3, 0.4;
  for (auto _ : state) {
    benchmark::DoNotOptimize(christoffel_apply(m, at, v, w));
  }
}
BENCHMARK(bm_christoffel_fd);

void bm_picard_strip(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const MetricSpec m =
      MetricSpec::flrw(3, ScaleFactorKind::Exponential, 0.1);
  InitialCurve c = circle_curve(3, n, 0.5, 1.0);
  const NullData nd = null_decompose(m, c);
  GridRow base;
  base.t = 0.0;
  base.y = Matrix::Zero(n, 3);
  for (int j = 0; j < n; ++j) base.y.row(j) = c.k0.row(j);
  base.u = nd.u;
  base.v = nd.v;
  base.valid.assign(n, 1);
  const double h = c.period / n;
  const SolutionSurface seed_probe;  // unused; bounds drawn fresh per strip
  (void)seed_probe;
  ChartBox box{Vector::Constant(3, -3.0), Vector::Constant(3, 3.0)};
  const ChartBounds bounds = sample_bounds(m, box, 64, 1.5);
  const StepEstimate est = strip_estimate(m, base, bounds, 0.1, h);
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        picard_strip_solve(m, base, est, c.period, 1e-10, 50));
  }
}
BENCHMARK(bm_picard_strip)->Arg(64)->Arg(256);

void bm_full_run(benchmark::State& state) {
  const MetricSpec m = MetricSpec::minkowski(3);
  const InitialCurve c = circle_curve(3, 128, 1.0, 1.0);
  SolverOptions opt;
  for (auto _ : state) {
    benchmark::DoNotOptimize(continue_to_time(m, c, 0.5, opt));
  }
}
BENCHMARK(bm_full_run);

}  // namespace

BENCHMARK_MAIN();
