#include "gma/density.hpp"
#include "gma/gaussian.hpp"
#include "gma/identities.hpp"
#include "gma/transport.hpp"

#include <benchmark/benchmark.h>

using namespace gma;

namespace {

Density bimodal() { return make_mixture_1d({0.5, 0.5}, {-1.0, 1.0}, {1.0, 1.0}); }

void BM_HermiteRule(benchmark::State& st) {
  for (auto _ : st) benchmark::DoNotOptimize(hermite_rule(static_cast<int>(st.range(0))));
}
BENCHMARK(BM_HermiteRule)->Arg(64)->Arg(128)->Arg(512);

void BM_AdaptedRule2D(benchmark::State& st) {
  auto g = make_product({bimodal(), bimodal()});
  for (auto _ : st) benchmark::DoNotOptimize(adapted_rule(g));
}
BENCHMARK(BM_AdaptedRule2D);

void BM_Solve1D(benchmark::State& st) {
  auto g = bimodal();
  for (auto _ : st) benchmark::DoNotOptimize(solve_1d(g));
}
BENCHMARK(BM_Solve1D)->Unit(benchmark::kMillisecond);

void BM_Map1DGradient(benchmark::State& st) {
  auto t = solve_1d(bimodal());
  double x = -3.0;
  for (auto _ : st) {
    benchmark::DoNotOptimize(t.grad_phi(Vec::Constant(1, x)));
    x = x > 3.0 ? -3.0 : x + 0.01;
  }
}
BENCHMARK(BM_Map1DGradient);

void BM_SinkhornSmallGrid(benchmark::State& st) {
  Mat s(2, 2);
  s << 2.0, 0.5, 0.5, 1.0;
  auto g = make_gaussian_cov(SymMatrix(s));
  EntropicOptions opt;
  opt.eps = 0.05;
  opt.grid.points = static_cast<int>(st.range(0));
  for (auto _ : st) benchmark::DoNotOptimize(solve_entropic_2d(g, opt));
}
BENCHMARK(BM_SinkhornSmallGrid)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_Identity22Mixture(benchmark::State& st) {
  auto g = bimodal();
  auto t = solve_1d(g);
  auto rule = adapted_rule(g, 128);
  for (auto _ : st) benchmark::DoNotOptimize(check_identity_2_2(g, t, rule));
}
BENCHMARK(BM_Identity22Mixture)->Unit(benchmark::kMillisecond);

void BM_AllChecksScaling(benchmark::State& st) {
  auto g = make_scaling(Vec::Constant(1, 2.0));
  auto t = solve_auto(g);
  auto rule = adapted_rule(g);
  auto pts = grid_points(1);
  for (auto _ : st) {
    benchmark::DoNotOptimize(check_cov_formula(g, t, pts));
    benchmark::DoNotOptimize(check_talagrand(g, t, rule));
    benchmark::DoNotOptimize(check_second_deriv_bounds(g, t, rule));
    benchmark::DoNotOptimize(check_moment_bounds(g, t, 1.0, rule, pts));
    benchmark::DoNotOptimize(check_L_weighted_bound(g, t, rule));
  }
}
BENCHMARK(BM_AllChecksScaling)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
