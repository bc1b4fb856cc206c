#include <benchmark/benchmark.h>

#include "vdpnet/coarse_map.hpp"
#include "vdpnet/hermite_chaos.hpp"
#include "vdpnet/network.hpp"
#include "vdpnet/projective.hpp"

using namespace vdpnet;

namespace {

ModelParams network(int n) {
  ModelParams p;
  p.n_osc = n;
  p.beta = 0.5;
  return p;
}

ChaosCoeffs locked_guess(int q) {
  ChaosCoeffs z = ChaosCoeffs::zero(q);
  z.a[0] = -1.75;
  z.b[0] = -1.16;
  return z;
}

void BM_rhs(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const auto p = network(n);
  const auto het = Heterogeneity::gaussian(n, 1);
  const auto s = NetworkState::uniform(n, 1.0, 0.0);
  for (auto _ : state) benchmark::DoNotOptimize(rhs(s, p, het));
  state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(BM_rhs)->Arg(1)->Arg(100)->Arg(500);

void BM_rk4_period(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const auto p = network(n);
  const auto het = Heterogeneity::gaussian(n, 1);
  NetworkIntegrator integ(p, het);
  for (auto _ : state) {
    NetworkState s = NetworkState::uniform(n, 1.0, 0.0);
    integ.advance(s, p.forcing_period());
    benchmark::DoNotOptimize(s.x.data());
  }
}
BENCHMARK(BM_rk4_period)->Arg(1)->Arg(500)->Unit(benchmark::kMillisecond);

void BM_restrict(benchmark::State& state) {
  const int q = static_cast<int>(state.range(0));
  const ChaosBasis basis(Heterogeneity::gaussian(500, 1), q);
  const auto s = basis.lift(locked_guess(q));
  for (auto _ : state) benchmark::DoNotOptimize(basis.restrict_state(s));
}
BENCHMARK(BM_restrict)->Arg(1)->Arg(2)->Arg(4);

void BM_averaged_map(benchmark::State& state) {
  CoarseMapConfig c;
  c.r = static_cast<int>(state.range(0));
  const auto p = network(500);
  const AveragedMap map(p.n_osc, c);
  const auto z = locked_guess(1).stacked();
  for (auto _ : state) benchmark::DoNotOptimize(map(z, p));
}
BENCHMARK(BM_averaged_map)->Arg(1)->Arg(20)->Unit(benchmark::kMillisecond);

void BM_projective(benchmark::State& state) {
  const auto p = network(500);
  ProjectionSchedule s;
  s.n_project = static_cast<int>(state.range(0));
  for (auto _ : state) {
    auto src = RealizationSource::fresh(p.n_osc, 3);
    benchmark::DoNotOptimize(projective_integrate(locked_guess(2), p, s, src, 10.0));
  }
}
BENCHMARK(BM_projective)->Arg(1)->Arg(10)->Arg(50)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
