#include <benchmark/benchmark.h>
#include <riwtl/density.hpp>
#include <riwtl/rng.hpp>

using namespace riwtl;

static void BM_KdeEval(benchmark::State& state) {
  rng::SplitMix64 gen(7);
  Vector pts(state.range(0));
  for (Index i = 0; i < pts.size(); ++i) pts[i] = gen.next_normal();
  const DensityModel d = symmetrize(kde_fit(pts, 0.2));
  double t = -3.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(d.eval(t));
    t = (t > 3.0) ? -3.0 : t + 1e-3;
  }
}
BENCHMARK(BM_KdeEval)->Arg(100)->Arg(200)->Arg(400);

static void BM_TruncatedFirstMoment(benchmark::State& state) {
  rng::SplitMix64 gen(9);
  Vector pts(200);
  for (Index i = 0; i < 200; ++i) pts[i] = gen.next_normal();
  const DensityModel d = symmetrize(kde_fit(pts, 0.2));
  for (auto _ : state) benchmark::DoNotOptimize(truncated_first_moment(d, 2.0));
}
BENCHMARK(BM_TruncatedFirstMoment);
