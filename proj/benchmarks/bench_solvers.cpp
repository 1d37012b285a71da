#include <benchmark/benchmark.h>
#include <riwtl/rng.hpp>
#include <riwtl/solvers.hpp>

using namespace riwtl;

namespace {

WeightedProblem make_problem(Index n, Index p, double lambda) {
  rng::SplitMix64 gen(rng::stream_key(1, n, p));
  Matrix x(n, p);
  Vector beta = Vector::Zero(p);
  for (Index j = 0; j < std::min<Index>(p, 10); ++j) beta[j] = 1.0;
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < p; ++j) x(i, j) = gen.next_normal();
  Vector y = x * beta;
  for (Index i = 0; i < n; ++i) y[i] += gen.next_normal();
  return WeightedProblem{std::move(x), std::move(y), Vector::Ones(n),
                         static_cast<double>(n), lambda};
}

}  // namespace

static void BM_WeightedLasso(benchmark::State& state) {
  const auto prob = make_problem(state.range(0), state.range(1), 0.1);
  for (auto _ : state)
    benchmark::DoNotOptimize(fit_weighted_lasso(prob, SolverOptions{}));
}
BENCHMARK(BM_WeightedLasso)->Args({150, 100})->Args({450, 100})->Args({600, 200});

static void BM_LassoPathWarmStart(benchmark::State& state) {
  const auto prob = make_problem(state.range(0), state.range(1), 0.0);
  WeightedLassoSolver probe(prob.x, prob.y, prob.obs_weights, prob.denom, SolverOptions{});
  std::vector<double> grid(50);
  const double lmax = probe.lambda_max();
  for (int i = 0; i < 50; ++i) grid[i] = lmax * std::exp(std::log(0.001) * i / 49.0);
  for (auto _ : state)
    benchmark::DoNotOptimize(lasso_path(prob.x, prob.y, grid, SolverOptions{}));
}
BENCHMARK(BM_LassoPathWarmStart)->Args({150, 100})->Args({450, 100});

static void BM_Scad(benchmark::State& state) {
  const auto prob = make_problem(state.range(0), state.range(1), 0.0);
  for (auto _ : state)
    benchmark::DoNotOptimize(fit_scad(prob.x, prob.y, 0.1, 3.7, SolverOptions{}));
}
BENCHMARK(BM_Scad)->Args({100, 100})->Args({200, 100});
