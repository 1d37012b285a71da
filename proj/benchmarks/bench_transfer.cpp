#include <benchmark/benchmark.h>
#include <riwtl/simlab.hpp>

using namespace riwtl;

static void BM_RiwTlFit(benchmark::State& state) {
  SimConfig cfg;
  cfg.p = 50;
  cfg.n0 = 60;
  cfg.K = static_cast<int>(state.range(0));
  cfg.n_k_default = 150;
  cfg.s0 = 5;
  cfg.m_B = cfg.K;
  cfg.d = 4;
  cfg.seed = 3;
  const TransferProblem problem = gen_problem(cfg, 0);
  RiwConfig rc;
  rc.A = 1.5;
  rc.M = 3.0;
  rc.bandwidth = 0.2;
  rc.lambda = 0.1;
  rc.split_seed = 5;
  for (auto _ : state)
    benchmark::DoNotOptimize(fit_riw_tl(problem, rc, SolverOptions{}));
}
BENCHMARK(BM_RiwTlFit)->Arg(1)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond);

static void BM_OracleFit(benchmark::State& state) {
  SimConfig cfg;
  cfg.p = 100;
  cfg.n0 = 100;
  cfg.K = 1;
  cfg.n_k_default = static_cast<int>(state.range(0));
  cfg.s0 = 10;
  cfg.m_B = 1;
  cfg.d = 4;
  cfg.seed = 4;
  const TransferProblem problem = gen_problem(cfg, 0);
  for (auto _ : state)
    benchmark::DoNotOptimize(fit_oracle_riw_tl(problem, 1.5, 3.0, 0.1, SolverOptions{}));
}
BENCHMARK(BM_OracleFit)->Arg(300)->Arg(1200)->Unit(benchmark::kMillisecond);
