#include <doctest.h>
#include <riwtl/rng.hpp>
#include <riwtl/simlab.hpp>
#include <riwtl/tuning.hpp>

using namespace riwtl;

namespace {

TransferProblem tiny_problem(std::uint64_t seed) {
  SimConfig cfg;
  cfg.p = 10;
  cfg.n0 = 40;
  cfg.K = 2;
  cfg.n_k_default = 45;
  cfg.s0 = 3;
  cfg.m_B = 2;
  cfg.d = 1;
  cfg.seed = seed;
  return gen_problem(cfg, 0);
}

}  // namespace

TEST_CASE("lambda_max formula and edge cases") {
  rng::SplitMix64 gen(3);
  Matrix x(30, 6);
  Vector y(30), w = Vector::Ones(30);
  for (Index i = 0; i < 30; ++i) {
    y[i] = gen.next_normal();
    for (Index j = 0; j < 6; ++j) x(i, j) = gen.next_normal();
  }

  double expect = 0.0;
  for (Index j = 0; j < 6; ++j)
    expect = std::max(expect, std::abs(x.col(j).dot(y)) / 30.0);
  const double lmax = lambda_max(x, y, w, 30.0);
  CHECK(lmax == doctest::Approx(expect).epsilon(1e-12));

  // fit at lambda >= lambda_max gives the zero vector
  WeightedProblem prob{x, y, w, 30.0, lmax};
  CHECK(fit_weighted_lasso(prob, SolverOptions{}).isZero(0));

  // scaling the response scales lambda_max
  CHECK(lambda_max(x, (3.0 * y).eval(), w, 30.0) == doctest::Approx(3.0 * lmax));

  CHECK_THROWS_AS(lambda_max(x, Vector::Zero(30), w, 30.0), DegenerateProblemError);
}

TEST_CASE("fold assignment depends only on seed, n0 and fold count") {
  const auto a = cv_fold_assignment(50, 5, 7);
  const auto b = cv_fold_assignment(50, 5, 7);
  CHECK(a == b);
  CHECK(a != cv_fold_assignment(50, 5, 8));
  CHECK(cv_fold_assignment(50, 4, 7).size() == 50);
  int counts[5] = {0, 0, 0, 0, 0};
  for (int f : a) counts[f]++;
  for (int f = 0; f < 5; ++f) CHECK(counts[f] == 10);
}

TEST_CASE("grid validation") {
  TuneGrid grid;
  grid.folds = 1;
  CHECK_THROWS_AS(grid.validate(40), ConfigError);
  grid.folds = 41;
  CHECK_THROWS_AS(grid.validate(40), ConfigError);
  grid.folds = 5;
  grid.M_grid.clear();
  CHECK_THROWS_AS(grid.validate(40), ConfigError);
}

TEST_CASE("single-point grid is returned as chosen") {
  const TransferProblem problem = tiny_problem(11);
  TuneGrid grid;
  grid.M_grid = {2.0};
  grid.b_grid = {0.2};
  grid.lambda_points = 1;
  grid.folds = 4;
  const TuneResult t = cv_tune(problem, "riw-tl", grid, 5, SolverOptions{});
  CHECK(t.chosen.M == 2.0);
  CHECK(t.chosen.A == 1.0);
  CHECK(t.chosen.bandwidth == 0.2);
  CHECK(t.table.size() == 1);
  CHECK(t.chosen.lambda == t.table[0].lambda);
}

TEST_CASE("failed grid points score infinity and lose") {
  const TransferProblem problem = tiny_problem(13);
  TuneGrid grid;
  grid.M_grid = {2.0};
  grid.b_grid = {-0.5, 0.2};  // negative bandwidth cannot be fit
  grid.lambda_points = 3;
  grid.folds = 4;
  const TuneResult t = cv_tune(problem, "riw-tl", grid, 5, SolverOptions{});
  CHECK(t.chosen.bandwidth == 0.2);
  int failed = 0;
  for (const auto& row : t.table)
    if (row.failed) {
      ++failed;
      CHECK(row.bandwidth == -0.5);
      CHECK(std::isinf(row.score));
    }
  CHECK(failed == 3);
}

TEST_CASE("chosen configuration reproduces bitwise under the same seed") {
  const TransferProblem problem = tiny_problem(17);
  TuneGrid grid;
  grid.M_grid = {1.0, 2.0};
  grid.b_grid = {0.2};
  grid.lambda_points = 5;
  grid.folds = 4;
  const TuneResult a = cv_tune(problem, "riw-tl-u", grid, 9, SolverOptions{});
  const TuneResult b = cv_tune(problem, "riw-tl-u", grid, 9, SolverOptions{});
  CHECK(a.chosen.M == b.chosen.M);
  CHECK(a.chosen.bandwidth == b.chosen.bandwidth);
  CHECK(a.chosen.lambda == b.chosen.lambda);
  CHECK(a.chosen_score == b.chosen_score);
  REQUIRE(a.table.size() == b.table.size());
  for (std::size_t i = 0; i < a.table.size(); ++i) CHECK(a.table[i].score == b.table[i].score);

  bool m_in = false;
  for (double m : grid.M_grid) m_in |= (a.chosen.M == m);
  CHECK(m_in);
  CHECK(a.chosen.T == doctest::Approx(1.5 * a.chosen.M));
}

TEST_CASE("lasso tuning score is recomputable through the public api") {
  const TransferProblem problem = tiny_problem(19);
  TuneGrid grid;
  grid.lambda_points = 8;
  grid.folds = 4;
  const std::uint64_t seed = 21;
  const TuneResult t = cv_tune(problem, "lasso", grid, seed, SolverOptions{});

  // recompute along the same warm-started lambda path the tuner walks
  std::vector<double> lambdas;
  for (const auto& row : t.table) lambdas.push_back(row.lambda);
  std::size_t chosen_idx = 0;
  for (std::size_t i = 0; i < t.table.size(); ++i)
    if (t.table[i].lambda == t.chosen.lambda) chosen_idx = i;

  const auto fold_of = cv_fold_assignment(problem.target.n(), grid.folds, seed);
  double score = 0.0;
  for (int f = 0; f < grid.folds; ++f) {
    std::vector<Index> train, test;
    for (Index i = 0; i < problem.target.n(); ++i)
      ((fold_of[i] == f) ? test : train).push_back(i);
    Matrix xt(static_cast<Index>(train.size()), problem.p());
    Vector yt(static_cast<Index>(train.size()));
    for (std::size_t i = 0; i < train.size(); ++i) {
      xt.row(static_cast<Index>(i)) = problem.target.x.row(train[i]);
      yt[static_cast<Index>(i)] = problem.target.y[train[i]];
    }
    WeightedLassoSolver solver(xt, yt, Vector::Ones(xt.rows()),
                               static_cast<double>(xt.rows()), SolverOptions{});
    Vector beta;
    for (std::size_t i = 0; i <= chosen_idx; ++i) beta = solver.solve(lambdas[i]);
    double err = 0.0;
    for (Index i : test) {
      const double r = problem.target.y[i] - problem.target.x.row(i).dot(beta);
      err += r * r;
    }
    score += err / static_cast<double>(test.size());
  }
  score /= grid.folds;
  CHECK(score == doctest::Approx(t.chosen_score).epsilon(1e-10));
}

TEST_CASE("trans-lasso tuning produces a pooled-stage lambda") {
  const TransferProblem problem = tiny_problem(23);
  TuneGrid grid;
  grid.lambda_points = 5;
  grid.folds = 4;
  const TuneResult t = cv_tune(problem, "trans-lasso", grid, 3, SolverOptions{}, {1, 2});
  CHECK(t.lambda_w > 0.0);
  CHECK(t.chosen.lambda > 0.0);
  CHECK(t.table.size() == 5);

  // an empty informative set still tunes the correction stage
  const TuneResult empty = cv_tune(problem, "trans-lasso", grid, 3, SolverOptions{}, {});
  CHECK(empty.lambda_w == 0.0);
  CHECK(empty.chosen.lambda > 0.0);
}

TEST_CASE("unknown method tag is rejected") {
  const TransferProblem problem = tiny_problem(29);
  CHECK_THROWS_AS(cv_tune(problem, "ridge", TuneGrid{}, 1, SolverOptions{}), ConfigError);
}
