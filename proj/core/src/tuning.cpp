#include "riwtl/tuning.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numeric>

#include "riwtl/rng.hpp"

namespace riwtl {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Matrix gather_rows(const Matrix& x, const std::vector<Index>& rows) {
  Matrix out(static_cast<Index>(rows.size()), x.cols());
  for (std::size_t t = 0; t < rows.size(); ++t) out.row(static_cast<Index>(t)) = x.row(rows[t]);
  return out;
}

Vector gather(const Vector& v, const std::vector<Index>& rows) {
  Vector out(static_cast<Index>(rows.size()));
  for (std::size_t t = 0; t < rows.size(); ++t) out[static_cast<Index>(t)] = v[rows[t]];
  return out;
}

std::vector<double> log_lambda_grid(double anchor, const TuneGrid& grid) {
  if (grid.lambda_points == 1) return {anchor};
  std::vector<double> lam(grid.lambda_points);
  const double step = std::log(grid.lambda_min_ratio) / (grid.lambda_points - 1);
  for (int i = 0; i < grid.lambda_points; ++i) lam[i] = anchor * std::exp(step * i);
  return lam;
}

struct FoldData {
  Dataset train;
  Matrix x_test;
  Vector y_test;
};

std::vector<FoldData> make_folds(const TransferProblem& problem, int folds,
                                 std::uint64_t seed) {
  const auto fold_of = cv_fold_assignment(problem.target.n(), folds, seed);
  std::vector<FoldData> out;
  out.reserve(folds);
  for (int f = 0; f < folds; ++f) {
    std::vector<Index> train_rows, test_rows;
    for (Index i = 0; i < problem.target.n(); ++i)
      ((fold_of[i] == f) ? test_rows : train_rows).push_back(i);
    out.push_back(FoldData{
        Dataset(gather_rows(problem.target.x, train_rows), gather(problem.target.y, train_rows)),
        gather_rows(problem.target.x, test_rows), gather(problem.target.y, test_rows)});
  }
  return out;
}

double heldout_error(const Matrix& x_test, const Vector& y_test, const Vector& beta) {
  return (y_test - x_test * beta).squaredNorm() / static_cast<double>(y_test.size());
}

WeightVariant variant_of(const std::string& method) {
  if (method == "riw-tl") return WeightVariant::kde;
  if (method == "riw-tl-p") return WeightVariant::parametric_gaussian;
  if (method == "riw-tl-u") return WeightVariant::uniform;
  throw ConfigError("cv_tune: unknown method tag '" + method + "'");
}

RiwConfig config_for(const std::string& method, double M, double b, double lambda,
                     std::uint64_t seed) {
  RiwConfig cfg;
  cfg.M = M;
  cfg.A = M / 2.0;
  cfg.bandwidth = (b == 0.0) ? 0.2 : b;  // 0 marks the parametric variant
  cfg.lambda = lambda;
  cfg.variant = variant_of(method);
  if (cfg.variant == WeightVariant::uniform) {
    cfg.T = 1.5 * M;  // M = 2A = 2T/3
    cfg.theta0 = 0.0;
  }
  cfg.split_seed = seed;
  return cfg;
}

// Score one lambda-grid column for a plain LASSO on (x, y); adds the fold's
// held-out error into acc. A stalled solve marks that lambda +inf.
void score_lasso_fold(const Dataset& train, const Matrix& x_test, const Vector& y_test,
                      const std::vector<double>& lambdas, const SolverOptions& opts,
                      std::vector<double>& acc) {
  WeightedLassoSolver solver(train.x, train.y, Vector::Ones(train.n()),
                             static_cast<double>(train.n()), opts);
  for (std::size_t i = 0; i < lambdas.size(); ++i) {
    try {
      acc[i] += heldout_error(x_test, y_test, solver.solve(lambdas[i]));
    } catch (const ConvergenceError&) {
      acc[i] = kInf;
    }
  }
}

}  // namespace

void TuneGrid::validate(Index n0) const {
  if (M_grid.empty() || b_grid.empty()) throw ConfigError("TuneGrid: empty grid");
  if (lambda_points < 1) throw ConfigError("TuneGrid: lambda_points must be >= 1");
  if (!(lambda_min_ratio > 0.0) || lambda_min_ratio > 1.0)
    throw ConfigError("TuneGrid: lambda_min_ratio must lie in (0, 1]");
  if (folds < 2) throw ConfigError("TuneGrid: folds must be >= 2");
  if (folds > n0) throw ConfigError("TuneGrid: folds exceed target sample size");
}

std::vector<int> cv_fold_assignment(Index n0, int folds, std::uint64_t seed) {
  std::vector<Index> order(n0);
  std::iota(order.begin(), order.end(), Index{0});
  rng::SplitMix64 gen(rng::stream_key(seed, rng::stream::cv_folds,
                                      static_cast<std::uint64_t>(n0),
                                      static_cast<std::uint64_t>(folds)));
  for (Index i = n0 - 1; i > 0; --i)
    std::swap(order[i], order[gen.next_below(static_cast<std::uint64_t>(i) + 1)]);
  std::vector<int> fold_of(n0);
  for (Index i = 0; i < n0; ++i) fold_of[order[i]] = static_cast<int>(i % folds);
  return fold_of;
}

double lambda_max(const Matrix& x, const Vector& y, const Vector& weights, double denom) {
  if (x.rows() != y.size() || weights.size() != y.size())
    throw DimensionError("lambda_max: dimension mismatch");
  if (denom <= 0.0) throw ConfigError("lambda_max: denom must be positive");
  if ((y.array() == 0.0).all())
    throw DegenerateProblemError("lambda_max: response is identically zero");
  double m = 0.0;
  for (Index j = 0; j < x.cols(); ++j) {
    double g = 0.0;
    for (Index i = 0; i < x.rows(); ++i) g += weights[i] * x(i, j) * y[i];
    m = std::max(m, std::abs(g) / denom);
  }
  return m;
}

TuneResult cv_tune(const TransferProblem& problem, const std::string& method,
                   const TuneGrid& grid, std::uint64_t seed, const SolverOptions& opts,
                   const std::vector<int>& informative) {
  grid.validate(problem.target.n());
  TuneResult result;
  result.method = method;

  const std::vector<double> lambdas =
      log_lambda_grid(lambda_max(problem.target.x, problem.target.y,
                                 Vector::Ones(problem.target.n()),
                                 static_cast<double>(problem.target.n())),
                      grid);
  const auto folds = make_folds(problem, grid.folds, seed);

  auto pick = [&](const std::vector<TuneScoreRow>& table) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < table.size(); ++i)
      if (table[i].score < table[best].score) best = i;
    return best;
  };

  if (method == "lasso") {
    std::vector<double> acc(lambdas.size(), 0.0);
    for (const auto& f : folds)
      score_lasso_fold(f.train, f.x_test, f.y_test, lambdas, opts, acc);
    for (std::size_t i = 0; i < lambdas.size(); ++i)
      result.table.push_back({0.0, 0.0, lambdas[i], acc[i] / grid.folds, false});
    const std::size_t best = pick(result.table);
    result.chosen = config_for("riw-tl", grid.M_grid.front(), grid.b_grid.front(),
                               result.table[best].lambda, seed);
    result.chosen.variant = WeightVariant::kde;  // unused by the LASSO fit itself
    result.chosen_score = result.table[best].score;
    return result;
  }

  if (method == "trans-lasso") {
    // Pooled-stage lambda by CV on the pooled informative sources; the pooled
    // fit does not involve the target, so it is fold-independent. An empty
    // set degenerates to tuning the target LASSO penalty.
    const std::vector<int>& J = informative;
    Index n_rows = 0;
    for (int k : J) n_rows += problem.sources[k - 1].n();

    if (n_rows > 0) {
      Matrix xj(n_rows, problem.p());
      Vector yj(n_rows);
      Index at = 0;
      for (int k : J) {
        const Dataset& s = problem.sources[k - 1];
        xj.middleRows(at, s.n()) = s.x;
        yj.segment(at, s.n()) = s.y;
        at += s.n();
      }
      const auto pooled_lambdas =
          log_lambda_grid(lambda_max(xj, yj, Vector::Ones(n_rows),
                                     static_cast<double>(n_rows)),
                          grid);
      const auto pool_fold_of = cv_fold_assignment(
          n_rows, grid.folds, rng::stream_key(seed, rng::stream::cv_folds, 0x706F6F6Cull));
      std::vector<double> acc(pooled_lambdas.size(), 0.0);
      for (int f = 0; f < grid.folds; ++f) {
        std::vector<Index> train_rows, test_rows;
        for (Index i = 0; i < n_rows; ++i)
          ((pool_fold_of[i] == f) ? test_rows : train_rows).push_back(i);
        const Dataset train(gather_rows(xj, train_rows), gather(yj, train_rows));
        score_lasso_fold(train, gather_rows(xj, test_rows), gather(yj, test_rows),
                         pooled_lambdas, opts, acc);
      }
      std::size_t best_w = 0;
      for (std::size_t i = 1; i < acc.size(); ++i)
        if (acc[i] < acc[best_w]) best_w = i;
      result.lambda_w = pooled_lambdas[best_w];
    }

    // Correction-stage lambda by target-fold CV with the pooled fit fixed.
    std::vector<double> acc(lambdas.size(), 0.0);
    std::vector<bool> fail(lambdas.size(), false);
    for (const auto& f : folds) {
      TransferProblem sub(f.train, problem.sources);
      for (std::size_t i = 0; i < lambdas.size(); ++i) {
        if (fail[i]) continue;
        try {
          const FitResult fit =
              fit_trans_lasso_oracle(sub, J, result.lambda_w, lambdas[i], opts);
          acc[i] += heldout_error(f.x_test, f.y_test, fit.beta_hat);
        } catch (const Error&) {
          fail[i] = true;
        }
      }
    }
    for (std::size_t i = 0; i < lambdas.size(); ++i)
      result.table.push_back(
          {0.0, 0.0, lambdas[i], fail[i] ? kInf : acc[i] / grid.folds, fail[i]});
    const std::size_t best = pick(result.table);
    result.chosen = config_for("riw-tl", grid.M_grid.front(), grid.b_grid.front(),
                               result.table[best].lambda, seed);
    result.chosen_score = result.table[best].score;
    return result;
  }

  // RIW variants: reuse split plans and rotation contexts across the whole
  // (M, b, lambda) grid; only densities, selection and the final solve move.
  const WeightVariant variant = variant_of(method);
  const std::vector<double> b_grid =
      (variant == WeightVariant::parametric_gaussian) ? std::vector<double>{0.0} : grid.b_grid;

  struct FoldPipeline {
    TransferProblem sub;
    SplitPlan plan;
    std::vector<RotationContext> contexts;
  };
  std::vector<FoldPipeline> pipelines;
  pipelines.reserve(folds.size());
  for (std::size_t f = 0; f < folds.size(); ++f) {
    const std::uint64_t split_seed = rng::stream_key(seed, rng::stream::split, f + 1);
    FoldPipeline pl{TransferProblem(folds[f].train, problem.sources), SplitPlan{}, {}};
    pl.plan = SplitPlan::make(pl.sub, split_seed);
    for (int r = 0; r < 3; ++r)
      pl.contexts.push_back(make_rotation_context(pl.sub, pl.plan, r, opts, split_seed));
    pipelines.push_back(std::move(pl));
  }

  for (double b : b_grid) {
    for (double M : grid.M_grid) {
      std::vector<double> acc(lambdas.size(), 0.0);
      std::vector<bool> fail(lambdas.size(), false);
      bool stage_failed = false;
      for (std::size_t f = 0; f < folds.size() && !stage_failed; ++f) {
        const RiwConfig cfg = config_for(method, M, b, 0.0, 0);
        std::array<std::unique_ptr<WeightedLassoSolver>, 3> solvers;
        try {
          for (int r = 0; r < 3; ++r) {
            AssembledPass pass =
                assemble_pass(pipelines[f].sub, pipelines[f].plan, pipelines[f].contexts[r], cfg);
            solvers[r] = std::make_unique<WeightedLassoSolver>(
                pass.prob.x, pass.prob.y, pass.prob.obs_weights, pass.prob.denom, opts);
          }
        } catch (const Error&) {
          stage_failed = true;
          break;
        }
        for (std::size_t i = 0; i < lambdas.size(); ++i) {
          if (fail[i]) continue;
          try {
            Vector beta = Vector::Zero(problem.p());
            for (int r = 0; r < 3; ++r) beta += solvers[r]->solve(lambdas[i]);
            beta /= 3.0;
            acc[i] += heldout_error(folds[f].x_test, folds[f].y_test, beta);
          } catch (const Error&) {
            fail[i] = true;
          }
        }
      }
      for (std::size_t i = 0; i < lambdas.size(); ++i) {
        const bool bad = stage_failed || fail[i];
        result.table.push_back(
            {M, b, lambdas[i], bad ? kInf : acc[i] / grid.folds, bad});
      }
    }
  }

  // Table rows are ordered (b outer, M middle, lambda descending); rescan in
  // tie-break order: smaller M first, then smaller b, then larger lambda.
  std::size_t best = 0;
  bool have = false;
  for (double M : grid.M_grid)
    for (double b : b_grid)
      for (std::size_t i = 0; i < result.table.size(); ++i) {
        const auto& row = result.table[i];
        if (row.M != M || row.bandwidth != b) continue;
        if (!have || row.score < result.table[best].score) {
          best = i;
          have = true;
        }
      }
  result.chosen = config_for(method, result.table[best].M, result.table[best].bandwidth,
                             result.table[best].lambda, seed);
  result.chosen_score = result.table[best].score;
  return result;
}

}  // namespace riwtl
