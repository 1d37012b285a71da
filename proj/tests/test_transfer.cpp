#include <doctest.h>
#include <riwtl/rng.hpp>
#include <riwtl/simlab.hpp>
#include <riwtl/transfer.hpp>

#include <cmath>
#include <limits>

using namespace riwtl;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

TransferProblem small_problem(std::uint64_t seed, int K = 2, int n0 = 45, int nk = 60,
                              int p = 12, int s0 = 3, int m_B = 2, int d = 2) {
  SimConfig cfg;
  cfg.p = p;
  cfg.n0 = n0;
  cfg.K = K;
  cfg.n_k_default = nk;
  cfg.s0 = s0;
  cfg.m_B = m_B;
  cfg.d = d;
  cfg.seed = seed;
  return gen_problem(cfg, 0);
}

void check_record_consistency(const SelectionRecord& rec) {
  for (const auto& [i, w] : rec.weights) {
    CHECK(std::isfinite(w));
    CHECK(w > 0.0);
    CHECK(std::find(rec.selected.begin(), rec.selected.end(), i) != rec.selected.end());
  }
  for (Index i : rec.selected) {
    const double rt = rec.residuals_target_scale.at(i);
    const double eta = rec.etas.at(i);
    if (rec.source_scale_selection)
      CHECK(std::abs(rt - eta) <= rec.A);
    else
      CHECK(std::abs(rt) <= rec.A);
    CHECK(std::abs(eta) <= rec.M);
  }
}

}  // namespace

TEST_CASE("true_weight basics") {
  const DensityModel g = DensityModel::gaussian(1.0);
  const DensityModel gs = symmetrize(g);
  CHECK(true_weight(gs, g, 0.7, 0.7) == doctest::Approx(1.0));
  CHECK(true_weight(gs, g, 1.0, 0.0) == doctest::Approx(std::exp(-0.5)).epsilon(1e-9));

  const DensityModel u = DensityModel::uniform(2.0);
  CHECK(true_weight(u, g, 3.0, 0.0) == 0.0);
  CHECK_THROWS_AS(true_weight(gs, u, 0.0, 5.0), WeightUndefinedError);
}

TEST_CASE("select_samples with infinite thresholds keeps everything") {
  const TransferProblem problem = small_problem(1);
  const Dataset& src = problem.sources[0];
  std::vector<Index> subset;
  for (Index i = 0; i < src.n(); ++i) subset.push_back(i);
  const Vector b0 = Vector::Zero(problem.p());
  const Vector bk = Vector::Ones(problem.p());
  const auto rec = select_samples(src, b0, bk, kInf, kInf, subset, 1);
  CHECK(rec.selected.size() == subset.size());
  const auto rec_u = select_samples_u(src, b0, bk, kInf, kInf, subset, 1);
  CHECK(rec_u.selected.size() == subset.size());
}

TEST_CASE("equal initial estimates reduce selection to the residual bound") {
  const TransferProblem problem = small_problem(2);
  const Dataset& src = problem.sources[0];
  std::vector<Index> subset;
  for (Index i = 0; i < src.n(); ++i) subset.push_back(i);
  const Vector b = Vector::Constant(problem.p(), 0.2);
  const double A = 1.0, M = 0.5;
  const auto rec = select_samples(src, b, b, A, M, subset, 1);
  const auto rec_u = select_samples_u(src, b, b, A, M, subset, 1);
  CHECK(rec.selected == rec_u.selected);
  for (Index i : subset) {
    CHECK(rec.etas.at(i) == 0.0);
    const bool in = std::abs(src.y[i] - src.x.row(i).dot(b)) <= A;
    const bool got = std::find(rec.selected.begin(), rec.selected.end(), i) != rec.selected.end();
    CHECK(in == got);
  }
}

TEST_CASE("hand-built rows against A = 1.5, M = 3") {
  // p = 2; beta0 = (0,0), betak = (1,0): eta_i = x_i1, target residual = y_i.
  Matrix x(5, 2);
  Vector y(5);
  //        eta   resid
  x << 0.5, 0.0,   // in: |0.5|<=3, |y|<=1.5
      2.9, 0.0,    // in
      3.2, 0.0,    // out: eta too big
      0.5, 0.0,    // out: residual too big
      -2.0, 0.0;   // in
  y << 1.0, -1.4, 0.0, 1.6, 1.5;
  Dataset src(x, y);
  Vector b0 = Vector::Zero(2), bk(2);
  bk << 1.0, 0.0;
  const auto rec = select_samples(src, b0, bk, 1.5, 3.0, {0, 1, 2, 3, 4}, 1);
  CHECK(rec.selected == std::vector<Index>{0, 1, 4});
  for (Index i = 0; i < 5; ++i) {
    CHECK(rec.etas.at(i) == doctest::Approx(x(i, 0)));
    CHECK(rec.residuals_target_scale.at(i) == doctest::Approx(y[i]));
  }

  // source-scale form: first constraint is |y - eta| <= A
  const auto rec_u = select_samples_u(src, b0, bk, 1.5, 3.0, {0, 1, 2, 3, 4}, 1);
  for (Index i = 0; i < 5; ++i) {
    const bool in = std::abs(y[i] - x(i, 0)) <= 1.5 && std::abs(x(i, 0)) <= 3.0;
    const bool got =
        std::find(rec_u.selected.begin(), rec_u.selected.end(), i) != rec_u.selected.end();
    CHECK(in == got);
  }
}

TEST_CASE("selection nesting under threshold growth") {
  const TransferProblem problem = small_problem(3);
  const Dataset& src = problem.sources[1];
  std::vector<Index> subset;
  for (Index i = 0; i < src.n(); ++i) subset.push_back(i);
  const Vector b0 = Vector::Zero(problem.p());
  Vector bk = Vector::Zero(problem.p());
  bk.head(3).setConstant(0.7);
  const auto small = select_samples(src, b0, bk, 0.8, 1.0, subset, 2);
  const auto big = select_samples(src, b0, bk, 1.6, 2.5, subset, 2);
  for (Index i : small.selected)
    CHECK(std::find(big.selected.begin(), big.selected.end(), i) != big.selected.end());
}

TEST_CASE("riw-tl with no sources equals a cross-fit average of target lasso fits") {
  SimConfig sim;
  sim.p = 10;
  sim.n0 = 36;
  sim.K = 0;
  sim.s0 = 3;
  sim.seed = 4;
  const TransferProblem problem = gen_problem(sim, 0);

  RiwConfig cfg;
  cfg.A = 1.0;
  cfg.M = 2.0;
  cfg.bandwidth = 0.2;
  cfg.lambda = 0.05;
  cfg.split_seed = 99;
  const SolverOptions opts;
  const FitResult fit = fit_riw_tl(problem, cfg, opts);

  // every pass carries the whole target at weight one, so with no sources the
  // three rotation estimates coincide with one target-only fit
  WeightedProblem prob{problem.target.x, problem.target.y, Vector::Ones(problem.target.n()),
                       static_cast<double>(problem.target.n()), cfg.lambda};
  const Vector single = fit_weighted_lasso(prob, opts);
  Vector mean = Vector::Zero(problem.p());
  for (int r = 0; r < 3; ++r) mean += single;
  mean /= 3.0;
  CHECK((fit.beta_hat - mean).lpNorm<Eigen::Infinity>() < 1e-12);
  for (int r = 0; r < 3; ++r)
    CHECK(((*fit.rotation_betas)[r].array() == single.array()).all());
  CHECK(fit.sur == doctest::Approx(1.0));
}

TEST_CASE("cross-fit mean identity and determinism") {
  const TransferProblem problem = small_problem(5);
  RiwConfig cfg;
  cfg.A = 1.5;
  cfg.M = 3.0;
  cfg.bandwidth = 0.2;
  cfg.lambda = 0.08;
  cfg.split_seed = 7;
  const SolverOptions opts;

  const FitResult fit = fit_riw_tl(problem, cfg, opts);
  REQUIRE(fit.rotation_betas.has_value());
  const auto& rb = *fit.rotation_betas;
  const Vector mean = (rb[0] + rb[1] + rb[2]) / 3.0;
  CHECK((fit.beta_hat.array() == mean.array()).all());

  const FitResult again = fit_riw_tl(problem, cfg, opts);
  CHECK((fit.beta_hat.array() == again.beta_hat.array()).all());
  REQUIRE(fit.selections.size() == again.selections.size());
  for (std::size_t i = 0; i < fit.selections.size(); ++i)
    CHECK(fit.selections[i].selected == again.selections[i].selected);

  for (const auto& rec : fit.selections) check_record_consistency(rec);
  CHECK(fit.sur >= 0.0);
  CHECK(fit.sur <= 1.0);
  CHECK(fit.method == "riw-tl");
}

TEST_CASE("parametric variant runs and records its trace") {
  const TransferProblem problem = small_problem(6);
  RiwConfig cfg;
  cfg.A = 1.5;
  cfg.M = 3.0;
  cfg.lambda = 0.08;
  cfg.variant = WeightVariant::parametric_gaussian;
  cfg.split_seed = 11;
  const FitResult fit = fit_riw_tl(problem, cfg, SolverOptions{});
  CHECK(fit.method == "riw-tl-p");
  REQUIRE(fit.tuning_trace.has_value());
  CHECK(fit.tuning_trace->M == 3.0);
  for (const auto& rec : fit.selections) check_record_consistency(rec);
}

TEST_CASE("uniform variant: selection scale, weights and exclusion rule") {
  const TransferProblem problem = small_problem(8);
  RiwConfig cfg;
  cfg.A = 1.0;
  cfg.M = 2.0;
  cfg.T = 3.0;  // A + M <= T
  cfg.bandwidth = 0.2;
  cfg.lambda = 0.08;
  cfg.variant = WeightVariant::uniform;
  cfg.split_seed = 13;
  const FitResult fit = fit_riw_tl_u(problem, cfg, SolverOptions{});
  CHECK(fit.method == "riw-tl-u");

  for (const auto& rec : fit.selections) {
    check_record_consistency(rec);
    CHECK(rec.source_scale_selection);
    for (Index i : rec.selected) {
      const double rt = rec.residuals_target_scale.at(i);
      // weight present exactly when |eps_hat + eta_hat| = |rt| <= T
      const bool has_weight = rec.weights.count(i) > 0;
      CHECK(has_weight == (std::abs(rt) <= cfg.T));
    }
  }

  RiwConfig bad = cfg;
  bad.T = 2.0;  // A + M - 2 theta0 > T
  CHECK_THROWS_AS(fit_riw_tl_u(problem, bad, SolverOptions{}), ConfigError);
  CHECK_THROWS_AS(fit_riw_tl(problem, cfg, SolverOptions{}), ConfigError);
}

TEST_CASE("oracle with zero contrast gives unit weights and matches indicator lasso") {
  SimConfig sim;
  sim.p = 15;
  sim.n0 = 40;
  sim.K = 2;
  sim.n_k_default = 50;
  sim.s0 = 4;
  sim.m_B = 2;
  sim.d = 0;  // delta = 0
  sim.seed = 21;
  const TransferProblem problem = gen_problem(sim, 0);

  const double A = 1.5, M = 3.0, lambda = 0.06;
  const FitResult fit = fit_oracle_riw_tl(problem, A, M, lambda, SolverOptions{});
  for (const auto& rec : fit.selections) {
    for (const auto& [i, w] : rec.weights) CHECK(w == doctest::Approx(1.0).epsilon(1e-12));
    check_record_consistency(rec);
  }

  // indicator-weight reconstruction
  Index total_rows = problem.target.n();
  for (const auto& rec : fit.selections) total_rows += static_cast<Index>(rec.selected.size());
  Matrix x(total_rows, problem.p());
  Vector y(total_rows), w(total_rows);
  Index at = 0;
  for (Index i = 0; i < problem.target.n(); ++i, ++at) {
    x.row(at) = problem.target.x.row(i);
    y[at] = problem.target.y[i];
    w[at] = 1.0;
  }
  for (const auto& rec : fit.selections) {
    const Dataset& src = problem.sources[rec.source_index - 1];
    for (Index i : rec.selected) {
      x.row(at) = src.x.row(i);
      y[at] = src.y[i];
      w[at] = rec.weights.at(i);
      ++at;
    }
  }
  WeightedProblem prob{x, y, w, static_cast<double>(problem.target.n() + problem.total_source_rows()),
                       lambda};
  const Vector direct = fit_weighted_lasso(prob, SolverOptions{});
  CHECK((fit.beta_hat - direct).lpNorm<Eigen::Infinity>() < 1e-12);

  TransferProblem no_truth(problem.target, problem.sources);
  CHECK_THROWS_AS(fit_oracle_riw_tl(no_truth, A, M, lambda, SolverOptions{}), ConfigError);
}

TEST_CASE("selected true-weight products have mean zero") {
  // xi = (eps + eta) * w * I(i in I_k) with symmetric numerator; 1e5 draws.
  rng::SplitMix64 gen(31);
  const double A = 1.5, M = 3.0, d = 1.0;
  const DensityModel f = DensityModel::gaussian(1.0);
  const DensityModel f_sym = symmetrize(f);
  const int n = 100000;
  double sum = 0.0, sumsq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double eps = gen.next_normal();
    const double eta = d * gen.next_normal();
    double xi = 0.0;
    if (std::abs(eps + eta) <= A && std::abs(eta) <= M)
      xi = (eps + eta) * true_weight(f_sym, f, eps + eta, eps);
    sum += xi;
    sumsq += xi * xi;
  }
  const double mean = sum / n;
  const double se = std::sqrt((sumsq / n - mean * mean) / n);
  CHECK(std::abs(mean) <= 3.0 * se);
}

TEST_CASE("population gradient with true weights is small") {
  // p = 5, n = 1e5: || (1/n) sum_{I_k} w_i (eps_i + eta_i) x_i ||_inf <= 0.05
  rng::SplitMix64 gen(33);
  const Index p = 5, n = 100000;
  Vector delta(p);
  delta << 0.5, -0.3, 0.2, 0.0, 0.1;
  const DensityModel f = DensityModel::gaussian(1.0);
  const DensityModel f_sym = symmetrize(f);
  Vector grad = Vector::Zero(p);
  for (Index i = 0; i < n; ++i) {
    Vector x(p);
    for (Index j = 0; j < p; ++j) x[j] = gen.next_normal();
    const double eps = gen.next_normal();
    const double eta = x.dot(delta);
    if (std::abs(eps + eta) <= 1.5 && std::abs(eta) <= 3.0)
      grad += true_weight(f_sym, f, eps + eta, eps) * (eps + eta) * x;
  }
  grad /= static_cast<double>(n);
  CHECK(grad.lpNorm<Eigen::Infinity>() <= 0.05);
}

TEST_CASE("trans-lasso with an empty informative set equals the target lasso") {
  const TransferProblem problem = small_problem(41);
  const double lambda_delta = 0.07;
  const FitResult tl = fit_trans_lasso_oracle(problem, {}, 0.05, lambda_delta, SolverOptions{});
  const FitResult lasso = fit_lasso_target(problem, lambda_delta, SolverOptions{});
  CHECK((tl.beta_hat - lasso.beta_hat).lpNorm<Eigen::Infinity>() < 1e-12);
  CHECK(!tl.diagnostics.empty());

  CHECK_THROWS_AS(fit_trans_lasso_oracle(problem, {5}, 0.05, 0.07, SolverOptions{}),
                  ConfigError);
}

TEST_CASE("trans-lasso correction stage satisfies its KKT conditions") {
  const TransferProblem problem = small_problem(43);
  const double lambda_w = 0.05, lambda_delta = 0.07;
  const FitResult tl =
      fit_trans_lasso_oracle(problem, {1, 2}, lambda_w, lambda_delta, SolverOptions{});

  // Reconstruct w_hat = beta_hat + delta_hat through the pooled fit.
  Index n_rows = problem.sources[0].n() + problem.sources[1].n();
  Matrix xj(n_rows, problem.p());
  Vector yj(n_rows);
  xj.topRows(problem.sources[0].n()) = problem.sources[0].x;
  xj.bottomRows(problem.sources[1].n()) = problem.sources[1].x;
  yj.head(problem.sources[0].n()) = problem.sources[0].y;
  yj.tail(problem.sources[1].n()) = problem.sources[1].y;
  WeightedProblem pooled{xj, yj, Vector::Ones(n_rows), static_cast<double>(n_rows), lambda_w};
  const Vector w_hat = fit_weighted_lasso(pooled, SolverOptions{});
  CHECK(kkt_violation(pooled, w_hat) <= 1e-6);

  const Vector delta_hat = w_hat - tl.beta_hat;
  const Vector r = problem.target.y - problem.target.x * w_hat;
  WeightedProblem corr{problem.target.x, -r, Vector::Ones(problem.target.n()),
                       static_cast<double>(problem.target.n()), lambda_delta};
  CHECK(kkt_violation(corr, delta_hat) <= 1e-6);

  const double expected_sur =
      static_cast<double>(problem.target.n() + n_rows) /
      static_cast<double>(problem.target.n() + problem.total_source_rows());
  CHECK(tl.sur == doctest::Approx(expected_sur));
}

TEST_CASE("target lasso baseline") {
  const TransferProblem problem = small_problem(47);
  const Vector ones = Vector::Ones(problem.target.n());
  double lmax = 0.0;
  for (Index j = 0; j < problem.p(); ++j) {
    double g = 0.0;
    for (Index i = 0; i < problem.target.n(); ++i)
      g += problem.target.x(i, j) * problem.target.y[i];
    lmax = std::max(lmax, std::abs(g) / problem.target.n());
  }
  const FitResult at_max = fit_lasso_target(problem, lmax * 1.0001, SolverOptions{});
  CHECK(at_max.beta_hat.isZero(0));
  CHECK(at_max.sur == doctest::Approx(static_cast<double>(problem.target.n()) /
                                      (problem.target.n() + problem.total_source_rows())));

  SimConfig sim;
  sim.p = 8;
  sim.n0 = 30;
  sim.K = 0;
  sim.s0 = 2;
  sim.seed = 50;
  const TransferProblem solo = gen_problem(sim, 0);
  CHECK(fit_lasso_target(solo, 0.1, SolverOptions{}).sur == doctest::Approx(1.0));
}

TEST_CASE("identical-distribution sources improve over the target lasso") {
  // delta = 0 sources, larger n_k: mean SSE over seeded replicates below the
  // target-only LASSO's.
  SimConfig sim;
  sim.p = 40;
  sim.n0 = 50;
  sim.K = 2;
  sim.n_k_default = 240;
  sim.s0 = 5;
  sim.m_B = 2;
  sim.d = 0;
  const int reps = 10;
  double riw = 0.0, riw_u = 0.0, lasso = 0.0;
  const SolverOptions opts;
  for (int rep = 0; rep < reps; ++rep) {
    sim.seed = 1000 + rep;
    const TransferProblem problem = gen_problem(sim, rep);
    const double lambda = 0.8 * std::sqrt(std::log(sim.p) / sim.n0);

    RiwConfig cfg;
    cfg.A = 1.5;
    cfg.M = 3.0;
    cfg.bandwidth = 0.2;
    cfg.lambda = 0.5 * lambda;  // larger effective sample, smaller penalty
    cfg.split_seed = 77 + rep;
    riw += sse(fit_riw_tl(problem, cfg, opts).beta_hat, problem.truth->beta0);

    RiwConfig ucfg = cfg;
    ucfg.variant = WeightVariant::uniform;
    ucfg.A = 1.5;
    ucfg.M = 3.0;
    ucfg.T = 4.5;
    riw_u += sse(fit_riw_tl_u(problem, ucfg, opts).beta_hat, problem.truth->beta0);

    lasso += sse(fit_lasso_target(problem, lambda, opts).beta_hat, problem.truth->beta0);
  }
  CHECK(riw / reps < lasso / reps);
  CHECK(riw_u / reps < lasso / reps);
}
