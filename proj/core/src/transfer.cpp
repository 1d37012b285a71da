#include "riwtl/transfer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "riwtl/rng.hpp"

namespace riwtl {

namespace {

constexpr double kScadA = 3.7;
constexpr double kDenominatorFloor = 1e-12;
constexpr int kScadCvLambdaPoints = 30;
constexpr double kScadCvLambdaMinRatio = 0.01;
constexpr int kScadCvFolds = 5;

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

std::vector<double> log_lambda_grid(double lambda_max, double min_ratio, int points) {
  std::vector<double> grid(points);
  const double step = std::log(min_ratio) / (points - 1);
  for (int i = 0; i < points; ++i) grid[i] = lambda_max * std::exp(step * i);
  return grid;
}

// SCAD fit with lambda chosen by J-fold cross validation on the given rows;
// fold assignment is a pure function of the stream key. Grid points whose
// solve stalls score +inf; underdetermined splits get a shallower grid since
// near-zero penalties put coordinate descent on a nearly flat face.
Vector scad_cv_fit(const Matrix& x, const Vector& y, const SolverOptions& opts,
                   std::uint64_t fold_key) {
  const Index n = x.rows();
  const Vector ones = Vector::Ones(n);
  WeightedLassoSolver probe(x, y, ones, static_cast<double>(n), opts);
  const double lmax = probe.lambda_max();
  if (lmax <= 0.0) return Vector::Zero(x.cols());

  const double min_ratio = (n < x.cols()) ? 0.05 : kScadCvLambdaMinRatio;
  const auto grid = log_lambda_grid(lmax, min_ratio, kScadCvLambdaPoints);
  const int folds = static_cast<int>(std::min<Index>(kScadCvFolds, n));
  SolverOptions inner = opts;
  inner.max_iter = std::max(opts.max_iter, 50000);
  double chosen = grid[grid.size() / 2];
  if (folds >= 2) {
    std::vector<Index> order(n);
    std::iota(order.begin(), order.end(), Index{0});
    rng::SplitMix64 gen(fold_key);
    for (Index i = n - 1; i > 0; --i)
      std::swap(order[i], order[gen.next_below(static_cast<std::uint64_t>(i) + 1)]);

    std::vector<std::vector<double>> fold_scores(grid.size());
    for (int f = 0; f < folds; ++f) {
      std::vector<Index> train, test;
      for (Index i = 0; i < n; ++i)
        ((i % folds == f) ? test : train).push_back(order[i]);
      if (test.empty() || train.empty()) continue;
      const Matrix xt = gather_rows(x, train);
      const Vector yt = gather(y, train);
      const Matrix xv = gather_rows(x, test);
      const Vector yv = gather(y, test);

      WeightedLassoSolver lasso(xt, yt, Vector::Ones(xt.rows()),
                                static_cast<double>(xt.rows()), inner);
      SolverOptions scad_opts = inner;
      for (std::size_t i = 0; i < grid.size(); ++i) {
        try {
          scad_opts.warm_start = lasso.solve(grid[i]);
          const Vector beta = fit_scad(xt, yt, grid[i], kScadA, scad_opts);
          fold_scores[i].push_back((yv - xv * beta).squaredNorm() /
                                   static_cast<double>(test.size()));
        } catch (const ConvergenceError&) {
          fold_scores[i].push_back(std::numeric_limits<double>::infinity());
        }
      }
    }
    std::vector<double> mean(grid.size(), std::numeric_limits<double>::infinity());
    std::vector<double> sem(grid.size(), 0.0);
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const auto& s = fold_scores[i];
      if (s.empty()) continue;
      double m = 0.0;
      for (double v : s) m += v;
      m /= static_cast<double>(s.size());
      double var = 0.0;
      for (double v : s) var += (v - m) * (v - m);
      mean[i] = m;
      if (s.size() > 1)
        sem[i] = std::sqrt(var / static_cast<double>(s.size() - 1) /
                           static_cast<double>(s.size()));
    }
    std::size_t best = 0;
    for (std::size_t i = 1; i < grid.size(); ++i)
      if (mean[i] < mean[best]) best = i;
    // one-standard-error rule: the sparsest fit whose score is statistically
    // indistinguishable from the minimum; initial estimates feed thresholds
    // and weights, where l1 error matters more than raw prediction
    std::size_t pick = best;
    if (std::isfinite(mean[best]))
      for (std::size_t i = 0; i < best; ++i)
        if (mean[i] <= mean[best] + sem[best]) {
          pick = i;
          break;
        }
    chosen = grid[pick];
  }
  return fit_scad(x, y, chosen, kScadA, opts);
}

SelectionRecord select_impl(const Dataset& source, const Vector& beta0_tilde,
                            const Vector& betak_tilde, double A, double M,
                            const std::vector<Index>& subset, int source_index,
                            bool source_scale) {
  if (beta0_tilde.size() != source.p() || betak_tilde.size() != source.p())
    throw DimensionError("select_samples: coefficient length differs from column count");
  if (!(A > 0.0) || !(M > 0.0))
    throw ConfigError("select_samples: thresholds must be positive");

  SelectionRecord rec;
  rec.source_index = source_index;
  rec.source_scale_selection = source_scale;
  rec.A = A;
  rec.M = M;
  const Vector delta = betak_tilde - beta0_tilde;
  for (Index i : subset) {
    if (i < 0 || i >= source.n())
      throw DimensionError("select_samples: subset index out of range");
    const double eta = source.x.row(i).dot(delta);
    const double resid_target = source.y[i] - source.x.row(i).dot(beta0_tilde);
    rec.etas[i] = eta;
    rec.residuals_target_scale[i] = resid_target;
    const double first = source_scale ? std::abs(resid_target - eta) : std::abs(resid_target);
    if (first <= A && std::abs(eta) <= M) rec.selected.push_back(i);
  }
  std::sort(rec.selected.begin(), rec.selected.end());
  return rec;
}

struct RowBuffer {
  std::vector<const Dataset*> src;
  std::vector<Index> row;
  std::vector<double> weight;

  void push(const Dataset& d, Index i, double w) {
    src.push_back(&d);
    row.push_back(i);
    weight.push_back(w);
  }

  WeightedProblem build(Index p, double denom) const {
    const Index n = static_cast<Index>(row.size());
    WeightedProblem prob;
    prob.x.resize(n, p);
    prob.y.resize(n);
    prob.obs_weights.resize(n);
    for (Index t = 0; t < n; ++t) {
      prob.x.row(t) = src[t]->x.row(row[t]);
      prob.y[t] = src[t]->y[row[t]];
      prob.obs_weights[t] = weight[t];
    }
    prob.denom = denom;
    prob.lambda = 0.0;
    return prob;
  }
};

std::string variant_tag(WeightVariant v) {
  switch (v) {
    case WeightVariant::kde: return "riw-tl";
    case WeightVariant::parametric_gaussian: return "riw-tl-p";
    case WeightVariant::uniform: return "riw-tl-u";
  }
  return "riw-tl";
}

FitResult fit_riw_impl(const TransferProblem& problem, const RiwConfig& cfg,
                       const SolverOptions& opts) {
  cfg.validate();
  if (problem.target.n() < 3)
    throw DataError("fit_riw_tl: target needs at least 3 observations for splitting");
  for (const auto& s : problem.sources)
    if (s.n() < 3)
      throw DataError("fit_riw_tl: every source needs at least 3 observations for splitting");

  const SplitPlan plan = SplitPlan::make(problem, cfg.split_seed);

  FitResult fit;
  fit.method = variant_tag(cfg.variant);
  fit.lambda = cfg.lambda;
  fit.tuning_trace = TuningTrace{cfg.A, cfg.M, cfg.bandwidth,
                                 cfg.variant == WeightVariant::uniform
                                     ? std::optional<double>(cfg.T)
                                     : std::nullopt};

  std::array<Vector, 3> betas;
  Index selected_total = 0;
  for (int r = 0; r < 3; ++r) {
    const RotationContext ctx = make_rotation_context(problem, plan, r, opts, cfg.split_seed);
    AssembledPass pass = assemble_pass(problem, plan, ctx, cfg);
    pass.prob.lambda = cfg.lambda;
    betas[r] = fit_weighted_lasso(pass.prob, opts);
    for (auto& rec : pass.records) {
      selected_total += static_cast<Index>(rec.selected.size());
      fit.selections.push_back(std::move(rec));
    }
    for (auto& d : pass.diagnostics) fit.diagnostics.push_back(std::move(d));
  }

  fit.beta_hat = (betas[0] + betas[1] + betas[2]) / 3.0;
  fit.rotation_betas = betas;
  const double total = static_cast<double>(problem.target.n() + problem.total_source_rows());
  fit.sur = (static_cast<double>(problem.target.n()) + static_cast<double>(selected_total)) / total;

  double w_min = std::numeric_limits<double>::infinity(), w_max = 0.0;
  for (const auto& rec : fit.selections)
    for (const auto& [i, w] : rec.weights) {
      w_min = std::min(w_min, w);
      w_max = std::max(w_max, w);
    }
  if (w_max > 0.0)
    fit.diagnostics.push_back("weight ratio max/min = " + std::to_string(w_max / w_min));
  return fit;
}

}  // namespace

void RiwConfig::validate() const {
  if (!(A > 0.0) || !(M > 0.0)) throw ConfigError("RiwConfig: A and M must be positive");
  if (!(bandwidth > 0.0) && variant != WeightVariant::parametric_gaussian)
    throw ConfigError("RiwConfig: bandwidth must be positive");
  if (lambda < 0.0) throw ConfigError("RiwConfig: lambda must be nonnegative");
  if (variant == WeightVariant::uniform) {
    if (theta0 < 0.0) throw ConfigError("RiwConfig: theta0 must be nonnegative");
    if (!(T > 0.0)) throw ConfigError("RiwConfig: T must be positive");
    if (A + M - 2.0 * theta0 > T + 1e-12)
      throw ConfigError("RiwConfig: uniform variant requires A + M - 2*theta0 <= T");
  }
}

SplitPlan SplitPlan::make(const TransferProblem& problem, std::uint64_t seed) {
  SplitPlan plan;
  const Index K = problem.n_sources();
  plan.parts.resize(static_cast<std::size_t>(K) + 1);
  for (Index k = 0; k <= K; ++k) {
    const Dataset& d = (k == 0) ? problem.target : problem.sources[k - 1];
    const Index n = d.n();
    std::vector<Index> order(n);
    std::iota(order.begin(), order.end(), Index{0});
    rng::SplitMix64 gen(rng::stream_key(seed, rng::stream::split, 0, static_cast<std::uint64_t>(k)));
    for (Index i = n - 1; i > 0; --i)
      std::swap(order[i], order[gen.next_below(static_cast<std::uint64_t>(i) + 1)]);
    auto& parts = plan.parts[k];
    for (Index i = 0; i < n; ++i) parts[i % 3].push_back(order[i]);
    for (auto& part : parts) std::sort(part.begin(), part.end());
  }
  return plan;
}

RotationContext make_rotation_context(const TransferProblem& problem, const SplitPlan& plan,
                                      int rotation, const SolverOptions& opts,
                                      std::uint64_t split_seed) {
  const Index K = problem.n_sources();
  RotationContext ctx;
  ctx.rotation = rotation;
  ctx.beta_init.resize(K + 1);
  ctx.density_resid.resize(K + 1);
  for (Index k = 0; k <= K; ++k) {
    const Dataset& d = (k == 0) ? problem.target : problem.sources[k - 1];
    // Only the sources are split: their weights are estimated out-of-fold.
    // The target keeps all rows everywhere since its observations enter the
    // solve at fixed weight one and its initial fit is evaluated only on
    // source rows, which are independent of the target.
    Matrix xi;
    Vector yi;
    if (k == 0) {
      xi = d.x;
      yi = d.y;
    } else {
      const auto& init_rows = plan.role_initial(k, rotation);
      xi = gather_rows(d.x, init_rows);
      yi = gather(d.y, init_rows);
    }
    const std::uint64_t rot_key = (k == 0) ? 0 : static_cast<std::uint64_t>(rotation);
    ctx.beta_init[k] =
        scad_cv_fit(xi, yi, opts,
                    rng::stream_key(split_seed, rng::stream::scad_cv, rot_key,
                                    static_cast<std::uint64_t>(k)));
    if (k > 0) {
      const auto& dens_rows = plan.role_density(k, rotation);
      Vector resid(static_cast<Index>(dens_rows.size()));
      for (std::size_t t = 0; t < dens_rows.size(); ++t)
        resid[static_cast<Index>(t)] =
            d.y[dens_rows[t]] - d.x.row(dens_rows[t]).dot(ctx.beta_init[k]);
      ctx.density_resid[k] = resid;
    }
  }
  return ctx;
}

Vector fit_initial_scad(const Matrix& x, const Vector& y, const SolverOptions& opts,
                        std::uint64_t fold_stream) {
  return scad_cv_fit(x, y, opts, fold_stream);
}

double true_weight(const DensityModel& f_eps, const DensityModel& f_k, double eps_plus_eta,
                   double eps) {
  const double den = f_k.eval(eps);
  if (den == 0.0)
    throw WeightUndefinedError("true_weight: denominator density is zero at the residual");
  return f_eps.eval(eps_plus_eta) / den;
}

SelectionRecord select_samples(const Dataset& source, const Vector& beta0_tilde,
                               const Vector& betak_tilde, double A, double M,
                               const std::vector<Index>& subset, int source_index) {
  return select_impl(source, beta0_tilde, betak_tilde, A, M, subset, source_index, false);
}

SelectionRecord select_samples_u(const Dataset& source, const Vector& beta0_tilde,
                                 const Vector& betak_tilde, double A, double M,
                                 const std::vector<Index>& subset, int source_index) {
  return select_impl(source, beta0_tilde, betak_tilde, A, M, subset, source_index, true);
}

AssembledPass assemble_pass(const TransferProblem& problem, const SplitPlan& plan,
                            const RotationContext& ctx, const RiwConfig& cfg) {
  cfg.validate();
  const Index K = problem.n_sources();
  const int r = ctx.rotation;

  // Whole target block in every pass; only source rows rotate through thirds.
  double denom = static_cast<double>(problem.target.n());
  for (Index k = 1; k <= K; ++k) denom += static_cast<double>(plan.role_solve(k, r).size());

  AssembledPass pass;
  RowBuffer rows;
  for (Index i = 0; i < problem.target.n(); ++i) rows.push(problem.target, i, 1.0);
  pass.target_rows = problem.target.n();

  for (Index k = 1; k <= K; ++k) {
    const Dataset& src = problem.sources[k - 1];
    const auto& subset = plan.role_solve(k, r);
    const Vector& b0 = ctx.beta_init[0];
    const Vector& bk = ctx.beta_init[k];

    SelectionRecord rec;
    if (cfg.variant == WeightVariant::uniform) {
      const DensityModel f_k = kde_fit(ctx.density_resid[k], cfg.bandwidth);
      rec = select_samples_u(src, b0, bk, cfg.A, cfg.M, subset, static_cast<int>(k));
      rec.T = cfg.T;
      rec.theta0 = cfg.theta0;
      for (Index i : rec.selected) {
        const double resid_target = rec.residuals_target_scale.at(i);
        if (std::abs(resid_target) > cfg.T) continue;  // indicator zero: excluded from the loss
        const double eps_hat = resid_target - rec.etas.at(i);
        const double w =
            1.0 / (2.0 * cfg.T * std::max(f_k.eval(eps_hat), kDenominatorFloor));
        rec.weights[i] = w;
        rows.push(src, i, w);
      }
    } else {
      const DensityModel f_k = (cfg.variant == WeightVariant::kde)
                                   ? kde_fit(ctx.density_resid[k], cfg.bandwidth)
                                   : gaussian_fit(ctx.density_resid[k]);
      const DensityModel f_eps = symmetrize(f_k);
      rec = select_samples(src, b0, bk, cfg.A, cfg.M, subset, static_cast<int>(k));
      for (Index i : rec.selected) {
        const double resid_target = rec.residuals_target_scale.at(i);
        const double eps_hat = resid_target - rec.etas.at(i);
        const double w =
            f_eps.eval(resid_target) / std::max(f_k.eval(eps_hat), kDenominatorFloor);
        rec.weights[i] = w;
        rows.push(src, i, w);
      }
    }
    if (rec.selected.empty())
      pass.diagnostics.push_back("source " + std::to_string(k) + " rotation " +
                                 std::to_string(r) + ": empty selection, pass uses no rows from it");
    pass.records.push_back(std::move(rec));
  }

  pass.prob = rows.build(problem.p(), denom);
  return pass;
}

FitResult fit_riw_tl(const TransferProblem& problem, const RiwConfig& cfg,
                     const SolverOptions& opts) {
  if (cfg.variant == WeightVariant::uniform)
    throw ConfigError("fit_riw_tl: use fit_riw_tl_u for the uniform variant");
  return fit_riw_impl(problem, cfg, opts);
}

FitResult fit_riw_tl_u(const TransferProblem& problem, const RiwConfig& cfg,
                       const SolverOptions& opts) {
  if (cfg.variant != WeightVariant::uniform)
    throw ConfigError("fit_riw_tl_u: cfg.variant must be uniform");
  return fit_riw_impl(problem, cfg, opts);
}

FitResult fit_oracle_riw_tl(const TransferProblem& problem, double A, double M, double lambda,
                            const SolverOptions& opts) {
  if (!problem.truth)
    throw ConfigError("fit_oracle_riw_tl: problem carries no TruthSpec");
  if (!(A > 0.0) || !(M > 0.0))
    throw ConfigError("fit_oracle_riw_tl: thresholds must be positive");
  const TruthSpec& truth = *problem.truth;
  const Index K = problem.n_sources();

  RowBuffer rows;
  for (Index i = 0; i < problem.target.n(); ++i) rows.push(problem.target, i, 1.0);

  FitResult fit;
  fit.method = "oracle-riw-tl";
  fit.lambda = lambda;
  Index selected_total = 0;
  for (Index k = 1; k <= K; ++k) {
    const Dataset& src = problem.sources[k - 1];
    const NoiseSpec& noise = truth.noise[k];
    const Vector delta = contrast(truth.betas[k - 1], truth.beta0);

    SelectionRecord rec;
    rec.source_index = static_cast<int>(k);
    rec.A = A;
    rec.M = M;
    for (Index i = 0; i < src.n(); ++i) {
      const double eta = src.x.row(i).dot(delta);
      const double resid_target = src.y[i] - src.x.row(i).dot(truth.beta0);
      rec.etas[i] = eta;
      rec.residuals_target_scale[i] = resid_target;
      if (std::abs(resid_target) <= A && std::abs(eta) <= M) rec.selected.push_back(i);
    }
    for (Index i : rec.selected) {
      const double resid_target = rec.residuals_target_scale.at(i);
      const double eps = resid_target - rec.etas.at(i);
      const double den = noise_pdf(noise, eps);
      if (den == 0.0)
        throw WeightUndefinedError("fit_oracle_riw_tl: zero denominator density on I_k");
      // Zero-mean errors have symmetric densities, so the symmetrized
      // numerator equals the source density itself.
      const double w = noise_pdf(noise, resid_target) / den;
      rec.weights[i] = w;
      rows.push(src, i, w);
    }
    selected_total += static_cast<Index>(rec.selected.size());
    fit.selections.push_back(std::move(rec));
  }

  WeightedProblem prob = rows.build(
      problem.p(), static_cast<double>(problem.target.n() + problem.total_source_rows()));
  prob.lambda = lambda;
  fit.beta_hat = fit_weighted_lasso(prob, opts);
  const double total = static_cast<double>(problem.target.n() + problem.total_source_rows());
  fit.sur = (static_cast<double>(problem.target.n()) + static_cast<double>(selected_total)) / total;
  return fit;
}

FitResult fit_trans_lasso_oracle(const TransferProblem& problem,
                                 const std::vector<int>& informative, double lambda_w,
                                 double lambda_delta, const SolverOptions& opts) {
  const Index K = problem.n_sources();
  std::vector<int> J = informative;
  std::sort(J.begin(), J.end());
  J.erase(std::unique(J.begin(), J.end()), J.end());
  for (int k : J)
    if (k < 1 || k > K)
      throw ConfigError("fit_trans_lasso_oracle: informative index out of 1..K");

  FitResult fit;
  fit.method = "trans-lasso";
  fit.lambda = lambda_delta;

  Vector w_hat = Vector::Zero(problem.p());
  Index n_informative = 0;
  if (J.empty()) {
    fit.diagnostics.push_back("empty informative set: method degenerates to target LASSO");
  } else {
    Index n_rows = 0;
    for (int k : J) n_rows += problem.sources[k - 1].n();
    Matrix xj(n_rows, problem.p());
    Vector yj(n_rows);
    Index at = 0;
    for (int k : J) {
      const Dataset& s = problem.sources[k - 1];
      xj.middleRows(at, s.n()) = s.x;
      yj.segment(at, s.n()) = s.y;
      at += s.n();
    }
    n_informative = n_rows;
    WeightedProblem pooled{std::move(xj), std::move(yj), Vector::Ones(n_rows),
                           static_cast<double>(n_rows), lambda_w};
    SolveInfo info;
    w_hat = fit_weighted_lasso(pooled, opts, &info);
    if (info.lambda_zero_underdetermined)
      fit.diagnostics.push_back("pooled stage: lambda zero with p > n, solution non-unique");
  }

  // Correction stage: argmin (1/2n0) sum (r_i + x_i' delta)^2 + lambda_delta |delta|_1
  // with r = y - X w_hat, solved as a LASSO with response -r.
  const Vector r = problem.target.y - problem.target.x * w_hat;
  WeightedProblem corr{problem.target.x, -r, Vector::Ones(problem.target.n()),
                       static_cast<double>(problem.target.n()), lambda_delta};
  SolveInfo info;
  const Vector delta_hat = fit_weighted_lasso(corr, opts, &info);
  if (info.lambda_zero_underdetermined)
    fit.diagnostics.push_back("correction stage: lambda zero with p > n, solution non-unique");

  fit.beta_hat = w_hat - delta_hat;
  const double total = static_cast<double>(problem.target.n() + problem.total_source_rows());
  fit.sur = (static_cast<double>(problem.target.n()) + static_cast<double>(n_informative)) / total;
  return fit;
}

FitResult fit_lasso_target(const TransferProblem& problem, double lambda,
                           const SolverOptions& opts) {
  WeightedProblem prob{problem.target.x, problem.target.y, Vector::Ones(problem.target.n()),
                       static_cast<double>(problem.target.n()), lambda};
  SolveInfo info;
  FitResult fit;
  fit.method = "lasso";
  fit.lambda = lambda;
  fit.beta_hat = fit_weighted_lasso(prob, opts, &info);
  if (info.lambda_zero_underdetermined)
    fit.diagnostics.push_back("lambda zero with p > n, solution non-unique");
  const double total = static_cast<double>(problem.target.n() + problem.total_source_rows());
  fit.sur = static_cast<double>(problem.target.n()) / total;
  return fit;
}

}  // namespace riwtl
