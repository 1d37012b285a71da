#include "riwtl/simlab.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <thread>

#include "riwtl/rng.hpp"

namespace riwtl {

namespace {

constexpr Index kTestRows = 500;

Eigen::MatrixXd ar_covariance(Index p, double rho) {
  Eigen::MatrixXd sigma(p, p);
  for (Index i = 0; i < p; ++i)
    for (Index j = 0; j < p; ++j) sigma(i, j) = std::pow(rho, std::abs(double(i - j)));
  return sigma;
}

Eigen::MatrixXd ar_cholesky(Index p, double rho) {
  Eigen::LLT<Eigen::MatrixXd> llt(ar_covariance(p, rho));
  if (llt.info() != Eigen::Success)
    throw DegenerateProblemError("gen_covariates: covariance is not positive definite");
  return llt.matrixL();
}

Vector draw_normals(rng::SplitMix64& gen, Index n) {
  Vector z(n);
  for (Index i = 0; i < n; ++i) z[i] = gen.next_normal();
  return z;
}

int bin_of(double v, const std::vector<double>& edges) {
  for (std::size_t j = 0; j + 1 < edges.size(); ++j)
    if (v >= edges[j] && v < edges[j + 1]) return static_cast<int>(j);
  return -1;
}

double noise_draw(rng::SplitMix64& gen, SimErrorKind kind) {
  return kind == SimErrorKind::gaussian ? gen.next_normal() : gen.next_student_t(5);
}

NoiseSpec noise_spec(SimErrorKind kind) {
  return kind == SimErrorKind::gaussian ? NoiseSpec::gaussian(1.0) : NoiseSpec::student_t(5.0);
}

// d distinct draws from {lo, ..., hi-1} by partial Fisher-Yates.
std::vector<Index> random_subset(rng::SplitMix64& gen, Index lo, Index hi, Index d) {
  std::vector<Index> pool(hi - lo);
  std::iota(pool.begin(), pool.end(), lo);
  for (Index t = 0; t < d; ++t) {
    const Index j = t + static_cast<Index>(gen.next_below(pool.size() - t));
    std::swap(pool[t], pool[j]);
  }
  return {pool.begin(), pool.begin() + d};
}

}  // namespace

SimConfig SimConfig::paper_scale() {
  SimConfig cfg;
  cfg.p = 200;
  cfg.n0 = 150;
  cfg.K = 10;
  cfg.n_k_default = 600;
  cfg.s0 = 10;
  cfg.replicates = 200;
  return cfg;
}

int SimConfig::source_rows(int k) const {
  if (n_k.empty()) return n_k_default;
  return n_k[k - 1];
}

std::string SimConfig::shift_tag() const {
  const bool same = source_cov.kind == target_cov.kind &&
                    source_cov.rho == target_cov.rho &&
                    (source_cov.kind != CovariateKind::student_t ||
                     source_cov.t_df == target_cov.t_df);
  return same ? "posterior" : "full";
}

void SimConfig::validate() const {
  if (p < 1 || n0 < 1 || K < 0 || s0 < 1 || replicates < 1)
    throw ConfigError("SimConfig: sizes must be positive");
  if (s0 > p) throw ConfigError("SimConfig: s0 exceeds p");
  if (m_B < 0 || m_B > K) throw ConfigError("SimConfig: m_B must lie in [0, K]");
  if (d < 0 || d > p - s0) throw ConfigError("SimConfig: d must lie in [0, p - s0]");
  if (m_B < K && 2 * s0 > p - s0)
    throw ConfigError("SimConfig: non-informative sources need p - s0 >= 2*s0");
  if (!n_k.empty() && static_cast<int>(n_k.size()) != K)
    throw ConfigError("SimConfig: n_k must have one entry per source");
  for (int k = 1; k <= K; ++k)
    if (source_rows(k) < 1) throw ConfigError("SimConfig: source sizes must be positive");
  if (source_cov.kind == CovariateKind::student_t && source_cov.t_df <= 2)
    throw ConfigError("SimConfig: student_t covariates need df > 2");
}

Matrix gen_covariates(const CovariateSpec& spec, Index n, Index p, std::uint64_t stream) {
  if (n < 1 || p < 1) throw ConfigError("gen_covariates: n and p must be positive");
  rng::SplitMix64 gen(stream);
  const Eigen::MatrixXd L = ar_cholesky(p, spec.rho);
  Matrix x(n, p);
  switch (spec.kind) {
    case CovariateKind::gaussian_ar: {
      for (Index i = 0; i < n; ++i) x.row(i) = (L * draw_normals(gen, p)).transpose();
      break;
    }
    case CovariateKind::student_t: {
      if (spec.t_df <= 2) throw ConfigError("gen_covariates: student_t needs df > 2");
      const double df = spec.t_df;
      // Pre-scaling by (df-2)/df makes the mixed rows match the AR covariance.
      const Eigen::MatrixXd Ls = L * std::sqrt((df - 2.0) / df);
      for (Index i = 0; i < n; ++i) {
        const Vector g = Ls * draw_normals(gen, p);
        const double w = gen.next_chi_squared(spec.t_df);
        x.row(i) = (g * std::sqrt(df / w)).transpose();
      }
      break;
    }
    case CovariateKind::gaussian_mixture: {
      constexpr double means[3] = {-4.0, 0.0, 2.0};
      for (Index i = 0; i < n; ++i) {
        const int c = std::min(2, static_cast<int>(gen.next_double() * 3.0));
        x.row(i) = ((L * draw_normals(gen, p)).array() + means[c]).transpose();
      }
      break;
    }
  }
  return x;
}

CoefficientSet gen_coefficients(CoefScheme scheme, int K, Index p, Index s0, int m_B, int d,
                                std::uint64_t stream) {
  if (d < 0 || d > p - s0) throw ConfigError("gen_coefficients: d must lie in [0, p - s0]");
  if (m_B < 0 || m_B > K) throw ConfigError("gen_coefficients: m_B must lie in [0, K]");
  rng::SplitMix64 gen(stream);

  CoefficientSet out;
  out.beta0 = Vector::Zero(p);
  out.beta0.head(s0).setOnes();

  for (int k = 1; k <= K; ++k) {
    Vector beta = out.beta0;
    if (k <= m_B) {
      const auto picked = random_subset(gen, s0, p, d);
      for (Index j : picked)
        beta[j] -= (scheme == CoefScheme::fixed_magnitude) ? 0.5 : gen.next_double();
    } else {
      if (2 * s0 > p - s0)
        throw ConfigError("gen_coefficients: non-informative sources need p - s0 >= 2*s0");
      beta.head(s0).array() -= 1.0;
      const auto picked = random_subset(gen, s0, p, 2 * s0);
      for (Index j : picked)
        beta[j] -= (scheme == CoefScheme::fixed_magnitude) ? 0.5 : gen.next_double();
    }
    out.betas.push_back(std::move(beta));
  }
  return out;
}

TransferProblem gen_problem(const SimConfig& cfg, int replicate) {
  cfg.validate();
  const std::uint64_t rep = static_cast<std::uint64_t>(replicate);
  const auto coefs = gen_coefficients(cfg.scheme, cfg.K, cfg.p, cfg.s0, cfg.m_B, cfg.d,
                                      rng::stream_key(cfg.seed, rng::stream::coefficients, rep, 0));

  auto make_dataset = [&](int k) {
    const bool target = (k == 0);
    const Index n = target ? cfg.n0 : cfg.source_rows(k);
    const CovariateSpec& cov = target ? cfg.target_cov : cfg.source_cov;
    const Vector& beta = target ? coefs.beta0 : coefs.betas[k - 1];
    Matrix x = gen_covariates(cov, n, cfg.p,
                              rng::stream_key(cfg.seed, rng::stream::covariates, rep,
                                              static_cast<std::uint64_t>(k)));
    rng::SplitMix64 gen(rng::stream_key(cfg.seed, rng::stream::noise, rep,
                                        static_cast<std::uint64_t>(k)));
    Vector y(n);
    const SimErrorKind err = target ? cfg.target_err : cfg.source_err;
    for (Index i = 0; i < n; ++i) y[i] = x.row(i).dot(beta) + noise_draw(gen, err);
    return Dataset(std::move(x), std::move(y));
  };

  Dataset target = make_dataset(0);
  std::vector<Dataset> sources;
  sources.reserve(cfg.K);
  for (int k = 1; k <= cfg.K; ++k) sources.push_back(make_dataset(k));

  std::vector<NoiseSpec> noise;
  noise.push_back(noise_spec(cfg.target_err));
  for (int k = 1; k <= cfg.K; ++k) noise.push_back(noise_spec(cfg.source_err));

  return TransferProblem(std::move(target), std::move(sources),
                         TruthSpec(coefs.beta0, coefs.betas, std::move(noise)));
}

double sse(const Vector& beta_hat, const Vector& beta0) {
  if (beta_hat.size() != beta0.size()) throw DimensionError("sse: vector lengths differ");
  return (beta_hat - beta0).squaredNorm();
}

double sur(const FitResult& fit, const TransferProblem& problem) {
  const double total = static_cast<double>(problem.target.n() + problem.total_source_rows());
  if (fit.selections.empty()) return fit.sur;
  Index selected = 0;
  for (const auto& rec : fit.selections) selected += static_cast<Index>(rec.selected.size());
  return (static_cast<double>(problem.target.n()) + static_cast<double>(selected)) / total;
}

SelectionMetrics selection_metrics(const Vector& beta_check, const Vector& beta_lasso) {
  if (beta_check.size() != beta_lasso.size())
    throw DimensionError("selection_metrics: vector lengths differ");
  const Index p = beta_check.size();
  Index check_nz = 0, lasso_nz = 0, both = 0, check_only = 0;
  for (Index j = 0; j < p; ++j) {
    const bool c = beta_check[j] != 0.0;
    const bool l = beta_lasso[j] != 0.0;
    check_nz += c;
    lasso_nz += l;
    both += (c && l);
    check_only += (c && !l);
  }
  SelectionMetrics m;
  m.sparsity_rate = static_cast<double>(check_nz) / static_cast<double>(p);
  if (lasso_nz > 0)
    m.positive_rate = static_cast<double>(both) / static_cast<double>(lasso_nz);
  if (lasso_nz < p)
    m.negative_rate = static_cast<double>(check_only) / static_cast<double>(p - lasso_nz);
  return m;
}

double relative_prediction_error(double method_pe, double lasso_pe) {
  if (lasso_pe <= 0.0)
    throw DegenerateProblemError("relative_prediction_error: LASSO prediction error is zero");
  return method_pe / lasso_pe;
}

std::vector<int> informative_by_contrast(const TransferProblem& problem,
                                         const SolverOptions& opts, std::uint64_t seed,
                                         std::optional<double> threshold) {
  const Vector beta0_hat =
      fit_initial_scad(problem.target.x, problem.target.y, opts,
                       rng::stream_key(seed, rng::stream::scad_cv, 0, 0));
  double h;
  if (threshold) {
    h = *threshold;
  } else {
    Index nnz = 0;
    for (Index j = 0; j < beta0_hat.size(); ++j) nnz += (beta0_hat[j] != 0.0);
    const double s_hat = std::max<double>(1.0, static_cast<double>(nnz));
    h = 2.0 * s_hat *
        std::sqrt(std::log(static_cast<double>(problem.p())) /
                  static_cast<double>(problem.target.n()));
  }
  std::vector<int> J;
  for (Index k = 1; k <= problem.n_sources(); ++k) {
    const Dataset& s = problem.sources[k - 1];
    const Vector beta_k = fit_initial_scad(
        s.x, s.y, opts,
        rng::stream_key(seed, rng::stream::scad_cv, 0, static_cast<std::uint64_t>(k)));
    if (contrast(beta_k, beta0_hat).lpNorm<1>() <= h) J.push_back(static_cast<int>(k));
  }
  return J;
}

namespace {

struct MethodPlan {
  std::string method;
  RiwConfig cfg;       // riw variants
  double lambda = 0.0; // lasso / trans-lasso correction stage
  double lambda_w = 0.0;
};

FitResult run_method(const MethodPlan& plan, const TransferProblem& problem,
                     const SolverOptions& opts, std::uint64_t split_seed,
                     std::uint64_t heuristic_seed) {
  if (plan.method == "lasso") return fit_lasso_target(problem, plan.lambda, opts);
  if (plan.method == "trans-lasso") {
    const auto J = informative_by_contrast(problem, opts, heuristic_seed);
    return fit_trans_lasso_oracle(problem, J, plan.lambda_w, plan.lambda, opts);
  }
  RiwConfig cfg = plan.cfg;
  cfg.split_seed = split_seed;
  if (plan.method == "riw-tl-u") return fit_riw_tl_u(problem, cfg, opts);
  if (plan.method == "riw-tl" || plan.method == "riw-tl-p") return fit_riw_tl(problem, cfg, opts);
  throw ConfigError("run_sweep: unknown method tag '" + plan.method + "'");
}

double mean_of(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double std_of(const std::vector<double>& v, double mean) {
  if (v.size() < 2) return 0.0;
  double acc = 0.0;
  for (double x : v) acc += (x - mean) * (x - mean);
  return std::sqrt(acc / static_cast<double>(v.size() - 1));
}

}  // namespace

ExperimentResult run_sweep(const SimConfig& cfg, const std::vector<std::string>& methods,
                           const std::vector<SweepCell>& cells, const TuneGrid& grid,
                           TunePolicy policy, int threads, const SolverOptions& opts) {
  cfg.validate();
  if (methods.empty()) throw ConfigError("run_sweep: no methods given");
  if (cells.empty()) throw ConfigError("run_sweep: no cells given");
  const int n_threads =
      threads > 0 ? threads : std::max(1u, std::thread::hardware_concurrency());

  ExperimentResult result;
  result.config = cfg;
  result.methods = methods;

  for (std::size_t ci = 0; ci < cells.size(); ++ci) {
    SimConfig cell_cfg = cfg;
    cell_cfg.m_B = cells[ci].m_B;
    cell_cfg.d = cells[ci].d;
    cell_cfg.validate();

    // One tuning pass per method on replicate 0 (unless re-tuned each
    // replicate); lambda alone comes from a target-CV LASSO under `fixed`.
    std::vector<MethodPlan> plans(methods.size());
    auto tune_for = [&](const TransferProblem& problem, const std::string& method,
                        std::size_t mi) {
      MethodPlan plan;
      plan.method = method;
      const std::uint64_t tune_seed =
          rng::stream_key(cfg.seed, rng::stream::cv_folds, 0xCE110000ull + ci, mi);
      if (policy == TunePolicy::fixed) {
        const TuneResult t = cv_tune(problem, "lasso", grid, tune_seed, opts);
        plan.lambda = t.chosen.lambda;
        if (method != "lasso" && method != "trans-lasso") {
          plan.cfg = t.chosen;
          plan.cfg.M = grid.M_grid.front();
          plan.cfg.A = plan.cfg.M / 2.0;
          plan.cfg.bandwidth = grid.b_grid.front();
          plan.cfg.variant = method == "riw-tl-u"   ? WeightVariant::uniform
                             : method == "riw-tl-p" ? WeightVariant::parametric_gaussian
                                                    : WeightVariant::kde;
          if (plan.cfg.variant == WeightVariant::uniform) plan.cfg.T = 1.5 * plan.cfg.M;
        }
        plan.lambda_w = plan.lambda;
        return plan;
      }
      std::vector<int> informative;
      if (method == "trans-lasso")
        informative = informative_by_contrast(
            problem, opts, rng::stream_key(cfg.seed, rng::stream::scad_cv, 0, 0xA1100000ull + ci));
      const TuneResult t = cv_tune(problem, method, grid, tune_seed, opts, informative);
      plan.cfg = t.chosen;
      plan.lambda = t.chosen.lambda;
      plan.lambda_w = t.lambda_w;
      return plan;
    };

    if (policy != TunePolicy::full) {
      const TransferProblem problem0 = gen_problem(cell_cfg, 0);
      for (std::size_t mi = 0; mi < methods.size(); ++mi)
        plans[mi] = tune_for(problem0, methods[mi], mi);
    }

    const int reps = cell_cfg.replicates;
    std::vector<std::vector<ReplicateOutcome>> slots(reps);

    std::atomic<int> next{0};
    auto worker = [&]() {
      for (int rep = next.fetch_add(1); rep < reps; rep = next.fetch_add(1)) {
        const TransferProblem problem = gen_problem(cell_cfg, rep);
        std::vector<MethodPlan> rep_plans = plans;
        if (policy == TunePolicy::full)
          for (std::size_t mi = 0; mi < methods.size(); ++mi)
            rep_plans[mi] = tune_for(problem, methods[mi], mi);

        // Fresh target-law test set for prediction error.
        const Matrix x_test = gen_covariates(
            cell_cfg.target_cov, kTestRows, cell_cfg.p,
            rng::stream_key(cfg.seed, rng::stream::test_data, rep, 2 * ci));
        rng::SplitMix64 egen(
            rng::stream_key(cfg.seed, rng::stream::test_data, rep, 2 * ci + 1));
        Vector y_test(kTestRows);
        for (Index i = 0; i < kTestRows; ++i)
          y_test[i] = x_test.row(i).dot(problem.truth->beta0) +
                      noise_draw(egen, cell_cfg.target_err);

        std::vector<ReplicateOutcome> rows(methods.size());
        std::vector<double> pe(methods.size(), 0.0);
        std::optional<double> pe_lasso;
        for (std::size_t mi = 0; mi < methods.size(); ++mi) {
          ReplicateOutcome row;
          row.replicate = rep;
          row.method = methods[mi];
          try {
            const FitResult fit = run_method(
                rep_plans[mi], problem, opts,
                rng::stream_key(cfg.seed, rng::stream::split, rep, ci),
                rng::stream_key(cfg.seed, rng::stream::scad_cv, rep, 0xA1100000ull + ci));
            row.sse = sse(fit.beta_hat, problem.truth->beta0);
            row.sur = sur(fit, problem);
            pe[mi] = (y_test - x_test * fit.beta_hat).squaredNorm() /
                     static_cast<double>(kTestRows);
            if (methods[mi] == "lasso") pe_lasso = pe[mi];
          } catch (const std::exception& e) {
            row.failed = true;
            row.error = e.what();
          }
          rows[mi] = std::move(row);
        }
        if (pe_lasso && *pe_lasso > 0.0)
          for (std::size_t mi = 0; mi < methods.size(); ++mi)
            if (!rows[mi].failed) rows[mi].rpe = pe[mi] / *pe_lasso;
        slots[rep] = std::move(rows);
      }
    };

    std::vector<std::thread> pool;
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();

    CellOutcome cell;
    cell.cell = cells[ci];
    cell.shift = cell_cfg.shift_tag();
    for (int rep = 0; rep < reps; ++rep)
      for (auto& row : slots[rep]) cell.rows.push_back(std::move(row));

    for (std::size_t mi = 0; mi < methods.size(); ++mi) {
      MethodCellStats stats;
      stats.method = methods[mi];
      std::vector<double> sses, surs, rpes;
      for (const auto& row : cell.rows) {
        if (row.method != methods[mi]) continue;
        if (row.failed) {
          ++stats.failures;
          continue;
        }
        sses.push_back(row.sse);
        surs.push_back(row.sur);
        if (row.rpe) rpes.push_back(*row.rpe);
      }
      stats.sse_mean = mean_of(sses);
      stats.sse_std = std_of(sses, stats.sse_mean);
      stats.sur_mean = mean_of(surs);
      stats.sur_std = std_of(surs, stats.sur_mean);
      if (!rpes.empty()) stats.rpe_mean = mean_of(rpes);
      if (stats.failures * 10 > reps) cell.flagged = true;
      cell.summary.push_back(std::move(stats));
    }
    result.cells.push_back(std::move(cell));
  }
  return result;
}

std::optional<double> FrequencyGrid::frequency(Index delta_bin, Index xinf_bin) const {
  if (total(delta_bin, xinf_bin) == 0.0) return std::nullopt;
  return included(delta_bin, xinf_bin) / total(delta_bin, xinf_bin);
}

std::vector<double> default_fig1_delta_edges() {
  return {0.5, 1.5, 2.5, 3.5, 4.5, 5.5, 6.5, 7.5, 8.5, 9.5};
}

std::vector<double> default_fig1_xinf_edges() {
  return {0.0, 2.4, 2.55, 2.7, 2.85, 3.0, 3.15, 3.3, 3.45, 3.6};
}

FrequencyGrid inclusion_probability_grid(const Fig1Config& cfg, double A, double M,
                                         const std::vector<double>& delta_edges,
                                         const std::vector<double>& xinf_edges,
                                         int replicates) {
  if (delta_edges.size() < 2 || xinf_edges.size() < 2)
    throw ConfigError("inclusion_probability_grid: need at least one bin per axis");
  if (!std::is_sorted(delta_edges.begin(), delta_edges.end()) ||
      !std::is_sorted(xinf_edges.begin(), xinf_edges.end()))
    throw ConfigError("inclusion_probability_grid: bin edges must be ascending");
  if (replicates < 1) throw ConfigError("inclusion_probability_grid: replicates must be >= 1");

  FrequencyGrid out;
  out.delta_edges = delta_edges;
  out.xinf_edges = xinf_edges;
  const Index nd = static_cast<Index>(delta_edges.size()) - 1;
  const Index nx = static_cast<Index>(xinf_edges.size()) - 1;
  out.included = Matrix::Zero(nd, nx);
  out.total = Matrix::Zero(nd, nx);

  CovariateSpec mixture;
  mixture.kind = CovariateKind::gaussian_mixture;
  mixture.rho = cfg.rho;

  for (int rep = 0; rep < replicates; ++rep) {
    for (std::size_t li = 0; li < cfg.l_grid.size(); ++li) {
      const int l = cfg.l_grid[li];
      if (cfg.s0 + l > cfg.p)
        throw ConfigError("inclusion_probability_grid: l exceeds p - s0");
      const double delta_l1 = cfg.coef_step * l;
      const int db = bin_of(delta_l1, delta_edges);
      if (db < 0) continue;

      const Matrix x = gen_covariates(
          mixture, cfg.n1, cfg.p,
          rng::stream_key(cfg.seed, rng::stream::covariates, static_cast<std::uint64_t>(rep), li));
      rng::SplitMix64 egen(
          rng::stream_key(cfg.seed, rng::stream::noise, static_cast<std::uint64_t>(rep), li));
      for (Index i = 0; i < cfg.n1; ++i) {
        const double eps = egen.next_normal();
        double eta = 0.0;
        for (Index j = cfg.s0; j < cfg.s0 + l; ++j) eta += x(i, j);
        eta *= cfg.coef_step;
        const int xb = bin_of(x.row(i).cwiseAbs().maxCoeff(), xinf_edges);
        if (xb < 0) continue;
        out.total(db, xb) += 1.0;
        if (std::abs(eps + eta) <= A && std::abs(eta) <= M) out.included(db, xb) += 1.0;
      }
    }
  }
  return out;
}

double inclusion_probability_lower_bound(double d, double A, double M) {
  const double phi = std::min(A, M);
  const double d2 = d * d;
  return std::exp(-A * M) * d / (d2 + 1.0) *
         (1.0 - std::exp(-((d2 + 1.0) / (2.0 * d2)) * phi * phi));
}

bool residuals_non_normal_flag(const Vector& resid) {
  const Index n = resid.size();
  if (n < 8) return false;
  const double mean = resid.mean();
  double m2 = 0.0, m3 = 0.0, m4 = 0.0;
  for (Index i = 0; i < n; ++i) {
    const double c = resid[i] - mean;
    m2 += c * c;
    m3 += c * c * c;
    m4 += c * c * c * c;
  }
  m2 /= n;
  m3 /= n;
  m4 /= n;
  if (m2 <= 0.0) return true;
  const double skew = m3 / std::pow(m2, 1.5);
  const double kurt = m4 / (m2 * m2);
  const double jb = n / 6.0 * (skew * skew + 0.25 * (kurt - 3.0) * (kurt - 3.0));
  return jb > 5.991;  // chi-square(2), 5%
}

}  // namespace riwtl
