#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "riwtl/transfer.hpp"
#include "riwtl/tuning.hpp"

namespace riwtl {

enum class CovariateKind { gaussian_ar, gaussian_mixture, student_t };
enum class SimErrorKind { gaussian, student_t5 };
enum class CoefScheme { fixed_magnitude, random_magnitude };

struct CovariateSpec {
  CovariateKind kind = CovariateKind::gaussian_ar;
  double rho = 0.5;  // AR correlation of the covariance (0.5^{|l-l'|})
  int t_df = 5;      // student_t covariates only
};

// Simulation design. Default-constructed values are the desk scale used in
// CI; paper_scale() gives the full published design.
struct SimConfig {
  int p = 100;
  int n0 = 100;
  int K = 4;
  std::vector<int> n_k;  // per-source rows; empty means all equal n_k_default
  int n_k_default = 300;
  int s0 = 10;
  CovariateSpec target_cov{};
  CovariateSpec source_cov{};
  SimErrorKind target_err = SimErrorKind::gaussian;
  SimErrorKind source_err = SimErrorKind::gaussian;
  CoefScheme scheme = CoefScheme::fixed_magnitude;
  int m_B = 0;
  int d = 0;
  int replicates = 20;
  std::uint64_t seed = 1;

  static SimConfig paper_scale();

  int source_rows(int k) const;  // k in 1..K
  std::string shift_tag() const;
  void validate() const;
};

// n x p draw. gaussian_ar takes the Cholesky factor of (rho^{|l-l'|});
// student_t matches the covariance to that matrix; gaussian_mixture is the
// equal-weight three-component shift with means -4, 0 and 2 on every
// coordinate.
Matrix gen_covariates(const CovariateSpec& spec, Index n, Index p, std::uint64_t stream);

struct CoefficientSet {
  Vector beta0;
  std::vector<Vector> betas;
};

// beta0 = (1,...,1,0,...,0) with s0 ones. Sources in the informative block
// [m_B] drop d entries beyond the support by 0.5 (or by U(0,1) draws under
// random_magnitude); the rest drop the whole support by 1 plus 2*s0 random
// entries by 0.5 (or U(0,1)).
CoefficientSet gen_coefficients(CoefScheme scheme, int K, Index p, Index s0, int m_B, int d,
                                std::uint64_t stream);

TransferProblem gen_problem(const SimConfig& cfg, int replicate);

// ||beta_hat - beta0||^2.
double sse(const Vector& beta_hat, const Vector& beta0);

// (n0 + total selected source rows) / (n0 + total source rows); falls back
// to the value recorded on the fit when it carries no selection records.
double sur(const FitResult& fit, const TransferProblem& problem);

struct SelectionMetrics {
  double sparsity_rate = 0.0;             // S
  std::optional<double> positive_rate;    // PR, missing when LASSO selects nothing
  std::optional<double> negative_rate;    // NR, missing when LASSO selects everything
};

SelectionMetrics selection_metrics(const Vector& beta_check, const Vector& beta_lasso);

double relative_prediction_error(double method_pe, double lasso_pe);

// Sources whose estimated contrast ||delta_hat||_1 falls below the threshold
// (default 2 * max(1, nnz(beta0_hat)) * sqrt(log p / n0)), with the initial
// fits obtained by CV-tuned SCAD on each full dataset.
std::vector<int> informative_by_contrast(const TransferProblem& problem,
                                         const SolverOptions& opts, std::uint64_t seed,
                                         std::optional<double> threshold = std::nullopt);

struct SweepCell {
  int m_B = 0;
  int d = 0;
};

enum class TunePolicy {
  fixed,            // use the grid's first M/b and a target-CV lambda, no search
  first_replicate,  // cv_tune on replicate 0, reuse for all replicates
  full              // cv_tune on every replicate
};

struct ReplicateOutcome {
  int replicate = 0;
  std::string method;
  bool failed = false;
  std::string error;
  double sse = 0.0;
  double sur = 0.0;
  std::optional<double> rpe;
};

struct MethodCellStats {
  std::string method;
  double sse_mean = 0.0, sse_std = 0.0;
  double sur_mean = 0.0, sur_std = 0.0;
  std::optional<double> rpe_mean;
  int failures = 0;
};

struct CellOutcome {
  SweepCell cell;
  std::string shift;
  std::vector<ReplicateOutcome> rows;  // replicate-major, fixed order
  std::vector<MethodCellStats> summary;
  bool flagged = false;  // more than 10% of replicates failed for some method
};

struct ExperimentResult {
  SimConfig config;
  std::vector<std::string> methods;
  std::vector<CellOutcome> cells;
};

// Replicate-averaged SSE/SUR per cell and method. Replicates are
// independent tasks; the merge is deterministic in (seed, cell, replicate)
// regardless of the thread count.
ExperimentResult run_sweep(const SimConfig& cfg, const std::vector<std::string>& methods,
                           const std::vector<SweepCell>& cells, const TuneGrid& grid,
                           TunePolicy policy, int threads, const SolverOptions& opts);

// Inclusion-probability experiment: a single mixture-covariate source,
// contrasts 0.2 per coordinate over l coordinates past the support, true
// residual/eta selection at the given thresholds, frequencies binned by
// ||delta||_1 and ||x_i||_inf.
struct Fig1Config {
  Index p = 100;
  Index s0 = 5;
  Index n1 = 2000;
  double rho = 0.5;
  double coef_step = 0.2;
  std::vector<int> l_grid{5, 10, 15, 20, 25, 30, 35, 40, 45};
  std::uint64_t seed = 1;
};

struct FrequencyGrid {
  std::vector<double> delta_edges;
  std::vector<double> xinf_edges;
  Matrix included;  // delta bins x xinf bins
  Matrix total;

  std::optional<double> frequency(Index delta_bin, Index xinf_bin) const;
};

std::vector<double> default_fig1_delta_edges();
std::vector<double> default_fig1_xinf_edges();

FrequencyGrid inclusion_probability_grid(const Fig1Config& cfg, double A, double M,
                                         const std::vector<double>& delta_edges,
                                         const std::vector<double>& xinf_edges,
                                         int replicates);

// Explicit lower bound on P(i in I_k) for standard Gaussian errors and
// Gaussian covariates with quadratic contrast d:
//   exp(-A M) * d/(d^2+1) * (1 - exp(-((d^2+1)/(2 d^2)) * phi^2)), phi = min(A, M).
double inclusion_probability_lower_bound(double d, double A, double M);

// Jarque-Bera style normality flag: true when the residuals look
// incompatible with a normal law at the 5% level.
bool residuals_non_normal_flag(const Vector& resid);

}  // namespace riwtl
