#pragma once

#include <cstdint>
#include <vector>

#include "riwtl/density.hpp"
#include "riwtl/solvers.hpp"
#include "riwtl/types.hpp"

namespace riwtl {

enum class WeightVariant { kde, parametric_gaussian, uniform };

struct RiwConfig {
  double A = 1.0;
  double M = 2.0;        // default link M = 2A
  double bandwidth = 0.2;
  double lambda = 0.0;
  WeightVariant variant = WeightVariant::kde;
  double T = 3.0;        // uniform numerator half-width; M = 2A = 2T/3 link
  double theta0 = 0.0;   // estimated-set slack for the uniform variant
  std::uint64_t split_seed = 0;

  void validate() const;
};

// Three-way split of every dataset's row indices, sizes differing by at most
// one. Rotation r uses part (0+r)%3 for initial fits, (1+r)%3 for density
// fits and (2+r)%3 for selection and the weighted solve.
struct SplitPlan {
  std::vector<std::array<std::vector<Index>, 3>> parts;  // [0] = target, [k] = source k

  static SplitPlan make(const TransferProblem& problem, std::uint64_t seed);

  const std::vector<Index>& role_initial(Index k, int rotation) const {
    return parts[k][rotation % 3];
  }
  const std::vector<Index>& role_density(Index k, int rotation) const {
    return parts[k][(rotation + 1) % 3];
  }
  const std::vector<Index>& role_solve(Index k, int rotation) const {
    return parts[k][(rotation + 2) % 3];
  }
};

// Everything one rotation pass precomputes before thresholds and bandwidth
// enter: SCAD initial fits on the initial part (lambda tuned by 5-fold CV on
// that part) and source residuals on the density part.
struct RotationContext {
  int rotation = 0;
  std::vector<Vector> beta_init;      // size K+1
  std::vector<Vector> density_resid;  // size K+1, [0] unused
};

RotationContext make_rotation_context(const TransferProblem& problem, const SplitPlan& plan,
                                      int rotation, const SolverOptions& opts,
                                      std::uint64_t split_seed);

// One pass's weighted-LASSO rows: target solve-part rows at weight one plus
// the selected source rows at their estimated weights. prob.lambda is left
// at zero for the caller to set.
struct AssembledPass {
  WeightedProblem prob;
  std::vector<SelectionRecord> records;  // one per source
  Index target_rows = 0;
  std::vector<std::string> diagnostics;
};

AssembledPass assemble_pass(const TransferProblem& problem, const SplitPlan& plan,
                            const RotationContext& ctx, const RiwConfig& cfg);

// f_eps(eps_plus_eta) / f_k(eps); throws WeightUndefinedError when the
// denominator vanishes at the evaluation point.
double true_weight(const DensityModel& f_eps, const DensityModel& f_k, double eps_plus_eta,
                   double eps);

// SCAD fit with lambda picked by 5-fold CV on the given rows; the fold
// assignment is a pure function of fold_stream.
Vector fit_initial_scad(const Matrix& x, const Vector& y, const SolverOptions& opts,
                        std::uint64_t fold_stream);

// Retains i with |y_i - x_i' beta0_tilde| <= A and |eta_i| <= M, where
// eta_i = x_i' (betak_tilde - beta0_tilde). Stores eta and the target-scale
// residual for the whole subset so the thresholds can be re-checked.
SelectionRecord select_samples(const Dataset& source, const Vector& beta0_tilde,
                               const Vector& betak_tilde, double A, double M,
                               const std::vector<Index>& subset, int source_index = 0);

// Same, but the first constraint bounds the source-scale residual
// |y_i - x_i' betak_tilde| <= A.
SelectionRecord select_samples_u(const Dataset& source, const Vector& beta0_tilde,
                                 const Vector& betak_tilde, double A, double M,
                                 const std::vector<Index>& subset, int source_index = 0);

// Cross-fitting estimator with estimated weights. cfg.variant selects the
// KDE or the parametric-Gaussian denominator; the numerator is the
// symmetrized denominator density.
FitResult fit_riw_tl(const TransferProblem& problem, const RiwConfig& cfg,
                     const SolverOptions& opts);

// Variant with a uniform numerator on [-T, T], source-scale selection and
// indicator weights 1 / (2 T f_k(eps_hat)) I(|eps_hat + eta_hat| <= T).
FitResult fit_riw_tl_u(const TransferProblem& problem, const RiwConfig& cfg,
                       const SolverOptions& opts);

// Single weighted solve with true selection sets and true density-ratio
// weights from the problem's TruthSpec; no sample splitting.
FitResult fit_oracle_riw_tl(const TransferProblem& problem, double A, double M, double lambda,
                            const SolverOptions& opts);

// Two-step estimator given a known informative source set (1-based indices):
// a LASSO on the pooled informative sources followed by an l1-penalized
// correction on the target.
FitResult fit_trans_lasso_oracle(const TransferProblem& problem,
                                 const std::vector<int>& informative, double lambda_w,
                                 double lambda_delta, const SolverOptions& opts);

// Target-only LASSO baseline.
FitResult fit_lasso_target(const TransferProblem& problem, double lambda,
                           const SolverOptions& opts);

}  // namespace riwtl
