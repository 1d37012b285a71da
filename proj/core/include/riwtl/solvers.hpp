#pragma once

#include <optional>
#include <vector>

#include "riwtl/types.hpp"

namespace riwtl {

// Penalized weighted least squares:
//   (1/2N) sum_i w_i (y_i - x_i' beta)^2 + lambda ||beta||_1
// where N = denom is the total contributing sample count, which may exceed
// the number of rows with nonzero weight.
struct WeightedProblem {
  Matrix x;
  Vector y;
  Vector obs_weights;
  double denom = 0.0;
  double lambda = 0.0;

  void validate() const;
};

struct SolverOptions {
  int max_iter = 10000;
  double tol = 1e-7;  // max absolute coordinate change per sweep
  bool standardize = true;
  std::optional<Vector> warm_start;
};

struct SolveInfo {
  int iterations = 0;
  double kkt_violation = 0.0;
  bool lambda_zero_underdetermined = false;
};

// sign(z) * max(|z| - gamma, 0).
double soft_threshold(double z, double gamma);

// Cyclic coordinate descent for one weighted-LASSO problem. Construction
// standardizes columns to unit weighted second moment (when enabled) and
// keeps them for repeated solves along a lambda grid; solve() warm-starts
// from the previous solution unless an explicit start is given.
class WeightedLassoSolver {
 public:
  WeightedLassoSolver(const Matrix& x, const Vector& y, const Vector& obs_weights,
                      double denom, const SolverOptions& opts);

  Vector solve(double lambda);
  Vector solve(double lambda, const Vector& warm_start);

  const SolveInfo& last_info() const { return info_; }

  // Smallest lambda whose solution is the zero vector.
  double lambda_max() const;

 private:
  Vector solve_impl(double lambda);
  bool polish(double lambda, double kkt_target);

  SolverOptions opts_;
  Index n_ = 0, p_ = 0;
  double denom_ = 0.0;
  Eigen::MatrixXd cols_;   // column-major working copy, scaled
  Vector y_;
  Vector w_;
  Vector scale_;           // per-column divisor (1 when unscaled)
  Vector curvature_;       // (1/N) sum_i w_i u_ij^2 on the working columns
  Vector beta_scaled_;     // persistent iterate for warm starts
  Vector resid_;
  SolveInfo info_;
};

Vector fit_weighted_lasso(const WeightedProblem& prob, const SolverOptions& opts,
                          SolveInfo* info = nullptr);

// SCAD-penalized least squares via coordinate descent with the exact
// univariate SCAD minimizer per coordinate, initialized at the LASSO
// solution with the same lambda. Objective normalizer is 1/(2n).
Vector fit_scad(const Matrix& x, const Vector& y, double lambda, double a,
                const SolverOptions& opts, SolveInfo* info = nullptr);

// Warm-started solutions along a strictly decreasing lambda grid, unit
// weights, denom = n.
std::vector<Vector> lasso_path(const Matrix& x, const Vector& y,
                               const std::vector<double>& lambda_grid,
                               const SolverOptions& opts);

// Objective value of the weighted-LASSO problem at beta.
double weighted_lasso_objective(const WeightedProblem& prob, const Vector& beta);

// Max subgradient violation of the KKT conditions at beta: for inactive
// coordinates max(|g_j| - lambda, 0), for active ones |g_j - lambda sign(beta_j)|,
// with g = (1/N) X' diag(w) (y - X beta).
double kkt_violation(const WeightedProblem& prob, const Vector& beta);

// SCAD penalty value at t >= 0 (helper shared with tests).
double scad_penalty(double t, double lambda, double a);

}  // namespace riwtl
