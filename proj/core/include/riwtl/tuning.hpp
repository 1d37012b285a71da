#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "riwtl/transfer.hpp"

namespace riwtl {

// Cross-validation grid. A = M/2 throughout (and T = 3A for the uniform
// variant), so the searched axes are M, the bandwidth and lambda.
struct TuneGrid {
  std::vector<double> M_grid{1.0, 1.5, 2.0, 2.5, 3.0};
  std::vector<double> b_grid{0.1, 0.2, 0.3};
  int lambda_points = 50;
  double lambda_min_ratio = 0.001;
  int folds = 5;

  enum class Link { M_2A, M_2A_2T3 };
  Link link = Link::M_2A;

  void validate(Index n0) const;
};

struct TuneScoreRow {
  double M = 0.0;
  double bandwidth = 0.0;
  double lambda = 0.0;
  double score = 0.0;
  bool failed = false;
};

struct TuneResult {
  std::string method;
  RiwConfig chosen;
  double chosen_score = 0.0;
  std::vector<TuneScoreRow> table;
  double lambda_w = 0.0;  // pooled-stage lambda (trans-lasso only)
};

// J-fold cross validation over the target data; sources enter every fold's
// training fit whole. Returns the grid point minimizing mean held-out target
// prediction error, ties broken toward smaller M, then smaller bandwidth,
// then larger lambda. Grid points whose fit fails score +inf and stay in the
// table. `informative` applies to trans-lasso only and is used exactly as
// given; an empty set degenerates to the target LASSO.
TuneResult cv_tune(const TransferProblem& problem, const std::string& method,
                   const TuneGrid& grid, std::uint64_t seed, const SolverOptions& opts,
                   const std::vector<int>& informative = {});

// ||(1/N) X' diag(w) y||_inf, the smallest lambda with an all-zero solution.
double lambda_max(const Matrix& x, const Vector& y, const Vector& weights, double denom);

// Fold id per target row; depends only on (seed, n0, folds).
std::vector<int> cv_fold_assignment(Index n0, int folds, std::uint64_t seed);

}  // namespace riwtl
