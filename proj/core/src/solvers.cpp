#include "riwtl/solvers.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>
#include <limits>

namespace riwtl {

namespace {

// Row-ordered accumulation keeps zero-weight rows exact no-ops, so deleting
// them (with denom held fixed) cannot perturb the iterates.
double weighted_col_dot(const Eigen::MatrixXd& cols, Index j, const Vector& w,
                        const Vector& v) {
  const double* cj = cols.col(j).data();
  double acc = 0.0;
  for (Index i = 0; i < v.size(); ++i) acc += w[i] * cj[i] * v[i];
  return acc;
}

double weighted_col_sq(const Eigen::MatrixXd& cols, Index j, const Vector& w) {
  const double* cj = cols.col(j).data();
  double acc = 0.0;
  for (Index i = 0; i < w.size(); ++i) acc += w[i] * cj[i] * cj[i];
  return acc;
}

}  // namespace

void WeightedProblem::validate() const {
  if (x.rows() != y.size())
    throw DimensionError("WeightedProblem: x rows != y length");
  if (obs_weights.size() != x.rows())
    throw DimensionError("WeightedProblem: weight length != x rows");
  if (!x.allFinite() || !y.allFinite())
    throw DataError("WeightedProblem: non-finite data");
  if (!obs_weights.allFinite())
    throw DataError("WeightedProblem: non-finite weights");
  if ((obs_weights.array() < 0.0).any())
    throw DataError("WeightedProblem: negative observation weight");
  if ((obs_weights.array() == 0.0).all())
    throw DegenerateProblemError("WeightedProblem: all observation weights are zero");
  if (denom <= 0.0) throw ConfigError("WeightedProblem: denom must be positive");
  if (lambda < 0.0) throw ConfigError("WeightedProblem: lambda must be nonnegative");
}

double soft_threshold(double z, double gamma) {
  if (z > gamma) return z - gamma;
  if (z < -gamma) return z + gamma;
  return 0.0;
}

WeightedLassoSolver::WeightedLassoSolver(const Matrix& x, const Vector& y,
                                         const Vector& obs_weights, double denom,
                                         const SolverOptions& opts)
    : opts_(opts), n_(x.rows()), p_(x.cols()), denom_(denom), y_(y), w_(obs_weights) {
  WeightedProblem probe{x, y, obs_weights, denom, 0.0};
  probe.validate();
  if (opts_.tol <= 0.0) throw ConfigError("SolverOptions: tol must be positive");
  if (opts_.max_iter <= 0) throw ConfigError("SolverOptions: max_iter must be positive");

  cols_ = x;  // row-major to column-major copy
  scale_ = Vector::Ones(p_);
  curvature_ = Vector::Zero(p_);
  for (Index j = 0; j < p_; ++j) {
    const double sq = weighted_col_sq(cols_, j, w_) / denom_;
    if (opts_.standardize) {
      if (sq > 0.0) {
        scale_[j] = std::sqrt(sq);
        cols_.col(j) /= scale_[j];
        curvature_[j] = 1.0;
      } else {
        curvature_[j] = 0.0;  // column pinned at zero
      }
    } else {
      curvature_[j] = sq;
    }
  }
  beta_scaled_ = Vector::Zero(p_);
  resid_ = y_;
}

Vector WeightedLassoSolver::solve(double lambda) { return solve_impl(lambda); }

Vector WeightedLassoSolver::solve(double lambda, const Vector& warm_start) {
  if (warm_start.size() != p_)
    throw DimensionError("warm start length differs from column count");
  beta_scaled_ = warm_start.cwiseProduct(scale_);
  for (Index j = 0; j < p_; ++j)
    if (curvature_[j] == 0.0) beta_scaled_[j] = 0.0;
  resid_ = y_ - cols_ * beta_scaled_;
  return solve_impl(lambda);
}

double WeightedLassoSolver::lambda_max() const {
  double m = 0.0;
  for (Index j = 0; j < p_; ++j) {
    if (curvature_[j] == 0.0 && opts_.standardize) continue;
    const double g = std::abs(weighted_col_dot(cols_, j, w_, y_) / denom_) * scale_[j];
    m = std::max(m, g);
  }
  return m;
}

// Exact solve of the sign-restricted KKT system on the current active set,
// LARS style: drop coordinates whose sign flips, add the worst violator,
// repeat. Rescues coordinate descent when one enormous weight makes every
// weighted column correlation close to one and plain sweeps crawl.
bool WeightedLassoSolver::polish(double lambda, double kkt_target) {
  // Objective guard: anything the restricted solves do is kept only if the
  // penalized objective does not get worse.
  auto objective = [&]() {
    double loss = 0.0;
    for (Index i = 0; i < n_; ++i) loss += w_[i] * resid_[i] * resid_[i];
    double pen = 0.0;
    for (Index j = 0; j < p_; ++j)
      pen += std::abs(beta_scaled_[j]) * (lambda / scale_[j]);
    return loss / (2.0 * denom_) + pen;
  };
  const Vector beta_entry = beta_scaled_;
  const Vector resid_entry = resid_;
  const double obj_entry = objective();
  auto revert = [&]() {
    beta_scaled_ = beta_entry;
    resid_ = resid_entry;
    return false;
  };

  std::vector<Index> active;
  std::vector<double> sign;
  for (Index j = 0; j < p_; ++j)
    if (beta_scaled_[j] != 0.0) {
      active.push_back(j);
      sign.push_back(beta_scaled_[j] > 0 ? 1.0 : -1.0);
    }

  for (int step = 0; step < 100; ++step) {
    const Index m = static_cast<Index>(active.size());
    if (m > 0) {
      Eigen::MatrixXd gram(m, m);
      Eigen::VectorXd rhs(m);
      for (Index a = 0; a < m; ++a) {
        const double* ca = cols_.col(active[a]).data();
        for (Index b = a; b < m; ++b) {
          const double* cb = cols_.col(active[b]).data();
          double acc = 0.0;
          for (Index i = 0; i < n_; ++i) acc += w_[i] * ca[i] * cb[i];
          gram(a, b) = gram(b, a) = acc / denom_;
        }
        double g = 0.0;
        for (Index i = 0; i < n_; ++i) g += w_[i] * ca[i] * y_[i];
        rhs[a] = g / denom_ - (lambda / scale_[active[a]]) * sign[a];
      }
      Eigen::LDLT<Eigen::MatrixXd> ldlt(gram);
      if (ldlt.info() != Eigen::Success) return revert();
      Eigen::VectorXd sol = ldlt.solve(rhs);
      if (!sol.allFinite()) return revert();
      for (int refine = 0; refine < 3; ++refine)
        sol += ldlt.solve(rhs - gram * sol);
      if (!sol.allFinite()) return revert();

      // walk toward the solve, stopping at the first sign flip
      Index flip = -1;
      double t = 1.0;
      for (Index a = 0; a < m; ++a) {
        const double cur = beta_scaled_[active[a]];
        if (sol[a] * sign[a] > 0.0) continue;
        const double ta = (cur - sol[a] != 0.0) ? cur / (cur - sol[a]) : 0.0;
        if (ta < t) {
          t = ta;
          flip = a;
        }
      }
      if (flip >= 0) {
        for (Index a = 0; a < m; ++a)
          beta_scaled_[active[a]] += t * (sol[a] - beta_scaled_[active[a]]);
        beta_scaled_[active[flip]] = 0.0;
        active.erase(active.begin() + flip);
        sign.erase(sign.begin() + flip);
        resid_ = y_ - cols_ * beta_scaled_;
        continue;
      }
      for (Index a = 0; a < m; ++a) beta_scaled_[active[a]] = sol[a];
      resid_ = y_ - cols_ * beta_scaled_;
    }

    // global subgradient check; pick the worst violator to activate
    Index worst = -1;
    double worst_excess = 0.0, worst_g = 0.0;
    for (Index j = 0; j < p_; ++j) {
      if (curvature_[j] == 0.0 || beta_scaled_[j] != 0.0) continue;
      const double* cj = cols_.col(j).data();
      double g = 0.0, mass = 0.0;
      for (Index i = 0; i < n_; ++i) {
        const double term = w_[i] * cj[i] * resid_[i];
        g += term;
        mass += std::abs(term);
      }
      g = g / denom_ * scale_[j];
      mass = mass / denom_ * scale_[j];
      const double excess = std::abs(g) - lambda - 1e-12 * mass;
      if (excess > kkt_target && excess > worst_excess) {
        worst = j;
        worst_excess = excess;
        worst_g = g;
      }
    }
    if (worst < 0) {
      if (objective() > obj_entry + 1e-12 * (1.0 + std::abs(obj_entry))) return revert();
      return true;
    }
    active.push_back(worst);
    sign.push_back(worst_g > 0 ? 1.0 : -1.0);
  }
  if (objective() > obj_entry + 1e-12 * (1.0 + std::abs(obj_entry))) return revert();
  return false;
}

Vector WeightedLassoSolver::solve_impl(double lambda) {
  if (lambda < 0.0) throw ConfigError("fit_weighted_lasso: lambda must be nonnegative");
  info_ = SolveInfo{};
  info_.lambda_zero_underdetermined = (lambda == 0.0 && p_ > n_);

  const double kkt_target = 5.0 * opts_.tol;
  int polish_budget = 50;
  bool converged = false;
  int iter = 0;
  for (; iter < opts_.max_iter; ++iter) {
    double max_change = 0.0;
    for (Index j = 0; j < p_; ++j) {
      const double v = curvature_[j];
      if (v == 0.0) continue;
      const double old = beta_scaled_[j];
      const double z = weighted_col_dot(cols_, j, w_, resid_) / denom_ + v * old;
      // effective penalty on the scaled coordinate keeps the original
      // objective intact: |beta_j| = |beta_scaled_j| / scale_j
      const double gamma = lambda / scale_[j];
      const double next = soft_threshold(z, gamma) / v;
      if (next != old) {
        const double delta = next - old;
        const double* cj = cols_.col(j).data();
        for (Index i = 0; i < n_; ++i) resid_[i] -= cj[i] * delta;
        beta_scaled_[j] = next;
        max_change = std::max(max_change, std::abs(delta));
      }
    }
    if (max_change < opts_.tol) {
      // Coordinate moves have settled; confirm the subgradient conditions in
      // the original scale before declaring victory. Each column gets an
      // allowance for summation noise proportional to the absolute mass of
      // its gradient sum, so rows with enormous weights cannot stall the
      // check below floating-point resolution.
      double viol = 0.0;
      bool ok = true;
      for (Index j = 0; j < p_; ++j) {
        if (curvature_[j] == 0.0) continue;
        const double* cj = cols_.col(j).data();
        double g = 0.0, mass = 0.0;
        for (Index i = 0; i < n_; ++i) {
          const double term = w_[i] * cj[i] * resid_[i];
          g += term;
          mass += std::abs(term);
        }
        g = g / denom_ * scale_[j];
        mass = mass / denom_ * scale_[j];
        double v;
        if (beta_scaled_[j] != 0.0)
          v = std::abs(g - lambda * (beta_scaled_[j] > 0 ? 1.0 : -1.0));
        else
          v = std::max(std::abs(g) - lambda, 0.0);
        viol = std::max(viol, v);
        if (v > kkt_target + 1e-12 * mass) ok = false;
      }
      info_.kkt_violation = viol;
      if (ok) {
        converged = true;
        ++iter;
        break;
      }
      if (polish_budget > 0) {
        --polish_budget;
        polish(lambda, kkt_target);
      }
    } else if ((iter + 1) % 50 == 0 && polish_budget > 0) {
      // long crawls happen when one weighted row dominates the geometry;
      // jump to the restricted KKT solve instead of sweeping forever
      --polish_budget;
      polish(lambda, kkt_target);
    }
  }
  info_.iterations = iter;
  Vector beta = beta_scaled_.cwiseQuotient(scale_);
  if (!converged)
    throw ConvergenceError("fit_weighted_lasso: no convergence after " +
                               std::to_string(opts_.max_iter) + " sweeps",
                           beta);
  return beta;
}

Vector fit_weighted_lasso(const WeightedProblem& prob, const SolverOptions& opts,
                          SolveInfo* info) {
  prob.validate();
  WeightedLassoSolver solver(prob.x, prob.y, prob.obs_weights, prob.denom, opts);
  Vector beta = opts.warm_start ? solver.solve(prob.lambda, *opts.warm_start)
                                : solver.solve(prob.lambda);
  if (info) *info = solver.last_info();
  return beta;
}

double scad_penalty(double t, double lambda, double a) {
  t = std::abs(t);
  if (t <= lambda) return lambda * t;
  if (t <= a * lambda)
    return (2.0 * a * lambda * t - t * t - lambda * lambda) / (2.0 * (a - 1.0));
  return lambda * lambda * (a + 1.0) / 2.0;
}

namespace {

// Exact minimizer of (v/2)(t - u)^2 + SCAD_{lambda,a}(|t|) over t.
double scad_univariate(double u, double v, double lambda, double a) {
  if (lambda == 0.0) return u;
  const double flip = (u < 0.0) ? -1.0 : 1.0;
  u = std::abs(u);

  auto q = [&](double t) { return 0.5 * v * (t - u) * (t - u) + scad_penalty(t, lambda, a); };

  double best_t = 0.0;
  double best_q = q(0.0);
  auto consider = [&](double t) {
    if (t < 0.0) return;
    const double val = q(t);
    if (val < best_q) {
      best_q = val;
      best_t = t;
    }
  };

  consider(std::clamp(u - lambda / v, 0.0, lambda));
  consider(lambda);
  const double denom2 = v * (a - 1.0) - 1.0;
  if (denom2 != 0.0)
    consider(std::clamp((v * u * (a - 1.0) - a * lambda) / denom2, lambda, a * lambda));
  consider(a * lambda);
  consider(std::max(u, a * lambda));

  return flip * best_t;
}

}  // namespace

Vector fit_scad(const Matrix& x, const Vector& y, double lambda, double a,
                const SolverOptions& opts, SolveInfo* info) {
  if (a <= 2.0) throw ConfigError("fit_scad: concavity parameter a must exceed 2");
  if (lambda < 0.0) throw ConfigError("fit_scad: lambda must be nonnegative");
  const Index n = x.rows(), p = x.cols();
  const Vector ones = Vector::Ones(n);

  // LASSO solution at the same lambda as starting point.
  WeightedLassoSolver lasso(x, y, ones, static_cast<double>(n), opts);
  Vector beta = opts.warm_start ? lasso.solve(lambda, *opts.warm_start) : lasso.solve(lambda);

  Eigen::MatrixXd cols = x;
  Vector curvature(p);
  for (Index j = 0; j < p; ++j)
    curvature[j] = cols.col(j).squaredNorm() / static_cast<double>(n);
  Vector resid = y - cols * beta;

  auto objective = [&]() {
    double obj = resid.squaredNorm() / (2.0 * static_cast<double>(n));
    for (Index j = 0; j < p; ++j) obj += scad_penalty(beta[j], lambda, a);
    return obj;
  };

  bool converged = false;
  int iter = 0;
  double prev_obj = objective();
  for (; iter < opts.max_iter; ++iter) {
    double max_change = 0.0;
    for (Index j = 0; j < p; ++j) {
      const double v = curvature[j];
      if (v == 0.0) {
        beta[j] = 0.0;
        continue;
      }
      const double old = beta[j];
      const double z = cols.col(j).dot(resid) / static_cast<double>(n) + v * old;
      const double next = scad_univariate(z / v, v, lambda, a);
      if (next != old) {
        const double delta = next - old;
        resid -= cols.col(j) * delta;
        beta[j] = next;
        max_change = std::max(max_change, std::abs(delta));
      }
    }
    if (max_change < opts.tol) {
      converged = true;
      ++iter;
      break;
    }
    // Every coordinate step minimizes its univariate objective exactly, so
    // the objective is non-increasing; ties between equal-value minimizers
    // can keep coordinates moving forever, which this cutoff absorbs.
    const double obj = objective();
    if (prev_obj - obj < 1e-12 * (1.0 + std::abs(obj))) {
      converged = true;
      ++iter;
      break;
    }
    prev_obj = obj;
  }
  if (info) {
    info->iterations = iter;
    info->kkt_violation = 0.0;
    info->lambda_zero_underdetermined = (lambda == 0.0 && p > n);
  }
  if (!converged)
    throw ConvergenceError("fit_scad: no convergence after " + std::to_string(opts.max_iter) +
                               " sweeps",
                           beta);
  return beta;
}

std::vector<Vector> lasso_path(const Matrix& x, const Vector& y,
                               const std::vector<double>& lambda_grid,
                               const SolverOptions& opts) {
  if (lambda_grid.empty()) throw ConfigError("lasso_path: empty lambda grid");
  for (std::size_t i = 1; i < lambda_grid.size(); ++i)
    if (!(lambda_grid[i] < lambda_grid[i - 1]))
      throw ConfigError("lasso_path: lambda grid must be strictly decreasing");

  WeightedLassoSolver solver(x, y, Vector::Ones(x.rows()),
                             static_cast<double>(x.rows()), opts);
  std::vector<Vector> out;
  out.reserve(lambda_grid.size());
  bool first = true;
  for (double lambda : lambda_grid) {
    if (first && opts.warm_start) {
      out.push_back(solver.solve(lambda, *opts.warm_start));
    } else {
      out.push_back(solver.solve(lambda));
    }
    first = false;
  }
  return out;
}

double weighted_lasso_objective(const WeightedProblem& prob, const Vector& beta) {
  const Vector r = prob.y - prob.x * beta;
  double loss = 0.0;
  for (Index i = 0; i < r.size(); ++i) loss += prob.obs_weights[i] * r[i] * r[i];
  return loss / (2.0 * prob.denom) + prob.lambda * beta.lpNorm<1>();
}

double kkt_violation(const WeightedProblem& prob, const Vector& beta) {
  const Vector r = prob.y - prob.x * beta;
  double viol = 0.0;
  for (Index j = 0; j < prob.x.cols(); ++j) {
    double g = 0.0;
    for (Index i = 0; i < prob.x.rows(); ++i)
      g += prob.obs_weights[i] * prob.x(i, j) * r[i];
    g /= prob.denom;
    if (beta[j] != 0.0)
      viol = std::max(viol, std::abs(g - prob.lambda * (beta[j] > 0 ? 1.0 : -1.0)));
    else
      viol = std::max(viol, std::max(std::abs(g) - prob.lambda, 0.0));
  }
  return viol;
}

}  // namespace riwtl
