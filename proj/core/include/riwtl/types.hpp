#pragma once

#include <Eigen/Core>
#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "riwtl/errors.hpp"

namespace riwtl {

// Dense row-major storage throughout; problems stay at desk scale.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

// One design matrix and its response. No intercept anywhere: models are
// intercept-free with (optionally) centered predictors, so centering is an
// ingestion preprocessing step, never part of the estimators.
struct Dataset {
  Matrix x;
  Vector y;

  Dataset(Matrix x_in, Vector y_in);

  Index n() const { return x.rows(); }
  Index p() const { return x.cols(); }
};

// Per-dataset error distribution, used by oracle estimators and simulation.
struct NoiseSpec {
  enum class Kind { gaussian, student_t };
  Kind kind = Kind::gaussian;
  double param = 1.0;  // sigma for gaussian, degrees of freedom for student_t

  static NoiseSpec gaussian(double sigma) { return {Kind::gaussian, sigma}; }
  static NoiseSpec student_t(double df) { return {Kind::student_t, df}; }
};

// Density of the error distribution at t.
double noise_pdf(const NoiseSpec& spec, double t);

// Ground truth for simulated problems: true coefficients per dataset and the
// error law of each dataset (index 0 = target, 1..K = sources).
struct TruthSpec {
  Vector beta0;
  std::vector<Vector> betas;       // one per source
  std::vector<NoiseSpec> noise;    // size K + 1
  std::vector<Index> support0;     // nonzero indices of beta0
  Index s0 = 0;

  TruthSpec() = default;
  TruthSpec(Vector beta0_in, std::vector<Vector> betas_in, std::vector<NoiseSpec> noise_in);
};

// The target dataset plus K source datasets sharing the predictor layout.
struct TransferProblem {
  Dataset target;
  std::vector<Dataset> sources;
  std::optional<TruthSpec> truth;

  TransferProblem(Dataset target_in, std::vector<Dataset> sources_in,
                  std::optional<TruthSpec> truth_in = std::nullopt);

  Index p() const { return target.p(); }
  Index n_sources() const { return static_cast<Index>(sources.size()); }
  Index total_source_rows() const;
};

// Per-source record of which observations one estimation pass retained, the
// weights it assigned, and the quantities that produced the decision. The
// etas/residual maps cover the whole considered subset (selected or not) so
// the thresholds can be re-checked after the fact.
struct SelectionRecord {
  int source_index = 0;
  // True when the first constraint bounds the source-scale residual
  // (residual_target - eta) instead of the target-scale residual.
  bool source_scale_selection = false;
  double A = 0.0;
  double M = 0.0;
  std::optional<double> T;
  std::optional<double> theta0;
  std::vector<Index> selected;                    // sorted
  std::map<Index, double> weights;                // selected indices with w > 0
  std::map<Index, double> etas;                   // whole subset
  std::map<Index, double> residuals_target_scale; // whole subset

  double source_residual(Index i) const {
    return residuals_target_scale.at(i) - etas.at(i);
  }
};

// Chosen threshold/bandwidth combination, carried for audit.
struct TuningTrace {
  double A = 0.0;
  double M = 0.0;
  double bandwidth = 0.0;
  std::optional<double> T;
};

// Output of every estimator.
struct FitResult {
  Vector beta_hat;
  std::string method;
  double lambda = 0.0;
  std::vector<SelectionRecord> selections;
  double sur = 1.0;
  std::optional<std::array<Vector, 3>> rotation_betas;
  std::optional<TuningTrace> tuning_trace;
  std::vector<std::string> diagnostics;
};

// Entrywise difference between a source coefficient vector and the target's.
Vector contrast(const Vector& beta_k, const Vector& beta0);

// y - X beta.
Vector residuals(const Dataset& d, const Vector& beta);

}  // namespace riwtl
