#include "riwtl/types.hpp"

#include <cmath>
#include <utility>

namespace riwtl {

namespace {

void require_finite(const Matrix& x, const Vector& y) {
  if (!x.allFinite()) throw DataError("Dataset: design matrix has non-finite entries");
  if (!y.allFinite()) throw DataError("Dataset: response has non-finite entries");
}

}  // namespace

Dataset::Dataset(Matrix x_in, Vector y_in) : x(std::move(x_in)), y(std::move(y_in)) {
  if (x.rows() != y.size())
    throw DimensionError("Dataset: row count of x (" + std::to_string(x.rows()) +
                         ") does not match length of y (" + std::to_string(y.size()) + ")");
  if (x.rows() == 0) throw DataError("Dataset: empty dataset");
  require_finite(x, y);
}

double noise_pdf(const NoiseSpec& spec, double t) {
  switch (spec.kind) {
    case NoiseSpec::Kind::gaussian: {
      const double s = spec.param;
      const double z = t / s;
      return std::exp(-0.5 * z * z) / (s * 2.50662827463100050242);
    }
    case NoiseSpec::Kind::student_t: {
      const double v = spec.param;
      const double c =
          std::exp(std::lgamma(0.5 * (v + 1.0)) - std::lgamma(0.5 * v)) / std::sqrt(v * M_PI);
      return c * std::pow(1.0 + t * t / v, -0.5 * (v + 1.0));
    }
  }
  return 0.0;
}

TruthSpec::TruthSpec(Vector beta0_in, std::vector<Vector> betas_in,
                     std::vector<NoiseSpec> noise_in)
    : beta0(std::move(beta0_in)), betas(std::move(betas_in)), noise(std::move(noise_in)) {
  if (noise.size() != betas.size() + 1)
    throw DimensionError("TruthSpec: need one noise spec per dataset (target + sources)");
  for (const auto& b : betas)
    if (b.size() != beta0.size())
      throw DimensionError("TruthSpec: source coefficient length differs from beta0");
  for (Index j = 0; j < beta0.size(); ++j)
    if (beta0[j] != 0.0) support0.push_back(j);
  s0 = static_cast<Index>(support0.size());
}

TransferProblem::TransferProblem(Dataset target_in, std::vector<Dataset> sources_in,
                                 std::optional<TruthSpec> truth_in)
    : target(std::move(target_in)), sources(std::move(sources_in)), truth(std::move(truth_in)) {
  for (const auto& s : sources)
    if (s.p() != target.p())
      throw DimensionError("TransferProblem: all datasets must share the column count");
  if (truth) {
    if (truth->beta0.size() != target.p())
      throw DimensionError("TransferProblem: truth beta0 length differs from p");
    if (truth->betas.size() != sources.size())
      throw DimensionError("TransferProblem: truth needs one coefficient vector per source");
  }
}

Index TransferProblem::total_source_rows() const {
  Index total = 0;
  for (const auto& s : sources) total += s.n();
  return total;
}

Vector contrast(const Vector& beta_k, const Vector& beta0) {
  if (beta_k.size() != beta0.size())
    throw DimensionError("contrast: vector lengths differ (" + std::to_string(beta_k.size()) +
                         " vs " + std::to_string(beta0.size()) + ")");
  return beta_k - beta0;
}

Vector residuals(const Dataset& d, const Vector& beta) {
  if (beta.size() != d.p())
    throw DimensionError("residuals: coefficient length differs from column count");
  return d.y - d.x * beta;
}

}  // namespace riwtl
