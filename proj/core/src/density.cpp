#include "riwtl/density.hpp"

#include <cmath>

namespace riwtl {

namespace {
constexpr double kInvSqrt2Pi = 0.39894228040143267794;
constexpr int kSimpsonPanels = 2048;
constexpr double kSigmaFloor = 1e-8;
}  // namespace

DensityModel DensityModel::kde(Vector points, double bandwidth) {
  if (points.size() == 0) throw DataError("kde_fit: empty residual set");
  if (!(bandwidth > 0.0)) throw ConfigError("kde_fit: bandwidth must be positive");
  if (!points.allFinite()) throw DataError("kde_fit: non-finite residuals");
  DensityModel d;
  d.kind_ = Kind::kde;
  d.points_ = std::move(points);
  d.bandwidth_ = bandwidth;
  return d;
}

DensityModel DensityModel::gaussian(double sigma) {
  if (!(sigma > 0.0)) throw ConfigError("DensityModel: sigma must be positive");
  DensityModel d;
  d.kind_ = Kind::gaussian;
  d.sigma_ = sigma;
  return d;
}

DensityModel DensityModel::uniform(double half_width) {
  if (!(half_width > 0.0)) throw ConfigError("DensityModel: T must be positive");
  DensityModel d;
  d.kind_ = Kind::uniform;
  d.half_width_ = half_width;
  return d;
}

double DensityModel::eval_raw(double t) const {
  switch (kind_) {
    case Kind::kde: {
      const double m = static_cast<double>(points_.size());
      double acc = 0.0;
      for (Index i = 0; i < points_.size(); ++i) {
        const double u = (t - points_[i]) / bandwidth_;
        acc += std::exp(-0.5 * u * u);
      }
      return kInvSqrt2Pi * acc / (m * bandwidth_);
    }
    case Kind::gaussian: {
      const double z = t / sigma_;
      return kInvSqrt2Pi / sigma_ * std::exp(-0.5 * z * z);
    }
    case Kind::uniform:
      return (std::abs(t) <= half_width_) ? 1.0 / (2.0 * half_width_) : 0.0;
  }
  return 0.0;
}

double DensityModel::eval(double t) const {
  if (symmetrized_) return 0.5 * (eval_raw(t) + eval_raw(-t));
  return eval_raw(t);
}

DensityModel kde_fit(const Vector& residuals, double bandwidth) {
  return DensityModel::kde(residuals, bandwidth);
}

DensityModel gaussian_fit(const Vector& residuals) {
  if (residuals.size() < 2) throw DataError("gaussian_fit: need at least 2 residuals");
  if (!residuals.allFinite()) throw DataError("gaussian_fit: non-finite residuals");
  // Mean fixed at zero: the model's errors are centered by assumption.
  const double s2 = residuals.squaredNorm() / static_cast<double>(residuals.size());
  return DensityModel::gaussian(std::max(std::sqrt(s2), kSigmaFloor));
}

DensityModel symmetrize(const DensityModel& d) {
  DensityModel out = d;
  out.symmetrized_ = true;
  return out;
}

double eval(const DensityModel& d, double t) { return d.eval(t); }

double truncated_first_moment(const DensityModel& d, double A) {
  if (!(A > 0.0)) throw ConfigError("truncated_first_moment: A must be positive");
  const double h = 2.0 * A / kSimpsonPanels;
  auto f = [&](double t) { return t * d.eval(t); };
  double acc = f(-A) + f(A);
  for (int i = 1; i < kSimpsonPanels; ++i) {
    const double t = -A + h * i;
    acc += f(t) * ((i % 2 == 1) ? 4.0 : 2.0);
  }
  return acc * h / 3.0;
}

}  // namespace riwtl
