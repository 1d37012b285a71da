#pragma once

#include "riwtl/types.hpp"

namespace riwtl {

// One-dimensional residual density: a Gaussian-kernel KDE over stored
// residuals, a zero-mean Gaussian, or a uniform on [-T, T]. Immutable after
// construction; eval is reentrant. When the symmetrized flag is set,
// evaluation returns [f(t) + f(-t)] / 2.
class DensityModel {
 public:
  enum class Kind { kde, gaussian, uniform };

  static DensityModel kde(Vector points, double bandwidth);
  static DensityModel gaussian(double sigma);
  static DensityModel uniform(double half_width);

  double eval(double t) const;
  double operator()(double t) const { return eval(t); }

  Kind kind() const { return kind_; }
  bool symmetrized() const { return symmetrized_; }
  double bandwidth() const { return bandwidth_; }
  double sigma() const { return sigma_; }
  double half_width() const { return half_width_; }
  const Vector& points() const { return points_; }

  friend DensityModel symmetrize(const DensityModel& d);

 private:
  DensityModel() = default;

  double eval_raw(double t) const;

  Kind kind_ = Kind::gaussian;
  Vector points_;
  double bandwidth_ = 0.0;
  double sigma_ = 1.0;
  double half_width_ = 0.0;
  bool symmetrized_ = false;
};

// Gaussian-kernel KDE over the residuals at the given bandwidth.
DensityModel kde_fit(const Vector& residuals, double bandwidth);

// Zero-mean Gaussian with sigma^2 = (1/m) sum residual_i^2, floored at 1e-8.
DensityModel gaussian_fit(const Vector& residuals);

// Even part of the density: t -> [f(t) + f(-t)] / 2.
DensityModel symmetrize(const DensityModel& d);

double eval(const DensityModel& d, double t);

// Integral of t * f(t) over [-A, A] by composite Simpson quadrature; zero for
// any symmetric density.
double truncated_first_moment(const DensityModel& d, double A);

}  // namespace riwtl
