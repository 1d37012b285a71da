#include <doctest.h>
#include <riwtl/density.hpp>
#include <riwtl/rng.hpp>

#include <cmath>

using namespace riwtl;

namespace {

// Independent quadrature oracle: plain trapezoid on a fine grid.
double trapezoid_first_moment(const DensityModel& d, double A, int points) {
  const double h = 2.0 * A / (points - 1);
  double acc = 0.0;
  for (int i = 0; i < points; ++i) {
    const double t = -A + i * h;
    const double f = t * d.eval(t);
    acc += (i == 0 || i == points - 1) ? 0.5 * f : f;
  }
  return acc * h;
}

double integrate(const DensityModel& d, double lo, double hi, int points) {
  const double h = (hi - lo) / (points - 1);
  double acc = 0.0;
  for (int i = 0; i < points; ++i) {
    const double f = d.eval(lo + i * h);
    acc += (i == 0 || i == points - 1) ? 0.5 * f : f;
  }
  return acc * h;
}

}  // namespace

TEST_CASE("kde hand values") {
  Vector one(1);
  one << 0.0;
  CHECK(kde_fit(one, 1.0).eval(0.0) == doctest::Approx(0.398942).epsilon(1e-5));

  Vector two(2);
  two << -1.0, 1.0;
  const DensityModel d = kde_fit(two, 1.0);
  // two-term sum: both kernels contribute phi(1) at t = 0
  CHECK(d.eval(0.0) == doctest::Approx(0.241971).epsilon(1e-5));
  for (double t : {0.3, 0.7, 1.9}) CHECK(d.eval(t) == doctest::Approx(d.eval(-t)));
}

TEST_CASE("kde input validation") {
  CHECK_THROWS_AS(kde_fit(Vector{}, 1.0), DataError);
  Vector one(1);
  one << 0.0;
  CHECK_THROWS_AS(kde_fit(one, 0.0), ConfigError);
  CHECK_THROWS_AS(kde_fit(one, -1.0), ConfigError);
}

TEST_CASE("uniform and gaussian evaluation") {
  const DensityModel u = DensityModel::uniform(3.0);
  CHECK(u.eval(2.0) == doctest::Approx(1.0 / 6.0));
  CHECK(u.eval(4.0) == 0.0);
  CHECK(u.eval(-3.0) == doctest::Approx(1.0 / 6.0));

  const DensityModel g = DensityModel::gaussian(1.0);
  CHECK(eval(g, 0.0) == doctest::Approx(0.398942).epsilon(1e-5));
}

TEST_CASE("symmetrize") {
  Vector pts(2);
  pts << -1.0, 1.0;
  const DensityModel sym_already = kde_fit(pts, 0.7);
  const DensityModel sym = symmetrize(sym_already);
  for (double t = -3.0; t <= 3.0; t += 0.37)
    CHECK(sym.eval(t) == doctest::Approx(sym_already.eval(t)).epsilon(1e-12));

  const DensityModel g = DensityModel::gaussian(1.3);
  const DensityModel gs = symmetrize(g);
  for (double t = -4.0; t <= 4.0; t += 0.41)
    CHECK(gs.eval(t) == doctest::Approx(g.eval(t)).epsilon(1e-12));

  Vector skew(2);
  skew << 0.0, 2.0;
  const DensityModel raw = kde_fit(skew, 0.5);
  const DensityModel s = symmetrize(raw);
  CHECK(s.eval(2.0) == doctest::Approx(0.5 * (raw.eval(2.0) + raw.eval(-2.0))).epsilon(1e-12));
  CHECK(s.symmetrized());

  // idempotence
  const DensityModel ss = symmetrize(s);
  for (double t = -3.0; t <= 3.0; t += 0.29)
    CHECK(ss.eval(t) == doctest::Approx(s.eval(t)).epsilon(1e-12));
}

TEST_CASE("gaussian_fit") {
  Vector r(2);
  r << 1.0, -1.0;
  CHECK(gaussian_fit(r).sigma() == doctest::Approx(1.0));
  r << 2.0, -2.0;
  CHECK(gaussian_fit(r).sigma() == doctest::Approx(2.0));

  Vector one(1);
  one << 1.0;
  CHECK_THROWS_AS(gaussian_fit(one), DataError);

  Vector zeros = Vector::Zero(5);
  const DensityModel floor = gaussian_fit(zeros);
  CHECK(floor.sigma() == doctest::Approx(1e-8));
  CHECK(std::isfinite(floor.eval(0.0)));
}

TEST_CASE("gaussian_fit recovers sigma on a large seeded sample") {
  rng::SplitMix64 gen(2024);
  Vector r(100000);
  for (Index i = 0; i < r.size(); ++i) r[i] = gen.next_normal();
  const double sigma = gaussian_fit(r).sigma();
  CHECK(sigma >= 0.99);
  CHECK(sigma <= 1.01);
}

TEST_CASE("truncated first moment vanishes for symmetric densities") {
  rng::SplitMix64 gen(5);
  Vector pts(40);
  for (Index i = 0; i < 40; ++i) pts[i] = gen.next_normal() * 1.3 + 0.4;
  const DensityModel sym = symmetrize(kde_fit(pts, 0.2));
  const DensityModel g = DensityModel::gaussian(0.8);
  const DensityModel u = DensityModel::uniform(3.0);
  for (double A : {0.5, 1.0, 2.0, 4.0}) {
    CHECK(std::abs(truncated_first_moment(sym, A)) <= 1e-8);
    CHECK(std::abs(truncated_first_moment(g, A)) <= 1e-8);
  }
  CHECK(std::abs(truncated_first_moment(u, 2.5)) <= 1e-8);
}

TEST_CASE("truncated first moment of an asymmetric density is positive") {
  Vector pts(1);
  pts << 0.5;
  const DensityModel d = kde_fit(pts, 0.3);
  const double m = truncated_first_moment(d, 2.0);
  CHECK(m > 0.0);
  CHECK(m == doctest::Approx(trapezoid_first_moment(d, 2.0, 200001)).epsilon(1e-6));
}

TEST_CASE("kde integrates to one") {
  rng::SplitMix64 gen(9);
  for (double b : {0.1, 0.2, 0.3, 1.0}) {
    Vector pts(25);
    for (Index i = 0; i < 25; ++i) pts[i] = gen.next_normal() * 2.0;
    const DensityModel d = kde_fit(pts, b);
    const double r = pts.cwiseAbs().maxCoeff() + 8.0 * b;
    CHECK(integrate(d, -r, r, 400001) == doctest::Approx(1.0).epsilon(1e-3));
  }
}
