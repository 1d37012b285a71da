#include <doctest.h>
#include <riwtl/rng.hpp>
#include <riwtl/types.hpp>

using namespace riwtl;

TEST_CASE("dataset construction enforces shape and finiteness") {
  Matrix x(2, 2);
  x << 1, 0, 0, 1;
  CHECK_NOTHROW(Dataset(x, Vector::Ones(2)));
  CHECK_THROWS_AS(Dataset(x, Vector::Ones(3)), DimensionError);

  Matrix bad = x;
  bad(0, 0) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(Dataset(bad, Vector::Ones(2)), DataError);

  Vector bad_y(2);
  bad_y << 1, std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(Dataset(x, bad_y), DataError);
}

TEST_CASE("transfer problem requires a shared column count") {
  Matrix x2(2, 2), x3(2, 3);
  x2.setOnes();
  x3.setOnes();
  Dataset target(x2, Vector::Ones(2));
  CHECK_THROWS_AS(TransferProblem(target, {Dataset(x3, Vector::Ones(2))}), DimensionError);
  const TransferProblem ok(target, {Dataset(x2, Vector::Zero(2))});
  CHECK(ok.n_sources() == 1);
  CHECK(ok.total_source_rows() == 2);
}

TEST_CASE("contrast is the entrywise difference") {
  Vector a(2), b(2);
  a << 1, 1;
  b << 1, 1;
  CHECK(contrast(a, b).isZero(0));

  a << 1, 0.5;
  const Vector d = contrast(a, b);
  CHECK(d[0] == 0.0);
  CHECK(d[1] == doctest::Approx(-0.5));

  CHECK_THROWS_AS(contrast(Vector::Ones(3), Vector::Ones(2)), DimensionError);
}

TEST_CASE("contrast l1 norm for five entries lowered by 0.2") {
  Vector beta0 = Vector::Zero(100);
  beta0.head(5).setOnes();
  Vector beta1 = beta0;
  for (int j = 5; j < 10; ++j) beta1[j] += 0.2;
  CHECK(contrast(beta1, beta0).lpNorm<1>() == doctest::Approx(1.0));
}

TEST_CASE("residuals match the definition") {
  Matrix x(2, 2);
  x << 1, 0, 0, 1;
  Vector y(2);
  y << 1, 2;
  Vector beta(2);
  beta << 1, 2;
  CHECK(residuals(Dataset(x, y), beta).isZero(0));
  CHECK(residuals(Dataset(x, y), Vector::Zero(2)).isApprox(y));
}

TEST_CASE("residuals agree with a per-row dot-product oracle") {
  rng::SplitMix64 gen(42);
  Matrix x(5, 3);
  Vector y(5), beta(3);
  for (Index i = 0; i < 5; ++i) {
    y[i] = gen.next_normal();
    for (Index j = 0; j < 3; ++j) x(i, j) = gen.next_normal();
  }
  for (Index j = 0; j < 3; ++j) beta[j] = gen.next_normal();

  const Vector r = residuals(Dataset(x, y), beta);
  for (Index i = 0; i < 5; ++i) {
    double dot = 0.0;
    for (Index j = 0; j < 3; ++j) dot += x(i, j) * beta[j];
    CHECK(r[i] == doctest::Approx(y[i] - dot).epsilon(1e-12));
  }
}

TEST_CASE("truth spec tracks the support of beta0") {
  Vector beta0(4);
  beta0 << 1, 0, -2, 0;
  const TruthSpec truth(beta0, {}, {NoiseSpec::gaussian(1.0)});
  CHECK(truth.s0 == 2);
  REQUIRE(truth.support0.size() == 2);
  CHECK(truth.support0[0] == 0);
  CHECK(truth.support0[1] == 2);
}

TEST_CASE("noise pdf values") {
  CHECK(noise_pdf(NoiseSpec::gaussian(1.0), 0.0) == doctest::Approx(0.3989422804));
  CHECK(noise_pdf(NoiseSpec::gaussian(2.0), 0.0) == doctest::Approx(0.3989422804 / 2));
  // t(5) density at 0: Gamma(3)/(Gamma(2.5) sqrt(5 pi)) = 0.3796066898...
  CHECK(noise_pdf(NoiseSpec::student_t(5.0), 0.0) == doctest::Approx(0.3796066898).epsilon(1e-8));
  CHECK(noise_pdf(NoiseSpec::student_t(5.0), 1.5) ==
        doctest::Approx(0.1245173435).epsilon(1e-6));
}
