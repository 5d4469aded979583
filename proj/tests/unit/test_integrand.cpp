#include <doctest.h>

#include <cmath>
#include <vector>

#include "homlab/integrand.hpp"
#include "homlab/philox.hpp"

using namespace homlab;

namespace {

FieldSpec isotropic(int d, DistributionSpec law) {
  FieldSpec s;
  s.dim = d;
  s.isotropic = true;
  s.diagonal = {law};
  return s;
}

}  // namespace

TEST_CASE("integrand is the weighted Frobenius norm plus lambda") {
  FieldSpec spec;
  spec.dim = 2;
  spec.diagonal = {DistributionSpec::constant(2.0), DistributionSpec::constant(3.0)};
  spec.lower = DistributionSpec::constant(0.5);
  const IntegrandModel with(sample_field(spec, 0, 0), 2, true);
  const IntegrandModel without(sample_field(spec, 0, 0), 2, false);
  const Matrix xi(2, 2, std::vector<double>{1.0, -1.0, 0.5, 2.0});
  const double expected = std::sqrt(4.0 + 9.0 + 1.0 + 36.0);
  const std::vector<double> x{0.3, 0.4};
  CHECK(without.eval(x, xi) == doctest::Approx(expected));
  CHECK(with.eval(x, xi) == doctest::Approx(expected + 0.5));
  CHECK(without.eval(x, Matrix::zero(2, 2)) == 0.0);
}

TEST_CASE("integrand is positively 1-homogeneous and convex without lambda") {
  const FieldSpec spec = isotropic(2, DistributionSpec::uniform(1, 2));
  const IntegrandModel f(sample_field(spec, 3, 0), 1, false);
  const std::vector<double> x{1.5, -2.5};
  UniformStream rng(8, 0);
  for (int k = 0; k < 50; ++k) {
    Matrix a(1, 2), b(1, 2);
    for (auto& v : a.values()) v = rng.next() - 0.5;
    for (auto& v : b.values()) v = rng.next() - 0.5;
    const double s = 1.0 + 4.0 * rng.next();
    CHECK(f.eval(x, a * s) == doctest::Approx(s * f.eval(x, a)));
    CHECK(f.eval(x, 0.5 * (a + b)) <= 0.5 * (f.eval(x, a) + f.eval(x, b)) + 1e-15);
  }
}

TEST_CASE("growth constants of a constant field") {
  for (const int d : {1, 2, 3}) {
    const GrowthConstants gc = growth_constants(isotropic(d, DistributionSpec::constant(2.0)));
    CHECK(gc.alpha == 1.0);
    CHECK(gc.c0 == doctest::Approx(2.0 / std::sqrt(static_cast<double>(d))));
    CHECK(gc.C0 == doctest::Approx(2.0));
    CHECK(gc.C1 == 0.0);
    CHECK(gc.analytic);
    // c/sqrt(d) |xi| <= c |xi| <= c |xi|.
    CHECK(gc.lower_bound(1.0) <= 2.0);
    CHECK(gc.upper_bound(1.0) == doctest::Approx(2.0));
  }
}

TEST_CASE("growth constants of the two-point isotropic field") {
  const GrowthConstants gc = growth_constants(isotropic(2, DistributionSpec::two_point(1, 0.5, 2)));
  CHECK(gc.c0 == doctest::Approx(1.0 / std::sqrt(2.0)));
  CHECK(gc.C0 == doctest::Approx(1.5));
  CHECK(gc.C1 == 0.0);
  CHECK_FALSE(gc.c0_degenerate);
}

TEST_CASE("growth constants with a lower-order term") {
  FieldSpec spec = isotropic(2, DistributionSpec::uniform(1, 3));
  spec.lower = DistributionSpec::uniform(0, 1);
  const GrowthConstants gc = growth_constants(spec);
  CHECK(gc.C0 == doctest::Approx(2.0));
  CHECK(gc.C1 == doctest::Approx(0.5));
  CHECK(gc.c0 == doctest::Approx(1.0 / std::sqrt(2.0)));
}

TEST_CASE("anisotropic upper constant is the largest mean entry") {
  FieldSpec spec;
  spec.dim = 2;
  spec.diagonal = {DistributionSpec::two_point(1, 0.5, 3), DistributionSpec::uniform(1, 2)};
  const GrowthConstants gc = growth_constants(spec);
  // sup_{|eta|=1} E|eta Lambda| >= max_j E[Lambda_jj] (eta = e_j rows).
  CHECK(gc.C0 >= 2.0 - 1e-12);
  CHECK(gc.C0 <= std::sqrt(2.0 * 2.0 + 1.5 * 1.5) + 1e-12);
}

TEST_CASE("infinite first moment is flagged, not an error") {
  const GrowthConstants gc = growth_constants(isotropic(2, DistributionSpec::pareto(1, 1)));
  CHECK(gc.C0_infinite);
  CHECK(std::isinf(gc.upper_bound(1.0)));
  CHECK(gc.c0 == doctest::Approx(1.0 / std::sqrt(2.0)));
}

TEST_CASE("coercivity degenerates as the weight infimum vanishes") {
  for (const double delta : {0.1, 0.01, 0.001}) {
    const Coercivity c = coercivity_constant(isotropic(1, DistributionSpec::two_point(delta, 0.5, 1)));
    CHECK_FALSE(c.degenerate);
    CHECK(c.constant == doctest::Approx(1.0 / delta));
  }
  const Coercivity u = coercivity_constant(isotropic(2, DistributionSpec::uniform(0, 1)));
  CHECK(u.degenerate);
  CHECK(std::isinf(u.constant));
  const GrowthConstants gc = growth_constants(isotropic(2, DistributionSpec::uniform(0, 1)));
  CHECK(gc.c0_degenerate);
  CHECK(gc.c0 == 0.0);
}

TEST_CASE("gauss-legendre integrates polynomials exactly") {
  double x[8], w[8];
  gauss_legendre(8, x, w);
  double s0 = 0.0, s14 = 0.0;
  for (int i = 0; i < 8; ++i) {
    s0 += w[i];
    s14 += w[i] * std::pow(x[i], 14);
  }
  CHECK(s0 == doctest::Approx(2.0));
  CHECK(s14 == doctest::Approx(2.0 / 15.0));
}
