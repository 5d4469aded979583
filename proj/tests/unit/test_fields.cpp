#include <doctest.h>

#include <cmath>
#include <numeric>
#include <vector>

#include "homlab/distribution.hpp"
#include "homlab/philox.hpp"
#include "homlab/rng_fields.hpp"
#include "homlab/statistics.hpp"

using namespace homlab;

namespace {

FieldSpec iid(int d, DistributionSpec law, bool isotropic = true) {
  FieldSpec s;
  s.dim = d;
  s.isotropic = isotropic;
  s.diagonal.assign(isotropic ? 1 : static_cast<std::size_t>(d), law);
  return s;
}

}  // namespace

TEST_CASE("closed-form moments") {
  CHECK(*DistributionSpec::uniform(1, 2).mean() == doctest::Approx(1.5));
  CHECK(*DistributionSpec::uniform(1, 2).variance() == doctest::Approx(1.0 / 12.0));
  CHECK(*DistributionSpec::two_point(1, 0.5, 2).mean() == doctest::Approx(1.5));
  CHECK(*DistributionSpec::pareto(1, 3).mean() == doctest::Approx(1.5));
  CHECK_FALSE(DistributionSpec::pareto(1, 1).mean().has_value());
  CHECK(*DistributionSpec::lognormal(0, 1).mean() == doctest::Approx(std::exp(0.5)));
}

TEST_CASE("laws reject invalid parameters and name themselves") {
  try {
    DistributionSpec::pareto(1, 0).validate("field.diagonal[0]");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("pareto") != std::string::npos);
    CHECK(e.field().find("field.diagonal[0]") != std::string::npos);
  }
  CHECK_THROWS_AS(DistributionSpec::two_point(1, 1.5, 2).validate("x"), ConfigError);
  CHECK_THROWS_AS(DistributionSpec::uniform(2, 1).validate("x"), ConfigError);
  CHECK_NOTHROW(DistributionSpec::uniform(0, 1).validate("x"));
}

TEST_CASE("probability below a threshold") {
  CHECK(DistributionSpec::two_point(0.05, 0.5, 1).probability_below(0.1) == doctest::Approx(0.5));
  CHECK(DistributionSpec::uniform(0, 1).probability_below(0.01) == doctest::Approx(0.01));
  CHECK(DistributionSpec::constant(1).probability_below(0.1) == 0.0);
  CHECK(DistributionSpec::pareto(1, 1).probability_below(2.0) == doctest::Approx(0.5));
}

TEST_CASE("sampling by inverse cdf") {
  const auto law = DistributionSpec::pareto(1, 2);
  // Tail-accurate reflected form: F(sample(u)) = 1 - u.
  CHECK(law.sample(0.25, 0.3) == doctest::Approx(2.0));
  CHECK(DistributionSpec::uniform(1, 3).sample(0.25, 0.3) == doctest::Approx(1.5));
  CHECK(law.cdf(2.0) == doctest::Approx(0.75));
}

TEST_CASE("field samples are pure functions of seed and index") {
  const FieldSpec spec = iid(2, DistributionSpec::uniform(1, 2));
  const FieldSample a = sample_field(spec, 7, 3), b = sample_field(spec, 7, 3), c = sample_field(spec, 7, 4);
  std::vector<double> x{2.3, -5.7}, da(2), db(2), dc(2);
  a.diagonal_at(x, da);
  b.diagonal_at(x, db);
  c.diagonal_at(x, dc);
  CHECK(da == db);
  CHECK(da != dc);
  CHECK(da[0] == da[1]);
}

TEST_CASE("fields are constant on unit cells") {
  const FieldSpec spec = iid(2, DistributionSpec::uniform(1, 2), false);
  const FieldSample f = sample_field(spec, 1, 0);
  std::vector<double> p{4.1, 7.2}, q{4.9, 7.95}, dp(2), dq(2);
  f.diagonal_at(p, dp);
  f.diagonal_at(q, dq);
  CHECK(dp == dq);
  CHECK(dp[0] != dp[1]);
}

TEST_CASE("laminates vary along their axis only") {
  FieldSpec spec = iid(2, DistributionSpec::uniform(1, 2));
  spec.structure = Structure::laminate;
  spec.laminate_axis = 0;
  const FieldSample f = sample_field(spec, 1, 0);
  std::vector<double> d0(2), d1(2), d2(2);
  f.diagonal_at(std::vector<double>{3.5, 0.5}, d0);
  f.diagonal_at(std::vector<double>{3.5, 91.5}, d1);
  f.diagonal_at(std::vector<double>{4.5, 0.5}, d2);
  CHECK(d0 == d1);
  CHECK(d0 != d2);
}

TEST_CASE("shift action is tau_z") {
  const FieldSpec spec = iid(2, DistributionSpec::two_point(1, 0.5, 2));
  const FieldSample f = sample_field(spec, 11, 2);
  const std::vector<double> z{3.0, -4.0};
  const FieldSample g = shift(f, z);
  for (double x = -3.0; x < 3.0; x += 0.7) {
    std::vector<double> p{x, 0.25 * x}, pz{x + 3.0, 0.25 * x - 4.0}, a(2), b(2);
    g.diagonal_at(p, a);
    f.diagonal_at(pz, b);
    CHECK(a == b);
  }
}

TEST_CASE("periodic tiles repeat") {
  FieldSpec spec;
  spec.dim = 2;
  spec.structure = Structure::periodic;
  spec.isotropic = true;
  spec.tile.dims = {2, 2};
  spec.tile.diagonal = {1, 3, 3, 1};
  const FieldSample f = sample_field(spec, 0, 0);
  std::vector<double> d(2);
  f.diagonal_at(std::vector<double>{0.5, 0.5}, d);
  CHECK(d[0] == 1.0);
  f.diagonal_at(std::vector<double>{1.5, 0.5}, d);
  CHECK(d[0] == 3.0);
  f.diagonal_at(std::vector<double>{-0.5, 0.5}, d);
  CHECK(d[0] == 3.0);
  f.diagonal_at(std::vector<double>{2.5, 2.5}, d);
  CHECK(d[0] == 1.0);
}

TEST_CASE("birkhoff average of a uniform field lies in its CLT interval") {
  const FieldSpec spec = iid(2, DistributionSpec::uniform(1, 2));
  const double t_list[] = {100.0, 400.0};
  int inside = 0;
  for (std::uint64_t r = 0; r < 20; ++r) {
    const auto series = birkhoff_average(sample_field(spec, 5, r), {ObservableKind::entry, 0}, Box::unit(2), t_list);
    for (const auto& p : series) {
      CHECK(p.cells_visited == static_cast<std::uint64_t>(p.t * p.t));
      const double se = std::sqrt(1.0 / 12.0) / p.t;
      inside += std::abs(p.average - 1.5) <= 4.0 * se;
    }
  }
  CHECK(inside == 40);
}

TEST_CASE("birkhoff average integrates partial cells exactly") {
  FieldSpec spec;
  spec.dim = 1;
  spec.structure = Structure::periodic;
  spec.isotropic = true;
  spec.tile.dims = {2};
  spec.tile.diagonal = {1, 3};
  Box box{{0.25}, {1.0}};
  const double t_list[] = {2.0};
  const auto s = birkhoff_average(sample_field(spec, 0, 0), {}, box, t_list);
  // (0.5, 2): 0.5 * 1 + 1 * 3 over length 1.5.
  CHECK(s[0].average == doctest::Approx((0.5 * 1.0 + 1.0 * 3.0) / 1.5));
}

TEST_CASE("integer shifts preserve the one-cell law") {
  const FieldSpec spec = iid(2, DistributionSpec::uniform(1, 2));
  const FieldSample f = sample_field(spec, 99, 0);
  constexpr int K = 10000;
  std::vector<double> base(K), shifted(K), d(2);
  UniformStream probes(3, 0);
  for (int k = 0; k < K; ++k) {
    std::vector<double> x{std::floor(1000.0 * probes.next()) + 0.5, std::floor(1000.0 * probes.next()) + 0.5};
    f.diagonal_at(x, d);
    base[k] = d[0];
    x[0] += 17.0;
    x[1] -= 5.0;
    f.diagonal_at(x, d);
    shifted[k] = d[0];
  }
  const Summary a = summarize(base), b = summarize(shifted);
  const double se = std::sqrt(a.standard_error() * a.standard_error() + b.standard_error() * b.standard_error());
  CHECK(std::abs(a.mean - b.mean) <= 4.0 * se);
  CHECK(std::abs(a.mean - 1.5) <= 4.0 * a.standard_error());
}
