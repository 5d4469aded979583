#include <doctest.h>

#include <cmath>
#include <vector>

#include "homlab/degeneracy_lab.hpp"

using namespace homlab;

namespace {

FieldSpec laminate(DistributionSpec law, int d = 2) {
  FieldSpec s;
  s.dim = d;
  s.structure = Structure::laminate;
  s.laminate_axis = 0;
  s.isotropic = true;
  s.diagonal = {law};
  return s;
}

MonteCarloOptions options(int n) {
  MonteCarloOptions o;
  o.seed = 1234;
  o.realizations = n;
  return o;
}

}  // namespace

TEST_CASE("divergence experiment rejects slopes along the laminate normal") {
  const FieldSpec spec = laminate(DistributionSpec::pareto(1.0, 1.0));
  const std::vector<double> ts{4.0};
  CHECK_THROWS_AS((void)divergence_experiment(spec, Matrix(1, 2, std::vector<double>{1.0, 0.0}), ts, options(2)),
                  ConfigError);
  CHECK_THROWS_AS((void)divergence_experiment(laminate(DistributionSpec::uniform(1, 2), 1), Matrix(1, 1, 1.0), ts,
                                              options(2)),
                  ConfigError);
  FieldSpec iid = spec;
  iid.structure = Structure::iid_cubes;
  CHECK_THROWS_AS((void)divergence_experiment(iid, Matrix(1, 2, std::vector<double>{0.0, 1.0}), ts, options(2)),
                  ConfigError);
}

TEST_CASE("constant field control stays flat") {
  const std::vector<double> ts{4.0, 8.0, 16.0};
  const DivergenceReport r =
      divergence_experiment(FieldSpec::constant(2, 2.0), Matrix(1, 2, std::vector<double>{0.0, 1.0}), ts, options(2));
  CHECK(r.bound.pass);
  for (const auto& level : r.levels) CHECK(level.stats.mean == doctest::Approx(2.0).epsilon(1e-4));
  CHECK(r.growth_ratio == doctest::Approx(1.0).epsilon(1e-4));
}

TEST_CASE("transverse energy dominates the running mean on a Pareto laminate") {
  const std::vector<double> ts{4.0, 8.0};
  const DivergenceReport r = divergence_experiment(laminate(DistributionSpec::pareto(1.0, 1.0)),
                                                   Matrix(1, 2, std::vector<double>{0.0, 1.0}), ts, options(4));
  CHECK(r.bound.pass);
  for (const auto& level : r.levels)
    for (const auto& s : level.samples) {
      CHECK(s.converged);
      CHECK(s.value >= s.running_mean - s.slack);
      CHECK(s.bound == doctest::Approx(s.running_mean).epsilon(1e-12));
    }
}

TEST_CASE("cheap interfaces cost at most delta") {
  const FieldSpec spec = laminate(DistributionSpec::uniform(0.0, 1.0));
  std::vector<InterfaceProbe> probes;
  for (const double delta : {0.1, 0.01, 0.001})
    for (std::uint64_t i = 0; i < 5; ++i) {
      const InterfaceProbe p = cheap_interface(spec, delta, 1234, i, 100000);
      REQUIRE(p.found);
      CHECK(p.energy <= delta);
      CHECK(p.l1_distance <= p.epsilon);
      CHECK(p.epsilon == doctest::Approx(0.5 / static_cast<double>(p.k + 1)));
      CHECK(p.profile(0.0) == 0.0);
      CHECK(p.profile(0.5) == doctest::Approx(1.0));
      CHECK(p.profile(1.0) == 1.0);
      probes.push_back(p);
    }
  CHECK(interface_limit_check(spec, probes).pass);
}

TEST_CASE("L1 distance of the profile to the jump") {
  const FieldSpec spec = laminate(DistributionSpec::uniform(0.0, 1.0));
  const InterfaceProbe p = cheap_interface(spec, 0.05, 7, 0, 100000);
  REQUIRE(p.found);
  const int n = 200000;
  double l1 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = (i + 0.5) / n;
    l1 += std::abs(p.profile(x) - (x > p.interface_at ? 1.0 : 0.0)) / n;
  }
  CHECK(l1 == doctest::Approx(p.l1_distance).epsilon(1e-3));
}

TEST_CASE("bounded-below weights admit no cheap interface") {
  const FieldSpec spec = laminate(DistributionSpec::constant(1.0));
  const InterfaceProbe p = cheap_interface(spec, 0.5, 1, 0, 1000);
  CHECK_FALSE(p.found);
  CHECK(p.scanned == 1000);
  const std::vector<InterfaceProbe> probes{p};
  CHECK_FALSE(interface_limit_check(spec, probes).pass);
}

TEST_CASE("hitting index follows the geometric law") {
  const FieldSpec spec = laminate(DistributionSpec::uniform(0.0, 1.0));
  const HittingStats h = hitting_statistics(spec, 0.1, 1234, 2000, 100000);
  CHECK(h.p == doctest::Approx(0.1));
  CHECK(h.expected_mean == doctest::Approx(9.0));
  CHECK(h.censored == 0);
  CHECK(h.pass);
  CHECK(std::abs(h.z) <= 4.0);
}
