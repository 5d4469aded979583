#include <doctest.h>

#include <cmath>

#include "homlab/cell_solver.hpp"

using namespace homlab;

namespace {

FieldSpec glue_field(bool with_lower) {
  FieldSpec s;
  s.dim = 2;
  s.diagonal = {DistributionSpec::uniform(0.5, 2.0), DistributionSpec::uniform(0.5, 2.0)};
  if (with_lower) s.lower = DistributionSpec::uniform(0.0, 1.0);
  return s;
}

}  // namespace

TEST_CASE("fundamental estimate on random instances") {
  for (const bool lower : {false, true}) {
    const FieldSpec spec = glue_field(lower);
    for (std::uint64_t i = 0; i < 6; ++i) {
      const GlueInstance g = random_glue_instance(spec, 99, i, i % 2 == 0 ? 1 : 2);
      const GlueResult r = glue_with_cutoff(g.u, g.v, g.a_inner, g.a_outer, g.b, g.delta, g.problem);
      CHECK(r.report.holds);
      CHECK(r.report.slack >= 0.0);
      CHECK(r.report.layers == static_cast<int>(std::ceil(1.0 / g.delta)));
      CHECK(r.report.layer_energies.size() == static_cast<std::size_t>(r.report.layers));
      CHECK(r.report.selected_layer >= 0);
      CHECK(r.report.selected_layer < r.report.layers);
      if (!lower) CHECK(r.report.lower_term == 0.0);
    }
  }
}

TEST_CASE("glued field agrees with u inside A' and with v outside A''") {
  const GlueInstance g = random_glue_instance(glue_field(false), 3, 0);
  const GlueResult r = glue_with_cutoff(g.u, g.v, g.a_inner, g.a_outer, g.b, g.delta, g.problem);
  const Grid& grid = g.problem.grid;
  std::vector<double> x(2);
  for (std::size_t k = 0; k < grid.node_count(); ++k) {
    grid.node_position(k, x);
    if (g.a_inner.contains(x)) CHECK(r.w[k] == g.u[k]);
    if (!g.a_outer.contains(x)) CHECK(r.w[k] == g.v[k]);
  }
}

TEST_CASE("gluing rejects bad geometry") {
  const GlueInstance g = random_glue_instance(glue_field(false), 5, 0);
  CHECK_THROWS_AS((void)glue_with_cutoff(g.u, g.v, g.a_outer, g.a_inner, g.b, g.delta, g.problem), GeometryError);
  Box shifted = g.a_inner;
  for (auto& v : shifted.lo) v += 0.01;
  CHECK_THROWS_AS((void)glue_with_cutoff(g.u, g.v, shifted, g.a_outer, g.b, g.delta, g.problem), GeometryError);
  CHECK_THROWS((void)glue_with_cutoff(g.u, g.v, g.a_inner, g.a_outer, g.b, 0.0, g.problem));
}

TEST_CASE("affine field has gradient xi") {
  const Grid grid(std::vector<double>{1.0, -1.0}, 4.0, 8, 2);
  const Matrix xi(2, 2, std::vector<double>{1.0, -2.0, 0.5, 3.0});
  const std::vector<double> w = affine_field(grid, xi);
  std::vector<double> grad(4);
  for (std::size_t c = 0; c < grid.cell_count(); ++c) {
    cell_gradient(grid, w, c, grad);
    for (int k = 0; k < 4; ++k) CHECK(grad[static_cast<std::size_t>(k)] == doctest::Approx(xi.values()[static_cast<std::size_t>(k)]));
  }
}
