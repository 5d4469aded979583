#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "homlab/cell_solver.hpp"
#include "homlab/philox.hpp"

namespace homlab {
namespace {

/// Box snapped to grid lines, as integer node coordinates [lo, hi].
struct IndexBox {
  std::vector<long> lo;
  std::vector<long> hi;

  [[nodiscard]] bool contains_cell(std::span<const int> cell) const {
    for (std::size_t k = 0; k < lo.size(); ++k)
      if (cell[k] < lo[k] || cell[k] + 1 > hi[k]) return false;
    return true;
  }
  /// l-infinity distance (in cells) from a node to the box.
  [[nodiscard]] long distance(std::span<const long> node) const {
    long dist = 0;
    for (std::size_t k = 0; k < lo.size(); ++k)
      dist = std::max({dist, lo[k] - node[k], node[k] - hi[k]});
    return dist;
  }
};

IndexBox snap(const Box& box, const Grid& g, const char* name) {
  if (box.dim() != g.dim) throw GeometryError(std::string(name) + ": dimension mismatch");
  IndexBox out;
  const double h = g.h();
  for (int k = 0; k < g.dim; ++k) {
    const double origin = g.center[k] - 0.5 * g.side;
    const double lo = (box.lo[k] - origin) / h;
    const double hi = (box.hi[k] - origin) / h;
    const long lo_i = std::lround(lo);
    const long hi_i = std::lround(hi);
    if (std::abs(lo - lo_i) > 1e-9 || std::abs(hi - hi_i) > 1e-9)
      throw GeometryError(std::string(name) + ": box is not aligned with grid lines");
    if (lo_i < 0 || hi_i > g.n || hi_i <= lo_i)
      throw GeometryError(std::string(name) + ": box must be a nonempty subset of the grid cube");
    out.lo.push_back(lo_i);
    out.hi.push_back(hi_i);
  }
  return out;
}

std::vector<long> node_multi(const Grid& g, std::size_t node) {
  std::vector<long> idx(static_cast<std::size_t>(g.dim));
  for (int k = g.dim - 1; k >= 0; --k) {
    idx[k] = static_cast<long>(node % (static_cast<std::size_t>(g.n) + 1));
    node /= static_cast<std::size_t>(g.n) + 1;
  }
  return idx;
}

double cell_total(const CellProblem& p, std::span<const double> w, std::size_t c) {
  double e = cell_energy(p, w, c, false);
  if (!p.lower.empty()) e += p.lower[c];
  return e * p.grid.cell_volume();
}

}  // namespace

double region_energy(const CellProblem& p, std::span<const double> w, const Box& region) {
  const IndexBox box = snap(region, p.grid, "region");
  std::vector<int> cell(static_cast<std::size_t>(p.grid.dim));
  double e = 0.0;
  for (std::size_t c = 0; c < p.grid.cell_count(); ++c) {
    p.grid.cell_index_to_multi(c, cell);
    if (box.contains_cell(cell)) e += cell_total(p, w, c);
  }
  return e;
}

std::vector<double> affine_field(const Grid& grid, const Matrix& xi) {
  const int m = grid.components;
  std::vector<double> out(grid.node_count() * static_cast<std::size_t>(m));
  std::vector<double> x(static_cast<std::size_t>(grid.dim));
  for (std::size_t k = 0; k < grid.node_count(); ++k) {
    grid.node_position(k, x);
    for (int i = 0; i < m; ++i) {
      double s = 0.0;
      for (int j = 0; j < grid.dim; ++j) s += xi(i, j) * (x[j] - grid.center[j]);
      out[k * m + i] = s;
    }
  }
  return out;
}

GlueResult glue_with_cutoff(std::span<const double> u, std::span<const double> v, const Box& a_inner,
                            const Box& a_outer, const Box& b, double delta, const CellProblem& p,
                            double alpha) {
  const Grid& g = p.grid;
  const int d = g.dim;
  const int m = g.components;
  const std::size_t nm = g.node_count() * static_cast<std::size_t>(m);
  if (u.size() != nm || v.size() != nm) throw GeometryError("u, v: expected one value per node and component");
  if (!(delta > 0.0)) throw GeometryError("delta must be positive");
  if (!(alpha > 0.0)) throw GeometryError("alpha must be positive");

  const IndexBox inner = snap(a_inner, g, "A'");
  const IndexBox outer = snap(a_outer, g, "A''");
  const IndexBox bb = snap(b, g, "B");

  // dist(A', dA'') in cells; A' must be compactly contained in A''.
  long gap = std::numeric_limits<long>::max();
  for (int k = 0; k < d; ++k) gap = std::min({gap, inner.lo[k] - outer.lo[k], outer.hi[k] - inner.hi[k]});
  if (gap <= 0) throw GeometryError("A' must be compactly contained in A''");
  const double h = g.h();
  const double dist = static_cast<double>(gap) * h;
  const double radius = 0.5 * dist;

  GlueReport rep;
  rep.layers = static_cast<int>(std::ceil(std::max(1.0 / alpha, 1.0) / delta - 1e-12));
  const int layers = rep.layers;
  if (static_cast<double>(layers) * h > radius * (1.0 + 1e-12))
    throw GeometryError("layers thinner than one grid cell: need N h <= dist(A', dA'') / 2");
  // Integer layer width W >= R / (N h) keeps every layer inside A''.
  const long width = static_cast<long>(std::ceil(radius / (layers * h) - 1e-12));
  rep.layer_width = static_cast<double>(width) * h;

  const std::size_t cells = g.cell_count();
  std::vector<int> cell(static_cast<std::size_t>(d));
  std::vector<unsigned char> in_inner(cells), in_outer(cells), in_b(cells), in_s(cells);
  for (std::size_t c = 0; c < cells; ++c) {
    g.cell_index_to_multi(c, cell);
    in_inner[c] = inner.contains_cell(cell);
    in_outer[c] = outer.contains_cell(cell);
    in_b[c] = bb.contains_cell(cell);
    in_s[c] = in_outer[c] && in_b[c] && !in_inner[c];
    rep.overlap_cells += in_s[c];
  }
  if (rep.overlap_cells == 0) throw GeometryError("empty overlap S = (A'' \\ A') n B");

  std::vector<long> node_dist(g.node_count());
  for (std::size_t k = 0; k < g.node_count(); ++k) node_dist[k] = inner.distance(node_multi(g, k));

  auto cutoff = [&](int i, std::size_t node) {
    const double val = static_cast<double>((i + 1) * width - node_dist[node]) / static_cast<double>(width);
    return std::clamp(val, 0.0, 1.0);
  };
  auto glued = [&](int i) {
    std::vector<double> w(nm);
    for (std::size_t k = 0; k < g.node_count(); ++k) {
      const double phi = cutoff(i, k);
      for (int c = 0; c < m; ++c) w[k * m + c] = phi * u[k * m + c] + (1.0 - phi) * v[k * m + c];
    }
    return w;
  };

  // Layer i: cells of S whose nearest corner lies in [iW, (i+1)W).
  std::vector<int> layer_of(cells, -1);
  for (std::size_t c = 0; c < cells; ++c) {
    if (!in_s[c]) continue;
    const std::size_t base = g.node_of_cell(c);
    long near = node_dist[base];
    const auto stride = g.node_strides();
    for (std::size_t corner = 0; corner < (std::size_t{1} << d); ++corner) {
      std::size_t node = base;
      for (int k = 0; k < d; ++k)
        if (corner & (std::size_t{1} << k)) node += stride[k];
      near = std::min(near, node_dist[node]);
    }
    const long li = near / width;
    layer_of[c] = li < layers ? static_cast<int>(li) : -1;
  }

  rep.layer_energies.assign(static_cast<std::size_t>(layers), 0.0);
  for (int i = 0; i < layers; ++i) {
    const auto w = glued(i);
    double e = 0.0;
    for (std::size_t c = 0; c < cells; ++c)
      if (layer_of[c] == i) e += cell_total(p, w, c);
    rep.layer_energies[static_cast<std::size_t>(i)] = e;
  }
  rep.selected_layer = static_cast<int>(
      std::min_element(rep.layer_energies.begin(), rep.layer_energies.end()) - rep.layer_energies.begin());

  GlueResult out;
  out.w = glued(rep.selected_layer);

  double mismatch = 0.0, lower = 0.0;
  for (std::size_t c = 0; c < cells; ++c) {
    if (in_inner[c] || in_b[c]) rep.glued_energy += cell_total(p, out.w, c);
    if (in_outer[c]) rep.energy_u += cell_total(p, u, c);
    if (in_b[c]) rep.energy_v += cell_total(p, v, c);
    if (in_s[c]) {
      const std::size_t base = g.node_of_cell(c);
      double diff = 0.0;
      for (int k = 0; k < m; ++k) {
        const double e = u[base * m + k] - v[base * m + k];
        diff += e * e;
      }
      double lam = 0.0;
      for (int j = 0; j < d; ++j) lam += p.weights[c * d + j] * p.weights[c * d + j];
      mismatch += std::sqrt(diff) * std::sqrt(lam);
      if (!p.lower.empty()) lower += p.lower[c];
    }
  }
  const double vol = g.cell_volume();
  rep.mismatch_term = 4.0 / dist * mismatch * vol;
  rep.lower_term = delta * lower * vol;
  rep.rhs = (1.0 + delta) * (rep.energy_u + rep.energy_v) + rep.mismatch_term + rep.lower_term;
  rep.slack = rep.rhs - rep.glued_energy;
  rep.holds = rep.slack >= 0.0;
  out.report = std::move(rep);
  return out;
}

GlueInstance random_glue_instance(const FieldSpec& spec, std::uint64_t seed, std::uint64_t index, int components) {
  constexpr double side = 8.0;
  constexpr int n = 64;
  const int d = spec.dim;
  const int m = components;
  UniformStream rng(hash_combine(hash_combine(mix64(0x676c7565ULL), seed), index), 0);
  auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * rng.next(); };

  const Grid grid(std::vector<double>(static_cast<std::size_t>(d), 0.0), side, n, m);
  Matrix xi_u(m, d), xi_v(m, d);
  for (auto& x : xi_u.values()) x = uniform(-1.0, 1.0);
  for (auto& x : xi_v.values()) x = uniform(-1.0, 1.0);
  const IntegrandModel model(sample_field(spec, seed, index), m, spec.has_lower());

  GlueInstance inst{assemble(model, grid, xi_u), affine_field(grid, xi_u), affine_field(grid, xi_v), {}, {}, {}, 0.0};
  std::vector<double> x(static_cast<std::size_t>(d));
  for (auto* field : {&inst.u, &inst.v}) {
    for (int c = 0; c < m; ++c) {
      for (int mode = 0; mode < 3; ++mode) {
        const double amp = uniform(0.0, 0.2);
        const double phase = uniform(0.0, 2.0 * std::numbers::pi);
        std::vector<double> k(static_cast<std::size_t>(d));
        for (auto& kj : k) kj = static_cast<double>(rng.below(4)) * 2.0 * std::numbers::pi / side;
        for (std::size_t node = 0; node < grid.node_count(); ++node) {
          grid.node_position(node, x);
          double arg = phase;
          for (int j = 0; j < d; ++j) arg += k[j] * x[j];
          (*field)[node * m + c] += amp * std::sin(arg);
        }
      }
    }
  }

  std::vector<double> center(static_cast<std::size_t>(d));
  for (auto& c : center) c = 0.5 * (static_cast<double>(rng.below(3)) - 1.0);
  inst.a_inner = Box::cube(center, 4.0);
  inst.a_outer = Box::cube(center, 7.0);
  const auto axis = static_cast<std::size_t>(rng.below(static_cast<std::uint64_t>(d)));
  const bool upper = rng.below(2) == 1;
  inst.b = Box::cube(std::vector<double>(static_cast<std::size_t>(d), 0.0), side);
  if (upper)
    inst.b.lo[axis] = inst.a_inner.hi[axis] - 1.0;
  else
    inst.b.hi[axis] = inst.a_inner.lo[axis] + 1.0;
  inst.delta = uniform(1.0 / 6.0, 1.0);
  return inst;
}

}  // namespace homlab
