#include "homlab/degeneracy_lab.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "homlab/cell_solver.hpp"
#include "homlab/integrand.hpp"

namespace homlab {

namespace {

bool constant_law(const FieldSpec& spec) {
  if (spec.structure == Structure::periodic) return false;
  const auto fixed = [](const DistributionSpec& d) { return d.kind == DistKind::constant; };
  return std::all_of(spec.diagonal.begin(), spec.diagonal.end(), fixed);
}

void require_x1_laminate(const FieldSpec& spec, const char* what) {
  spec.validate();
  const bool laminate = spec.structure == Structure::laminate && spec.laminate_axis == 0;
  if (!laminate && !constant_law(spec))
    throw ConfigError("field", std::string(what) + " needs a laminate along x_1 or a constant field");
}

/// Exact mean over x_1 in (0, t) of |xi' Lambda'(x_1)|_F for a field that only
/// depends on x_1.
double running_mean(const FieldSample& f, const Matrix& transverse, double t) {
  const int d = f.dim();
  const auto shift = f.shift();
  const auto offset = f.offset();
  double o = 0.0;
  if (!shift.empty()) o += shift[0];
  if (!offset.empty()) o += offset[0];
  const double phase = o - std::floor(o);
  std::vector<double> x(static_cast<std::size_t>(d), 0.5 * t);
  std::vector<double> diag(static_cast<std::size_t>(d));
  double integral = 0.0;
  double left = 0.0;
  for (double edge = 1.0 - phase; left < t; edge += 1.0) {
    const double right = std::min(edge, t);
    if (right > left) {
      x[0] = 0.5 * (left + right);
      f.diagonal_at(x, diag);
      integral += (right - left) * column_scaled_norm(transverse.values(), d, diag);
    }
    left = right;
  }
  return integral / t;
}

}  // namespace

DivergenceReport divergence_experiment(const FieldSpec& spec, const Matrix& xi, std::span<const double> t_list,
                                       const MonteCarloOptions& opts) {
  require_x1_laminate(spec, "divergence experiment");
  if (spec.dim < 2) throw ConfigError("field.dim", "divergence experiment needs d >= 2");
  if (xi.cols() != spec.dim) throw ConfigError("xi", "needs " + std::to_string(spec.dim) + " columns");
  if (opts.realizations < 1) throw ConfigError("N", "need at least one realization");
  if (t_list.empty()) throw ConfigError("t_list", "empty");
  Matrix transverse = xi;
  for (int i = 0; i < xi.rows(); ++i) transverse(i, 0) = 0.0;
  if (transverse.is_zero()) throw ConfigError("xi", "xi lies in span(e_1); the transverse bound is vacuous");

  const auto n_real = static_cast<std::size_t>(opts.realizations);
  const int d = spec.dim;
  std::vector<DivergenceSample> grid(t_list.size() * n_real);
  parallel_for(grid.size(), opts.workers, [&](std::size_t task) {
    const double t = t_list[task / n_real];
    const std::uint64_t r = task % n_real;
    const IntegrandModel model(sample_field(spec, opts.seed, r), xi.rows(), spec.has_lower());
    const Grid g(std::vector<double>(static_cast<std::size_t>(d), 0.5 * t), t, opts.resolution.cells_for(t),
                 xi.rows());
    const CellProblem prob = assemble(model, g, xi);
    const SolveReport rep = solve_cell(prob, opts.solve);
    auto& s = grid[task];
    s.realization = r;
    s.converged = rep.converged;
    s.value = rep.primal / std::pow(t, d);
    const std::size_t cells = g.cell_count();
    double sum = 0.0;
    for (std::size_t c = 0; c < cells; ++c) {
      const std::span<const double> w(prob.weights.data() + c * static_cast<std::size_t>(d),
                                      static_cast<std::size_t>(d));
      sum += column_scaled_norm(transverse.values(), d, w);
    }
    s.bound = sum / static_cast<double>(cells);
    s.running_mean = running_mean(model.field, transverse, t);
    s.slack = std::abs(s.bound - s.running_mean) + opts.solve.tol * std::max(1.0, s.value);
  });

  DivergenceReport out;
  out.bound.property = "divergence_lower_bound";
  std::size_t flagged = 0;
  for (std::size_t ti = 0; ti < t_list.size(); ++ti) {
    DivergenceLevel level;
    level.t = t_list[ti];
    level.samples.assign(grid.begin() + static_cast<std::ptrdiff_t>(ti * n_real),
                         grid.begin() + static_cast<std::ptrdiff_t>((ti + 1) * n_real));
    std::vector<double> values;
    for (const auto& s : level.samples) {
      if (!s.converged) {
        ++flagged;
        continue;
      }
      values.push_back(s.value);
      out.bound.record(s.running_mean - s.value, s.slack);
    }
    level.stats = summarize(values);
    out.levels.push_back(std::move(level));
  }
  out.bound.finish();
  if (flagged > 0) out.bound.pass = false;
  out.strictly_increasing = true;
  for (std::size_t i = 1; i < out.levels.size(); ++i)
    if (!(out.levels[i].stats.mean > out.levels[i - 1].stats.mean)) out.strictly_increasing = false;
  const double first = out.levels.front().stats.mean;
  out.growth_ratio = first > 0.0 ? out.levels.back().stats.mean / first : 0.0;
  out.bound.detail = "flagged=" + std::to_string(flagged) + " ratio=" + format_double(out.growth_ratio);
  return out;
}

double InterfaceProbe::profile(double x1) const {
  if (!found) return 0.0;
  const double lo = epsilon * static_cast<double>(k);
  return std::clamp((x1 - lo) / epsilon, 0.0, 1.0);
}

InterfaceProbe cheap_interface(const FieldSpec& spec, double delta, std::uint64_t seed, std::uint64_t index,
                               std::int64_t search_limit, std::int64_t scan_start, double interface_at) {
  require_x1_laminate(spec, "cheap interface");
  if (spec.has_lower()) throw ConfigError("field.lower", "cheap interface needs lambda off");
  if (!(delta > 0.0)) throw ConfigError("delta", "must be positive");
  if (search_limit < 1) throw ConfigError("search_limit", "must be positive");
  if (scan_start < 0) throw ConfigError("scan_start", "must be nonnegative");
  if (!(interface_at > 0.0 && interface_at < 1.0)) throw ConfigError("interface_at", "must lie in (0, 1)");

  const FieldSample f = sample_field(spec, seed, index);
  const auto d = static_cast<std::size_t>(spec.dim);
  std::vector<std::int64_t> cell(d, 0);
  std::vector<double> diag(d);
  InterfaceProbe probe;
  probe.delta = delta;
  probe.interface_at = interface_at;
  for (std::int64_t k = scan_start; k < scan_start + search_limit; ++k) {
    cell[0] = k;
    f.cell_diagonal(cell, diag);
    ++probe.scanned;
    if (diag[0] < delta) {
      probe.found = true;
      probe.k = k;
      break;
    }
  }
  probe.hit_probability = probe.found ? 1.0 / static_cast<double>(probe.scanned) : 0.0;
  if (!probe.found) return probe;

  // u_eps(x) = clamp(x_1 / eps - k); rescaled cell j covers x_1 in [eps j, eps (j + 1)].
  probe.epsilon = interface_at / static_cast<double>(probe.k + 1);
  const double eps = probe.epsilon;
  const auto cells = static_cast<std::int64_t>(std::ceil(1.0 / eps));
  double energy = 0.0;
  for (std::int64_t j = 0; j < cells; ++j) {
    const double lo = std::max(eps * static_cast<double>(j), eps * static_cast<double>(probe.k));
    const double hi = std::min({eps * static_cast<double>(j + 1), eps * static_cast<double>(probe.k + 1), 1.0});
    if (!(hi > lo)) continue;
    cell[0] = j;
    f.cell_diagonal(cell, diag);
    energy += diag[0] * ((hi - lo) / eps);
  }
  probe.energy = energy;
  probe.l1_distance = 0.5 * eps;
  probe.bv_seminorm = 1.0;
  return probe;
}

PropertyReport interface_limit_check(const FieldSpec& spec, std::span<const InterfaceProbe> probes) {
  PropertyReport rep;
  rep.property = "interface_limit";
  std::size_t missing = 0;
  for (const auto& p : probes) {
    if (!p.found) {
      ++missing;
      rep.record(std::numeric_limits<double>::infinity(), 0.0);
      continue;
    }
    rep.record(p.energy - p.delta, 0.0);
    rep.record(p.l1_distance - p.epsilon, 0.0);
  }
  const bool degenerate = coercivity_constant(spec).degenerate;
  rep.record(degenerate ? 0.0 : 1.0, 0.0);
  rep.finish();
  rep.detail = "probes=" + std::to_string(probes.size()) + " missing=" + std::to_string(missing) +
               (degenerate ? " coercivity=inf" : " coercivity finite");
  return rep;
}

HittingStats hitting_statistics(const FieldSpec& spec, double delta, std::uint64_t seed, std::size_t scans,
                                std::int64_t search_limit, int workers) {
  if (scans < 2) throw ConfigError("scans", "need at least 2 scans");
  std::vector<InterfaceProbe> probes(scans);
  parallel_for(scans, workers, [&](std::size_t r) { probes[r] = cheap_interface(spec, delta, seed, r, search_limit); });

  HittingStats out;
  out.scans = scans;
  out.p = spec.entry_law(0).probability_below(delta);
  out.expected_mean = out.p > 0.0 ? (1.0 - out.p) / out.p : std::numeric_limits<double>::infinity();
  std::vector<double> ks;
  for (const auto& p : probes) {
    if (p.found)
      ks.push_back(static_cast<double>(p.k));
    else
      ++out.censored;
  }
  out.index = summarize(ks);
  const double se = out.index.standard_error();
  const double diff = out.index.mean - out.expected_mean;
  out.z = se > 0.0 ? diff / se : (diff == 0.0 ? 0.0 : std::numeric_limits<double>::infinity());
  out.pass = out.censored == 0 && std::abs(out.z) <= 4.0;
  return out;
}

}  // namespace homlab
