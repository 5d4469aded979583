#include "homlab/homogenizer.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

#include "homlab/philox.hpp"

namespace homlab {

void parallel_for(std::size_t count, int workers, const std::function<void(std::size_t)>& body) {
  const std::size_t threads = std::min<std::size_t>(count, static_cast<std::size_t>(std::max(workers, 1)));
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::mutex mu;
  std::size_t failed_at = count;
  std::exception_ptr failure;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        body(i);
      } catch (...) {
        const std::lock_guard lock(mu);
        if (i < failed_at) {
          failed_at = i;
          failure = std::current_exception();
        }
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (std::size_t k = 0; k < threads; ++k) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

namespace {

void validate_options(const MonteCarloOptions& opts) {
  if (opts.realizations < 1) throw ConfigError("N", "need at least one realization");
  if (!(opts.solve.tol > 0.0)) throw ConfigError("tol", "must be positive");
}

IntegrandModel model_for(const FieldSpec& spec, std::uint64_t seed, std::uint64_t r, int m) {
  return IntegrandModel(sample_field(spec, seed, r), m, spec.has_lower());
}

CellSample to_sample(std::uint64_t r, const MuResult& mu) {
  return {r, mu.value, mu.lower, mu.report.gap, mu.report.iterations, mu.report.converged, mu.report.wall_seconds};
}

bool deterministic(const FieldSpec& spec) {
  if (spec.structure == Structure::periodic) return !spec.random_offset;
  const auto fixed = [](const DistributionSpec& d) { return d.kind == DistKind::constant; };
  return std::all_of(spec.diagonal.begin(), spec.diagonal.end(), fixed) && (!spec.lower || fixed(*spec.lower));
}

std::string fmt(double v) { return format_double(v); }

}  // namespace

HomEstimate estimate_f_hom(const FieldSpec& spec, const Matrix& xi, std::span<const double> t_list,
                           const MonteCarloOptions& opts) {
  validate_options(opts);
  if (t_list.empty()) throw ConfigError("t_list", "empty");
  for (std::size_t i = 0; i < t_list.size(); ++i) {
    if (!(t_list[i] > 0.0)) throw ConfigError("t_list", "entries must be positive");
    if (i > 0 && !(t_list[i] > t_list[i - 1])) throw ConfigError("t_list", "must be strictly increasing");
  }
  if (xi.cols() != spec.dim) throw ConfigError("xi", "needs " + std::to_string(spec.dim) + " columns");

  const auto n_real = static_cast<std::size_t>(opts.realizations);
  std::vector<CellSample> grid(t_list.size() * n_real);
  parallel_for(grid.size(), opts.workers, [&](std::size_t task) {
    const std::size_t ti = task / n_real;
    const std::uint64_t r = task % n_real;
    const IntegrandModel model = model_for(spec, opts.seed, r, xi.rows());
    grid[task] = to_sample(r, mu_xi(model, xi, t_list[ti], opts.resolution, opts.solve));
  });

  HomEstimate est;
  est.xi = xi;
  est.tol = opts.solve.tol;
  for (std::size_t ti = 0; ti < t_list.size(); ++ti) {
    LevelEstimate level;
    level.t = t_list[ti];
    level.samples.assign(grid.begin() + static_cast<std::ptrdiff_t>(ti * n_real),
                         grid.begin() + static_cast<std::ptrdiff_t>((ti + 1) * n_real));
    std::vector<double> values;
    for (const auto& s : level.samples) {
      if (s.converged)
        values.push_back(s.value);
      else
        ++level.flagged;
    }
    level.stats = summarize(values);
    if (10 * level.flagged > n_real) est.flagged = true;
    est.levels.push_back(std::move(level));
  }
  const auto& last = est.levels.back().stats;
  est.f_hom = last.mean;
  est.f_hom_ci = last.ci_half;
  if (est.levels.size() >= 2) {
    const auto& prev = est.levels[est.levels.size() - 2].stats;
    const double budget = last.ci_half + prev.ci_half + est.tol * (std::abs(last.mean) + std::abs(prev.mean));
    est.trend_stable = std::abs(last.mean - prev.mean) <= budget;
  }
  return est;
}

void PropertyReport::record(double excess, double allowance) {
  const double margin = allowance - excess;
  worst_margin = instances == 0 ? margin : std::min(worst_margin, margin);
  tolerance = instances == 0 ? allowance : std::max(tolerance, allowance);
  ++instances;
  if (!(margin >= 0.0)) ++violations;
}

void PropertyReport::finish() { pass = violations == 0; }

PropertyReport verify_growth_sandwich(const HomEstimate& est, const GrowthConstants& gc) {
  PropertyReport rep;
  rep.property = "growth_sandwich";
  const double norm = est.xi.frobenius();
  const double slack = est.tol * norm + est.f_hom_ci;
  const double lower = gc.lower_bound(norm);
  rep.record(lower - est.f_hom, slack);
  std::ostringstream detail;
  detail << "f_hom=" << fmt(est.f_hom) << " ci=" << fmt(est.f_hom_ci) << " lower=" << fmt(lower);
  if (gc.C0_infinite || gc.C1_infinite) {
    detail << " upper=inf";
  } else {
    const double upper = gc.upper_bound(norm);
    rep.record(est.f_hom - upper, slack + gc.C0_ci * norm + gc.C1_ci);
    detail << " upper=" << fmt(upper);
  }
  rep.finish();
  if (est.flagged) {
    rep.pass = false;
    detail << " estimate flagged";
  }
  rep.detail = detail.str();
  return rep;
}

SubadditivityResult check_subadditivity(const FieldSpec& spec, std::span<const Matrix> xis, double t, int depth,
                                        const MonteCarloOptions& opts) {
  validate_options(opts);
  if (depth < 1) throw ConfigError("partition_depth", "must be at least 1");
  if (xis.empty()) throw ConfigError("xi", "empty");
  const int d = spec.dim;
  const int n = opts.resolution.cells_for(t);
  const int split = 1 << depth;
  if (n % split != 0 || n / split < 2)
    throw ConfigError("partition_depth", std::to_string(n) + " cells per side cannot be split into " +
                                             std::to_string(split) + " aligned subcubes");

  SubadditivityResult out;
  out.instances.resize(static_cast<std::size_t>(opts.realizations));
  parallel_for(out.instances.size(), opts.workers, [&](std::size_t r) {
    auto& inst = out.instances[r];
    inst.realization = r;
    inst.xi_index = r % xis.size();
    const Matrix& xi = xis[inst.xi_index];
    const IntegrandModel model = model_for(spec, opts.seed, r, xi.rows());
    for (int k = 0; k <= depth; ++k) {
      const int per_axis = 1 << k;
      const double side = t / per_axis;
      std::size_t pieces = 1;
      for (int a = 0; a < d; ++a) pieces *= static_cast<std::size_t>(per_axis);
      double total = 0.0;
      std::vector<double> center(static_cast<std::size_t>(d));
      for (std::size_t q = 0; q < pieces; ++q) {
        std::size_t rest = q;
        for (int a = d - 1; a >= 0; --a) {
          const auto i = static_cast<int>(rest % static_cast<std::size_t>(per_axis));
          rest /= static_cast<std::size_t>(per_axis);
          center[static_cast<std::size_t>(a)] = -0.5 * t + (i + 0.5) * side;
        }
        const Grid grid(center, side, n / per_axis, xi.rows());
        const SolveReport rep = solve_cell(assemble(model, grid, xi), opts.solve);
        inst.converged = inst.converged && rep.converged;
        total += rep.primal;
      }
      inst.level_energies.push_back(total);
    }
  });

  auto& rep = out.report;
  rep.property = "subadditivity";
  const double volume = std::pow(t, d);
  std::size_t flagged = 0;
  for (const auto& inst : out.instances) {
    if (!inst.converged) {
      ++flagged;
      rep.record(std::numeric_limits<double>::infinity(), 0.0);
      continue;
    }
    for (int k = 1; k <= depth; ++k) {
      const double allowance = std::pow(2.0, d * k) * opts.solve.tol * volume;
      rep.record(inst.level_energies[static_cast<std::size_t>(k - 1)] - inst.level_energies[static_cast<std::size_t>(k)],
                 allowance);
    }
  }
  rep.finish();
  rep.detail = "depth=" + std::to_string(depth) + " t=" + fmt(t) + " flagged=" + std::to_string(flagged);
  return out;
}

StationarityResult check_stationarity_in_law(const FieldSpec& spec, const Matrix& xi, double t,
                                             std::span<const std::int64_t> z, const MonteCarloOptions& opts) {
  validate_options(opts);
  if (static_cast<int>(z.size()) != spec.dim) throw ConfigError("z", "needs " + std::to_string(spec.dim) + " entries");
  const auto n_real = static_cast<std::size_t>(opts.realizations);
  const std::vector<double> origin(z.size(), 0.0);
  std::vector<double> zd(z.begin(), z.end());

  StationarityResult out;
  out.shifted_cube.resize(n_real);
  out.shifted_field.resize(n_real);
  out.independent.resize(n_real);
  std::vector<char> converged(3 * n_real, 0);
  parallel_for(3 * n_real, opts.workers, [&](std::size_t task) {
    const std::size_t r = task % n_real;
    const std::size_t which = task / n_real;
    MuResult mu;
    if (which == 0) {
      mu = mu_xi(model_for(spec, opts.seed, r, xi.rows()), xi, t, zd, opts.resolution, opts.solve);
      out.shifted_cube[r] = mu.value;
    } else if (which == 1) {
      const IntegrandModel model(shift(sample_field(spec, opts.seed, r), zd), xi.rows(), spec.has_lower());
      mu = mu_xi(model, xi, t, origin, opts.resolution, opts.solve);
      out.shifted_field[r] = mu.value;
    } else {
      mu = mu_xi(model_for(spec, opts.seed, n_real + r, xi.rows()), xi, t, origin, opts.resolution, opts.solve);
      out.independent[r] = mu.value;
    }
    converged[task] = mu.report.converged ? 1 : 0;
  });

  auto& rep = out.report;
  rep.property = "stationarity";
  for (std::size_t r = 0; r < n_real; ++r) {
    const bool equal = out.shifted_cube[r] == out.shifted_field[r];
    if (!equal) ++out.mismatches;
    rep.record(equal ? 0.0 : std::abs(out.shifted_cube[r] - out.shifted_field[r]), 0.0);
  }
  const std::size_t flagged = static_cast<std::size_t>(std::count(converged.begin(), converged.end(), 0));
  const std::uint64_t test_seed = hash_combine(hash_combine(opts.seed, 0x7374617469ULL), n_real);
  out.test = ks_permutation_test(out.shifted_cube, out.independent, 0.01, 999, test_seed);
  rep.record(out.test.statistic, out.test.threshold);
  rep.finish();
  if (flagged > 0) rep.pass = false;
  rep.detail = "mismatches=" + std::to_string(out.mismatches) + " ks=" + fmt(out.test.statistic) +
               " threshold=" + fmt(out.test.threshold) + " flagged=" + std::to_string(flagged);
  return out;
}

namespace {

/// Per-realization values of one single-level estimate, keyed by realization.
std::vector<double> converged_values(const HomEstimate& est, std::vector<char>& ok) {
  const auto& samples = est.levels.back().samples;
  std::vector<double> v(samples.size());
  for (std::size_t r = 0; r < samples.size(); ++r) {
    v[r] = samples[r].value;
    ok[r] = ok[r] && samples[r].converged;
  }
  return v;
}

}  // namespace

RecessionResult recession(const FieldSpec& spec, const Matrix& xi, std::span<const double> s_list, double t,
                          const MonteCarloOptions& opts) {
  validate_options(opts);
  if (s_list.empty()) throw ConfigError("s_list", "empty");
  for (std::size_t i = 0; i < s_list.size(); ++i) {
    if (!(s_list[i] >= 1.0)) throw ConfigError("s_list", "entries must be >= 1");
    if (i > 0 && !(s_list[i] > s_list[i - 1])) throw ConfigError("s_list", "must be strictly increasing");
  }
  const double tlist[] = {t};
  const auto n_real = static_cast<std::size_t>(opts.realizations);
  std::vector<char> ok(n_real, 1);
  std::vector<std::vector<double>> per_real;
  RecessionResult out;
  bool flagged = false;
  for (const double s : s_list) {
    const HomEstimate est = estimate_f_hom(spec, xi * s, tlist, opts);
    flagged = flagged || est.flagged;
    std::vector<double> v = converged_values(est, ok);
    for (auto& x : v) x /= s;
    per_real.push_back(std::move(v));
    out.series.push_back({s, est.f_hom / s, est.f_hom_ci / s});
  }
  out.f_infinity = out.series.back().value;

  const bool with_lower = spec.has_lower();
  double mean_lower = 0.0;
  if (with_lower) {
    const GrowthConstants gc = growth_constants(spec, 100000, opts.seed);
    mean_lower = gc.C1;
  }
  auto& rep = out.report;
  rep.property = "recession";
  const double tol = opts.solve.tol;
  for (std::size_t i = 1; i < s_list.size(); ++i) {
    const double expected = mean_lower * (1.0 / s_list[i] - 1.0 / s_list[i - 1]);
    std::vector<double> diffs;
    for (std::size_t r = 0; r < n_real; ++r)
      if (ok[r]) diffs.push_back(per_real[i][r] - per_real[i - 1][r] - expected);
    const Summary sd = summarize(diffs);
    const double scale = std::max({1.0, std::abs(out.series[i].value), std::abs(out.series[i - 1].value)});
    const double allowance = 2.0 * tol * scale + (with_lower ? sd.ci_half : 0.0);
    rep.record(std::abs(sd.mean), allowance);
    if (with_lower && mean_lower > 0.0) rep.record(out.series[i].value - out.series[i - 1].value, 0.0);
  }
  rep.finish();
  if (flagged) rep.pass = false;
  rep.detail = "f_inf=" + fmt(out.f_infinity) + " E[lambda]=" + fmt(mean_lower);
  return out;
}

RankOneResult check_rank_one_convexity(const FieldSpec& spec, const Matrix& xi1, const Matrix& xi2, int points,
                                       double t, const MonteCarloOptions& opts) {
  validate_options(opts);
  if (xi1.rows() != xi2.rows() || xi1.cols() != xi2.cols()) throw ConfigError("xi", "segment endpoints differ in shape");
  if (!(xi1 - xi2).is_rank_at_most_one(1e-12)) throw ConfigError("xi", "segment endpoints are not rank-one connected");
  if (points < 3) throw ConfigError("points", "need at least 3 points on the segment");

  const double tlist[] = {t};
  const auto n_real = static_cast<std::size_t>(opts.realizations);
  std::vector<char> ok(n_real, 1);
  std::vector<std::vector<double>> per_real;
  RankOneResult out;
  bool flagged = false;
  for (int k = 0; k < points; ++k) {
    const double s = static_cast<double>(k) / (points - 1);
    const HomEstimate est = estimate_f_hom(spec, xi1 * (1.0 - s) + xi2 * s, tlist, opts);
    flagged = flagged || est.flagged;
    per_real.push_back(converged_values(est, ok));
    out.segment.push_back({s, est.f_hom, est.f_hom_ci, 0.0});
  }

  const bool random = !deterministic(spec);
  auto& rep = out.report;
  rep.property = "rank_one_convexity";
  const double tol = opts.solve.tol;
  for (std::size_t k = 1; k + 1 < out.segment.size(); ++k) {
    auto& p = out.segment[k];
    std::vector<double> slack;
    for (std::size_t r = 0; r < n_real; ++r)
      if (ok[r]) slack.push_back(0.5 * (per_real[k - 1][r] + per_real[k + 1][r]) - per_real[k][r]);
    const Summary ss = summarize(slack);
    p.midpoint_slack = ss.mean;
    const double allowance = 2.0 * tol * std::max(1.0, std::abs(p.value)) + (random ? ss.ci_half : 0.0);
    rep.record(-p.midpoint_slack, allowance);
  }
  rep.finish();
  if (flagged) rep.pass = false;
  rep.detail = std::string(random ? "random" : "deterministic") + " field, " + std::to_string(points) + " points";
  return out;
}

}  // namespace homlab
