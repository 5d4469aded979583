#include "homlab/run.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <limits>

#include <json.hpp>

#include "homlab/degeneracy_lab.hpp"
#include "homlab/homogenizer.hpp"
#include "homlab/integrand.hpp"
#include "homlab/philox.hpp"

namespace homlab {

using nlohmann::json;

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

struct Record {
  std::string quantity;
  int xi_index = -1;
  double t = kNan;
  double param = kNan;
  std::int64_t realization = -1;
  double value = kNan;
  double std = kNan;
  double ci = kNan;
  double lower = kNan;
  double gap = kNan;
  std::int64_t iterations = -1;
  std::string flags;
  double wall_seconds = 0.0;

  Record() = default;
  Record(std::string q, int xi, double t_, double p = kNan) : quantity(std::move(q)), xi_index(xi), t(t_), param(p) {}
};

struct Context {
  const RunConfig& cfg;
  MonteCarloOptions opts;
  std::vector<Record> records;
  json reports = json::array();
  json estimates = json::array();
  json extras = json::object();
  json constants;
  bool flagged = false;
};

std::string num(double v) { return std::isnan(v) ? std::string() : format_double(v); }

/// JSON number, or null for non-finite values.
json jnum(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

std::string xi_text(const Matrix& xi) {
  std::string s;
  for (int r = 0; r < xi.rows(); ++r) {
    if (r > 0) s += ';';
    for (int c = 0; c < xi.cols(); ++c) {
      if (c > 0) s += ' ';
      s += format_double(xi(r, c));
    }
  }
  return s;
}

std::string iso_time(std::chrono::system_clock::time_point tp) {
  const std::time_t tt = std::chrono::system_clock::to_time_t(tp);
  std::tm tm{};
  gmtime_r(&tt, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string run_id_of(const RunConfig& cfg) {
  std::uint64_t h = mix64(0x686f6d6c6162ULL);
  for (const char ch : canonical_config(cfg)) h = hash_combine(h, static_cast<unsigned char>(ch));
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

json report_json(const PropertyReport& r, int xi_index = -1) {
  json j = {{"property", r.property},
            {"instances", r.instances},
            {"violations", r.violations},
            {"worst_margin", jnum(r.worst_margin)},
            {"tolerance", jnum(r.tolerance)},
            {"pass", r.pass},
            {"detail", r.detail}};
  j["xi_index"] = xi_index >= 0 ? json(xi_index) : json(nullptr);
  return j;
}

json constants_json(const GrowthConstants& gc) {
  return {{"alpha", gc.alpha},
          {"c0", jnum(gc.c0)},
          {"C0", jnum(gc.C0)},
          {"C1", jnum(gc.C1)},
          {"c0_degenerate", gc.c0_degenerate},
          {"C0_infinite", gc.C0_infinite},
          {"C1_infinite", gc.C1_infinite},
          {"analytic", gc.analytic},
          {"C0_ci", jnum(gc.C0_ci)},
          {"C1_ci", jnum(gc.C1_ci)}};
}

void add_estimate(Context& ctx, const HomEstimate& est, int xi_index) {
  json levels = json::array();
  for (const auto& level : est.levels) {
    for (const auto& s : level.samples) {
      Record rec{"mu", xi_index, level.t};
      rec.realization = static_cast<std::int64_t>(s.realization);
      rec.value = s.value;
      rec.lower = s.lower;
      rec.gap = s.gap;
      rec.iterations = s.iterations;
      rec.flags = s.converged ? "" : "nonconverged";
      rec.wall_seconds = s.wall_seconds;
      ctx.records.push_back(rec);
    }
    Record agg{"level_mean", xi_index, level.t};
    agg.value = level.stats.mean;
    agg.std = level.stats.stddev;
    agg.ci = level.stats.ci_half;
    agg.iterations = static_cast<std::int64_t>(level.stats.count);
    if (level.flagged > 0) agg.flags = "flagged=" + std::to_string(level.flagged);
    ctx.records.push_back(agg);
    levels.push_back({{"t", level.t},
                      {"count", level.stats.count},
                      {"mean", jnum(level.stats.mean)},
                      {"std", jnum(level.stats.stddev)},
                      {"ci", jnum(level.stats.ci_half)},
                      {"flagged", level.flagged}});
  }
  Record fh{"f_hom", xi_index, est.levels.back().t};
  fh.value = est.f_hom;
  fh.ci = est.f_hom_ci;
  fh.flags = std::string(est.trend_stable ? "" : "trend_unstable") + (est.flagged ? " flagged" : "");
  ctx.records.push_back(fh);
  ctx.estimates.push_back({{"xi_index", xi_index},
                           {"xi", xi_text(est.xi)},
                           {"f_hom", jnum(est.f_hom)},
                           {"ci", jnum(est.f_hom_ci)},
                           {"tol", est.tol},
                           {"trend_stable", est.trend_stable},
                           {"flagged", est.flagged},
                           {"levels", levels}});
  ctx.flagged = ctx.flagged || est.flagged;
}

// ---------------------------------------------------------------------------
// Commands

void field_stats(Context& ctx) {
  const auto& cfg = ctx.cfg;
  const FieldSpec& spec = cfg.field;
  const Box box = cfg.box.lo.empty() ? Box::unit(spec.dim) : cfg.box;
  const auto n_real = static_cast<std::size_t>(cfg.realizations);
  std::vector<std::vector<BirkhoffPoint>> series(n_real);
  parallel_for(n_real, ctx.opts.workers, [&](std::size_t r) {
    series[r] = birkhoff_average(sample_field(spec, cfg.seed, r), cfg.observable, box, cfg.t_list);
  });

  // Law of the observable on one unit cell, when it has a closed form.
  std::optional<DistributionSpec> law;
  double factor = 1.0;
  if (spec.structure != Structure::periodic) {
    if (cfg.observable.kind == ObservableKind::entry) {
      law = spec.entry_law(cfg.observable.entry);
    } else if (cfg.observable.kind == ObservableKind::lower) {
      law = spec.lower;
    } else if (spec.isotropic) {
      law = spec.diagonal[0];
      factor = std::sqrt(static_cast<double>(spec.dim));
    }
  }

  for (std::size_t ti = 0; ti < cfg.t_list.size(); ++ti) {
    std::vector<double> values;
    for (std::size_t r = 0; r < n_real; ++r) {
      Record rec{"birkhoff", -1, cfg.t_list[ti]};
      rec.realization = static_cast<std::int64_t>(r);
      rec.value = series[r][ti].average;
      rec.iterations = static_cast<std::int64_t>(series[r][ti].cells_visited);
      ctx.records.push_back(rec);
      values.push_back(rec.value);
    }
    const Summary s = summarize(values);
    Record agg{"birkhoff_mean", -1, cfg.t_list[ti]};
    agg.value = s.mean;
    agg.std = s.stddev;
    agg.ci = s.ci_half;
    ctx.records.push_back(agg);
  }

  if (!law) return;
  const auto mean = law->mean();
  const auto var = law->variance();
  if (mean && var) {
    PropertyReport rep;
    rep.property = "ergodic_average";
    const double mu = factor * *mean;
    const double sigma = factor * std::sqrt(*var);
    double extent = 1.0;
    if (spec.structure == Structure::laminate) {
      const auto a = static_cast<std::size_t>(spec.laminate_axis);
      extent = box.hi[a] - box.lo[a];
    }
    const double t = cfg.t_list.back();
    for (std::size_t r = 0; r < n_real; ++r) {
      const double cells = spec.structure == Structure::laminate ? std::ceil(extent * t)
                                                                 : static_cast<double>(series[r].back().cells_visited);
      const double se = sigma / std::sqrt(std::max(cells, 1.0));
      rep.record(std::abs(series[r].back().average - mu), 3.0 * se);
    }
    rep.finish();
    rep.detail = "expected=" + format_double(mu) + " t=" + format_double(t);
    ctx.reports.push_back(report_json(rep));
  } else if (!mean) {
    PropertyReport rep;
    rep.property = "divergence_signature";
    for (std::size_t r = 0; r < n_real; ++r) {
      const double first = series[r].front().average;
      const double last = series[r].back().average;
      rep.record(2.0 * first - last, 0.0);
    }
    rep.finish();
    rep.detail = "last t average exceeds twice the first";
    ctx.reports.push_back(report_json(rep));
  }
}

void solve_cell_command(Context& ctx) {
  const auto& cfg = ctx.cfg;
  const auto n_real = static_cast<std::size_t>(cfg.realizations);
  const std::size_t per_xi = cfg.t_list.size() * n_real;
  const std::size_t tasks = cfg.xi.size() * per_xi;
  std::vector<Record> rows(tasks);
  std::vector<std::pair<double, double>> bounds(tasks);
  if (cfg.dump_minimizers) std::filesystem::create_directories(cfg.out_dir / "minimizers");
  parallel_for(tasks, ctx.opts.workers, [&](std::size_t task) {
    const std::size_t xi_index = task / per_xi;
    const std::size_t ti = (task % per_xi) / n_real;
    const std::size_t r = task % n_real;
    const Matrix& xi = cfg.xi[xi_index];
    const double t = cfg.t_list[ti];
    const IntegrandModel model(sample_field(cfg.field, cfg.seed, r), cfg.components, cfg.field.has_lower());
    const Grid grid(std::vector<double>(static_cast<std::size_t>(cfg.field.dim), 0.0), t,
                    cfg.resolution.cells_for(t), cfg.components);
    const CellProblem prob = assemble(model, grid, xi);
    const SolveReport rep = solve_cell(prob, cfg.solve);
    const double vol = std::pow(t, cfg.field.dim);
    Record rec{"mu", static_cast<int>(xi_index), t};
    rec.realization = static_cast<std::int64_t>(r);
    rec.value = rep.primal / vol;
    rec.lower = rep.dual / vol;
    rec.gap = rep.gap;
    rec.iterations = rep.iterations;
    rec.flags = rep.converged ? "" : "nonconverged";
    rec.wall_seconds = rep.wall_seconds;
    rows[task] = rec;
    bounds[task] = {rep.dual, rep.primal};
    if (cfg.dump_minimizers) {
      const std::string stem = "xi" + std::to_string(xi_index) + "_t" + std::to_string(ti) + "_r" + std::to_string(r);
      const json sidecar = {{"xi", xi_text(xi)},   {"t", t},          {"realization", r},
                            {"seed", cfg.seed},     {"primal", rep.primal}, {"dual", rep.dual},
                            {"gap", rep.gap},       {"converged", rep.converged}};
      write_minimizer_dump(cfg.out_dir / "minimizers" / (stem + ".hmlb"), prob, rep, sidecar.dump(2));
    }
  });
  PropertyReport cert;
  cert.property = "duality_certificate";
  for (std::size_t k = 0; k < tasks; ++k) {
    if (!rows[k].flags.empty()) {
      ctx.flagged = true;
      continue;
    }
    cert.record(bounds[k].first - bounds[k].second, 0.0);
    cert.record(rows[k].gap - cfg.solve.tol, 0.0);
  }
  cert.finish();
  ctx.records = std::move(rows);
  ctx.reports.push_back(report_json(cert));
}

void estimate_command(Context& ctx) {
  for (std::size_t i = 0; i < ctx.cfg.xi.size(); ++i)
    add_estimate(ctx, estimate_f_hom(ctx.cfg.field, ctx.cfg.xi[i], ctx.cfg.t_list, ctx.opts), static_cast<int>(i));
}

void verify_bounds(Context& ctx) {
  const GrowthConstants gc = growth_constants(ctx.cfg.field, ctx.cfg.mc_budget, ctx.cfg.seed);
  ctx.constants = constants_json(gc);
  for (std::size_t i = 0; i < ctx.cfg.xi.size(); ++i) {
    const HomEstimate est = estimate_f_hom(ctx.cfg.field, ctx.cfg.xi[i], ctx.cfg.t_list, ctx.opts);
    add_estimate(ctx, est, static_cast<int>(i));
    const PropertyReport rep = verify_growth_sandwich(est, gc);
    const double norm = est.xi.frobenius();
    Record rec{"sandwich_margin", static_cast<int>(i), est.levels.back().t};
    rec.value = rep.worst_margin;
    rec.lower = gc.lower_bound(norm);
    rec.ci = est.f_hom_ci;
    rec.flags = rep.pass ? "" : "fail";
    ctx.records.push_back(rec);
    ctx.reports.push_back(report_json(rep, static_cast<int>(i)));
  }
}

void subadditivity_command(Context& ctx) {
  const double t = ctx.cfg.t_list.back();
  const auto res = check_subadditivity(ctx.cfg.field, ctx.cfg.xi, t, ctx.cfg.partition_depth, ctx.opts);
  for (const auto& inst : res.instances) {
    for (std::size_t k = 0; k < inst.level_energies.size(); ++k) {
      Record rec{"partition_energy", static_cast<int>(inst.xi_index), t, static_cast<double>(k)};
      rec.realization = static_cast<std::int64_t>(inst.realization);
      rec.value = inst.level_energies[k];
      rec.flags = inst.converged ? "" : "nonconverged";
      ctx.records.push_back(rec);
    }
  }
  ctx.reports.push_back(report_json(res.report));
}

void stationarity_command(Context& ctx) {
  const double t = ctx.cfg.t_list.back();
  for (std::size_t i = 0; i < ctx.cfg.xi.size(); ++i) {
    const auto res = check_stationarity_in_law(ctx.cfg.field, ctx.cfg.xi[i], t, ctx.cfg.shift, ctx.opts);
    const std::pair<const char*, const std::vector<double>*> samples[] = {
        {"mu_shifted_cube", &res.shifted_cube}, {"mu_shifted_field", &res.shifted_field}, {"mu_independent", &res.independent}};
    for (const auto& [name, values] : samples) {
      for (std::size_t r = 0; r < values->size(); ++r) {
        Record rec{name, static_cast<int>(i), t};
        rec.realization = static_cast<std::int64_t>(r);
        rec.value = (*values)[r];
        ctx.records.push_back(rec);
      }
    }
    Record ks{"ks_statistic", static_cast<int>(i), t};
    ks.value = res.test.statistic;
    ks.lower = res.test.threshold;
    ctx.records.push_back(ks);
    ctx.reports.push_back(report_json(res.report, static_cast<int>(i)));
  }
}

void recession_command(Context& ctx) {
  const double t = ctx.cfg.t_list.back();
  json series = json::array();
  for (std::size_t i = 0; i < ctx.cfg.xi.size(); ++i) {
    const auto res = recession(ctx.cfg.field, ctx.cfg.xi[i], ctx.cfg.s_list, t, ctx.opts);
    for (const auto& p : res.series) {
      Record rec{"f_hom_scaled", static_cast<int>(i), t, p.s};
      rec.value = p.value;
      rec.ci = p.ci;
      ctx.records.push_back(rec);
    }
    series.push_back({{"xi_index", i}, {"f_infinity", jnum(res.f_infinity)}});
    ctx.reports.push_back(report_json(res.report, static_cast<int>(i)));
  }
  ctx.extras["recession"] = series;
}

void rank_one_command(Context& ctx) {
  const double t = ctx.cfg.t_list.back();
  const auto res = check_rank_one_convexity(ctx.cfg.field, ctx.cfg.xi[0], ctx.cfg.xi[1], ctx.cfg.segment_points, t,
                                            ctx.opts);
  for (const auto& p : res.segment) {
    Record rec{"segment", -1, t, p.lambda};
    rec.value = p.value;
    rec.ci = p.ci;
    rec.lower = p.midpoint_slack;
    ctx.records.push_back(rec);
  }
  ctx.reports.push_back(report_json(res.report));
}

void divergence_command(Context& ctx) {
  json growth = json::array();
  for (std::size_t i = 0; i < ctx.cfg.xi.size(); ++i) {
    const auto res = divergence_experiment(ctx.cfg.field, ctx.cfg.xi[i], ctx.cfg.t_list, ctx.opts);
    for (const auto& level : res.levels) {
      for (const auto& s : level.samples) {
        Record rec{"mu", static_cast<int>(i), level.t};
        rec.realization = static_cast<std::int64_t>(s.realization);
        rec.value = s.value;
        rec.lower = s.running_mean;
        rec.gap = s.slack;
        rec.flags = s.converged ? "" : "nonconverged";
        ctx.records.push_back(rec);
      }
      Record agg{"level_mean", static_cast<int>(i), level.t};
      agg.value = level.stats.mean;
      agg.std = level.stats.stddev;
      agg.ci = level.stats.ci_half;
      ctx.records.push_back(agg);
    }
    ctx.reports.push_back(report_json(res.bound, static_cast<int>(i)));
    PropertyReport g;
    g.property = "divergence_growth";
    g.record(res.strictly_increasing ? 0.0 : 1.0, 0.0);
    g.record(2.0 - res.growth_ratio, 0.0);
    g.finish();
    g.detail = std::string(res.strictly_increasing ? "strictly increasing" : "not increasing") +
               ", ratio=" + format_double(res.growth_ratio);
    ctx.reports.push_back(report_json(g, static_cast<int>(i)));
    growth.push_back({{"xi_index", i}, {"ratio", jnum(res.growth_ratio)}, {"increasing", res.strictly_increasing}});
  }
  ctx.extras["divergence"] = growth;
}

void interface_command(Context& ctx) {
  const auto& cfg = ctx.cfg;
  std::vector<InterfaceProbe> probes;
  for (const double delta : cfg.deltas)
    probes.push_back(
        cheap_interface(cfg.field, delta, cfg.seed, 0, cfg.search_limit, cfg.scan_start, cfg.interface_at));
  json jp = json::array();
  for (const auto& p : probes) {
    Record rec{"interface_energy", -1, kNan, p.delta};
    rec.realization = 0;
    rec.value = p.energy;
    rec.lower = p.epsilon;
    rec.gap = p.l1_distance;
    rec.iterations = p.k;
    rec.flags = p.found ? "" : "not_found";
    ctx.records.push_back(rec);
    jp.push_back({{"delta", p.delta},
                  {"found", p.found},
                  {"k", p.k},
                  {"scanned", p.scanned},
                  {"hit_probability", p.hit_probability},
                  {"epsilon", p.epsilon},
                  {"interface_at", p.interface_at},
                  {"energy", p.energy},
                  {"l1_distance", p.l1_distance},
                  {"bv_seminorm", p.bv_seminorm}});
  }
  ctx.extras["probes"] = jp;
  ctx.reports.push_back(report_json(interface_limit_check(cfg.field, probes)));

  PropertyReport hit;
  hit.property = "hitting_law";
  json jh = json::array();
  for (const double delta : cfg.deltas) {
    const HittingStats hs = hitting_statistics(cfg.field, delta, cfg.seed, cfg.scans, cfg.search_limit, ctx.opts.workers);
    Record rec{"hitting_mean", -1, kNan, delta};
    rec.value = hs.index.mean;
    rec.std = hs.index.stddev;
    rec.ci = hs.index.ci_half;
    rec.lower = hs.expected_mean;
    rec.iterations = static_cast<std::int64_t>(hs.censored);
    ctx.records.push_back(rec);
    hit.record(hs.censored > 0 ? std::numeric_limits<double>::infinity() : std::abs(hs.z), 4.0);
    jh.push_back({{"delta", delta},
                  {"p", hs.p},
                  {"expected_mean", jnum(hs.expected_mean)},
                  {"mean", jnum(hs.index.mean)},
                  {"z", jnum(hs.z)},
                  {"censored", hs.censored},
                  {"pass", hs.pass}});
  }
  hit.finish();
  hit.detail = "scans=" + std::to_string(cfg.scans);
  ctx.extras["hitting"] = jh;
  ctx.reports.push_back(report_json(hit));
}

void glue_command(Context& ctx) {
  const auto& cfg = ctx.cfg;
  const auto n = static_cast<std::size_t>(cfg.instances);
  std::vector<GlueReport> reports(n);
  std::vector<double> deltas(n);
  parallel_for(n, ctx.opts.workers, [&](std::size_t i) {
    const GlueInstance inst = random_glue_instance(cfg.field, cfg.seed, i, cfg.components);
    deltas[i] = inst.delta;
    reports[i] = glue_with_cutoff(inst.u, inst.v, inst.a_inner, inst.a_outer, inst.b, inst.delta, inst.problem).report;
  });
  PropertyReport est, layers;
  est.property = "fundamental_estimate";
  layers.property = "layer_count";
  for (std::size_t i = 0; i < n; ++i) {
    const auto& r = reports[i];
    Record rec{"glue_slack", -1, kNan, deltas[i]};
    rec.realization = static_cast<std::int64_t>(i);
    rec.value = r.slack;
    rec.lower = r.glued_energy;
    rec.gap = r.rhs;
    rec.iterations = r.layers;
    ctx.records.push_back(rec);
    est.record(-r.slack, 0.0);
    const int expected = static_cast<int>(std::ceil(1.0 / deltas[i]));
    layers.record(std::abs(r.layers - expected), 0.0);
  }
  est.finish();
  layers.finish();
  ctx.reports.push_back(report_json(est));
  ctx.reports.push_back(report_json(layers));
}

void dispatch(Context& ctx) {
  switch (ctx.cfg.command) {
    case Command::field_stats: return field_stats(ctx);
    case Command::solve_cell: return solve_cell_command(ctx);
    case Command::estimate_fhom: return estimate_command(ctx);
    case Command::verify_bounds: return verify_bounds(ctx);
    case Command::subadditivity: return subadditivity_command(ctx);
    case Command::stationarity: return stationarity_command(ctx);
    case Command::recession: return recession_command(ctx);
    case Command::rank_one: return rank_one_command(ctx);
    case Command::degenerate_divergence: return divergence_command(ctx);
    case Command::degenerate_interface: return interface_command(ctx);
    case Command::glue_check: return glue_command(ctx);
  }
}

void write_csv(const std::filesystem::path& path, const std::string& run_id, const RunConfig& cfg,
               const std::vector<Record>& records, const std::string& started, const std::string& finished) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << kCsvVersionLine << '\n' << kCsvHeader << '\n';
  const std::string command(to_string(cfg.command));
  for (const auto& r : records) {
    const std::string xi = r.xi_index >= 0 ? xi_text(cfg.xi[static_cast<std::size_t>(r.xi_index)]) : "";
    out << run_id << ',' << command << ',' << r.quantity << ','
        << (r.xi_index >= 0 ? std::to_string(r.xi_index) : "") << ',' << xi << ',' << num(r.t) << ','
        << num(r.param) << ',' << (r.realization >= 0 ? std::to_string(r.realization) : "") << ','
        << num(r.value) << ',' << num(r.std) << ',' << num(r.ci) << ',' << num(r.lower) << ',' << num(r.gap)
        << ',' << (r.iterations >= 0 ? std::to_string(r.iterations) : "") << ',' << r.flags << ',' << started
        << ',' << finished << ',' << format_double(r.wall_seconds) << '\n';
  }
}

}  // namespace

int resolve_workers(int configured) {
  if (configured > 0) return configured;
  if (const char* env = std::getenv("HOMLAB_WORKERS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0 && v <= 1024) return static_cast<int>(v);
  }
  return 1;
}

RunOutcome run(const RunConfig& cfg) {
  RunOutcome outcome;
  outcome.run_id = run_id_of(cfg);
  Context ctx{cfg, {}, {}, json::array(), json::array(), json::object(), nullptr, false};
  ctx.opts.seed = cfg.seed;
  ctx.opts.realizations = cfg.realizations;
  ctx.opts.solve = cfg.solve;
  ctx.opts.resolution = cfg.resolution;
  ctx.opts.workers = resolve_workers(cfg.workers);

  const auto t0 = std::chrono::system_clock::now();
  const auto c0 = std::chrono::steady_clock::now();
  try {
    dispatch(ctx);
  } catch (const std::exception& e) {
    outcome.error = e.what();
  }
  const auto t1 = std::chrono::system_clock::now();
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - c0).count();

  bool pass = outcome.error.empty();
  for (const auto& r : ctx.reports) pass = pass && r["pass"].get<bool>();
  outcome.flagged = ctx.flagged;
  outcome.pass = pass && !ctx.flagged;
  outcome.exit_code = !outcome.error.empty() ? 2 : (outcome.pass ? 0 : 1);

  std::filesystem::create_directories(cfg.out_dir);
  outcome.csv = cfg.out_dir / "results.csv";
  outcome.summary = cfg.out_dir / "summary.json";
  const std::string started = iso_time(t0), finished = iso_time(t1);
  write_csv(outcome.csv, outcome.run_id, cfg, ctx.records, started, finished);

  json summary = {{"schema", kSummarySchema},
                  {"run_id", outcome.run_id},
                  {"command", std::string(to_string(cfg.command))},
                  {"seed", cfg.seed},
                  {"config", json::parse(canonical_config(cfg))},
                  {"pass", outcome.pass},
                  {"flagged", outcome.flagged},
                  {"error", outcome.error.empty() ? json(nullptr) : json(outcome.error)},
                  {"reports", ctx.reports},
                  {"estimates", ctx.estimates},
                  {"constants", ctx.constants},
                  {"extras", ctx.extras},
                  {"records", ctx.records.size()},
                  {"timing", {{"started_at", started}, {"finished_at", finished}, {"wall_seconds", wall}}}};
  std::ofstream(outcome.summary) << summary.dump(2) << '\n';
  return outcome;
}

}  // namespace homlab
