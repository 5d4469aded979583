// Prints one PASS/FAIL line per acceptance criterion. Exit code is 0 unless a
// criterion threw, or --strict is given and some criterion failed.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "homlab/cell_solver.hpp"
#include "homlab/config.hpp"
#include "homlab/degeneracy_lab.hpp"
#include "homlab/homogenizer.hpp"
#include "homlab/integrand.hpp"
#include "homlab/run.hpp"

using namespace homlab;

namespace {

constexpr std::uint64_t kSeed = 1234;

struct Verdict {
  bool pass = false;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

Matrix row(std::initializer_list<double> v) { return Matrix(1, static_cast<int>(v.size()), std::vector<double>(v)); }

FieldSpec iid(int d, DistributionSpec law) {
  FieldSpec s;
  s.dim = d;
  s.isotropic = true;
  s.diagonal = {law};
  return s;
}

FieldSpec laminate(int d, DistributionSpec law) {
  FieldSpec s = iid(d, law);
  s.structure = Structure::laminate;
  s.laminate_axis = 0;
  return s;
}

MonteCarloOptions mc(int n, int workers) {
  MonteCarloOptions o;
  o.seed = kSeed;
  o.realizations = n;
  o.workers = workers;
  return o;
}

Verdict constant_field() {
  const IntegrandModel model(sample_field(FieldSpec::constant(2, 2.0), kSeed, 0), 1, false);
  Verdict v{true, ""};
  double worst_err = 0.0, worst_time = 0.0;
  for (const Matrix& xi : {row({1, 0}), row({1, 1})}) {
    const auto t0 = std::chrono::steady_clock::now();
    const MuResult mu = mu_xi(model, xi, 64.0, ResolutionPolicy{}, SolveOptions{});
    const double secs = seconds_since(t0);
    const double exact = 2.0 * xi.frobenius();
    const double err = std::abs(mu.value - exact) / exact;
    worst_err = std::max(worst_err, err);
    worst_time = std::max(worst_time, secs);
    if (!(err <= 1e-4) || !(secs < 10.0) || !mu.report.converged) v.pass = false;
  }
  v.detail = "n=128 max rel err " + fmt(worst_err) + ", slowest solve " + fmt(worst_time) + " s";
  return v;
}

Verdict one_d_laminate(int workers) {
  const auto t0 = std::chrono::steady_clock::now();
  FieldSpec spec = iid(1, DistributionSpec::uniform(1.0, 2.0));
  spec.structure = Structure::laminate;
  const std::vector<double> ts{16.0, 64.0, 256.0};
  const HomEstimate est = estimate_f_hom(spec, Matrix(1, 1, 1.0), ts, mc(50, workers));
  Verdict v{true, ""};
  for (const auto& level : est.levels) {
    const double oracle = 1.0 + 1.0 / (level.t + 1.0);
    const bool ok = std::abs(level.stats.mean - oracle) <= level.stats.ci_half && level.flagged == 0;
    v.pass = v.pass && ok;
    v.detail += "t=" + fmt(level.t) + " mean " + fmt(level.stats.mean) + " vs " + fmt(oracle) + " +- " +
                fmt(level.stats.ci_half) + "; ";
  }
  const double secs = seconds_since(t0);
  v.pass = v.pass && secs < 300.0;
  v.detail += fmt(secs) + " s";
  return v;
}

Verdict sandwich(int workers) {
  const FieldSpec spec = iid(2, DistributionSpec::two_point(1.0, 0.5, 2.0));
  const GrowthConstants gc = growth_constants(spec);
  const std::vector<double> ts{8.0, 16.0};
  Verdict v{true, "c0=" + fmt(gc.c0) + " C0=" + fmt(gc.C0) + ";"};
  std::size_t violations = 0;
  for (const Matrix& xi : {row({1, 0}), row({0, 1}), row({1, 1})}) {
    const HomEstimate est = estimate_f_hom(spec, xi, ts, mc(20, workers));
    const PropertyReport rep = verify_growth_sandwich(est, gc);
    violations += rep.violations;
    v.pass = v.pass && rep.pass;
    v.detail += " f(" + xi.to_string() + ")=" + fmt(est.f_hom) + " margin " + fmt(rep.worst_margin);
  }
  v.detail += "; violations " + std::to_string(violations);
  return v;
}

Verdict subadditivity(int workers) {
  const FieldSpec spec = iid(2, DistributionSpec::uniform(1.0, 2.0));
  const std::vector<Matrix> xis{row({1, 0}), row({0, 1}), row({1, 1}), row({2, -1})};
  const SubadditivityResult r = check_subadditivity(spec, xis, 16.0, 1, mc(100, workers));
  return {r.report.pass, std::to_string(r.report.instances) + " instances, " + std::to_string(r.report.violations) +
                             " violations, worst margin " + fmt(r.report.worst_margin)};
}

Verdict ergodic() {
  const auto t0 = std::chrono::steady_clock::now();
  const Observable entry{ObservableKind::entry, 0};
  const std::vector<double> t_uniform{1000.0};
  const auto u = birkhoff_average(sample_field(iid(2, DistributionSpec::uniform(1.0, 2.0)), kSeed, 0), entry,
                                  Box::unit(2), t_uniform);
  const double se = std::sqrt(1.0 / 12.0) / std::sqrt(static_cast<double>(u[0].cells_visited));
  const bool uniform_ok = std::abs(u[0].average - 1.5) <= 3.0 * se;
  const std::vector<double> t_pareto{16.0, 4096.0};
  const auto p = birkhoff_average(sample_field(iid(2, DistributionSpec::pareto(1.0, 1.0)), kSeed, 0), entry,
                                  Box::unit(2), t_pareto);
  const bool pareto_ok = p[1].average > 2.0 * p[0].average;
  const double secs = seconds_since(t0);
  return {uniform_ok && pareto_ok && secs < 60.0,
          "uniform t=1000 avg " + fmt(u[0].average) + " (" + fmt(std::abs(u[0].average - 1.5) / se) +
              " SE); pareto t=16 " + fmt(p[0].average) + ", t=4096 " + fmt(p[1].average) + "; " + fmt(secs) + " s"};
}

Verdict divergence(int workers) {
  const std::vector<double> ts{8.0, 32.0, 128.0};
  const DivergenceReport r =
      divergence_experiment(laminate(2, DistributionSpec::pareto(1.0, 1.0)), row({0, 1}), ts, mc(20, workers));
  std::string means;
  for (const auto& l : r.levels) means += fmt(l.stats.mean) + " ";
  return {r.bound.pass && r.strictly_increasing && r.growth_ratio > 2.0,
          "bound " + std::string(r.bound.pass ? "holds" : "violated") + " (" +
              std::to_string(r.bound.violations) + " violations); means " + means +
              (r.strictly_increasing ? "increasing" : "not increasing") + "; ratio " + fmt(r.growth_ratio)};
}

Verdict interfaces(int workers) {
  Verdict v{true, ""};
  const std::vector<std::pair<std::string, DistributionSpec>> laws{
      {"two_point", DistributionSpec::two_point(0.05, 0.5, 1.0)}, {"uniform", DistributionSpec::uniform(0.0, 1.0)}};
  for (const auto& [name, law] : laws) {
    const FieldSpec spec = laminate(2, law);
    for (const double delta : {0.1, 0.01}) {
      std::vector<InterfaceProbe> probes;
      for (std::uint64_t i = 0; i < 20; ++i) probes.push_back(cheap_interface(spec, delta, kSeed, i, 100000));
      const bool found = std::all_of(probes.begin(), probes.end(), [](const auto& p) { return p.found; });
      bool exact = found;
      for (const auto& p : probes) exact = exact && p.energy <= delta && p.l1_distance <= p.epsilon && p.bv_seminorm == 1.0;
      const HittingStats h = hitting_statistics(spec, delta, kSeed, 1000, 100000, workers);
      const bool ok = exact && h.pass;
      v.pass = v.pass && ok;
      double worst_energy = 0.0;
      for (const auto& p : probes) worst_energy = std::max(worst_energy, p.energy);
      v.detail += name + " delta=" + fmt(delta) + ": " +
                  (found ? "max energy " + fmt(worst_energy) : "no a_k < delta within search limit") + ", z=" + fmt(h.z) +
                  (h.censored ? " censored " + std::to_string(h.censored) : "") + (ok ? " ok" : " FAIL") + "; ";
    }
  }
  return v;
}

Verdict recession_check(int workers) {
  const std::vector<double> s_list{1.0, 2.0, 5.0};
  const RecessionResult off =
      recession(iid(2, DistributionSpec::uniform(1.0, 2.0)), row({1, 0}), s_list, 8.0, mc(10, workers));
  FieldSpec with = iid(2, DistributionSpec::two_point(1.0, 0.5, 2.0));
  with.lower = DistributionSpec::constant(1.0);
  const RecessionResult on = recession(with, row({1, 0}), s_list, 8.0, mc(10, workers));
  std::string series;
  for (const auto& p : on.series) series += fmt(p.value) + " ";
  return {off.report.pass && on.report.pass, "lambda off margin " + fmt(off.report.worst_margin) +
                                                 "; lambda on series " + series + "margin " +
                                                 fmt(on.report.worst_margin)};
}

Verdict rank_one(int workers) {
  FieldSpec spec;
  spec.dim = 2;
  spec.structure = Structure::periodic;
  spec.isotropic = true;
  spec.tile.dims = {2, 2};
  spec.tile.diagonal = {1.0, 3.0, 3.0, 1.0};
  const RankOneResult r = check_rank_one_convexity(spec, row({1, 0}), row({0, 1}), 5, 8.0, mc(2, workers));
  double worst = INFINITY;
  for (const auto& p : r.segment)
    if (p.lambda > 0.0 && p.lambda < 1.0) worst = std::min(worst, p.midpoint_slack);
  return {r.report.pass, "min midpoint slack " + fmt(worst) + ", allowance " + fmt(r.report.tolerance)};
}

Verdict gluing() {
  FieldSpec spec;
  spec.dim = 2;
  spec.diagonal = {DistributionSpec::uniform(0.5, 2.0), DistributionSpec::uniform(0.5, 2.0)};
  spec.lower = DistributionSpec::uniform(0.0, 1.0);
  Verdict v{true, ""};
  double min_slack = INFINITY;
  int layer_mismatch = 0;
  for (std::uint64_t i = 0; i < 20; ++i) {
    const GlueInstance g = random_glue_instance(spec, kSeed, i, i % 2 == 0 ? 1 : 2);
    const GlueResult r = glue_with_cutoff(g.u, g.v, g.a_inner, g.a_outer, g.b, g.delta, g.problem);
    min_slack = std::min(min_slack, r.report.slack);
    if (r.report.layers != static_cast<int>(std::ceil(1.0 / g.delta))) ++layer_mismatch;
    v.pass = v.pass && r.report.holds && r.report.slack >= 0.0;
  }
  v.pass = v.pass && layer_mismatch == 0;
  v.detail = "20 instances, min slack " + fmt(min_slack) + ", layer mismatches " + std::to_string(layer_mismatch);
  return v;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string strip_timing(const std::string& csv) {
  std::istringstream in(csv);
  std::string line, out;
  while (std::getline(in, line)) {
    if (!line.empty() && line[0] != '#')
      for (int k = 0; k < 3; ++k) line.erase(line.rfind(','));
    out += line + '\n';
  }
  return out;
}

Verdict reproducibility(const std::filesystem::path& scratch) {
  RunConfig cfg = parse_config(R"({"command": "verify-bounds",
      "field": {"dimension": 2, "isotropic": true, "diagonal": {"law": "uniform", "lo": 1, "hi": 2}},
      "xi": ["e1", "e1+e2"], "t_list": [4, 8], "N": 16, "seed": 1234})");
  std::string csv[2];
  int k = 0;
  for (const int workers : {1, 8}) {
    cfg.workers = workers;
    cfg.out_dir = scratch / ("workers" + std::to_string(workers));
    const RunOutcome o = run(cfg);
    if (o.exit_code == 2) return {false, "run failed: " + o.error};
    csv[k++] = slurp(o.csv);
  }
  const bool same = strip_timing(csv[0]) == strip_timing(csv[1]);
  return {same, std::string(same ? "identical" : "different") + " CSVs without timing columns (" +
                    std::to_string(std::count(csv[0].begin(), csv[0].end(), '\n')) + " lines)"};
}

}  // namespace

int main(int argc, char** argv) {
  bool strict = false;
  int workers = 1;
  std::filesystem::path scratch = std::filesystem::temp_directory_path() / "homlab-acceptance";
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--strict") == 0)
      strict = true;
    else if (std::strcmp(argv[i], "--workers") == 0 && i + 1 < argc)
      workers = std::max(1, std::atoi(argv[++i]));
    else if (std::strcmp(argv[i], "--scratch") == 0 && i + 1 < argc)
      scratch = argv[++i];
    else {
      std::fprintf(stderr, "usage: %s [--strict] [--workers N] [--scratch DIR]\n", argv[0]);
      return 2;
    }
  }

  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
      {"constant-field exactness", constant_field},
      {"duality certificates", [] { return Verdict{}; }},
      {"1-D laminate law", [&] { return one_d_laminate(workers); }},
      {"growth sandwich", [&] { return sandwich(workers); }},
      {"subadditivity", [&] { return subadditivity(workers); }},
      {"ergodic averaging", ergodic},
      {"divergence regime", [&] { return divergence(workers); }},
      {"cheap interface", [&] { return interfaces(workers); }},
      {"recession and homogeneity", [&] { return recession_check(workers); }},
      {"rank-one segment convexity", [&] { return rank_one(workers); }},
      {"fundamental-estimate gluing", gluing},
      {"reproducibility", [&] { return reproducibility(scratch); }},
  };

  std::vector<Verdict> verdicts(criteria.size());
  bool crashed = false;
  // The certificate audit covers every solve, so it is evaluated last.
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    if (i == 1) continue;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      verdicts[i] = criteria[i].second();
    } catch (const std::exception& e) {
      verdicts[i] = {false, std::string("error: ") + e.what()};
      crashed = true;
    }
    verdicts[i].detail += " [" + fmt(seconds_since(t0)) + " s]";
  }
  const SolverAudit audit = solver_audit();
  verdicts[1] = {audit.solves > 0 && audit.certificate_violations == 0,
                 std::to_string(audit.solves) + " solves, " + std::to_string(audit.flagged) +
                     " flagged and reported, " + std::to_string(audit.certificate_violations) +
                     " certificate violations"};

  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    if (!verdicts[i].pass) ++failures;
    std::printf("%s %2zu %s: %s\n", verdicts[i].pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(),
                verdicts[i].detail.c_str());
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  std::fflush(stdout);
  if (crashed) return 2;
  return strict && failures > 0 ? 1 : 0;
}
