#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "homlab/cell_solver.hpp"
#include "homlab/integrand.hpp"
#include "homlab/matrix.hpp"
#include "homlab/rng_fields.hpp"
#include "homlab/statistics.hpp"

namespace homlab {

/// Runs body(i) for i in [0, count) on up to `workers` threads. Results must be
/// written to index-keyed slots; the first exception (lowest index) is rethrown.
void parallel_for(std::size_t count, int workers, const std::function<void(std::size_t)>& body);

/// Monte Carlo settings shared by the estimators. Realization r of a run is the
/// field sample_field(spec, seed, r) for every xi and t (common random numbers).
struct MonteCarloOptions {
  std::uint64_t seed = 0;
  int realizations = 50;
  SolveOptions solve;
  ResolutionPolicy resolution;
  int workers = 1;
};

/// One cell solve, normalized by t^d.
struct CellSample {
  std::uint64_t realization = 0;
  double value = 0.0;
  double lower = 0.0;
  double gap = 0.0;
  int iterations = 0;
  bool converged = false;
  double wall_seconds = 0.0;
};

struct LevelEstimate {
  double t = 0.0;
  Summary stats;  ///< over converged samples only
  std::size_t flagged = 0;
  std::vector<CellSample> samples;  ///< ordered by realization
};

struct HomEstimate {
  Matrix xi;
  double tol = 0.0;
  std::vector<LevelEstimate> levels;
  double f_hom = 0.0;     ///< mean at the largest t
  double f_hom_ci = 0.0;
  /// Last two levels differ by less than the sum of their CI half-widths.
  bool trend_stable = false;
  /// More than 10% of the solves at some level did not converge.
  bool flagged = false;
};

[[nodiscard]] HomEstimate estimate_f_hom(const FieldSpec& spec, const Matrix& xi, std::span<const double> t_list,
                                         const MonteCarloOptions& opts);

/// Outcome of one property check; margins are signed (negative = violation).
struct PropertyReport {
  std::string property;
  std::size_t instances = 0;
  std::size_t violations = 0;
  double worst_margin = 0.0;  ///< min over instances of allowance - excess
  double tolerance = 0.0;     ///< largest allowance used
  bool pass = false;
  std::string detail;

  /// Folds one instance in: excess must not exceed allowance.
  void record(double excess, double allowance);
  void finish();
};

/// alpha c0 |xi| - slack <= f_hom <= C0 |xi| + C1 + slack with
/// slack = tol |xi| + CI (+ the constants' own CI when they are Monte Carlo).
[[nodiscard]] PropertyReport verify_growth_sandwich(const HomEstimate& est, const GrowthConstants& gc);

/// mu(Q_t) <= sum mu(Q_i) over dyadic partitions of depth 1..depth, each level
/// against the previous one with allowance (number of subcubes) * tol * t^d.
/// Instance r pairs realization r with xis[r % xis.size()].
struct SubadditivityInstance {
  std::uint64_t realization = 0;
  std::size_t xi_index = 0;
  std::vector<double> level_energies;  ///< total (unnormalized) energy per depth 0..depth
  bool converged = true;
};
struct SubadditivityResult {
  std::vector<SubadditivityInstance> instances;
  PropertyReport report;
};
[[nodiscard]] SubadditivityResult check_subadditivity(const FieldSpec& spec, std::span<const Matrix> xis, double t,
                                                      int depth, const MonteCarloOptions& opts);

/// Matched: mu(omega, Q_t + z) == mu(tau_z omega, Q_t) bit for bit.
/// Independent: mu(omega_r, Q_t + z) vs mu(omega_{N + r}, Q_t) by a permutation
/// KS test at level 1%.
struct StationarityResult {
  std::vector<double> shifted_cube;     ///< mu(omega_r, Q_t + z)
  std::vector<double> shifted_field;    ///< mu(tau_z omega_r, Q_t)
  std::vector<double> independent;      ///< mu(omega_{N + r}, Q_t)
  std::size_t mismatches = 0;
  TwoSampleTest test;
  PropertyReport report;
};
[[nodiscard]] StationarityResult check_stationarity_in_law(const FieldSpec& spec, const Matrix& xi, double t,
                                                           std::span<const std::int64_t> z,
                                                           const MonteCarloOptions& opts);

struct RecessionPoint {
  double s = 0.0;
  double value = 0.0;  ///< f_hom(s xi) / s
  double ci = 0.0;
};
struct RecessionResult {
  std::vector<RecessionPoint> series;
  double f_infinity = 0.0;  ///< last value of the series
  PropertyReport report;
};
/// f_hom(s xi)/s over s_list at cube side t. Without lambda the series must be
/// flat within 2 tol; with lambda the increments must match E[lambda](1/s - 1/s').
[[nodiscard]] RecessionResult recession(const FieldSpec& spec, const Matrix& xi, std::span<const double> s_list,
                                        double t, const MonteCarloOptions& opts);

struct SegmentPoint {
  double lambda = 0.0;
  double value = 0.0;
  double ci = 0.0;
  double midpoint_slack = 0.0;  ///< (f(prev) + f(next)) / 2 - f, interior points only
};
struct RankOneResult {
  std::vector<SegmentPoint> segment;
  PropertyReport report;
};
/// Midpoint convexity of f_hom along (1 - s) xi1 + s xi2 at `points` equally
/// spaced s. Throws ConfigError when xi1 - xi2 is not rank one.
[[nodiscard]] RankOneResult check_rank_one_convexity(const FieldSpec& spec, const Matrix& xi1, const Matrix& xi2,
                                                     int points, double t, const MonteCarloOptions& opts);

}  // namespace homlab
