#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "homlab/homogenizer.hpp"
#include "homlab/matrix.hpp"
#include "homlab/rng_fields.hpp"

namespace homlab {

// ---------------------------------------------------------------------------
// Infinite first moment: f_hom blows up in directions transverse to the laminate.

struct DivergenceSample {
  std::uint64_t realization = 0;
  double value = 0.0;          ///< mu_xi / t^d on Q_t = (0, t)^d
  double running_mean = 0.0;   ///< |xi' Lambda'| averaged over x_1 in (0, t), exact
  double bound = 0.0;          ///< same average over the solver's cell weights
  double slack = 0.0;          ///< |bound - running_mean| + tol max(1, value)
  bool converged = false;
};

struct DivergenceLevel {
  double t = 0.0;
  Summary stats;
  std::vector<DivergenceSample> samples;
};

struct DivergenceReport {
  std::vector<DivergenceLevel> levels;
  bool strictly_increasing = false;  ///< per-t means
  double growth_ratio = 0.0;         ///< last mean / first mean
  PropertyReport bound;              ///< value >= running_mean - slack per realization
};

/// Laminate along x_1 (or a constant field). Throws ConfigError when d < 2 or
/// xi has no component transverse to e_1.
[[nodiscard]] DivergenceReport divergence_experiment(const FieldSpec& spec, const Matrix& xi,
                                                     std::span<const double> t_list, const MonteCarloOptions& opts);

// ---------------------------------------------------------------------------
// Unbounded inverse weight: plane interfaces at vanishing cost.

struct InterfaceProbe {
  double delta = 0.0;
  bool found = false;
  std::int64_t k = -1;          ///< first scanned cell with a_k < delta
  std::int64_t scanned = 0;     ///< cells inspected
  double hit_probability = 0.0; ///< empirical hits / scanned over the scan
  double epsilon = 0.0;
  double interface_at = 0.5;    ///< x*, the transition occupies [eps k, x*]
  double energy = 0.0;          ///< exact integral of a(x/eps) |d_1 u_eps| over Q = (0,1)^d
  double l1_distance = 0.0;     ///< ||u_eps - chi_{x_1 > x*}||_{L1(Q)} = eps / 2
  double bv_seminorm = 1.0;     ///< |D chi_{x_1 > x*}|(Q)

  /// u_eps at a point of Q.
  [[nodiscard]] double profile(double x1) const;
};

/// Scans cells k = scan_start, scan_start + 1, ... along x_1 of realization
/// `index` for the first a_k < delta and builds u_eps with eps = x* / (k + 1).
/// A failed scan is reported (found = false), never thrown.
[[nodiscard]] InterfaceProbe cheap_interface(const FieldSpec& spec, double delta, std::uint64_t seed,
                                             std::uint64_t index = 0, std::int64_t search_limit = 10000,
                                             std::int64_t scan_start = 0, double interface_at = 0.5);

/// Energies <= delta, energies shrinking with delta, L1 distance <= eps, and
/// the law's coercivity constant infinite.
[[nodiscard]] PropertyReport interface_limit_check(const FieldSpec& spec, std::span<const InterfaceProbe> probes);

struct HittingStats {
  std::size_t scans = 0;
  std::size_t censored = 0;     ///< scans that hit search_limit
  double p = 0.0;               ///< P(a < delta) from the law
  double expected_mean = 0.0;   ///< (1 - p) / p
  Summary index;                ///< over uncensored scans of k - scan_start
  double z = 0.0;               ///< (mean - expected) / standard error
  bool pass = false;            ///< |z| <= 4 and no censoring
};

/// Hitting index over realizations 0..scans-1 against the geometric law.
[[nodiscard]] HittingStats hitting_statistics(const FieldSpec& spec, double delta, std::uint64_t seed,
                                              std::size_t scans, std::int64_t search_limit = 10000,
                                              int workers = 1);

}  // namespace homlab
