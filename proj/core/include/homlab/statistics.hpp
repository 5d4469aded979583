#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace homlab {

/// Two-sided normal quantile used for every confidence interval (99%).
inline constexpr double kZ99 = 2.58;

struct Summary {
  std::size_t count = 0;
  double mean = 0.0;
  double stddev = 0.0;   ///< sample standard deviation (n - 1)
  double ci_half = 0.0;  ///< z * stddev / sqrt(n)

  [[nodiscard]] double standard_error() const;
};

[[nodiscard]] Summary summarize(std::span<const double> xs, double z = kZ99);

/// Two-sample Kolmogorov-Smirnov distance sup |F_a - F_b|.
[[nodiscard]] double ks_statistic(std::span<const double> a, std::span<const double> b);

struct TwoSampleTest {
  double statistic = 0.0;
  double threshold = 0.0;  ///< (1 - level) quantile of the permutation distribution
  bool pass = false;
};

/// KS statistic against a threshold calibrated by random relabelings of the
/// pooled sample (exchangeable under equal laws).
[[nodiscard]] TwoSampleTest ks_permutation_test(std::span<const double> a, std::span<const double> b,
                                                double level, int permutations, std::uint64_t seed);

/// Linear-interpolated quantile of an unsorted sample, p in [0, 1].
[[nodiscard]] double quantile(std::vector<double> xs, double p);

}  // namespace homlab
