#include "homlab/statistics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "homlab/philox.hpp"

namespace homlab {

double Summary::standard_error() const {
  return count > 0 ? stddev / std::sqrt(static_cast<double>(count)) : 0.0;
}

Summary summarize(std::span<const double> xs, double z) {
  Summary s;
  s.count = xs.size();
  if (xs.empty()) return s;
  s.mean = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
  if (xs.size() > 1) {
    double ss = 0.0;
    for (const double x : xs) ss += (x - s.mean) * (x - s.mean);
    s.stddev = std::sqrt(ss / static_cast<double>(xs.size() - 1));
  }
  s.ci_half = z * s.standard_error();
  return s;
}

double ks_statistic(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("ks_statistic: empty sample");
  std::vector<double> x(a.begin(), a.end()), y(b.begin(), b.end());
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  const double na = static_cast<double>(x.size());
  const double nb = static_cast<double>(y.size());
  std::size_t i = 0, j = 0;
  double worst = 0.0;
  while (i < x.size() && j < y.size()) {
    const double v = std::min(x[i], y[j]);
    while (i < x.size() && x[i] == v) ++i;
    while (j < y.size() && y[j] == v) ++j;
    worst = std::max(worst, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return worst;
}

TwoSampleTest ks_permutation_test(std::span<const double> a, std::span<const double> b, double level,
                                  int permutations, std::uint64_t seed) {
  if (!(level > 0.0 && level < 1.0)) throw std::invalid_argument("ks_permutation_test: level in (0,1)");
  if (permutations < 1) throw std::invalid_argument("ks_permutation_test: permutations >= 1");
  TwoSampleTest out;
  out.statistic = ks_statistic(a, b);
  std::vector<double> pooled(a.begin(), a.end());
  pooled.insert(pooled.end(), b.begin(), b.end());
  UniformStream rng(seed, 0x6b73);
  std::vector<double> null(static_cast<std::size_t>(permutations));
  for (auto& stat : null) {
    // Fisher-Yates with the counter-based stream.
    for (std::size_t k = pooled.size(); k > 1; --k) std::swap(pooled[k - 1], pooled[rng.below(k)]);
    stat = ks_statistic(std::span<const double>(pooled).first(a.size()),
                        std::span<const double>(pooled).subspan(a.size()));
  }
  out.threshold = quantile(std::move(null), 1.0 - level);
  out.pass = out.statistic <= out.threshold;
  return out;
}

double quantile(std::vector<double> xs, double p) {
  if (xs.empty()) throw std::invalid_argument("quantile: empty sample");
  std::sort(xs.begin(), xs.end());
  const double pos = std::clamp(p, 0.0, 1.0) * static_cast<double>(xs.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, xs.size() - 1);
  return xs[lo] + (pos - static_cast<double>(lo)) * (xs[hi] - xs[lo]);
}

}  // namespace homlab
