#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace homlab {

/// Raised for any invalid user-supplied parameter; `field()` names the offending
/// configuration entry.
class ConfigError : public std::invalid_argument {
 public:
  ConfigError(std::string field, const std::string& message)
      : std::invalid_argument(field + ": " + message), field_(std::move(field)) {}

  [[nodiscard]] const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

enum class DistKind { constant, uniform, two_point, pareto, lognormal };

[[nodiscard]] std::string_view to_string(DistKind kind) noexcept;
[[nodiscard]] std::optional<DistKind> dist_kind_from_string(std::string_view name) noexcept;

/// Marginal law of one weight entry. Parameters by kind:
///   constant(c)             value = c
///   uniform(a, b)           a = lo, b = hi
///   two_point(v1, p, v2)    a = v1 (probability p), b = v2, c = p
///   pareto(x_m, alpha)      a = x_m, b = alpha (P(X > x) = (x_m / x)^alpha)
///   lognormal(mu, sigma)    a = mu, b = sigma
struct DistributionSpec {
  DistKind kind = DistKind::constant;
  double a = 1.0;
  double b = 0.0;
  double c = 0.0;

  static DistributionSpec constant(double value) { return {DistKind::constant, value, 0.0, 0.0}; }
  static DistributionSpec uniform(double lo, double hi) { return {DistKind::uniform, lo, hi, 0.0}; }
  static DistributionSpec two_point(double v1, double p, double v2) {
    return {DistKind::two_point, v1, v2, p};
  }
  static DistributionSpec pareto(double x_m, double alpha) { return {DistKind::pareto, x_m, alpha, 0.0}; }
  static DistributionSpec lognormal(double mu, double sigma) {
    return {DistKind::lognormal, mu, sigma, 0.0};
  }

  /// Throws ConfigError naming `name` when the parameters violate the law's invariants.
  void validate(const std::string& name) const;

  /// Draws one value from two independent uniforms in (0, 1). Pareto and the
  /// finite laws use the inverse CDF of `u1`; lognormal uses Box-Muller.
  [[nodiscard]] double sample(double u1, double u2) const noexcept;

  [[nodiscard]] double cdf(double x) const noexcept;

  /// Essential infimum and supremum of the support.
  [[nodiscard]] double infimum() const noexcept;
  [[nodiscard]] double supremum() const noexcept;

  /// Mean, or nullopt when the first moment is infinite.
  [[nodiscard]] std::optional<double> mean() const noexcept;
  [[nodiscard]] std::optional<double> variance() const noexcept;

  /// True for the laws whose moments are computed by exact enumeration or quadrature.
  [[nodiscard]] bool has_closed_form() const noexcept;

  /// P(X < threshold).
  [[nodiscard]] double probability_below(double threshold) const noexcept;

  friend bool operator==(const DistributionSpec&, const DistributionSpec&) = default;
};

}  // namespace homlab
