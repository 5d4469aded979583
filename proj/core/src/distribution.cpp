#include "homlab/distribution.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace homlab {

std::string_view to_string(DistKind kind) noexcept {
  switch (kind) {
    case DistKind::constant: return "constant";
    case DistKind::uniform: return "uniform";
    case DistKind::two_point: return "two_point";
    case DistKind::pareto: return "pareto";
    case DistKind::lognormal: return "lognormal";
  }
  return "unknown";
}

std::optional<DistKind> dist_kind_from_string(std::string_view name) noexcept {
  if (name == "constant") return DistKind::constant;
  if (name == "uniform") return DistKind::uniform;
  if (name == "two_point") return DistKind::two_point;
  if (name == "pareto") return DistKind::pareto;
  if (name == "lognormal") return DistKind::lognormal;
  return std::nullopt;
}

void DistributionSpec::validate(const std::string& name) const {
  auto finite = [](double v) { return std::isfinite(v); };
  const std::string where = name + " (" + std::string(to_string(kind)) + ")";
  switch (kind) {
    case DistKind::constant:
      if (!finite(a) || a <= 0.0) throw ConfigError(where, "constant value must be positive");
      break;
    case DistKind::uniform:
      if (!finite(a) || !finite(b) || a < 0.0 || b <= a)
        throw ConfigError(where, "uniform bounds must satisfy 0 <= a < b");
      break;
    case DistKind::two_point:
      if (!finite(a) || !finite(b) || a <= 0.0 || b <= 0.0)
        throw ConfigError(where, "two_point values must be positive");
      if (a == b) throw ConfigError(where, "two_point values must differ");
      if (!(c > 0.0 && c < 1.0)) throw ConfigError(where, "two_point probability must lie in (0, 1)");
      break;
    case DistKind::pareto:
      if (!finite(a) || a <= 0.0) throw ConfigError(where, "pareto scale x_m must be positive");
      if (!finite(b) || b <= 0.0) throw ConfigError(where, "pareto tail index alpha must be positive");
      break;
    case DistKind::lognormal:
      if (!finite(a)) throw ConfigError(where, "lognormal mu must be finite");
      if (!finite(b) || b <= 0.0) throw ConfigError(where, "lognormal sigma must be positive");
      break;
  }
}

double DistributionSpec::sample(double u1, double u2) const noexcept {
  switch (kind) {
    case DistKind::constant: return a;
    case DistKind::uniform: return a + (b - a) * u1;
    case DistKind::two_point: return u1 < c ? a : b;
    case DistKind::pareto: return a * std::pow(u1, -1.0 / b);
    case DistKind::lognormal: {
      const double radius = std::sqrt(-2.0 * std::log(u1));
      const double z = radius * std::cos(2.0 * std::numbers::pi * u2);
      return std::exp(a + b * z);
    }
  }
  return a;
}

double DistributionSpec::cdf(double x) const noexcept {
  switch (kind) {
    case DistKind::constant: return x >= a ? 1.0 : 0.0;
    case DistKind::uniform:
      if (x <= a) return 0.0;
      if (x >= b) return 1.0;
      return (x - a) / (b - a);
    case DistKind::two_point: {
      double f = 0.0;
      if (x >= a) f += c;
      if (x >= b) f += 1.0 - c;
      return f;
    }
    case DistKind::pareto: return x <= a ? 0.0 : 1.0 - std::pow(a / x, b);
    case DistKind::lognormal:
      if (x <= 0.0) return 0.0;
      return 0.5 * std::erfc(-(std::log(x) - a) / (b * std::numbers::sqrt2));
  }
  return 0.0;
}

double DistributionSpec::probability_below(double threshold) const noexcept {
  switch (kind) {
    case DistKind::constant: return a < threshold ? 1.0 : 0.0;
    case DistKind::two_point: {
      double p = 0.0;
      if (a < threshold) p += c;
      if (b < threshold) p += 1.0 - c;
      return p;
    }
    default: return cdf(threshold);  // continuous laws
  }
}

double DistributionSpec::infimum() const noexcept {
  switch (kind) {
    case DistKind::constant: return a;
    case DistKind::uniform: return a;
    case DistKind::two_point: return std::min(a, b);
    case DistKind::pareto: return a;
    case DistKind::lognormal: return 0.0;
  }
  return 0.0;
}

double DistributionSpec::supremum() const noexcept {
  switch (kind) {
    case DistKind::constant: return a;
    case DistKind::uniform: return b;
    case DistKind::two_point: return std::max(a, b);
    case DistKind::pareto:
    case DistKind::lognormal: return std::numeric_limits<double>::infinity();
  }
  return std::numeric_limits<double>::infinity();
}

std::optional<double> DistributionSpec::mean() const noexcept {
  switch (kind) {
    case DistKind::constant: return a;
    case DistKind::uniform: return 0.5 * (a + b);
    case DistKind::two_point: return c * a + (1.0 - c) * b;
    case DistKind::pareto:
      if (b <= 1.0) return std::nullopt;
      return b * a / (b - 1.0);
    case DistKind::lognormal: return std::exp(a + 0.5 * b * b);
  }
  return std::nullopt;
}

std::optional<double> DistributionSpec::variance() const noexcept {
  switch (kind) {
    case DistKind::constant: return 0.0;
    case DistKind::uniform: return (b - a) * (b - a) / 12.0;
    case DistKind::two_point: return c * (1.0 - c) * (a - b) * (a - b);
    case DistKind::pareto:
      if (b <= 2.0) return std::nullopt;
      return a * a * b / ((b - 1.0) * (b - 1.0) * (b - 2.0));
    case DistKind::lognormal: return (std::exp(b * b) - 1.0) * std::exp(2.0 * a + b * b);
  }
  return std::nullopt;
}

bool DistributionSpec::has_closed_form() const noexcept {
  return kind == DistKind::constant || kind == DistKind::uniform || kind == DistKind::two_point;
}

}  // namespace homlab
