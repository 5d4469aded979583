#include "homlab/integrand.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include "homlab/philox.hpp"

namespace homlab {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kZ99 = 2.58;

/// Joint law of the d diagonal entries as weighted atoms (exact for finite laws,
/// Gauss-Legendre for uniform, Monte Carlo otherwise).
struct JointLaw {
  std::vector<double> atoms;  ///< d values per atom
  std::vector<double> weights;
  bool exact = true;
};

std::vector<std::pair<double, double>> marginal_atoms(const DistributionSpec& law) {
  switch (law.kind) {
    case DistKind::constant: return {{law.a, 1.0}};
    case DistKind::two_point: return {{law.a, law.c}, {law.b, 1.0 - law.c}};
    case DistKind::uniform: {
      constexpr int order = 24;
      double nodes[order], weights[order];
      gauss_legendre(order, nodes, weights);
      std::vector<std::pair<double, double>> out;
      for (int i = 0; i < order; ++i)
        out.emplace_back(law.a + 0.5 * (law.b - law.a) * (nodes[i] + 1.0), 0.5 * weights[i]);
      return out;
    }
    default: return {};
  }
}

JointLaw joint_law(const FieldSpec& spec, std::size_t mc_budget, std::uint64_t seed) {
  const int d = spec.dim;
  JointLaw law;
  if (spec.structure == Structure::periodic) {
    const std::size_t cells = spec.tile.cell_count();
    for (std::size_t c = 0; c < cells; ++c) {
      for (int j = 0; j < d; ++j)
        law.atoms.push_back(spec.tile.diagonal[c * spec.slots() + (spec.isotropic ? 0 : j)]);
      law.weights.push_back(1.0 / static_cast<double>(cells));
    }
    return law;
  }
  bool closed = true;
  for (const auto& m : spec.diagonal) closed = closed && m.has_closed_form();
  if (closed) {
    if (spec.isotropic) {
      for (const auto& [v, w] : marginal_atoms(spec.diagonal[0])) {
        law.atoms.insert(law.atoms.end(), static_cast<std::size_t>(d), v);
        law.weights.push_back(w);
      }
      return law;
    }
    // Tensor product over independent entries.
    std::vector<std::vector<double>> points{{}};
    std::vector<double> pw{1.0};
    for (int j = 0; j < d; ++j) {
      std::vector<std::vector<double>> next;
      std::vector<double> nw;
      for (std::size_t p = 0; p < points.size(); ++p)
        for (const auto& [v, w] : marginal_atoms(spec.diagonal[j])) {
          auto pt = points[p];
          pt.push_back(v);
          next.push_back(std::move(pt));
          nw.push_back(pw[p] * w);
        }
      points = std::move(next);
      pw = std::move(nw);
    }
    law.weights = pw;
    for (const auto& pt : points) law.atoms.insert(law.atoms.end(), pt.begin(), pt.end());
    return law;
  }
  law.exact = false;
  const std::uint64_t key = hash_combine(mix64(0x67726f77u), seed);
  const Philox4x32 gen(key);
  const std::size_t n = std::max<std::size_t>(mc_budget, 2);
  for (std::size_t s = 0; s < n; ++s) {
    double shared = 0.0;
    for (int j = 0; j < d; ++j) {
      if (spec.isotropic && j > 0) {
        law.atoms.push_back(shared);
        continue;
      }
      const auto out = gen({static_cast<std::uint32_t>(s), static_cast<std::uint32_t>(s >> 32),
                            static_cast<std::uint32_t>(j), 0u});
      shared = spec.diagonal[j].sample(to_open_unit(out[0], out[1]), to_open_unit(out[2], out[3]));
      law.atoms.push_back(shared);
    }
    law.weights.push_back(1.0 / static_cast<double>(n));
  }
  return law;
}

/// E sqrt(sum_j w_j Lambda_j^2) and its gradient in w.
double expected_scaled_norm(const JointLaw& law, int d, std::span<const double> w, std::span<double> grad,
                            double* second_moment = nullptr) {
  std::fill(grad.begin(), grad.end(), 0.0);
  double mean = 0.0, sq = 0.0;
  for (std::size_t a = 0; a < law.weights.size(); ++a) {
    const double* x = &law.atoms[a * static_cast<std::size_t>(d)];
    double s = 0.0;
    for (int j = 0; j < d; ++j) s += w[j] * x[j] * x[j];
    const double r = std::sqrt(s);
    mean += law.weights[a] * r;
    sq += law.weights[a] * s;
    if (r > 0.0)
      for (int j = 0; j < d; ++j) grad[j] += law.weights[a] * x[j] * x[j] / (2.0 * r);
  }
  if (second_moment) *second_moment = sq;
  return mean;
}

/// Maximizes the concave map w -> E sqrt(sum w_j Lambda_j^2) over the simplex:
/// axes and a deterministic probe set seed a Frank-Wolfe refinement.
double maximize_over_simplex(const JointLaw& law, int d, std::uint64_t seed, double* second_moment) {
  std::vector<double> best_w(static_cast<std::size_t>(d), 0.0), w(static_cast<std::size_t>(d)),
      grad(static_cast<std::size_t>(d));
  double best = -1.0;
  auto consider = [&](const std::vector<double>& cand) {
    const double v = expected_scaled_norm(law, d, cand, grad);
    if (v > best) {
      best = v;
      best_w = cand;
    }
  };
  for (int j = 0; j < d; ++j) {
    std::fill(w.begin(), w.end(), 0.0);
    w[j] = 1.0;
    consider(w);
  }
  if (d > 1) {
    const Philox4x32 gen(hash_combine(mix64(0x70726f62u), seed));
    for (std::uint32_t probe = 0; probe < 32; ++probe) {
      double total = 0.0;
      for (int j = 0; j < d; ++j) {
        const auto out = gen({probe, static_cast<std::uint32_t>(j), 0u, 0u});
        w[j] = -std::log(to_open_unit(out[0], out[1]));  // Dirichlet(1,...,1)
        total += w[j];
      }
      for (double& v : w) v /= total;
      consider(w);
    }
    w = best_w;
    for (int iter = 0; iter < 200; ++iter) {
      expected_scaled_norm(law, d, w, grad);
      const int vertex = static_cast<int>(std::max_element(grad.begin(), grad.end()) - grad.begin());
      double lo = 0.0, hi = 1.0;
      auto along = [&](double g) {
        std::vector<double> c(w);
        for (int j = 0; j < d; ++j) c[j] = (1.0 - g) * w[j] + (j == vertex ? g : 0.0);
        return c;
      };
      std::vector<double> tmp(static_cast<std::size_t>(d));
      for (int k = 0; k < 60; ++k) {
        const double m1 = lo + (hi - lo) / 3.0, m2 = hi - (hi - lo) / 3.0;
        if (expected_scaled_norm(law, d, along(m1), tmp) < expected_scaled_norm(law, d, along(m2), tmp))
          lo = m1;
        else
          hi = m2;
      }
      const auto next = along(0.5 * (lo + hi));
      const double v = expected_scaled_norm(law, d, next, tmp);
      if (v <= best * (1.0 + 1e-15)) break;
      best = v;
      best_w = next;
      w = next;
    }
  }
  expected_scaled_norm(law, d, best_w, grad, second_moment);
  return best;
}

}  // namespace

IntegrandModel::IntegrandModel(FieldSample f, int m, bool with_lower)
    : field(std::move(f)), components(m), include_lower(with_lower) {
  if (m < 1) throw ConfigError("m", "component count must be >= 1");
}

double IntegrandModel::eval(std::span<const double> x, const Matrix& xi) const {
  std::vector<double> diag(static_cast<std::size_t>(dim()));
  field.diagonal_at(x, diag);
  double value = column_scaled_norm(xi.values(), xi.cols(), diag);
  if (include_lower) value += field.lower_at(x);
  return value;
}

double eval_integrand(const IntegrandModel& model, std::span<const double> x, const Matrix& xi) {
  return model.eval(x, xi);
}

double GrowthConstants::upper_bound(double xi_norm) const noexcept {
  if (C0_infinite && xi_norm > 0.0) return kInf;
  if (C1_infinite) return kInf;
  return C0 * xi_norm + C1;
}

GrowthConstants growth_constants(const FieldSpec& spec, std::size_t mc_budget, std::uint64_t seed) {
  spec.validate();
  const int d = spec.dim;
  GrowthConstants gc;

  const Coercivity coer = coercivity_constant(spec);
  gc.c0_degenerate = coer.degenerate;
  gc.c0 = coer.degenerate ? 0.0 : 1.0 / coer.constant;

  // C0
  bool infinite_mean = false;
  if (spec.structure != Structure::periodic)
    for (const auto& law : spec.diagonal) infinite_mean = infinite_mean || !law.mean().has_value();
  if (infinite_mean) {
    gc.C0 = kInf;
    gc.C0_infinite = true;
  } else if (spec.structure != Structure::periodic && spec.isotropic) {
    // |eta a I| = a |eta|
    gc.C0 = *spec.diagonal[0].mean();
  } else {
    const JointLaw law = joint_law(spec, mc_budget, seed);
    double second = 0.0;
    gc.C0 = maximize_over_simplex(law, d, seed, &second);
    if (!law.exact) {
      gc.analytic = false;
      const double var = std::max(0.0, second - gc.C0 * gc.C0);
      gc.C0_ci = kZ99 * std::sqrt(var / static_cast<double>(law.weights.size()));
    }
  }

  // C1
  if (spec.structure == Structure::periodic) {
    double s = 0.0;
    for (const double v : spec.tile.lower) s += v;
    gc.C1 = spec.tile.lower.empty() ? 0.0 : s / static_cast<double>(spec.tile.lower.size());
  } else if (spec.lower) {
    if (const auto mean = spec.lower->mean()) {
      gc.C1 = *mean;
    } else {
      gc.C1 = kInf;
      gc.C1_infinite = true;
    }
  }
  return gc;
}

Coercivity coercivity_constant(const FieldSpec& spec) {
  spec.validate();
  const int d = spec.dim;
  Coercivity out;
  if (spec.structure == Structure::periodic) {
    double worst = 0.0;
    for (std::size_t c = 0; c < spec.tile.cell_count(); ++c) {
      double s = 0.0;
      for (int j = 0; j < d; ++j) {
        const double v = spec.tile.diagonal[c * spec.slots() + (spec.isotropic ? 0 : j)];
        s += 1.0 / (v * v);
      }
      worst = std::max(worst, std::sqrt(s));
    }
    out.constant = worst;
    return out;
  }
  double s = 0.0;
  for (int j = 0; j < d; ++j) {
    const double inf = spec.entry_law(j).infimum();
    if (inf <= 0.0) {
      out.constant = kInf;
      out.degenerate = true;
      return out;
    }
    s += 1.0 / (inf * inf);
  }
  out.constant = std::sqrt(s);
  return out;
}

void gauss_legendre(int order, std::span<double> nodes, std::span<double> weights) {
  for (int i = 0; i < order; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (order + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= order; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = order * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    nodes[static_cast<std::size_t>(i)] = x;
    weights[static_cast<std::size_t>(i)] = 2.0 / ((1.0 - x * x) * dp * dp);
  }
}

}  // namespace homlab
