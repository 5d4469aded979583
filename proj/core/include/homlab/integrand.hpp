#pragma once

#include <cstdint>
#include <span>

#include "homlab/matrix.hpp"
#include "homlab/rng_fields.hpp"

namespace homlab {

/// f(omega, x, xi) = |xi Lambda(omega, x)|_F (+ lambda(omega, x)).
///
/// The lower and upper growth bounds alpha|xi Lambda| <= f <= |xi Lambda| + lambda
/// hold with alpha = 1 by construction.
struct IntegrandModel {
  FieldSample field;
  int components = 1;  ///< m
  bool include_lower = false;

  IntegrandModel(FieldSample f, int m, bool with_lower);

  [[nodiscard]] int dim() const noexcept { return field.dim(); }
  [[nodiscard]] double eval(std::span<const double> x, const Matrix& xi) const;
};

[[nodiscard]] double eval_integrand(const IntegrandModel& model, std::span<const double> x, const Matrix& xi);

/// Constants of the homogenized growth sandwich
///   alpha c0 |xi| <= f_hom(xi) <= C0 |xi| + C1.
struct GrowthConstants {
  double alpha = 1.0;
  double c0 = 0.0;  ///< 1 / esssup |Lambda^{-1}|_F
  double C0 = 0.0;  ///< sup_{|eta|=1} E|eta Lambda|
  double C1 = 0.0;  ///< E[lambda]
  bool c0_degenerate = false;  ///< Lambda^{-1} unbounded, c0 = 0
  bool C0_infinite = false;
  bool C1_infinite = false;
  bool analytic = true;       ///< false when C0 or C1 came from Monte Carlo
  double C0_ci = 0.0;         ///< 99% half-width when Monte Carlo
  double C1_ci = 0.0;

  [[nodiscard]] double lower_bound(double xi_norm) const noexcept { return alpha * c0 * xi_norm; }
  [[nodiscard]] double upper_bound(double xi_norm) const noexcept;
};

[[nodiscard]] GrowthConstants growth_constants(const FieldSpec& spec, std::size_t mc_budget = 100000,
                                               std::uint64_t seed = 0);

struct Coercivity {
  double constant = 0.0;    ///< C with |xi| <= C |xi Lambda(x)| for a.e. x
  bool degenerate = false;  ///< C = +inf
};

[[nodiscard]] Coercivity coercivity_constant(const FieldSpec& spec);

/// Gauss-Legendre nodes and weights on [-1, 1].
void gauss_legendre(int order, std::span<double> nodes, std::span<double> weights);

}  // namespace homlab
