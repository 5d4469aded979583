#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "homlab/distribution.hpp"

namespace homlab {

enum class Structure { iid_cubes, laminate, periodic };

[[nodiscard]] std::string_view to_string(Structure s) noexcept;

/// Deterministic per-cell values of a periodic field, row-major over `dims`.
struct PeriodicTile {
  std::vector<int> dims;
  /// `slots` entries per tile cell (1 when isotropic, d otherwise).
  std::vector<double> diagonal;
  /// One entry per tile cell, or empty when the field has no lower-order term.
  std::vector<double> lower;

  [[nodiscard]] std::size_t cell_count() const noexcept;
};

/// Law and geometry of a stationary weight field Lambda(x) = diag(...) and
/// optional lower-order term lambda(x). Unit cells have side 1.
struct FieldSpec {
  int dim = 1;
  Structure structure = Structure::iid_cubes;
  int laminate_axis = 0;  ///< zero-based
  /// One scalar weight shared by all diagonal slots: Lambda = a(x) I.
  bool isotropic = false;
  std::vector<DistributionSpec> diagonal;
  std::optional<DistributionSpec> lower;
  /// Adds a uniform offset in [0,1)^d per realization (continuum stationarity in law).
  bool random_offset = false;
  PeriodicTile tile;

  void validate() const;

  [[nodiscard]] int slots() const noexcept { return isotropic ? 1 : dim; }
  [[nodiscard]] bool has_lower() const noexcept {
    return structure == Structure::periodic ? !tile.lower.empty() : lower.has_value();
  }
  /// Law of diagonal entry j (isotropic fields share entry 0).
  [[nodiscard]] const DistributionSpec& entry_law(int j) const { return diagonal.at(isotropic ? 0 : j); }

  static FieldSpec constant(int dim, double value);
};

/// One realization omega of a FieldSpec. Immutable; every evaluation is a pure
/// function of (spec, seed, index, shift, x).
class FieldSample {
 public:
  FieldSample(std::shared_ptr<const FieldSpec> spec, std::uint64_t seed, std::uint64_t index);

  [[nodiscard]] const FieldSpec& spec() const noexcept { return *spec_; }
  [[nodiscard]] std::shared_ptr<const FieldSpec> spec_ptr() const noexcept { return spec_; }
  [[nodiscard]] int dim() const noexcept { return spec_->dim; }
  [[nodiscard]] std::uint64_t seed() const noexcept { return seed_; }
  [[nodiscard]] std::uint64_t index() const noexcept { return index_; }
  [[nodiscard]] std::span<const double> shift() const noexcept { return shift_; }
  [[nodiscard]] std::span<const double> offset() const noexcept { return offset_; }

  /// Integer cell (in realization coordinates) containing x + shift + offset.
  void locate(std::span<const double> x, std::span<std::int64_t> cell) const;

  /// Diagonal of Lambda at x (dim entries, all positive).
  void diagonal_at(std::span<const double> x, std::span<double> out) const;
  [[nodiscard]] double lower_at(std::span<const double> x) const;

  /// Values of an integer cell in realization coordinates.
  void cell_diagonal(std::span<const std::int64_t> cell, std::span<double> out) const;
  [[nodiscard]] double cell_lower(std::span<const std::int64_t> cell) const;

  /// tau_z: the returned sample evaluates at x what this one evaluates at x + z.
  [[nodiscard]] FieldSample shifted(std::span<const double> z) const;

 private:
  [[nodiscard]] double draw(std::span<const std::int64_t> cell, std::uint32_t slot,
                            const DistributionSpec& law) const;
  [[nodiscard]] std::size_t tile_index(std::span<const std::int64_t> cell) const;

  std::shared_ptr<const FieldSpec> spec_;
  std::uint64_t seed_;
  std::uint64_t index_;
  std::uint64_t key_;
  std::vector<double> shift_;
  std::vector<double> offset_;
};

[[nodiscard]] FieldSample sample_field(const FieldSpec& spec, std::uint64_t seed, std::uint64_t index);
[[nodiscard]] FieldSample shift(const FieldSample& f, std::span<const double> z);

enum class ObservableKind { norm, lower, entry };

/// Scalar observable of the field: |Lambda|_F, lambda, or diagonal entry j.
struct Observable {
  ObservableKind kind = ObservableKind::norm;
  int entry = 0;

  [[nodiscard]] double evaluate(std::span<const double> diagonal, double lower) const;
};

/// Axis-aligned box [lo, hi].
struct Box {
  std::vector<double> lo;
  std::vector<double> hi;

  [[nodiscard]] int dim() const noexcept { return static_cast<int>(lo.size()); }
  [[nodiscard]] double volume() const;
  [[nodiscard]] bool contains(std::span<const double> x) const;
  [[nodiscard]] bool contains(const Box& inner) const;

  static Box unit(int dim);
  static Box cube(std::span<const double> center, double side);
};

struct BirkhoffPoint {
  double t = 0.0;
  double average = 0.0;
  std::uint64_t cells_visited = 0;
};

/// Spatial means of an observable over the dilated boxes tB, integrated exactly
/// cell by cell (fields are piecewise constant on unit cells).
[[nodiscard]] std::vector<BirkhoffPoint> birkhoff_average(const FieldSample& f, const Observable& obs,
                                                          const Box& box, std::span<const double> t_list);

}  // namespace homlab
