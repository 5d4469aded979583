#include "homlab/rng_fields.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "homlab/philox.hpp"

namespace homlab {
namespace {

constexpr std::uint32_t kLowerSlot = 0x10000u;
constexpr std::uint32_t kOffsetSlot = 0x20000u;
constexpr std::uint32_t kFieldTag = 0x686f6d6cu;  // "homl"

std::uint64_t cell_hash(std::span<const std::int64_t> cell) {
  std::uint64_t h = mix64(cell.size());
  for (const std::int64_t c : cell) h = hash_combine(h, static_cast<std::uint64_t>(c));
  return h;
}

}  // namespace

std::string_view to_string(Structure s) noexcept {
  switch (s) {
    case Structure::iid_cubes: return "iid_cubes";
    case Structure::laminate: return "laminate";
    case Structure::periodic: return "periodic";
  }
  return "unknown";
}

std::size_t PeriodicTile::cell_count() const noexcept {
  std::size_t n = 1;
  for (const int k : dims) n *= static_cast<std::size_t>(std::max(k, 0));
  return n;
}

void FieldSpec::validate() const {
  if (dim < 1) throw ConfigError("field.dimension", "must be >= 1");
  if (structure == Structure::laminate && (laminate_axis < 0 || laminate_axis >= dim))
    throw ConfigError("field.laminate_axis", "must lie in 1..dimension");
  if (structure == Structure::periodic) {
    if (static_cast<int>(tile.dims.size()) != dim)
      throw ConfigError("field.tile.dims", "needs one extent per dimension");
    for (const int k : tile.dims)
      if (k < 1) throw ConfigError("field.tile.dims", "tile extents must be positive integers");
    const std::size_t cells = tile.cell_count();
    if (tile.diagonal.size() != cells * static_cast<std::size_t>(slots()))
      throw ConfigError("field.tile.diagonal", "expected " + std::to_string(cells * slots()) + " values");
    for (const double v : tile.diagonal)
      if (!std::isfinite(v) || v <= 0.0) throw ConfigError("field.tile.diagonal", "values must be positive");
    if (!tile.lower.empty()) {
      if (tile.lower.size() != cells)
        throw ConfigError("field.tile.lower", "expected " + std::to_string(cells) + " values");
      for (const double v : tile.lower)
        if (!std::isfinite(v) || v < 0.0) throw ConfigError("field.tile.lower", "values must be >= 0");
    }
    return;
  }
  if (static_cast<int>(diagonal.size()) != slots())
    throw ConfigError("field.diagonal", isotropic ? "isotropic fields take exactly one law"
                                                  : "needs one law per dimension");
  for (std::size_t j = 0; j < diagonal.size(); ++j)
    diagonal[j].validate("field.diagonal[" + std::to_string(j) + "]");
  if (lower) lower->validate("field.lower");
}

FieldSpec FieldSpec::constant(int dim, double value) {
  FieldSpec spec;
  spec.dim = dim;
  spec.isotropic = true;
  spec.diagonal = {DistributionSpec::constant(value)};
  return spec;
}

FieldSample::FieldSample(std::shared_ptr<const FieldSpec> spec, std::uint64_t seed, std::uint64_t index)
    : spec_(std::move(spec)),
      seed_(seed),
      index_(index),
      key_(hash_combine(hash_combine(mix64(kFieldTag), seed), index)),
      shift_(static_cast<std::size_t>(spec_->dim), 0.0),
      offset_(static_cast<std::size_t>(spec_->dim), 0.0) {
  if (spec_->random_offset) {
    const Philox4x32 gen(key_);
    for (int k = 0; k < spec_->dim; ++k) {
      const auto out = gen({0u, 0u, kOffsetSlot + static_cast<std::uint32_t>(k), kFieldTag});
      // Offsets live in [0, 1); the open-interval draw never hits 1.
      offset_[static_cast<std::size_t>(k)] = to_open_unit(out[0], out[1]);
    }
  }
}

void FieldSample::locate(std::span<const double> x, std::span<std::int64_t> cell) const {
  for (std::size_t k = 0; k < shift_.size(); ++k)
    cell[k] = static_cast<std::int64_t>(std::floor((x[k] + shift_[k]) + offset_[k]));
}

double FieldSample::draw(std::span<const std::int64_t> cell, std::uint32_t slot,
                         const DistributionSpec& law) const {
  if (law.kind == DistKind::constant) return law.a;
  const std::uint64_t h = spec_->structure == Structure::laminate
                              ? cell_hash(cell.subspan(static_cast<std::size_t>(spec_->laminate_axis), 1))
                              : cell_hash(cell);
  const Philox4x32 gen(key_);
  const auto out = gen({static_cast<std::uint32_t>(h), static_cast<std::uint32_t>(h >> 32), slot, kFieldTag});
  return law.sample(to_open_unit(out[0], out[1]), to_open_unit(out[2], out[3]));
}

std::size_t FieldSample::tile_index(std::span<const std::int64_t> cell) const {
  const auto& dims = spec_->tile.dims;
  std::size_t idx = 0;
  for (std::size_t k = 0; k < dims.size(); ++k) {
    std::int64_t r = cell[k] % dims[k];
    if (r < 0) r += dims[k];
    idx = idx * static_cast<std::size_t>(dims[k]) + static_cast<std::size_t>(r);
  }
  return idx;
}

void FieldSample::cell_diagonal(std::span<const std::int64_t> cell, std::span<double> out) const {
  const FieldSpec& s = *spec_;
  if (s.structure == Structure::periodic) {
    const std::size_t base = tile_index(cell) * static_cast<std::size_t>(s.slots());
    for (int j = 0; j < s.dim; ++j) out[j] = s.tile.diagonal[base + (s.isotropic ? 0 : j)];
    return;
  }
  if (s.isotropic) {
    const double a = draw(cell, 0u, s.diagonal[0]);
    std::fill(out.begin(), out.begin() + s.dim, a);
    return;
  }
  for (int j = 0; j < s.dim; ++j) out[j] = draw(cell, static_cast<std::uint32_t>(j), s.diagonal[j]);
}

double FieldSample::cell_lower(std::span<const std::int64_t> cell) const {
  const FieldSpec& s = *spec_;
  if (s.structure == Structure::periodic) {
    return s.tile.lower.empty() ? 0.0 : s.tile.lower[tile_index(cell)];
  }
  if (!s.lower) return 0.0;
  return draw(cell, kLowerSlot, *s.lower);
}

void FieldSample::diagonal_at(std::span<const double> x, std::span<double> out) const {
  std::vector<std::int64_t> cell(shift_.size());
  locate(x, cell);
  cell_diagonal(cell, out);
}

double FieldSample::lower_at(std::span<const double> x) const {
  std::vector<std::int64_t> cell(shift_.size());
  locate(x, cell);
  return cell_lower(cell);
}

FieldSample FieldSample::shifted(std::span<const double> z) const {
  FieldSample out = *this;
  for (std::size_t k = 0; k < out.shift_.size(); ++k) out.shift_[k] += z[k];
  return out;
}

FieldSample sample_field(const FieldSpec& spec, std::uint64_t seed, std::uint64_t index) {
  spec.validate();
  return FieldSample(std::make_shared<const FieldSpec>(spec), seed, index);
}

FieldSample shift(const FieldSample& f, std::span<const double> z) { return f.shifted(z); }

double Observable::evaluate(std::span<const double> diagonal, double lower) const {
  switch (kind) {
    case ObservableKind::norm: {
      double s = 0.0;
      for (const double v : diagonal) s += v * v;
      return std::sqrt(s);
    }
    case ObservableKind::lower: return lower;
    case ObservableKind::entry: return diagonal[static_cast<std::size_t>(entry)];
  }
  return 0.0;
}

double Box::volume() const {
  double v = 1.0;
  for (std::size_t k = 0; k < lo.size(); ++k) v *= hi[k] - lo[k];
  return v;
}

bool Box::contains(std::span<const double> x) const {
  for (std::size_t k = 0; k < lo.size(); ++k)
    if (x[k] < lo[k] || x[k] > hi[k]) return false;
  return true;
}

bool Box::contains(const Box& inner) const {
  for (std::size_t k = 0; k < lo.size(); ++k)
    if (inner.lo[k] < lo[k] || inner.hi[k] > hi[k]) return false;
  return true;
}

Box Box::unit(int dim) {
  return Box{std::vector<double>(static_cast<std::size_t>(dim), 0.0),
             std::vector<double>(static_cast<std::size_t>(dim), 1.0)};
}

Box Box::cube(std::span<const double> center, double side) {
  Box b;
  for (const double c : center) {
    b.lo.push_back(c - 0.5 * side);
    b.hi.push_back(c + 0.5 * side);
  }
  return b;
}

std::vector<BirkhoffPoint> birkhoff_average(const FieldSample& f, const Observable& obs, const Box& box,
                                            std::span<const double> t_list) {
  const int d = f.dim();
  if (box.dim() != d) throw ConfigError("box", "dimension mismatch with field");
  if (box.volume() <= 0.0) throw ConfigError("box", "must have positive volume");
  if (obs.kind == ObservableKind::entry && (obs.entry < 0 || obs.entry >= d))
    throw ConfigError("observable.entry", "out of range");

  const FieldSpec& spec = f.spec();
  const auto shift = f.shift();
  const auto offset = f.offset();
  std::vector<double> diag(static_cast<std::size_t>(d));
  std::vector<std::int64_t> cell(static_cast<std::size_t>(d), 0);

  std::vector<BirkhoffPoint> series;
  series.reserve(t_list.size());
  for (const double t : t_list) {
    // tB in realization coordinates.
    std::vector<double> lo(static_cast<std::size_t>(d)), hi(static_cast<std::size_t>(d));
    for (int k = 0; k < d; ++k) {
      lo[k] = (t * box.lo[k] + shift[k]) + offset[k];
      hi[k] = (t * box.hi[k] + shift[k]) + offset[k];
    }
    // Laminates vary along one axis only; the transverse integral factors out.
    std::vector<int> axes;
    if (spec.structure == Structure::laminate) {
      axes.push_back(spec.laminate_axis);
    } else {
      axes.resize(static_cast<std::size_t>(d));
      std::iota(axes.begin(), axes.end(), 0);
    }
    std::vector<std::int64_t> first(axes.size()), last(axes.size());
    double measure = 1.0;
    for (std::size_t a = 0; a < axes.size(); ++a) {
      const int k = axes[a];
      first[a] = static_cast<std::int64_t>(std::floor(lo[k]));
      last[a] = static_cast<std::int64_t>(std::ceil(hi[k])) - 1;
      measure *= hi[k] - lo[k];
    }
    std::vector<std::int64_t> cur = first;
    double integral = 0.0;
    std::uint64_t visited = 0;
    while (true) {
      double weight = 1.0;
      for (std::size_t a = 0; a < axes.size(); ++a) {
        const int k = axes[a];
        cell[k] = cur[a];
        const double c0 = static_cast<double>(cur[a]);
        weight *= std::min(hi[k], c0 + 1.0) - std::max(lo[k], c0);
      }
      f.cell_diagonal(cell, diag);
      const double lower = obs.kind == ObservableKind::lower ? f.cell_lower(cell) : 0.0;
      integral += weight * obs.evaluate(diag, lower);
      ++visited;
      std::size_t a = axes.size();
      while (a > 0) {
        --a;
        if (cur[a] < last[a]) {
          ++cur[a];
          break;
        }
        cur[a] = first[a];
        if (a == 0) {
          a = axes.size() + 1;
          break;
        }
      }
      if (a == axes.size() + 1) break;
    }
    series.push_back({t, integral / measure, visited});
  }
  return series;
}

}  // namespace homlab
