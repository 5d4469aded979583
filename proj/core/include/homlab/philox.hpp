#pragma once

#include <array>
#include <cstdint>

namespace homlab {

/// Philox4x32-10 counter-based generator (Salmon et al., SC'11).
///
/// Every output block is a pure function of (key, counter), so any cell of an
/// unbounded random field can be generated on demand without enumerating the
/// others.
class Philox4x32 {
 public:
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  explicit Philox4x32(std::uint64_t key) noexcept
      : key_{static_cast<std::uint32_t>(key), static_cast<std::uint32_t>(key >> 32)} {}

  [[nodiscard]] Counter operator()(Counter ctr) const noexcept;

 private:
  Key key_;
};

/// SplitMix64 finalizer; the fixed 64-bit mixing function used for every seed
/// derivation in the project.
[[nodiscard]] constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Combines a running hash with one more 64-bit word.
[[nodiscard]] constexpr std::uint64_t hash_combine(std::uint64_t h, std::uint64_t word) noexcept {
  return mix64(h ^ mix64(word));
}

/// Maps two 32-bit words to a double strictly inside (0, 1) on a 2^-52 grid.
[[nodiscard]] constexpr double to_open_unit(std::uint32_t hi, std::uint32_t lo) noexcept {
  const std::uint64_t bits = (static_cast<std::uint64_t>(hi) << 20) ^ (lo >> 12);
  const std::uint64_t mantissa = bits & ((1ULL << 52) - 1);
  return (static_cast<double>(mantissa) + 0.5) * 0x1.0p-52;
}

/// Sequential uniforms from one Philox key: block i is Philox(key)(i, stream).
class UniformStream {
 public:
  UniformStream(std::uint64_t key, std::uint64_t stream) noexcept : gen_(key), stream_(stream) {}

  /// Next value in (0, 1).
  double next() noexcept;
  /// Uniform integer in [0, n) (n well below 2^53).
  std::uint64_t below(std::uint64_t n) noexcept;

 private:
  Philox4x32 gen_;
  std::uint64_t stream_;
  std::uint64_t block_ = 0;
  Philox4x32::Counter buffer_{};
  int used_ = 4;
};

}  // namespace homlab
