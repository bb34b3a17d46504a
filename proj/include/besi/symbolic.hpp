#pragma once

// Symbol sources and shift-space helpers shared by the symbolic systems.

#include <cstdint>
#include <vector>

#include "besi/points.hpp"
#include "besi/systems.hpp"

namespace besi {

/// i.i.d. bits with P(1) = p, drawn by hashing (seed, coordinate). A contiguous
/// block of coordinates may be pinned to given values (used by ball samplers).
class IidSource final : public SymbolSource {
 public:
  IidSource(std::uint64_t seed, double p) : seed_(seed), p_(p) {}
  IidSource(std::uint64_t seed, double p, std::int64_t pin_lo, std::vector<std::uint8_t> pinned)
      : seed_(seed), p_(p), pin_lo_(pin_lo), pinned_(std::move(pinned)) {}
  int at(std::int64_t k) const override;

 private:
  std::uint64_t seed_;
  double p_;
  std::int64_t pin_lo_ = 0;
  std::vector<std::uint8_t> pinned_;
};

/// Rotation coding x_k = 1 iff frac(theta + k alpha) >= 1 - alpha.
class RotationCodingSource final : public SymbolSource {
 public:
  RotationCodingSource(double alpha, double theta) : alpha_(alpha), theta_(theta) {}
  int at(std::int64_t k) const override;
  double alpha() const { return alpha_; }
  double theta() const { return theta_; }
  /// Phase seen from coordinate `offset`.
  double phase(std::int64_t offset) const;

 private:
  double alpha_, theta_;
};

/// Thue–Morse bits t(base + k) = popcount(base + k) mod 2.
class ThueMorseSource final : public SymbolSource {
 public:
  explicit ThueMorseSource(std::uint64_t base) : base_(base) {}
  int at(std::int64_t k) const override;
  std::uint64_t base() const { return base_; }

 private:
  std::uint64_t base_;
};

/// Shift metric 2^-m with m the first index (order 0, 1, -1, 2, -2, ...) where
/// the sequences differ; 0 if they agree on the first kShiftIndexCap indices.
double shift_dist(const SymbolPoint& x, const SymbolPoint& y);

/// dist(σ^j x, σ^j y) for j = 0..n-1 in O(n + kShiftIndexCap).
std::vector<double> shift_orbit_distances(const SymbolPoint& x, const SymbolPoint& y, std::size_t n);

/// Coordinates fixed by a cylinder ball with the given radius: indices 0..D.
struct CylinderRange {
  std::int64_t lo = 0;
  std::int64_t hi = 0;
};
CylinderRange cylinder_range(Radius r);

/// First `length` letters of the fixed point of the substitution starting with
/// letter 0 (fibonacci: 0 -> 01, 1 -> 0; thue_morse: 0 -> 01, 1 -> 10).
std::vector<int> substitution_word(SubstitutionRule rule, std::size_t length);

/// 1/φ², the slope whose rotation coding is the Fibonacci word.
inline constexpr double kFibonacciSlope = 0.38196601125010515180;

}  // namespace besi
