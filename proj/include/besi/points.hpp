#pragma once

// Point representations for the built-in systems.

#include <array>
#include <cstdint>
#include <memory>
#include <variant>
#include <vector>

#include "besi/windows.hpp"

namespace besi {

/// Point of a d-torus stored lazily as base + time * alpha (mod 1). Keeping the
/// elapsed time separate makes act(g + h, x) = act(g, act(h, x)) exact.
struct TorusPoint {
  std::vector<double> base;
  std::shared_ptr<const std::vector<double>> alpha;  // null for a point without dynamics
  double time = 0.0;

  std::size_t dim() const { return base.size(); }
  double coord(std::size_t i) const;
  std::vector<double> coords() const;
};

/// Two-sided sequence over {0, 1}, exposed through random access.
class SymbolSource {
 public:
  virtual ~SymbolSource() = default;
  virtual int at(std::int64_t k) const = 0;
};

struct SymbolPoint {
  std::shared_ptr<const SymbolSource> source;
  std::int64_t offset = 0;

  int at(std::int64_t k) const { return source->at(offset + k); }
};

/// Translate Λ − t of a Delone set, identified with t.
struct TranslationPoint {
  std::array<double, kMaxDim> t{};
  int d = 1;
};

struct Point;

struct ProductPoint {
  std::vector<Point> parts;
};

struct Point {
  std::variant<TorusPoint, SymbolPoint, TranslationPoint, ProductPoint> v;

  Point() = default;
  Point(TorusPoint p) : v(std::move(p)) {}
  Point(SymbolPoint p) : v(std::move(p)) {}
  Point(TranslationPoint p) : v(std::move(p)) {}
  Point(ProductPoint p) : v(std::move(p)) {}

  template <class T>
  const T* as() const { return std::get_if<T>(&v); }
  template <class T>
  T* as() { return std::get_if<T>(&v); }
};

/// All torus coordinates of a point, flattened across product factors.
std::vector<double> torus_coords(const Point& p);
/// First symbolic factor of a point (itself or inside a product); null if none.
const SymbolPoint* first_symbolic(const Point& p);

// Interleaved coordinate order 0, 1, -1, 2, -2, ... used by the shift metric.
constexpr std::int64_t coord_of_index(std::int64_t m) {
  return m % 2 == 1 ? (m + 1) / 2 : -(m / 2);
}
constexpr std::int64_t index_of_coord(std::int64_t k) { return k > 0 ? 2 * k - 1 : -2 * k; }

/// Indices beyond this are never compared; 2^-1075 is zero in double precision.
inline constexpr std::int64_t kShiftIndexCap = 1075;

}  // namespace besi
