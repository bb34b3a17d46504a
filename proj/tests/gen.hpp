#pragma once

// Hand-rolled generators for the property tests.

#include <cmath>
#include <cstdint>
#include <vector>

#include "besi/random.hpp"
#include "besi/systems.hpp"

namespace gen {

/// Pseudo-random subset of Z^d (or the mesh grid of R^d) with the given density.
struct HashSet {
  std::uint64_t seed;
  double density;
  bool operator()(const besi::GroupIndex& g) const {
    std::uint64_t h = seed;
    for (int a = 0; a < g.dim(); ++a) h = besi::mix64(h ^ static_cast<std::uint64_t>(std::llround(g[a] * 1024.0)));
    return besi::unit_from_bits(h) < density;
  }
};

inline besi::GroupIndex group_element(besi::Rng& rng, besi::GroupKind kind, int d, double span) {
  std::vector<double> c(static_cast<std::size_t>(d));
  for (auto& x : c) {
    x = rng.uniform(-span, span);
    if (kind == besi::GroupKind::discrete) x = std::round(x);
  }
  return besi::GroupIndex(kind, c);
}

}  // namespace gen
