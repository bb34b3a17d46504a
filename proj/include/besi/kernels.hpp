#pragma once

// Data-parallel inner loops shared by the estimators. Each kernel has a scalar
// reference implementation and, on x86-64, an AVX2 variant. The variant is
// chosen once at startup from CPU features; BESI_SIMD=scalar|avx2 overrides it.

#include <cstddef>
#include <span>
#include <string_view>

#include "besi/common.hpp"

namespace besi::kernels {

enum class SimdLevel { scalar, avx2 };

struct KernelTable {
  SimdLevel level;
  const char* name;

  double (*sum)(const double* x, std::size_t n);
  double (*sum_squares)(const double* x, std::size_t n);
  /// Number of entries strictly greater than threshold.
  std::size_t (*count_greater)(const double* x, std::size_t n, double threshold);
  /// out[i] = |a[i] - b[i]|
  void (*abs_diff)(const cplx* a, const cplx* b, double* out, std::size_t n);
  /// sum_j v[j] * exp(-2 pi i w (j0 + j))
  cplx (*phase_sum)(const cplx* v, std::size_t n, double w, double j0);
  /// sum_i v[i] * exp(-2 pi i <k, x_i>); coords are structure-of-arrays with
  /// stride n, one block per dimension. v == nullptr means all weights are 1.
  cplx (*exp_sum)(const cplx* v, const double* coords, std::size_t n, std::size_t d,
                  const double* k);
  /// sum_{i<n} |v[i + lag] - v[i]|^2 ; v must hold n + lag entries.
  double (*lag_sq_diff)(const cplx* v, std::size_t n, std::size_t lag);
};

const KernelTable& scalar_table();
/// nullptr when the AVX2 variant is not compiled in.
const KernelTable* avx2_table();
/// True when the running CPU can execute the AVX2 variant.
bool cpu_supports_avx2();

/// Table for a given level; throws InvalidArgument when the level is unavailable.
const KernelTable& table(SimdLevel level);
/// Table selected at startup.
const KernelTable& active();
SimdLevel active_level();
/// Forces a level for the rest of the process (tests and the CLI use this).
void set_active_level(SimdLevel level);
std::string_view level_name(SimdLevel level);

// Convenience wrappers over the active table.

inline double sum(std::span<const double> x) { return active().sum(x.data(), x.size()); }
inline double sum_squares(std::span<const double> x) {
  return active().sum_squares(x.data(), x.size());
}
inline std::size_t count_greater(std::span<const double> x, double threshold) {
  return active().count_greater(x.data(), x.size(), threshold);
}
inline void abs_diff(std::span<const cplx> a, std::span<const cplx> b, std::span<double> out) {
  require(a.size() == b.size() && out.size() == a.size(), "abs_diff: size mismatch");
  active().abs_diff(a.data(), b.data(), out.data(), a.size());
}
inline cplx phase_sum(std::span<const cplx> v, double w, double j0 = 0.0) {
  return active().phase_sum(v.data(), v.size(), w, j0);
}
inline double lag_sq_diff(std::span<const cplx> v, std::size_t n, std::size_t lag) {
  require(n + lag <= v.size(), "lag_sq_diff: series too short for lag");
  return active().lag_sq_diff(v.data(), n, lag);
}

}  // namespace besi::kernels
