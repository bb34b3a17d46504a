#include <cmath>

#include "besi/kernels.hpp"
#include "kernels_internal.hpp"

namespace besi::kernels {
namespace {

double sum_scalar(const double* x, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += x[i];
  return s;
}

double sum_squares_scalar(const double* x, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += x[i] * x[i];
  return s;
}

std::size_t count_greater_scalar(const double* x, std::size_t n, double threshold) {
  std::size_t c = 0;
  for (std::size_t i = 0; i < n; ++i) c += x[i] > threshold ? 1 : 0;
  return c;
}

void abs_diff_scalar(const cplx* a, const cplx* b, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    const double dr = a[i].real() - b[i].real();
    const double di = a[i].imag() - b[i].imag();
    out[i] = std::sqrt(dr * dr + di * di);
  }
}

// e^{-2 pi i t} with t reduced to [-1/2, 1/2] first so large phases keep precision.
inline cplx unit_turn(double t) {
  const double r = t - std::nearbyint(t);
  const double a = kTwoPi * r;
  return {std::cos(a), -std::sin(a)};
}

cplx phase_sum_scalar(const cplx* v, std::size_t n, double w, double j0) {
  double re = 0.0, im = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    const double t = w * (j0 + static_cast<double>(j));
    const cplx e = unit_turn(t);
    re += v[j].real() * e.real() - v[j].imag() * e.imag();
    im += v[j].real() * e.imag() + v[j].imag() * e.real();
  }
  return {re, im};
}

cplx exp_sum_scalar(const cplx* v, const double* coords, std::size_t n, std::size_t d,
                    const double* k) {
  double re = 0.0, im = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double t = 0.0;
    for (std::size_t a = 0; a < d; ++a) t += k[a] * coords[a * n + i];
    const cplx e = unit_turn(t);
    if (v) {
      re += v[i].real() * e.real() - v[i].imag() * e.imag();
      im += v[i].real() * e.imag() + v[i].imag() * e.real();
    } else {
      re += e.real();
      im += e.imag();
    }
  }
  return {re, im};
}

double lag_sq_diff_scalar(const cplx* v, std::size_t n, std::size_t lag) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dr = v[i + lag].real() - v[i].real();
    const double di = v[i + lag].imag() - v[i].imag();
    s += dr * dr + di * di;
  }
  return s;
}

}  // namespace

const KernelTable& scalar_table() {
  static const KernelTable t{SimdLevel::scalar, "scalar",          sum_scalar,
                             sum_squares_scalar, count_greater_scalar, abs_diff_scalar,
                             phase_sum_scalar,   exp_sum_scalar,      lag_sq_diff_scalar};
  return t;
}

}  // namespace besi::kernels
