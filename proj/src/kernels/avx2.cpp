// AVX2 variants. Phases are formed with the same operation order as the scalar
// reference so that only the sine/cosine evaluation differs (by a few ulp).

#include <immintrin.h>

#include <bit>
#include <cmath>
#include <cstdint>

#include "besi/kernels.hpp"
#include "kernels_internal.hpp"

namespace besi::kernels {
namespace {

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

// Loads 4 consecutive complex numbers as separate real and imaginary vectors.
inline void load_cplx4(const cplx* p, __m256d& re, __m256d& im) {
  const double* d = reinterpret_cast<const double*>(p);
  const __m256d a = _mm256_loadu_pd(d);
  const __m256d b = _mm256_loadu_pd(d + 4);
  re = _mm256_permute4x64_pd(_mm256_unpacklo_pd(a, b), 0b11011000);
  im = _mm256_permute4x64_pd(_mm256_unpackhi_pd(a, b), 0b11011000);
}

// cos and sin of 2*pi*t for t in turns. Reduction to |s| <= 1/8 plus a quadrant,
// then Taylor polynomials through degree 16/17.
inline void sincos_turns(__m256d t, __m256d& c, __m256d& s) {
  const __m256d r = _mm256_sub_pd(t, _mm256_round_pd(t, _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC));
  const __m256d q = _mm256_round_pd(_mm256_mul_pd(r, _mm256_set1_pd(4.0)),
                                    _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
  const __m256d red = _mm256_sub_pd(r, _mm256_mul_pd(q, _mm256_set1_pd(0.25)));
  const __m256d th = _mm256_mul_pd(red, _mm256_set1_pd(kTwoPi));
  const __m256d z = _mm256_mul_pd(th, th);

  __m256d ps = _mm256_set1_pd(1.0 / 355687428096000.0);  // 1/17!
  ps = _mm256_fmadd_pd(ps, z, _mm256_set1_pd(-1.0 / 1307674368000.0));
  ps = _mm256_fmadd_pd(ps, z, _mm256_set1_pd(1.0 / 6227020800.0));
  ps = _mm256_fmadd_pd(ps, z, _mm256_set1_pd(-1.0 / 39916800.0));
  ps = _mm256_fmadd_pd(ps, z, _mm256_set1_pd(1.0 / 362880.0));
  ps = _mm256_fmadd_pd(ps, z, _mm256_set1_pd(-1.0 / 5040.0));
  ps = _mm256_fmadd_pd(ps, z, _mm256_set1_pd(1.0 / 120.0));
  ps = _mm256_fmadd_pd(ps, z, _mm256_set1_pd(-1.0 / 6.0));
  ps = _mm256_fmadd_pd(ps, z, _mm256_set1_pd(1.0));
  const __m256d sn = _mm256_mul_pd(ps, th);

  __m256d pc = _mm256_set1_pd(1.0 / 20922789888000.0);  // 1/16!
  pc = _mm256_fmadd_pd(pc, z, _mm256_set1_pd(-1.0 / 87178291200.0));
  pc = _mm256_fmadd_pd(pc, z, _mm256_set1_pd(1.0 / 479001600.0));
  pc = _mm256_fmadd_pd(pc, z, _mm256_set1_pd(-1.0 / 3628800.0));
  pc = _mm256_fmadd_pd(pc, z, _mm256_set1_pd(1.0 / 40320.0));
  pc = _mm256_fmadd_pd(pc, z, _mm256_set1_pd(-1.0 / 720.0));
  pc = _mm256_fmadd_pd(pc, z, _mm256_set1_pd(1.0 / 24.0));
  pc = _mm256_fmadd_pd(pc, z, _mm256_set1_pd(-0.5));
  const __m256d cs = _mm256_fmadd_pd(pc, z, _mm256_set1_pd(1.0));

  // Rotate by q quarter turns: q = 1 -> (-s, c), q = -1 -> (s, -c), |q| = 2 -> (-c, -s).
  const __m256d neg = _mm256_set1_pd(-0.0);
  const __m256d m_p1 = _mm256_cmp_pd(q, _mm256_set1_pd(1.0), _CMP_EQ_OQ);
  const __m256d m_m1 = _mm256_cmp_pd(q, _mm256_set1_pd(-1.0), _CMP_EQ_OQ);
  const __m256d m_2 = _mm256_cmp_pd(_mm256_andnot_pd(neg, q), _mm256_set1_pd(2.0), _CMP_EQ_OQ);
  const __m256d odd = _mm256_or_pd(m_p1, m_m1);

  __m256d cc = _mm256_blendv_pd(cs, sn, odd);
  __m256d ss = _mm256_blendv_pd(sn, cs, odd);
  // sign of cosine flips for q = 1 and |q| = 2; sign of sine flips for q = -1 and |q| = 2
  cc = _mm256_xor_pd(cc, _mm256_and_pd(_mm256_or_pd(m_p1, m_2), neg));
  ss = _mm256_xor_pd(ss, _mm256_and_pd(_mm256_or_pd(m_m1, m_2), neg));
  c = cc;
  s = ss;
}

double sum_avx2(const double* x, std::size_t n) {
  __m256d a0 = _mm256_setzero_pd(), a1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    a0 = _mm256_add_pd(a0, _mm256_loadu_pd(x + i));
    a1 = _mm256_add_pd(a1, _mm256_loadu_pd(x + i + 4));
  }
  double s = hsum(_mm256_add_pd(a0, a1));
  for (; i < n; ++i) s += x[i];
  return s;
}

double sum_squares_avx2(const double* x, std::size_t n) {
  __m256d a0 = _mm256_setzero_pd(), a1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256d u = _mm256_loadu_pd(x + i);
    const __m256d v = _mm256_loadu_pd(x + i + 4);
    a0 = _mm256_fmadd_pd(u, u, a0);
    a1 = _mm256_fmadd_pd(v, v, a1);
  }
  double s = hsum(_mm256_add_pd(a0, a1));
  for (; i < n; ++i) s += x[i] * x[i];
  return s;
}

std::size_t count_greater_avx2(const double* x, std::size_t n, double threshold) {
  const __m256d th = _mm256_set1_pd(threshold);
  std::size_t c = 0, i = 0;
  for (; i + 4 <= n; i += 4) {
    const int m = _mm256_movemask_pd(_mm256_cmp_pd(_mm256_loadu_pd(x + i), th, _CMP_GT_OQ));
    c += static_cast<std::size_t>(std::popcount(static_cast<unsigned>(m)));
  }
  for (; i < n; ++i) c += x[i] > threshold ? 1 : 0;
  return c;
}

void abs_diff_avx2(const cplx* a, const cplx* b, double* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d ar, ai, br, bi;
    load_cplx4(a + i, ar, ai);
    load_cplx4(b + i, br, bi);
    const __m256d dr = _mm256_sub_pd(ar, br);
    const __m256d di = _mm256_sub_pd(ai, bi);
    // mul + add without contraction so results match the scalar path bit for bit
    const __m256d s = _mm256_add_pd(_mm256_mul_pd(dr, dr), _mm256_mul_pd(di, di));
    _mm256_storeu_pd(out + i, _mm256_sqrt_pd(s));
  }
  for (; i < n; ++i) {
    const double dr = a[i].real() - b[i].real();
    const double di = a[i].imag() - b[i].imag();
    out[i] = std::sqrt(dr * dr + di * di);
  }
}

inline cplx scalar_term(cplx v, double t) {
  const double r = t - std::nearbyint(t);
  const double ang = kTwoPi * r;
  const double c = std::cos(ang), s = -std::sin(ang);
  return {v.real() * c - v.imag() * s, v.real() * s + v.imag() * c};
}

cplx phase_sum_avx2(const cplx* v, std::size_t n, double w, double j0) {
  const __m256d wv = _mm256_set1_pd(w);
  const __m256d base = _mm256_set_pd(3.0, 2.0, 1.0, 0.0);
  __m256d acc_re = _mm256_setzero_pd(), acc_im = _mm256_setzero_pd();
  std::size_t j = 0;
  for (; j + 4 <= n; j += 4) {
    const __m256d idx =
        _mm256_add_pd(_mm256_set1_pd(j0), _mm256_add_pd(_mm256_set1_pd(static_cast<double>(j)), base));
    __m256d c, s;
    sincos_turns(_mm256_mul_pd(wv, idx), c, s);
    __m256d vr, vi;
    load_cplx4(v + j, vr, vi);
    // v * (c - i s)
    acc_re = _mm256_add_pd(acc_re, _mm256_fmadd_pd(vr, c, _mm256_mul_pd(vi, s)));
    acc_im = _mm256_add_pd(acc_im, _mm256_fmsub_pd(vi, c, _mm256_mul_pd(vr, s)));
  }
  double re = hsum(acc_re), im = hsum(acc_im);
  for (; j < n; ++j) {
    const cplx t = scalar_term(v[j], w * (j0 + static_cast<double>(j)));
    re += t.real();
    im += t.imag();
  }
  return {re, im};
}

cplx exp_sum_avx2(const cplx* v, const double* coords, std::size_t n, std::size_t d,
                  const double* k) {
  __m256d acc_re = _mm256_setzero_pd(), acc_im = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d t = _mm256_setzero_pd();
    for (std::size_t a = 0; a < d; ++a)
      t = _mm256_add_pd(t, _mm256_mul_pd(_mm256_set1_pd(k[a]), _mm256_loadu_pd(coords + a * n + i)));
    __m256d c, s;
    sincos_turns(t, c, s);
    if (v) {
      __m256d vr, vi;
      load_cplx4(v + i, vr, vi);
      acc_re = _mm256_add_pd(acc_re, _mm256_fmadd_pd(vr, c, _mm256_mul_pd(vi, s)));
      acc_im = _mm256_add_pd(acc_im, _mm256_fmsub_pd(vi, c, _mm256_mul_pd(vr, s)));
    } else {
      acc_re = _mm256_add_pd(acc_re, c);
      acc_im = _mm256_sub_pd(acc_im, s);
    }
  }
  double re = hsum(acc_re), im = hsum(acc_im);
  for (; i < n; ++i) {
    double t = 0.0;
    for (std::size_t a = 0; a < d; ++a) t += k[a] * coords[a * n + i];
    const cplx term = scalar_term(v ? v[i] : cplx(1.0, 0.0), t);
    re += term.real();
    im += term.imag();
  }
  return {re, im};
}

double lag_sq_diff_avx2(const cplx* v, std::size_t n, std::size_t lag) {
  const double* a = reinterpret_cast<const double*>(v);
  const double* b = reinterpret_cast<const double*>(v + lag);
  const std::size_t m = 2 * n;
  __m256d acc0 = _mm256_setzero_pd(), acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= m; i += 8) {
    const __m256d d0 = _mm256_sub_pd(_mm256_loadu_pd(b + i), _mm256_loadu_pd(a + i));
    const __m256d d1 = _mm256_sub_pd(_mm256_loadu_pd(b + i + 4), _mm256_loadu_pd(a + i + 4));
    acc0 = _mm256_fmadd_pd(d0, d0, acc0);
    acc1 = _mm256_fmadd_pd(d1, d1, acc1);
  }
  double s = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < m; ++i) {
    const double d = b[i] - a[i];
    s += d * d;
  }
  return s;
}

}  // namespace

namespace detail {
const KernelTable& avx2_table_impl() {
  static const KernelTable t{SimdLevel::avx2, "avx2",         sum_avx2,
                             sum_squares_avx2, count_greater_avx2, abs_diff_avx2,
                             phase_sum_avx2,   exp_sum_avx2,       lag_sq_diff_avx2};
  return t;
}
}  // namespace detail

}  // namespace besi::kernels
