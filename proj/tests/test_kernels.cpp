#include <doctest.h>

#include <cmath>
#include <vector>

#include "besi/kernels.hpp"
#include "besi/pseudometrics.hpp"
#include "besi/random.hpp"
#include "besi/spectral.hpp"

using namespace besi;
namespace k = besi::kernels;

namespace {

bool have_avx2() { return k::avx2_table() != nullptr && k::cpu_supports_avx2(); }

std::vector<double> reals(Rng& rng, std::size_t n) {
  std::vector<double> v(n);
  for (auto& x : v) x = rng.uniform(-2, 2);
  return v;
}

std::vector<cplx> complexes(Rng& rng, std::size_t n) {
  std::vector<cplx> v(n);
  for (auto& x : v) x = {rng.uniform(-1, 1), rng.uniform(-1, 1)};
  return v;
}

struct LevelGuard {
  k::SimdLevel saved = k::active_level();
  ~LevelGuard() { k::set_active_level(saved); }
};

}  // namespace

TEST_CASE("scalar kernels against direct loops") {
  const auto& s = k::scalar_table();
  Rng rng(1);
  for (std::size_t n : {0u, 1u, 3u, 8u, 17u, 100u}) {
    const auto x = reals(rng, n);
    double sum = 0, sq = 0;
    std::size_t cnt = 0;
    for (double v : x) {
      sum += v;
      sq += v * v;
      cnt += v > 0.5;
    }
    CHECK(s.sum(x.data(), n) == doctest::Approx(sum).epsilon(1e-12));
    CHECK(s.sum_squares(x.data(), n) == doctest::Approx(sq).epsilon(1e-12));
    CHECK(s.count_greater(x.data(), n, 0.5) == cnt);

    const auto a = complexes(rng, n + 5);
    cplx ps = 0;
    for (std::size_t j = 0; j < n; ++j) ps += a[j] * std::polar(1.0, -kTwoPi * 0.3 * (2.0 + static_cast<double>(j)));
    const cplx got = s.phase_sum(a.data(), n, 0.3, 2.0);
    CHECK(std::abs(got - ps) <= 1e-9 * (1.0 + static_cast<double>(n)));
    double lag = 0;
    for (std::size_t j = 0; j < n; ++j) lag += std::norm(a[j + 5] - a[j]);
    CHECK(s.lag_sq_diff(a.data(), n, 5) == doctest::Approx(lag).epsilon(1e-12));
  }
}

TEST_CASE("avx2 kernels agree with the scalar reference") {
  if (!have_avx2()) {
    MESSAGE("AVX2 not available; skipping");
    return;
  }
  const auto& s = k::scalar_table();
  const auto& v = *k::avx2_table();
  Rng rng(2);
  for (std::size_t n = 0; n < 70; n += (n < 20 ? 1 : 7)) {
    const auto x = reals(rng, n);
    CHECK(v.sum(x.data(), n) == doctest::Approx(s.sum(x.data(), n)).epsilon(1e-12));
    CHECK(v.sum_squares(x.data(), n) == doctest::Approx(s.sum_squares(x.data(), n)).epsilon(1e-12));
    for (double t : {-1.0, 0.0, 0.7}) CHECK(v.count_greater(x.data(), n, t) == s.count_greater(x.data(), n, t));

    const auto a = complexes(rng, n + 3), b = complexes(rng, n + 3);
    std::vector<double> o1(n), o2(n);
    s.abs_diff(a.data(), b.data(), o1.data(), n);
    v.abs_diff(a.data(), b.data(), o2.data(), n);
    for (std::size_t i = 0; i < n; ++i) CHECK(o2[i] == doctest::Approx(o1[i]).epsilon(1e-14));

    for (double w : {0.0, 0.1234, 0.61803398875, 3.7}) {
      const cplx p1 = s.phase_sum(a.data(), n, w, 11.0), p2 = v.phase_sum(a.data(), n, w, 11.0);
      CHECK(std::abs(p1 - p2) <= 1e-9 * (1.0 + static_cast<double>(n)));
    }
    CHECK(v.lag_sq_diff(a.data(), n, 3) == doctest::Approx(s.lag_sq_diff(a.data(), n, 3)).epsilon(1e-12));

    for (std::size_t d = 1; d <= 3; ++d) {
      std::vector<double> coords(n * d);
      for (auto& c : coords) c = rng.uniform(0, 100);
      const double kv[3] = {0.37, 1.21, 0.05};
      const cplx e1 = s.exp_sum(a.data(), coords.data(), n, d, kv), e2 = v.exp_sum(a.data(), coords.data(), n, d, kv);
      CHECK(std::abs(e1 - e2) <= 1e-9 * (1.0 + static_cast<double>(n)));
      const cplx u1 = s.exp_sum(nullptr, coords.data(), n, d, kv), u2 = v.exp_sum(nullptr, coords.data(), n, d, kv);
      CHECK(std::abs(u1 - u2) <= 1e-9 * (1.0 + static_cast<double>(n)));
    }
  }
}

TEST_CASE("estimators agree across kernel levels") {
  if (!have_avx2()) return;
  LevelGuard guard;
  const auto sys = make_torus_rotation({0.6180339887498949});
  const auto f = obs::torus_character({1});
  const Point x = sys->sample_mu(1), y = sys->sample_mu(2);
  const Schedule sched({1000, 2000, 4000}, 1);

  k::set_active_level(k::SimdLevel::scalar);
  const auto m1 = f_pseudometric(MetricKind::df_L2, *sys, f, x, y, sched);
  const auto s1 = spectrum_scan(*sys, f, x, {0.0, 1.0, 1e-2, true}, sched);
  k::set_active_level(k::SimdLevel::avx2);
  const auto m2 = f_pseudometric(MetricKind::df_L2, *sys, f, x, y, sched);
  const auto s2 = spectrum_scan(*sys, f, x, {0.0, 1.0, 1e-2, true}, sched);
  CHECK(m1.value == doctest::Approx(m2.value).epsilon(1e-12));
  REQUIRE(s1.peaks.size() == s2.peaks.size());
  for (std::size_t i = 0; i < s1.peaks.size(); ++i) {
    CHECK(s1.peaks[i].w == doctest::Approx(s2.peaks[i].w).epsilon(1e-6));
    CHECK(s1.peaks[i].magnitude == doctest::Approx(s2.peaks[i].magnitude).epsilon(1e-9));
  }
}

TEST_CASE("kernel selection") {
  LevelGuard guard;
  CHECK(k::level_name(k::SimdLevel::scalar) == "scalar");
  CHECK(k::level_name(k::SimdLevel::avx2) == "avx2");
  k::set_active_level(k::SimdLevel::scalar);
  CHECK(k::active_level() == k::SimdLevel::scalar);
  if (!have_avx2()) CHECK_THROWS_AS(k::set_active_level(k::SimdLevel::avx2), InvalidArgument);
}
