#include <doctest.h>

#include <cmath>

#include "besi/pseudometrics.hpp"
#include "besi/symbolic.hpp"
#include "gen.hpp"

using namespace besi;

namespace {

TorusPoint at(double x) { return TorusPoint{{x}, nullptr, 0.0}; }

// E[2^-m] with P(first disagreement at interleaved index m) = 2^-(m+1).
double bernoulli_db_oracle() {
  double s = 0;
  for (int m = 0; m < 200; ++m) s += std::ldexp(1.0, -m) * std::ldexp(1.0, -(m + 1));
  return s;
}

}  // namespace

TEST_CASE("identical orbits give zero") {
  const auto rot = make_torus_rotation({kGoldenFraction});
  const auto sh = make_bernoulli_shift(0.5);
  const Schedule sched({500, 1000, 2000}, 1);
  for (const auto& [s, f] : {std::pair{rot, obs::torus_character({1})}, std::pair{sh, obs::symbol(0)}}) {
    const Point x = s->sample_mu(3);
    for (MetricKind k : {MetricKind::df_L2, MetricKind::df_L1, MetricKind::rho_f})
      CHECK(f_pseudometric(k, *s, f, x, x, sched).value == 0.0);
    for (MetricKind k : {MetricKind::db, MetricKind::rho_b}) CHECK(orbit_pseudometric(k, *s, x, x, sched).value == 0.0);
  }
}

TEST_CASE("rotation oracles") {
  const auto rot = make_torus_rotation({kGoldenFraction});
  const auto f = obs::torus_character({1});
  const Schedule sched = Schedule::ending_at(100000, 5, 2);
  const auto l2 = f_pseudometric(MetricKind::df_L2, *rot, f, at(0), at(0.25), sched);
  const double oracle = std::abs(cplx(1, 0) - std::polar(1.0, kTwoPi * 0.25));
  for (const auto& [n, v] : l2.per_window) CHECK(std::abs(v - oracle) <= 1e-9);
  CHECK(std::abs(l2.value - std::sqrt(2.0)) <= 1e-6);
  const auto db = orbit_pseudometric(MetricKind::db, *rot, at(0), at(0.25), sched);
  for (const auto& [n, v] : db.per_window) CHECK(std::abs(v - 0.25) <= 1e-9);
}

TEST_CASE("bernoulli oracles") {
  const auto sh = make_bernoulli_shift(0.5);
  const auto f = obs::symbol(0);
  const Schedule sched = Schedule::ending_at(100000, 5, 2);
  double l1 = 0, rho = 0, db = 0;
  const int pairs = 20;
  for (int i = 0; i < pairs; ++i) {
    const Point x = sh->sample_mu(derive_seed(4, 2 * i)), y = sh->sample_mu(derive_seed(4, 2 * i + 1));
    l1 += f_pseudometric(MetricKind::df_L1, *sh, f, x, y, sched).value;
    rho += f_pseudometric(MetricKind::rho_f, *sh, f, x, y, sched).value;
    db += orbit_pseudometric(MetricKind::db, *sh, x, y, sched).value;
  }
  CHECK(std::abs(l1 / pairs - 0.5) <= 0.02);
  CHECK(std::abs(rho / pairs - 0.5) <= 0.02);
  CHECK(std::abs(db / pairs - bernoulli_db_oracle()) <= 0.02);
  CHECK(bernoulli_db_oracle() == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("per-window axioms on random triples") {
  const Schedule sched({64, 128, 256}, 1);
  const auto rot = make_torus_rotation({kGoldenFraction, std::sqrt(2.0) - 1});
  const auto sh = make_bernoulli_shift(0.5);
  const std::vector<std::pair<SystemHandle, Observable>> cases = {{rot, obs::exp_cosine(1)}, {sh, obs::parity(0, 2)}};
  Rng rng(21);
  for (const auto& [s, f] : cases) {
    for (int t = 0; t < 150; ++t) {
      const Point x = s->sample_mu(rng.bits()), y = s->sample_mu(rng.bits()), z = s->sample_mu(rng.bits());
      for (MetricKind k : {MetricKind::df_L2, MetricKind::df_L1, MetricKind::db}) {
        const bool fm = is_observable_metric(k);
        auto est = [&](const Point& a, const Point& b) {
          return fm ? f_pseudometric(k, *s, f, a, b, sched) : orbit_pseudometric(k, *s, a, b, sched);
        };
        const auto xy = est(x, y), yx = est(y, x), xz = est(x, z), zy = est(z, y);
        for (std::size_t w = 0; w < xy.per_window.size(); ++w) {
          CHECK(xy.per_window[w].second == yx.per_window[w].second);
          CHECK(xy.per_window[w].second <= xz.per_window[w].second + zy.per_window[w].second + 1e-12);
        }
      }
    }
  }
}

TEST_CASE("scaling, Lipschitz domination and the rho bound") {
  const auto rot = make_torus_rotation({kGoldenFraction});
  const Schedule sched({100, 200, 400}, 1);
  const auto f = obs::torus_character({1});
  const auto g = obs::scaled(f, -2.5);
  Rng rng(8);
  for (int t = 0; t < 50; ++t) {
    const Point x = rot->sample_mu(rng.bits()), y = rot->sample_mu(rng.bits());
    for (MetricKind k : {MetricKind::df_L2, MetricKind::df_L1}) {
      const auto a = f_pseudometric(k, *rot, f, x, y, sched), b = f_pseudometric(k, *rot, g, x, y, sched);
      for (std::size_t w = 0; w < a.per_window.size(); ++w)
        CHECK(b.per_window[w].second == doctest::Approx(2.5 * a.per_window[w].second).epsilon(1e-12));
    }
    // |e^{2πip} − e^{2πiq}| ≤ 2π · circle distance
    const auto l1 = f_pseudometric(MetricKind::df_L1, *rot, f, x, y, sched);
    const auto db = orbit_pseudometric(MetricKind::db, *rot, x, y, sched);
    for (std::size_t w = 0; w < l1.per_window.size(); ++w)
      CHECK(l1.per_window[w].second <= kTwoPi * db.per_window[w].second * (1 + 1e-12));
    CHECK(f_pseudometric(MetricKind::rho_f, *rot, f, x, y, sched).value <= rho_upper(f));
  }
}

TEST_CASE("shift stability of df_L1") {
  const auto sh = make_bernoulli_shift(0.5);
  const auto f = obs::symbol(0);
  const Schedule sched({100, 200, 400}, 0);
  const GroupIndex one = GroupIndex::scalar(GroupKind::discrete, 1);
  Rng rng(31);
  for (int t = 0; t < 50; ++t) {
    const Point x = sh->sample_mu(rng.bits()), y = sh->sample_mu(rng.bits());
    const auto a = f_pseudometric(MetricKind::df_L1, *sh, f, x, y, sched);
    const auto b = f_pseudometric(MetricKind::df_L1, *sh, f, sh->act(one, x), sh->act(one, y), sched);
    for (std::size_t w = 0; w < a.per_window.size(); ++w)
      CHECK(std::abs(a.per_window[w].second - b.per_window[w].second) <= 2 * f.sup_bound / a.per_window[w].first + 1e-12);
  }
}

TEST_CASE("density infimum oracle") {
  // brute force over a fine grid of candidate thresholds
  Rng rng(3);
  for (int t = 0; t < 100; ++t) {
    const std::size_t n = 1 + rng.below(60);
    std::vector<double> d(n);
    for (auto& v : d) v = rng.uniform() < 0.3 ? 0.0 : rng.uniform();
    const double got = density_infimum(d.data(), n, 1.0);
    auto ok = [&](double e) {
      std::size_t c = 0;
      for (double v : d) c += v > e;
      return static_cast<double>(c) < e * static_cast<double>(n);
    };
    CHECK(ok(got + 1e-9));
    if (got > 1e-9) CHECK_FALSE(ok(got - 1e-6));
  }
}

TEST_CASE("equivalence implications hold") {
  const Schedule sched({1000, 2000, 4000}, 1);
  const auto rot = make_torus_rotation({kGoldenFraction});
  const auto sh = make_bernoulli_shift(0.5);
  std::vector<std::pair<Point, Point>> rp, sp;
  for (std::uint64_t i = 0; i < 60; ++i) {
    rp.emplace_back(rot->sample_mu(derive_seed(1, 2 * i)), rot->sample_mu(derive_seed(1, 2 * i + 1)));
    sp.emplace_back(sh->sample_mu(derive_seed(2, 2 * i)), sh->sample_mu(derive_seed(2, 2 * i + 1)));
  }
  rp.emplace_back(rp[0].first, rp[0].first);
  const auto r1 = equivalence_check(*rot, obs::scaled(obs::torus_character({1}), 0.5), rp, sched);
  CHECK(r1.violations.empty());
  CHECK(r1.checks == 2 * rp.size() * r1.eps_grid.size());
  const auto r2 = equivalence_check(*sh, obs::centered_symbol(0.5), sp, sched);
  CHECK(r2.violations.empty());
  CHECK_THROWS_AS(equivalence_check(*sh, obs::symbol(0), sp, sched), InvalidArgument);
}

TEST_CASE("metric names round-trip") {
  for (MetricKind k : {MetricKind::df_L2, MetricKind::df_L1, MetricKind::rho_f, MetricKind::db, MetricKind::rho_b})
    CHECK(metric_kind_from_string(to_string(k)) == k);
  CHECK_THROWS_AS(metric_kind_from_string("nope"), InvalidArgument);
}
