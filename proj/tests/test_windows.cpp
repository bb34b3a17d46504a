#include <doctest.h>

#include <cmath>

#include "besi/windows.hpp"
#include "gen.hpp"

using namespace besi;

TEST_CASE("enumerate_window small cases") {
  {
    const auto e = enumerate_window(Window(3, GroupKind::discrete, 1));
    REQUIRE(e.points.size() == 3);
    for (int i = 0; i < 3; ++i) CHECK(e.points[static_cast<std::size_t>(i)][0] == i);
    CHECK(e.volume == 3.0);
  }
  {
    const auto e = enumerate_window(Window(1, GroupKind::discrete, 2));
    REQUIRE(e.points.size() == 1);
    CHECK(e.points[0][0] == 0.0);
    CHECK(e.points[0][1] == 0.0);
    CHECK(e.volume == 1.0);
  }
  {
    const auto e = enumerate_window(Window(1, GroupKind::continuous, 1, 0.25));
    REQUIRE(e.points.size() == 4);
    for (int i = 0; i < 4; ++i) CHECK(e.points[static_cast<std::size_t>(i)][0] == doctest::Approx(0.25 * i));
    CHECK(e.volume == doctest::Approx(1.0));
  }
}

TEST_CASE("enumerate_window is lexicographic in 2d") {
  const auto e = enumerate_window(Window(3, GroupKind::discrete, 2));
  REQUIRE(e.points.size() == 9);
  for (std::size_t i = 1; i < e.points.size(); ++i) {
    const auto& a = e.points[i - 1];
    const auto& b = e.points[i];
    CHECK((a[0] < b[0] || (a[0] == b[0] && a[1] < b[1])));
  }
}

TEST_CASE("window errors") {
  CHECK_THROWS_AS(Window(0, GroupKind::discrete), InvalidArgument);
  CHECK_THROWS_AS(Window(-2, GroupKind::discrete), InvalidArgument);
  CHECK_THROWS_AS(Window(1, GroupKind::continuous, 1, 0.0), InvalidArgument);
  CHECK_THROWS_AS(Window(1, GroupKind::continuous, 1, 2.0), InvalidArgument);
  CHECK_THROWS_AS(Schedule({10}, 0), InvalidArgument);
  CHECK_THROWS_AS(Schedule({10, 5}, 0), InvalidArgument);
  CHECK_THROWS_AS(Schedule({10, 20}, 2), InvalidArgument);
}

TEST_CASE("density of even integers") {
  const Schedule sched = Schedule::ending_at(10000, 5, 2);
  const auto est = density([](const GroupIndex& g) { return std::fmod(g[0], 2.0) == 0.0; }, sched, {});
  for (const auto& [n, ratio] : est.per_window) CHECK(ratio == std::ceil(n / 2.0) / n);
  CHECK(std::abs(est.lower - 0.5) <= 1e-3);
  CHECK(std::abs(est.upper - 0.5) <= 1e-3);
}

TEST_CASE("density of everything and of the perfect squares") {
  const Schedule sched = Schedule::ending_at(10000, 5, 2);
  const auto all = density([](const GroupIndex&) { return true; }, sched, {});
  CHECK(all.lower == 1.0);
  CHECK(all.upper == 1.0);
  auto square = [](const GroupIndex& g) {
    const double r = std::round(std::sqrt(g[0]));
    return r * r == g[0];
  };
  const auto sq = density(square, sched, {});
  CHECK(sq.upper <= 0.02);
  // counting oracle: ceil(sqrt(n)) squares in [0, n)
  const auto& last = sq.per_window.back();
  CHECK(last.second == std::ceil(std::sqrt(last.first)) / last.first);
}

TEST_CASE("syndetic probes") {
  const Schedule sched = Schedule::ending_at(10000, 5, 2);
  auto even = [](const GroupIndex& g) { return std::fmod(g[0], 2.0) == 0.0; };
  CHECK(syndetic_probe(even, 2, sched, {}).syndetic);
  CHECK_FALSE(syndetic_probe(even, 1, sched, {}).syndetic);
  CHECK(syndetic_probe([](const GroupIndex&) { return true; }, 1, sched, {}).syndetic);

  auto square = [](const GroupIndex& g) {
    const double r = std::round(std::sqrt(g[0]));
    return r * r == g[0];
  };
  const auto res = syndetic_probe(square, 10, sched, {});
  CHECK_FALSE(res.syndetic);
  REQUIRE(res.witness.has_value());
  const double w = (*res.witness)[0];
  CHECK(w > 9000.0);
  for (double j = w; j < w + 10; ++j) CHECK_FALSE(square(GroupIndex::scalar(GroupKind::discrete, j)));

  CHECK_THROWS_AS(syndetic_probe(even, 20000, sched, {}), InvalidArgument);
}

TEST_CASE("density properties on random sets") {
  Rng rng(11);
  for (int trial = 0; trial < 40; ++trial) {
    const int d = 1 + static_cast<int>(rng.below(2));
    const GroupKind kind = rng.below(2) ? GroupKind::discrete : GroupKind::continuous;
    const GridParams gp{kind, d, 0.25};
    const Schedule sched = d == 1 ? Schedule({50, 100, 200, 400}, 1) : Schedule({4, 8, 16}, 1);
    const gen::HashSet S{rng.bits(), rng.uniform()};
    const gen::HashSet T{rng.bits(), rng.uniform()};
    auto notS = [&](const GroupIndex& g) { return !S(g); };
    auto SorT = [&](const GroupIndex& g) { return S(g) || T(g); };
    auto SandT = [&](const GroupIndex& g) { return S(g) && T(g); };
    const auto ds = density(S, sched, gp), dn = density(notS, sched, gp), dt = density(T, sched, gp);
    const auto du = density(SorT, sched, gp), di = density(SandT, sched, gp);
    CHECK(0.0 <= ds.lower);
    CHECK(ds.lower <= ds.upper);
    CHECK(ds.upper <= 1.0);
    for (std::size_t k = 0; k < ds.per_window.size(); ++k) {
      CHECK(ds.per_window[k].second + dn.per_window[k].second == doctest::Approx(1.0).epsilon(1e-12));
      CHECK(du.per_window[k].second <= ds.per_window[k].second + dt.per_window[k].second + 1e-15);
      CHECK(di.per_window[k].second <= ds.per_window[k].second);
      CHECK(ds.per_window[k].second <= du.per_window[k].second);
    }
  }
}

TEST_CASE("nested grid windows are prefixes") {
  const Schedule sched({3, 5, 8}, 0);
  for (int d = 1; d <= 3; ++d) {
    const NestedGrid g(sched, {GroupKind::discrete, d, 1.0});
    for (std::size_t k = 0; k < sched.size(); ++k) {
      const double n = sched.sizes[k];
      CHECK(g.prefix(k) == static_cast<std::size_t>(std::pow(n, d)));
      for (std::size_t i = 0; i < g.prefix(k); ++i) {
        const GroupIndex p = g.point(i);
        for (int a = 0; a < d; ++a) CHECK(p[a] < n);
      }
    }
  }
}

TEST_CASE("group index arithmetic") {
  Rng rng(5);
  for (int i = 0; i < 100; ++i) {
    const auto g = gen::group_element(rng, GroupKind::discrete, 2, 50);
    const auto h = gen::group_element(rng, GroupKind::discrete, 2, 50);
    CHECK(g + h == h + g);
    CHECK(g + (-g) == GroupIndex::zero(GroupKind::discrete, 2));
  }
  CHECK_THROWS_AS(GroupIndex(GroupKind::discrete, {0.5}), InvalidArgument);
}
