#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <functional>

#include "besi/symbolic.hpp"
#include "besi/systems.hpp"
#include "gen.hpp"

using namespace besi;

namespace {

const double kSilver = std::sqrt(2.0) - 1.0;

struct Named {
  const char* name;
  SystemHandle sys;
};

std::vector<Named> zoo() {
  return {
      {"rotation", make_torus_rotation({kGoldenFraction})},
      {"rotation2", make_torus_rotation({kGoldenFraction, kSilver})},
      {"flow", make_torus_rotation({kGoldenFraction}, GroupKind::continuous)},
      {"bernoulli", make_bernoulli_shift(0.5)},
      {"bernoulli_biased", make_bernoulli_shift(0.3)},
      {"sturmian", make_sturmian(kSilver)},
      {"fibonacci", make_substitution_subshift(SubstitutionRule::fibonacci)},
      {"thue_morse", make_substitution_subshift(SubstitutionRule::thue_morse)},
      {"product", make_product(make_torus_rotation({kGoldenFraction}), make_torus_rotation({kSilver}))},
      {"mixed_product", make_product(make_torus_rotation({kGoldenFraction}), make_bernoulli_shift(0.5))},
  };
}

GroupIndex element(Rng& rng, const System& s, double span) {
  if (s.group_kind() == GroupKind::discrete) return gen::group_element(rng, GroupKind::discrete, 1, span);
  // dyadic times keep the flow's time sums exact
  return GroupIndex::scalar(GroupKind::continuous, std::round(rng.uniform(-span, span) * 64.0) / 64.0);
}

// Coordinate functional used for the invariance check: one number per point.
double functional(const Point& p) {
  if (const auto* sp = first_symbolic(p)) return sp->at(0) + 2 * sp->at(1) + 4 * sp->at(-1);
  return torus_coords(p)[0];
}

double ks_distance(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::size_t i = 0, j = 0;
  double best = 0;
  while (i < a.size() && j < b.size()) {
    const double v = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= v) ++i;
    while (j < b.size() && b[j] <= v) ++j;
    best = std::max(best, std::abs(double(i) / a.size() - double(j) / b.size()));
  }
  return best;
}

}  // namespace

TEST_CASE("constructors and metadata") {
  const auto r = make_torus_rotation({kGoldenFraction});
  CHECK(r->group_kind() == GroupKind::discrete);
  CHECK(r->known_class() == KnownClass::discrete_spectrum);
  CHECK(r->minimal());
  const auto b = make_bernoulli_shift(0.5);
  CHECK(b->known_class() == KnownClass::weakly_mixing);
  CHECK(make_sturmian(kSilver)->known_class() == KnownClass::discrete_spectrum);
  CHECK(make_substitution_subshift(SubstitutionRule::fibonacci)->known_class() == KnownClass::discrete_spectrum);
  const auto same = make_product(make_torus_rotation({kGoldenFraction}), make_torus_rotation({kGoldenFraction}));
  CHECK(torus_coords(same->sample_mu(3)).size() == 2);
  CHECK_FALSE(same->minimal());
}

TEST_CASE("constructor errors") {
  CHECK_THROWS_AS(make_torus_rotation({0.5}), InvalidArgument);
  CHECK_THROWS_AS(make_torus_rotation({0.25, kGoldenFraction}), InvalidArgument);
  CHECK_THROWS_AS(make_torus_rotation({}), InvalidArgument);
  CHECK_THROWS_AS(make_bernoulli_shift(0.0), InvalidArgument);
  CHECK_THROWS_AS(make_bernoulli_shift(1.0), InvalidArgument);
  CHECK_THROWS_AS(make_sturmian(0.4), InvalidArgument);
  CHECK(looks_irrational(kGoldenFraction));
  CHECK_FALSE(looks_irrational(355.0 / 113.0));
}

TEST_CASE("orbit series examples") {
  const auto rot = make_torus_rotation({kGoldenFraction});
  TorusPoint x0{{0.0}, nullptr, 0.0};
  const auto f = obs::torus_character({1});
  const auto series = orbit_series(*rot, f, x0, Window(4, GroupKind::discrete));
  REQUIRE(series.values.size() == 4);
  for (int j = 0; j < 4; ++j) {
    const cplx want = std::polar(1.0, kTwoPi * j * kGoldenFraction);
    CHECK(std::abs(series.values[static_cast<std::size_t>(j)] - want) <= 1e-12);
  }

  const auto c = orbit_series(*rot, obs::constant({0.3, -0.2}), rot->sample_mu(4), Window(10, GroupKind::discrete));
  for (const auto& v : c.values) CHECK(v == cplx(0.3, -0.2));

  const auto bern = make_bernoulli_shift(0.5);
  const Point x = bern->sample_mu(77);
  const auto s = orbit_series(*bern, obs::symbol(0), x, Window(64, GroupKind::discrete));
  const auto* sp = x.as<SymbolPoint>();
  REQUIRE(sp != nullptr);
  for (int j = 0; j < 64; ++j) CHECK(s.values[static_cast<std::size_t>(j)].real() == sp->at(j));
  // replay of the seeded sampler
  const Point again = bern->sample_mu(77);
  for (int j = 0; j < 64; ++j) CHECK(again.as<SymbolPoint>()->at(j) == sp->at(j));

  CHECK_THROWS_AS(orbit_series(*rot, f, x0, Window(4, GroupKind::continuous, 1, 0.5)), InvalidArgument);
}

TEST_CASE("action laws and metric axioms on random triples") {
  for (const auto& [name, s] : zoo()) {
    CAPTURE(name);
    Rng rng(std::hash<std::string>{}(name));
    const GroupIndex zero = GroupIndex::zero(s->group_kind(), 1);
    for (int t = 0; t < 1000; ++t) {
      const Point x = s->sample_mu(rng.bits()), y = s->sample_mu(rng.bits()), z = s->sample_mu(rng.bits());
      const GroupIndex g = element(rng, *s, 1000), h = element(rng, *s, 1000);
      CHECK(s->dist(s->act(zero, x), x) == 0.0);
      CHECK(s->dist(s->act(g + h, x), s->act(g, s->act(h, x))) == 0.0);
      const double dxy = s->dist(x, y), dyx = s->dist(y, x);
      CHECK(dxy == dyx);
      CHECK(s->dist(x, x) == 0.0);
      CHECK(dxy >= 0.0);
      CHECK(dxy <= s->dist(x, z) + s->dist(z, y));
      CHECK(dxy <= s->diameter());
    }
  }
}

TEST_CASE("measure invariance by Kolmogorov-Smirnov") {
  for (const auto& [name, s] : zoo()) {
    CAPTURE(name);
    Rng rng(99);
    const GroupIndex g = element(rng, *s, 50);
    std::vector<double> a, b;
    for (int i = 0; i < 10000; ++i) {
      a.push_back(functional(s->sample_mu(derive_seed(1, static_cast<std::uint64_t>(i)))));
      b.push_back(functional(s->act(g, s->sample_mu(derive_seed(2, static_cast<std::uint64_t>(i))))));
    }
    CHECK(ks_distance(a, b) <= 0.05);
  }
}

TEST_CASE("characters have unit modulus") {
  const auto rot = make_torus_rotation({kGoldenFraction});
  const auto f = obs::torus_character({1});
  for (int i = 0; i < 1000; ++i) CHECK(std::abs(f(rot->sample_mu(static_cast<std::uint64_t>(i)))) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("observable bounds hold on samples") {
  const auto rot = make_torus_rotation({kGoldenFraction, kSilver});
  const auto sh = make_bernoulli_shift(0.3);
  const std::vector<Observable> tor = {obs::torus_character({2, -1}), obs::torus_cosine(1), obs::exp_cosine(0),
                                       obs::scaled(obs::exp_cosine(1), -0.5)};
  const std::vector<Observable> sym = {obs::symbol(3), obs::centered_symbol(0.3, -2), obs::parity(0, 5),
                                       obs::cylinder({1, 0, 1}, -1)};
  for (int i = 0; i < 500; ++i) {
    const Point p = rot->sample_mu(static_cast<std::uint64_t>(i)), q = sh->sample_mu(static_cast<std::uint64_t>(i));
    for (const auto& f : tor) CHECK(std::abs(f(p)) <= f.sup_bound * (1 + 1e-15));
    for (const auto& f : sym) CHECK(std::abs(f(q)) <= f.sup_bound * (1 + 1e-15));
  }
}

TEST_CASE("ball samplers") {
  const auto rot = make_torus_rotation({kGoldenFraction});
  const Point c = rot->sample_mu(5);
  const auto pts = rot->sample_ball(c, Radius::from_value(0.01), 100, 8);
  REQUIRE(pts.size() == 100);
  for (const auto& p : pts) CHECK(rot->dist(c, p) <= 0.01);

  const auto sh = make_bernoulli_shift(0.5);
  const Point x = sh->sample_mu(6);
  const auto balls = sh->sample_ball(x, Radius::from_value(0.125), 50, 9);
  for (const auto& p : balls) {
    CHECK(sh->dist(x, p) <= 0.125);
    for (int m = 0; m <= 3; ++m) CHECK(p.as<SymbolPoint>()->at(coord_of_index(m)) == x.as<SymbolPoint>()->at(coord_of_index(m)));
  }

  // radii at or above the diameter give plain μ-samples
  const auto wide = rot->sample_ball(c, Radius::from_value(1.0), 2000, 10);
  double mean = 0;
  for (const auto& p : wide) mean += torus_coords(p)[0];
  CHECK(mean / 2000 == doctest::Approx(0.5).epsilon(0.05));

  for (const auto& [name, s] : zoo()) {
    CAPTURE(name);
    const Point center = s->sample_mu(12);
    for (double depth : {2.0, 5.0, 9.0}) {
      const Radius r = Radius::from_depth(depth);
      for (const auto& p : s->sample_ball(center, r, 20, 13)) CHECK(s->dist(center, p) <= r.value());
    }
  }
}

TEST_CASE("shift metric is the interleaved first-difference metric") {
  auto a = std::make_shared<IidSource>(1, 0.5);
  SymbolPoint x{a, 0};
  for (int m = 0; m < 20; ++m) {
    std::vector<std::uint8_t> pinned(41);
    for (int k = -20; k <= 20; ++k) pinned[static_cast<std::size_t>(k + 20)] = static_cast<std::uint8_t>(x.at(k));
    const std::int64_t k = coord_of_index(m);
    pinned[static_cast<std::size_t>(k + 20)] ^= 1;
    SymbolPoint y{std::make_shared<IidSource>(1, 0.5, -20, pinned), 0};
    CHECK(shift_dist(x, y) == std::ldexp(1.0, -m));
  }
  for (std::int64_t k = -30; k <= 30; ++k) CHECK(coord_of_index(index_of_coord(k)) == k);
}

TEST_CASE("substitution words") {
  const auto fib = substitution_word(SubstitutionRule::fibonacci, 13);
  const std::vector<int> want_fib = {0, 1, 0, 0, 1, 0, 1, 0, 0, 1, 0, 0, 1};
  CHECK(fib == want_fib);
  const auto tm = substitution_word(SubstitutionRule::thue_morse, 16);
  for (std::size_t i = 0; i < tm.size(); ++i) CHECK(tm[i] == __builtin_popcountll(i) % 2);
  // the Fibonacci subshift codes the rotation by 1/φ²
  const auto sys = make_substitution_subshift(SubstitutionRule::fibonacci);
  const auto w = substitution_word(SubstitutionRule::fibonacci, 2000);
  double ones = 0;
  for (int v : w) ones += v;
  CHECK(ones / 2000 == doctest::Approx(kFibonacciSlope).epsilon(0.01));
  (void)sys;
}
