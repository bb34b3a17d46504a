#include <doctest.h>

#include <cmath>
#include <set>
#include <sstream>
#include <string>

#include "besi/delone.hpp"
#include "besi/symbolic.hpp"

using namespace besi;

namespace {

constexpr double kPhi = 1.6180339887498948482;

const DeloneSet& fib1000() {
  static const DeloneSet s = build_delone(CutProjectSpec{}, Box::cube(1, 0, 1000), 1);
  return s;
}

std::vector<double> gaps(const DeloneSet& s) {
  std::vector<double> g;
  for (std::size_t i = 1; i < s.points.size(); ++i) g.push_back(s.points[i][0] - s.points[i - 1][0]);
  return g;
}

SystemHandle hull(const DeloneSet& s, double reach = 100) {
  HullParams hp;
  hp.reach = reach;
  return hull_system(std::make_shared<const DeloneSet>(s), hp);
}

TranslationPoint tp(double x, double y = 0, int d = 1) {
  TranslationPoint t;
  t.d = d;
  t.t = {x, y, 0};
  return t;
}

DeloneConfig light_config(int d) {
  DeloneConfig c = default_delone_config(d);
  c.hull.sched = Schedule({128, 256, 512}, 1);
  c.hull.sampler.n_centers = 8;
  c.hull.sampler.n_per_ball = 6;
  return c;
}

}  // namespace

TEST_CASE("lattice construction") {
  const DeloneSet z = build_delone(integer_lattice(1), Box::cube(1, 0, 1000), 1);
  CHECK(z.points.size() == 1000);
  CHECK(z.r == doctest::Approx(0.5));
  CHECK(z.R == doctest::Approx(0.5));
  const DeloneSet z2 = build_delone(integer_lattice(2), Box::cube(2, 0, 20), 1);
  CHECK(z2.points.size() == 400);
  LatticeSpec skew{{Vec{1, 0, 0}, Vec{0.5, 1, 0}}};
  const DeloneSet s = build_delone(skew, Box::cube(2, 0, 30), 1);
  for (const auto& p : s.points) {
    const double b = p[1], a = p[0] - 0.5 * b;
    CHECK(std::abs(a - std::round(a)) <= 1e-9);
    CHECK(std::abs(b - std::round(b)) <= 1e-9);
  }
  CHECK(s.points.size() == 900);
}

TEST_CASE("Fibonacci chain gaps") {
  const auto g = gaps(fib1000());
  std::set<long> classes;
  for (double v : g) classes.insert(std::lround(v * 1e6));
  REQUIRE(classes.size() == 2);
  const double a = *classes.begin() * 1e-6, b = *classes.rbegin() * 1e-6;
  CHECK(std::abs(b / a - kPhi) <= 1e-6);

  // the gap word is a factor of the substitution word (long -> 0, short -> 1)
  const auto word = substitution_word(SubstitutionRule::fibonacci, 20000);
  std::string w, gw;
  for (int c : word) w += static_cast<char>('0' + c);
  for (double v : g) gw += v > 1.3 ? '0' : '1';
  for (std::size_t i = 0; i + 12 <= gw.size(); i += 7) CHECK(w.find(gw.substr(i, 12)) != std::string::npos);
}

TEST_CASE("Delone checks") {
  const DeloneSet z = build_delone(integer_lattice(1), Box::cube(1, 0, 1000), 1);
  CHECK(delone_check(z, 0.4, 0.6).ok);
  CHECK(delone_check(fib1000(), 0.4, kPhi).ok);

  const DeloneSet p = build_delone(PoissonSpec{1.0}, Box::cube(1, 0, 1000), 5);
  const DeloneCheck c = delone_check(p, 0.4, 1.0);
  CHECK_FALSE(c.ok);
  REQUIRE(c.witness.has_value());
  // oracle: the witness ball really violates one of the radii
  const double w = (*c.witness)[0];
  std::size_t inside_r = 0, inside_R = 0;
  for (const auto& q : p.points) {
    inside_r += std::abs(q[0] - w) < 0.4;
    inside_R += std::abs(q[0] - w) <= 1.0;
  }
  CHECK((inside_r > 1 || inside_R == 0));
  CHECK(p.points.size() == 1000);
}

TEST_CASE("construction errors") {
  CHECK_THROWS_AS(build_delone(LatticeSpec{{Vec{10, 0, 0}}}, Box::cube(1, 0.2, 0.3), 1), InvalidArgument);
  CHECK_THROWS_AS(build_delone(PoissonSpec{-1}, Box::cube(1, 0, 10), 1), InvalidArgument);
  CHECK_THROWS_AS(build_delone(CutProjectSpec{}, Box::cube(2, 0, 10), 1), InvalidArgument);
  CHECK_THROWS_AS(build_delone(LatticeSpec{{Vec{1, 0, 0}, Vec{2, 0, 0}}}, Box::cube(2, 0, 10), 1), InvalidArgument);
  CHECK_THROWS_AS(Box::cube(1, 1, 1), InvalidArgument);
}

TEST_CASE("hull metric examples") {
  const DeloneSet z = build_delone(integer_lattice(1), Box::cube(1, 0, 2000), 1);
  const auto hz = hull(z);
  CHECK(hz->dist(tp(900.3), tp(901.3)) == 0.0);
  CHECK(hz->dist(tp(900.3), tp(900.3)) == 0.0);
  CHECK(hz->dist(tp(900.3), tp(900.55)) == doctest::Approx(0.25));

  const DeloneSet z2 = build_delone(integer_lattice(2), Box::cube(2, 0, 60), 1);
  const auto h2 = hull(z2, 10);
  CHECK(h2->dist(tp(30.2, 30.7, 2), tp(31.2, 30.7, 2)) == 0.0);
  CHECK(h2->dist(tp(30.2, 30.7, 2), tp(30.2, 31.7, 2)) == 0.0);

  const DeloneSet fib = build_delone(CutProjectSpec{}, Box::cube(1, 0, 5000), 1);
  const auto hf = hull(fib);
  Rng rng(3);
  for (int i = 0; i < 200; ++i) {
    const Point a = hf->sample_mu(rng.bits()), b = hf->sample_mu(rng.bits());
    CHECK(hf->dist(a, b) > 0.0);
    CHECK(hf->dist(a, a) == 0.0);
  }
  CHECK(find_periods(fib).rank == 0);
  CHECK(find_periods(z).rank == 1);
  CHECK(find_periods(z2).rank == 2);

  CHECK_THROWS_AS(hz->act(GroupIndex::scalar(GroupKind::continuous, 5000), tp(900)), InvalidArgument);
}

TEST_CASE("hull metric axioms on sampled triples") {
  const DeloneSet fib = build_delone(CutProjectSpec{}, Box::cube(1, 0, 5000), 1);
  const DeloneSet pert = build_delone(PerturbedSpec{integer_lattice(1), 0.1}, Box::cube(1, 0, 5000), 2);
  const DeloneSet z2 = build_delone(integer_lattice(2), Box::cube(2, 0, 60), 1);
  for (const auto* s : {&fib, &pert, &z2}) {
    const auto h = hull(*s, s->d == 1 ? 100 : 10);
    Rng rng(7);
    for (int i = 0; i < 300; ++i) {
      const Point a = h->sample_mu(rng.bits());
      // nearby translates exercise the small-distance regime
      const Point b = h->sample_ball(a, Radius::from_depth(3), 1, rng.bits())[0];
      const Point c = rng.below(2) ? h->sample_mu(rng.bits()) : h->sample_ball(a, Radius::from_depth(2), 1, rng.bits())[0];
      const double ab = h->dist(a, b), ba = h->dist(b, a);
      CHECK(ab == ba);
      CHECK(ab <= 0.125);
      CHECK(ab >= 0.0);
      CHECK(ab <= 1.0);
      CHECK(ab <= h->dist(a, c) + h->dist(c, b) + 1e-12);
    }
  }
}

TEST_CASE("lattice diffraction") {
  const DeloneSet z = build_delone(integer_lattice(1), Box::cube(1, 0, 10000), 1);
  const auto d = diffraction(z);
  CHECK(d.point_fraction >= 0.95);
  CHECK(d.accepted_count() >= 2);
  for (const auto& p : d.peaks)
    if (p.accepted) CHECK(std::abs(p.k[0] - std::round(p.k[0])) <= 1e-3);
  for (double k = 1; k <= 2; ++k) {
    bool found = false;
    for (const auto& p : d.peaks) found = found || (p.accepted && std::abs(p.k[0] - k) <= 1e-3);
    CHECK(found);
  }
  for (double v : d.intensities) CHECK(v >= 0.0);
}

TEST_CASE("Fibonacci diffraction") {
  const DeloneSet fib = build_delone(CutProjectSpec{}, Box::cube(1, 0, 12000), 1);
  const auto d = diffraction(fib);
  CHECK(d.point_fraction >= 0.9);
  CHECK(d.max_position_drift() <= 1e-3);
  // peaks lie in the module generated by 1/c and 1/(φ c), c the mean spacing
  const double c = 1.0 + 1.0 / (kPhi * kPhi);
  std::size_t n = 0;
  for (const auto& p : d.peaks) {
    if (!p.accepted) continue;
    ++n;
    bool in_module = false;
    for (int a = -40; a <= 40 && !in_module; ++a)
      for (int b = -40; b <= 40 && !in_module; ++b) in_module = std::abs(p.k[0] - (a + b / kPhi) / c) <= 1e-3;
    CHECK(in_module);
  }
  CHECK(n >= 3);
}

TEST_CASE("Poisson diffraction is diffuse") {
  const DeloneSet p = build_delone(PoissonSpec{1.0}, Box::cube(1, 0, 10000), 3);
  CHECK(diffraction(p).point_fraction <= 0.1);
}

TEST_CASE("diffraction is translation invariant up to the boundary term") {
  const DeloneSet fib = build_delone(CutProjectSpec{}, Box::cube(1, 0, 3000), 1);
  Rng rng(5);
  for (int t = 0; t < 20; ++t) {
    const double v = rng.uniform(-20, 20);
    std::vector<Vec> moved = fib.points;
    for (auto& p : moved) p[0] += v;
    const DeloneSet m = make_delone(moved, Box::cube(1, -25, 3025));
    Box w = Box::cube(1, 500, 2500);
    std::size_t shell = 0, total = 0;
    for (const auto& p : fib.points) {
      const bool a = w.contains(p);
      Vec q = p;
      q[0] += v;
      const bool b = w.contains(q);
      shell += a != b;
      total += a || b;
    }
    for (int j = 0; j < 10; ++j) {
      const Vec k{rng.uniform(0, 2), 0, 0};
      const double i1 = window_intensity(fib, w, k), i2 = window_intensity(m, w, k);
      CHECK(std::abs(i1 - i2) <= 2.0 * static_cast<double>(shell * total) / w.volume() + 1e-9);
    }
  }
}

TEST_CASE("point fraction is monotone in ratio strictness") {
  const DeloneSet fib = build_delone(CutProjectSpec{}, Box::cube(1, 0, 6000), 1);
  const DeloneSet pert = build_delone(PerturbedSpec{integer_lattice(1), 0.2}, Box::cube(1, 0, 6000), 1);
  for (const auto* s : {&fib, &pert}) {
    double last = 2.0;
    for (double band : {4.0, 2.0, 1.5, 1.2, 1.05, 1.0}) {
      DiffractionConfig c;
      c.ratio_band = band;
      const double pf = diffraction(*s, c).point_fraction;
      CHECK(pf <= last + 1e-15);
      last = pf;
    }
  }
}

TEST_CASE("diffraction errors") {
  DiffractionConfig c;
  c.window_levels = 1;
  CHECK_THROWS_AS(diffraction(fib1000(), c), InvalidArgument);
}

TEST_CASE("jitter of amplitude zero classifies like the lattice") {
  const Box region = Box::cube(1, 0, 3000);
  const DeloneSet z = build_delone(integer_lattice(1), region, 1);
  const DeloneSet p = build_delone(PerturbedSpec{integer_lattice(1), 0.0}, region, 9);
  const auto cfg = light_config(1);
  const DeloneReport a = classify_delone(z, cfg), b = classify_delone(p, cfg);
  CHECK(a.cls == DeloneClass::crystalline);
  CHECK(b.cls == a.cls);
  CHECK(b.periods.rank == a.periods.rank);
  CHECK(b.diffraction.point_fraction == doctest::Approx(a.diffraction.point_fraction).epsilon(1e-9));
}

TEST_CASE("coincident points are rejected by the classifier") {
  std::vector<Vec> pts;
  for (int i = 0; i < 200; ++i) pts.push_back({double(i), 0, 0});
  pts.push_back({50, 0, 0});
  const DeloneSet s = make_delone(pts, Box::cube(1, 0, 200));
  CHECK_THROWS_AS(classify_delone(s, light_config(1)), InvalidArgument);
}

TEST_CASE("point list round trip") {
  std::stringstream ss;
  write_points(ss, fib1000());
  const DeloneSet back = read_points(ss, fib1000().region);
  REQUIRE(back.points.size() == fib1000().points.size());
  for (std::size_t i = 0; i < back.points.size(); ++i) CHECK(back.points[i][0] == fib1000().points[i][0]);

  std::stringstream two("# comment\n0 0\n1 0.5\n\n2 1\n");
  const DeloneSet t = read_points(two);
  CHECK(t.d == 2);
  CHECK(t.points.size() == 3);
  std::stringstream bad("0 0\n1\n");
  CHECK_THROWS_AS(read_points(bad), InvalidArgument);
  std::stringstream junk("0 x\n");
  CHECK_THROWS_AS(read_points(junk), InvalidArgument);
}
