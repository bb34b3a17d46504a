#include <doctest.h>

#include <cmath>

#include "besi/classify.hpp"
#include "besi/symbolic.hpp"

using namespace besi;

namespace {

ClassifyConfig light(std::uint64_t seed = 3) {
  ClassifyConfig c;
  c.sched = Schedule({512, 1024, 2048}, 1);
  c.sampler.n_centers = 12;
  c.sampler.n_per_ball = 8;
  c.seed = seed;
  return c;
}

void check_invariants(const Verdict& v) {
  CHECK_FALSE((v.label == Label::mean_sensitive && v.label == Label::mean_equicontinuous));
  if (v.label == Label::mean_sensitive) {
    CHECK(v.epsilon > 0.0);
    bool witness = false;
    for (const auto& w : v.evidence) witness = witness || w.estimate > v.epsilon;
    CHECK(witness);
  }
  if (v.label == Label::mean_equicontinuous) {
    CHECK_FALSE(v.table.empty());
    for (const auto& row : v.table) CHECK(row.depth.has_value());
  }
}

const SystemHandle& rotation() {
  static const SystemHandle s = make_torus_rotation({kGoldenFraction});
  return s;
}
const SystemHandle& bernoulli() {
  static const SystemHandle s = make_bernoulli_shift(0.5);
  return s;
}

}  // namespace

TEST_CASE("sensitivity examples") {
  const auto f = obs::symbol(0);
  const Verdict b = mean_sensitivity_test(*bernoulli(), &f, Flavor::mu_f_relative, light());
  CHECK(b.label == Label::mean_sensitive);
  CHECK(b.epsilon >= 0.3);
  check_invariants(b);

  const auto chi = obs::torus_character({1});
  const Verdict r = mean_sensitivity_test(*rotation(), &chi, Flavor::f_relative, light());
  CHECK_FALSE(r.sensitive);
  check_invariants(r);

  const auto c = obs::constant(1.5);
  for (const auto& s : {rotation(), bernoulli()}) {
    const Verdict v = mean_sensitivity_test(*s, &c, Flavor::f_relative, light());
    CHECK_FALSE(v.sensitive);
    for (const auto& w : v.evidence) CHECK(w.estimate == 0.0);
  }
}

TEST_CASE("equicontinuity examples") {
  const Verdict r = mean_equicontinuity_test(*rotation(), nullptr, Flavor::topological, light());
  CHECK(r.label == Label::mean_equicontinuous);
  check_invariants(r);
  // db is the circle distance, so δ(ε) is of order ε (ball pairs span 2δ)
  for (const auto& row : r.table) CHECK(std::exp2(-*row.depth) <= row.epsilon);

  const Verdict b = mean_equicontinuity_test(*bernoulli(), nullptr, Flavor::topological, light());
  CHECK_FALSE(b.equicontinuous);
  for (const auto& row : b.table)
    if (row.epsilon <= 0.3) CHECK_FALSE(row.depth.has_value());

  const auto c = obs::constant(2.0);
  const Verdict k = mean_equicontinuity_test(*bernoulli(), &c, Flavor::f_relative, light());
  CHECK(k.label == Label::mean_equicontinuous);
}

TEST_CASE("mu-mean equicontinuity") {
  const Verdict r = mu_mean_equicontinuity_test(*rotation(), nullptr, 0.05, light());
  CHECK(r.equicontinuous);
  CHECK(r.centers_dropped == 1);
  const Verdict b = mu_mean_equicontinuity_test(*bernoulli(), nullptr, 0.05, light());
  CHECK_FALSE(b.equicontinuous);

  const auto f = obs::parity(0, 1);
  for (const auto& s : {rotation(), bernoulli()}) {
    const Observable* fp = s == bernoulli() ? &f : nullptr;
    const Flavor fl = fp ? Flavor::mu_f_relative : Flavor::mu_relative;
    const Verdict a = mu_mean_equicontinuity_test(*s, fp, 0.0, light());
    const Verdict e = mean_equicontinuity_test(*s, fp, fl, light());
    CHECK(a.label == e.label);
    REQUIRE(a.table.size() == e.table.size());
    for (std::size_t i = 0; i < a.table.size(); ++i) CHECK(a.table[i].depth == e.table[i].depth);
  }
}

TEST_CASE("centre passes are monotone in epsilon") {
  for (const auto& s : {rotation(), bernoulli(), make_sturmian(std::sqrt(2.0) - 1)}) {
    const auto cfg = light();
    const BallProfile p = ball_profile(*s, nullptr, {ProbeStat::db}, cfg, 7);
    for (std::size_t c = 0; c < p.centers.size(); ++c) {
      bool passed = false;
      for (double e : cfg.eps_grid) {
        const bool now = center_passes(p, ProbeStat::db, c, e).has_value();
        if (passed) CHECK(now);
        passed = passed || now;
      }
    }
  }
}

TEST_CASE("inverse invariance on the rotation") {
  const auto cfg = light();
  const BallProfile p = ball_profile(*rotation(), nullptr, {ProbeStat::db}, cfg, 9);
  Rng rng(4);
  for (std::size_t c = 0; c < p.centers.size(); ++c) {
    const double eps = 0.125;
    const auto depth = center_passes(p, ProbeStat::db, c, eps);
    REQUIRE(depth.has_value());
    const GroupIndex g = GroupIndex::scalar(GroupKind::discrete, std::round(rng.uniform(-1000, 1000)));
    CHECK(translated_ball_max(*rotation(), p.centers[c], g, *depth, ProbeStat::db, nullptr, cfg, rng.bits()) <= eps);
  }
}

TEST_CASE("expansivity fractions") {
  const Schedule sched({1000, 2000, 4000}, 1);
  const auto b = expansivity_fraction(*bernoulli(), nullptr, ProbeStat::db, 0.3, 500, sched, 1);
  CHECK(b.fraction >= 0.95);
  CHECK(b.n_pairs == 500);
  const auto r = expansivity_fraction(*rotation(), nullptr, ProbeStat::db, 0.3, 500, sched, 2);
  CHECK(std::abs(r.fraction - (1.0 - 2.0 * 0.3)) <= 0.05);
  CHECK(expansivity_from_estimates(r.estimates, rotation()->diameter()).fraction == 0.0);
  double last = 1.0;
  for (double e = 0.0; e <= 0.6; e += 0.05) {
    const double fr = expansivity_from_estimates(r.estimates, e).fraction;
    CHECK(fr <= last);
    CHECK(fr >= 0.0);
    last = fr;
  }
}

TEST_CASE("flavour classification is never a double positive") {
  const auto sturm = make_sturmian(std::sqrt(2.0) - 1);
  const auto f = obs::symbol(0);
  for (const auto& s : {rotation(), bernoulli(), sturm}) {
    const bool shift = s != rotation();
    const auto chi = obs::torus_character({1});
    const Observable* fp = shift ? &f : &chi;
    for (Flavor fl : {Flavor::topological, Flavor::f_relative, Flavor::mu_relative, Flavor::mu_f_relative}) {
      const bool wants = fl == Flavor::f_relative || fl == Flavor::mu_f_relative;
      const Verdict v = classify_flavor(*s, wants ? fp : nullptr, fl, light());
      check_invariants(v);
      CHECK_FALSE((v.sensitive && v.equicontinuous && v.label != Label::inconclusive));
    }
  }
}

TEST_CASE("dichotomy report on the rotation") {
  DichotomyConfig dc;
  dc.classify = light();
  dc.spectral_sched = Schedule({10000, 20000, 40000}, 1);
  const DichotomyReport rep =
      dichotomy_report(*rotation(), {obs::torus_character({1}), obs::torus_cosine(0), obs::exp_cosine(0)}, dc);
  CHECK(rep.violations() == 0);
  CHECK(rep.topological.equicontinuous);
  CHECK(rep.mu_relative.equicontinuous);
  CHECK(rep.mean_score >= 0.9);
  CHECK_THROWS_AS(dichotomy_report(*rotation(), {}, dc), InvalidArgument);
}

TEST_CASE("sampler validation") {
  auto cfg = light();
  cfg.sampler.n_centers = 0;
  CHECK_THROWS_AS(mean_sensitivity_test(*rotation(), nullptr, Flavor::topological, cfg), InvalidArgument);
  CHECK_THROWS_AS(mu_mean_equicontinuity_test(*rotation(), nullptr, 0.6, light()), InvalidArgument);
}
