#include "besi/classify.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "besi/parallel.hpp"

namespace besi {

std::string to_string(Flavor f) {
  switch (f) {
    case Flavor::topological: return "topological";
    case Flavor::f_relative: return "f_relative";
    case Flavor::mu_relative: return "mu_relative";
    case Flavor::mu_f_relative: return "mu_f_relative";
  }
  return "?";
}

std::string to_string(Label l) {
  switch (l) {
    case Label::mean_equicontinuous: return "mean_equicontinuous";
    case Label::mean_sensitive: return "mean_sensitive";
    case Label::inconclusive: return "inconclusive";
  }
  return "?";
}

std::string to_string(ProbeStat s) {
  switch (s) {
    case ProbeStat::df_L2: return "df_L2";
    case ProbeStat::df_L1: return "df_L1";
    case ProbeStat::rho_f: return "rho_f";
    case ProbeStat::db: return "db";
    case ProbeStat::rho_b: return "rho_b";
    case ProbeStat::sup_dist: return "sup_dist";
  }
  return "?";
}

bool needs_observable(ProbeStat s) {
  return s == ProbeStat::df_L2 || s == ProbeStat::df_L1 || s == ProbeStat::rho_f;
}

ProbeStat flavor_stat(Flavor f) {
  switch (f) {
    case Flavor::topological:
    case Flavor::mu_relative: return ProbeStat::db;
    case Flavor::f_relative: return ProbeStat::df_L1;
    case Flavor::mu_f_relative: return ProbeStat::rho_f;
  }
  return ProbeStat::db;
}

std::vector<double> default_classify_eps_grid() {
  std::vector<double> g;
  for (int k = -32; k <= 0; ++k) g.push_back(std::exp2(k / 4.0));
  return g;
}

Schedule default_classify_schedule() { return Schedule({512, 1024, 2048, 4096, 8192}, 2); }

std::size_t BallProfile::stat_index(ProbeStat s) const {
  for (std::size_t i = 0; i < stats.size(); ++i)
    if (stats[i] == s) return i;
  throw InvalidArgument("ball profile does not contain statistic " + to_string(s));
}

namespace {

MetricKind metric_of(ProbeStat s) {
  switch (s) {
    case ProbeStat::df_L2: return MetricKind::df_L2;
    case ProbeStat::df_L1: return MetricKind::df_L1;
    case ProbeStat::rho_f: return MetricKind::rho_f;
    case ProbeStat::db: return MetricKind::db;
    case ProbeStat::rho_b: return MetricKind::rho_b;
    case ProbeStat::sup_dist: break;
  }
  return MetricKind::db;
}

// Evaluates every requested statistic on the pair (u, v). Orbit values are
// passed in when an observable is involved.
struct PairEvaluator {
  const System& s;
  const Observable* f;
  const std::vector<ProbeStat>& stats;
  const NestedGrid& grid;
  bool need_values = false;
  bool need_dist = false;

  PairEvaluator(const System& s_, const Observable* f_, const std::vector<ProbeStat>& st, const NestedGrid& g)
      : s(s_), f(f_), stats(st), grid(g) {
    for (ProbeStat p : stats) {
      if (needs_observable(p)) {
        require(f != nullptr, "statistic " + to_string(p) + " needs an observable");
        need_values = true;
      } else {
        need_dist = true;
      }
    }
  }

  std::vector<cplx> values(const Point& x) const {
    return need_values ? s.orbit_values(*f, x, grid) : std::vector<cplx>{};
  }

  void eval(const Point& x, const Point& y, const std::vector<cplx>& vx, const std::vector<cplx>& vy,
            std::vector<double>& out) const {
    std::vector<double> diffs, dists;
    if (need_values) diffs = abs_diff_series(vx, vy);
    if (need_dist) dists = s.orbit_distances(x, y, grid);
    out.resize(stats.size());
    for (std::size_t i = 0; i < stats.size(); ++i) {
      const ProbeStat p = stats[i];
      if (p == ProbeStat::sup_dist) {
        out[i] = dists.empty() ? 0.0 : *std::max_element(dists.begin(), dists.end());
      } else if (needs_observable(p)) {
        out[i] = reduce_series(metric_of(p), diffs, grid, rho_upper(*f)).value;
      } else {
        out[i] = reduce_series(metric_of(p), dists, grid, rho_upper(s)).value;
      }
    }
  }
};

}  // namespace

BallProfile ball_profile(const System& s, const Observable* f, const std::vector<ProbeStat>& stats,
                         const ClassifyConfig& cfg, std::uint64_t stream) {
  require(!stats.empty(), "ball_profile: no statistics requested");
  require(cfg.sampler.n_centers >= 1 && cfg.sampler.n_per_ball >= 1, "sampler sizes must be at least 1");
  const NestedGrid grid(cfg.sched, s.grid_params(cfg.mesh));
  BallProfile p;
  p.stats = stats;
  p.depths = cfg.sampler.depths.empty() ? s.ball_depths(cfg.sched) : cfg.sampler.depths;
  std::sort(p.depths.begin(), p.depths.end());
  require(!p.depths.empty(), "ball_profile: empty depth list");
  const std::size_t C = cfg.sampler.n_centers, D = p.depths.size(), m = cfg.sampler.n_per_ball;
  p.pairs_per_ball = m + (m - 1);
  const std::uint64_t root = derive_seed(cfg.seed, stream);
  p.centers.resize(C);
  for (std::size_t c = 0; c < C; ++c) p.centers[c] = s.sample_mu(derive_seed(root, 0, c));
  p.ball_max.assign(stats.size(), std::vector<std::vector<double>>(C, std::vector<double>(D, 0.0)));

  const PairEvaluator ev(s, f, stats, grid);
  std::vector<std::vector<cplx>> center_values(C);
  parallel_for(C, [&](std::size_t c) { center_values[c] = ev.values(p.centers[c]); });

  parallel_for(C * D, [&](std::size_t job) {
    const std::size_t c = job / D, d = job % D;
    const Point& x = p.centers[c];
    const auto ball = s.sample_ball(x, Radius::from_depth(p.depths[d]), m, derive_seed(root, 1 + c, d));
    std::vector<std::vector<cplx>> vals(m);
    for (std::size_t i = 0; i < m; ++i) vals[i] = ev.values(ball[i]);
    std::vector<double> best(stats.size(), 0.0), cur;
    for (std::size_t i = 0; i < m; ++i) {
      ev.eval(x, ball[i], center_values[c], vals[i], cur);
      for (std::size_t k = 0; k < cur.size(); ++k) best[k] = std::max(best[k], cur[k]);
      if (i + 1 < m) {
        ev.eval(ball[i], ball[i + 1], vals[i], vals[i + 1], cur);
        for (std::size_t k = 0; k < cur.size(); ++k) best[k] = std::max(best[k], cur[k]);
      }
    }
    for (std::size_t k = 0; k < stats.size(); ++k) p.ball_max[k][c][d] = best[k];
  });
  return p;
}

Verdict sensitivity_from_profile(const BallProfile& p, ProbeStat stat, const std::vector<double>& eps_grid) {
  const auto& bm = p.ball_max[p.stat_index(stat)];
  Verdict v;
  v.stat = stat;
  v.centers_used = bm.size();
  double lowest = std::numeric_limits<double>::infinity();
  for (const auto& row : bm)
    for (double x : row) lowest = std::min(lowest, x);
  for (double e : eps_grid)
    if (e < lowest) v.epsilon = std::max(v.epsilon, e);
  v.sensitive = v.epsilon > 0.0;
  if (v.sensitive) {
    // one witness per centre: its deepest ball
    for (std::size_t c = 0; c < bm.size(); ++c) v.evidence.push_back({c, p.depths.back(), bm[c].back()});
    v.label = Label::mean_sensitive;
  }
  return v;
}

std::optional<double> center_passes(const BallProfile& p, ProbeStat stat, std::size_t c, double eps) {
  const auto& row = p.ball_max[p.stat_index(stat)][c];
  std::optional<double> depth;
  double env = 0.0;
  for (std::size_t d = row.size(); d-- > 0;) {
    env = std::max(env, row[d]);
    if (env <= eps) depth = p.depths[d];
    else break;
  }
  return depth;
}

Verdict equicontinuity_from_profile(const BallProfile& p, ProbeStat stat, const std::vector<double>& eps_grid,
                                    double tau) {
  require(tau >= 0.0 && tau < 0.5, "tau must lie in [0, 1/2)");
  const auto& bm = p.ball_max[p.stat_index(stat)];
  const std::size_t C = bm.size(), D = p.depths.size();
  Verdict v;
  v.stat = stat;
  v.tau = tau;
  const auto drop = static_cast<std::size_t>(std::ceil(tau * static_cast<double>(C) - 1e-12));
  std::vector<std::size_t> order(C);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return bm[a][D - 1] < bm[b][D - 1]; });
  order.resize(C - std::min(drop, C - 1));
  std::sort(order.begin(), order.end());
  v.centers_used = order.size();
  v.centers_dropped = C - order.size();

  // envelope over surviving centres, made monotone in depth
  std::vector<double> env(D, 0.0);
  for (std::size_t c : order)
    for (std::size_t d = 0; d < D; ++d) env[d] = std::max(env[d], bm[c][d]);
  for (std::size_t d = D - 1; d-- > 0;) env[d] = std::max(env[d], env[d + 1]);

  v.equicontinuous = true;
  for (double e : eps_grid) {
    EpsDelta row{e, std::nullopt};
    for (std::size_t d = 0; d < D; ++d)
      if (env[d] <= e) {
        row.depth = p.depths[d];
        break;
      }
    if (!row.depth) v.equicontinuous = false;
    v.table.push_back(row);
  }
  if (v.equicontinuous) v.label = Label::mean_equicontinuous;
  return v;
}

namespace {

constexpr std::uint64_t kSensStream = 0x53454e53;   // sensitivity balls
constexpr std::uint64_t kEquiStream = 0x45515549;   // equicontinuity balls
constexpr std::uint64_t kExpStream = 0x45585041;    // independent pairs
constexpr std::uint64_t kSpecStream = 0x53504543;   // spectral base points

std::vector<ProbeStat> stats_for(Flavor flavor) { return {flavor_stat(flavor)}; }

Verdict combine(Verdict sens, Verdict equi, Flavor flavor) {
  Verdict v = equi;
  v.flavor = flavor;
  v.sensitive = sens.sensitive;
  v.epsilon = sens.epsilon;
  if (sens.sensitive) v.evidence = sens.evidence;
  if (sens.sensitive && !equi.equicontinuous) v.label = Label::mean_sensitive;
  else if (equi.equicontinuous && !sens.sensitive) v.label = Label::mean_equicontinuous;
  else v.label = Label::inconclusive;
  return v;
}

bool is_mu_flavor(Flavor f) { return f == Flavor::mu_relative || f == Flavor::mu_f_relative; }

void check_flavor(Flavor flavor, const Observable* f) {
  const bool wants_f = flavor == Flavor::f_relative || flavor == Flavor::mu_f_relative;
  require(wants_f == (f != nullptr), "flavor " + to_string(flavor) +
                                         (wants_f ? " needs an observable" : " takes no observable"));
}

}  // namespace

Verdict mean_sensitivity_test(const System& s, const Observable* f, Flavor flavor, const ClassifyConfig& cfg) {
  check_flavor(flavor, f);
  const BallProfile p = ball_profile(s, f, stats_for(flavor), cfg, kSensStream);
  Verdict v = sensitivity_from_profile(p, flavor_stat(flavor), cfg.eps_grid);
  v.flavor = flavor;
  if (f) v.observable = f->tag;
  return v;
}

Verdict mean_equicontinuity_test(const System& s, const Observable* f, Flavor flavor, const ClassifyConfig& cfg) {
  check_flavor(flavor, f);
  const BallProfile p = ball_profile(s, f, stats_for(flavor), cfg, kEquiStream);
  Verdict v = equicontinuity_from_profile(p, flavor_stat(flavor), cfg.eps_grid, 0.0);
  v.flavor = flavor;
  if (f) v.observable = f->tag;
  return v;
}

Verdict mu_mean_equicontinuity_test(const System& s, const Observable* f, double tau, const ClassifyConfig& cfg) {
  const Flavor flavor = f ? Flavor::mu_f_relative : Flavor::mu_relative;
  const BallProfile p = ball_profile(s, f, stats_for(flavor), cfg, kEquiStream);
  Verdict v = equicontinuity_from_profile(p, flavor_stat(flavor), cfg.eps_grid, tau);
  v.flavor = flavor;
  if (f) v.observable = f->tag;
  return v;
}

Verdict classify_flavor(const System& s, const Observable* f, Flavor flavor, const ClassifyConfig& cfg) {
  check_flavor(flavor, f);
  const ProbeStat st = flavor_stat(flavor);
  const BallProfile ps = ball_profile(s, f, {st}, cfg, kSensStream);
  const BallProfile pe = ball_profile(s, f, {st}, cfg, kEquiStream);
  Verdict v = combine(sensitivity_from_profile(ps, st, cfg.eps_grid),
                      equicontinuity_from_profile(pe, st, cfg.eps_grid, is_mu_flavor(flavor) ? cfg.tau : 0.0), flavor);
  if (f) v.observable = f->tag;
  return v;
}

std::vector<double> independent_pair_estimates(const System& s, const Observable* f, ProbeStat stat,
                                               std::size_t n_pairs, const Schedule& sched, std::uint64_t seed,
                                               double mesh) {
  require(!needs_observable(stat) || f != nullptr, "statistic " + to_string(stat) + " needs an observable");
  const NestedGrid grid(sched, s.grid_params(mesh));
  const std::vector<ProbeStat> stats{stat};
  const PairEvaluator ev(s, f, stats, grid);
  std::vector<double> est(n_pairs);
  parallel_for(n_pairs, [&](std::size_t i) {
    const Point x = s.sample_mu(derive_seed(seed, 2 * i));
    const Point y = s.sample_mu(derive_seed(seed, 2 * i + 1));
    std::vector<double> out;
    ev.eval(x, y, ev.values(x), ev.values(y), out);
    est[i] = out[0];
  });
  return est;
}

ExpansivityReport expansivity_from_estimates(const std::vector<double>& estimates, double eps) {
  ExpansivityReport r;
  r.epsilon = eps;
  r.n_pairs = estimates.size();
  r.estimates = estimates;
  std::size_t hits = 0;
  for (double e : estimates) hits += e > eps ? 1 : 0;
  r.fraction = estimates.empty() ? 0.0 : static_cast<double>(hits) / static_cast<double>(estimates.size());
  return r;
}

ExpansivityReport expansivity_fraction(const System& s, const Observable* f, ProbeStat stat, double eps,
                                       std::size_t n_pairs, const Schedule& sched, std::uint64_t seed,
                                       double mesh) {
  require(eps > 0.0, "expansivity_fraction: epsilon must be positive");
  return expansivity_from_estimates(independent_pair_estimates(s, f, stat, n_pairs, sched, seed, mesh), eps);
}

std::size_t DichotomyReport::violations() const {
  std::size_t n = 0;
  for (const auto& i : implications) n += i.holds ? 0 : 1;
  return n;
}

namespace {

bool decisive(const Verdict& v) { return v.label != Label::inconclusive; }

// Reference ε for the expansivity side of the dichotomy when no sensitivity
// constant was found: a fixed fraction of the statistic's natural scale.
double reference_eps(double scale) { return 0.3 * scale; }

}  // namespace

DichotomyReport dichotomy_report(const System& s, const std::vector<Observable>& f_list, const DichotomyConfig& cfg) {
  require(!f_list.empty(), "dichotomy_report: observable list is empty");
  const ClassifyConfig& cc = cfg.classify;
  DichotomyReport rep;
  rep.system = s.tag();
  rep.known_class = to_string(s.known_class());
  rep.minimal = s.minimal();
  rep.ergodic = s.ergodic();

  // orbit flavours share their profiles
  const std::vector<ProbeStat> orbit_stats{ProbeStat::db, ProbeStat::sup_dist};
  const BallProfile os = ball_profile(s, nullptr, orbit_stats, cc, kSensStream);
  const BallProfile oe = ball_profile(s, nullptr, orbit_stats, cc, kEquiStream);
  rep.topological = combine(sensitivity_from_profile(os, ProbeStat::db, cc.eps_grid),
                            equicontinuity_from_profile(oe, ProbeStat::db, cc.eps_grid, 0.0), Flavor::topological);
  rep.mu_relative = combine(sensitivity_from_profile(os, ProbeStat::db, cc.eps_grid),
                            equicontinuity_from_profile(oe, ProbeStat::db, cc.eps_grid, cc.tau), Flavor::mu_relative);
  rep.plain = combine(sensitivity_from_profile(os, ProbeStat::sup_dist, cc.eps_grid),
                      equicontinuity_from_profile(oe, ProbeStat::sup_dist, cc.eps_grid, 0.0), Flavor::topological);
  rep.plain.stat = ProbeStat::sup_dist;

  const auto orbit_est = independent_pair_estimates(s, nullptr, ProbeStat::db, cfg.expansivity_pairs, cc.sched,
                                                    derive_seed(cc.seed, kExpStream), cc.mesh);
  rep.orbit_expansivity = expansivity_from_estimates(
      orbit_est, rep.mu_relative.sensitive ? rep.mu_relative.epsilon : reference_eps(s.diameter()));

  const Point base = s.sample_mu(derive_seed(cc.seed, kSpecStream));
  double score_sum = 0.0;
  for (std::size_t i = 0; i < f_list.size(); ++i) {
    const Observable& f = f_list[i];
    ObservableReport o;
    o.tag = f.tag;
    const std::vector<ProbeStat> fs{ProbeStat::df_L1, ProbeStat::rho_f};
    const BallProfile ps = ball_profile(s, &f, fs, cc, kSensStream + 1 + i);
    const BallProfile pe = ball_profile(s, &f, fs, cc, kEquiStream + 1 + i);
    o.f_relative = combine(sensitivity_from_profile(ps, ProbeStat::df_L1, cc.eps_grid),
                           equicontinuity_from_profile(pe, ProbeStat::df_L1, cc.eps_grid, 0.0), Flavor::f_relative);
    o.mu_f_relative = combine(sensitivity_from_profile(ps, ProbeStat::rho_f, cc.eps_grid),
                              equicontinuity_from_profile(pe, ProbeStat::rho_f, cc.eps_grid, cc.tau),
                              Flavor::mu_f_relative);
    o.f_relative.observable = o.mu_f_relative.observable = f.tag;

    const NestedGrid sg(cfg.spectral_sched, s.grid_params(cc.mesh));
    const auto series = s.orbit_values(f, base, sg);
    const SpectrumScan scan = spectrum_scan_series(series, sg.step(), default_frequency_grid(s.group_kind()));
    o.spectral_score = scan.f_energy > 0.0 ? discrete_spectrum_score(scan) : 1.0;
    o.n_peaks = scan.peaks.size();
    score_sum += o.spectral_score;

    ApOptions ap;
    ap.k_cap = cfg.ap_cap;
    o.ap = almost_periodicity_probe(s, f, base, cfg.spectral_sched, ap, cc.mesh);

    const auto est = independent_pair_estimates(s, &f, ProbeStat::rho_f, cfg.expansivity_pairs, cc.sched,
                                                derive_seed(cc.seed, kExpStream, 1 + i), cc.mesh);
    o.expansivity = expansivity_from_estimates(
        est, o.mu_f_relative.sensitive ? o.mu_f_relative.epsilon : reference_eps(f.sup_bound));
    rep.observables.push_back(std::move(o));
  }
  rep.mean_score = score_sum / static_cast<double>(f_list.size());

  auto add = [&](std::string name, bool holds, std::string detail) {
    rep.implications.push_back({std::move(name), holds, std::move(detail)});
  };
  auto dp = [](const Verdict& v) { return !(v.sensitive && v.equicontinuous); };

  add("no_double_positive[topological]", dp(rep.topological), to_string(rep.topological.label));
  add("no_double_positive[mu_relative]", dp(rep.mu_relative), to_string(rep.mu_relative.label));
  for (const auto& o : rep.observables) {
    add("no_double_positive[f_relative:" + o.tag + "]", dp(o.f_relative), to_string(o.f_relative.label));
    add("no_double_positive[mu_f_relative:" + o.tag + "]", dp(o.mu_f_relative), to_string(o.mu_f_relative.label));
  }
  // mean equicontinuity implies f-mean equicontinuity for every f
  for (const auto& o : rep.observables) {
    const bool premise = rep.topological.label == Label::mean_equicontinuous;
    add("mean_equicontinuous=>f_mean_equicontinuous[" + o.tag + "]",
        !premise || o.f_relative.label == Label::mean_equicontinuous,
        "topological=" + to_string(rep.topological.label) + " f_relative=" + to_string(o.f_relative.label));
  }
  // μ-mean equicontinuity agrees with discrete spectrum at estimator resolution
  {
    const bool eq = rep.mu_relative.label == Label::mean_equicontinuous;
    const bool ds = rep.mean_score >= cfg.score_threshold;
    add("mu_mean_equicontinuous<=>discrete_spectrum", eq == ds,
        "mu_relative=" + to_string(rep.mu_relative.label) + " mean_score=" + std::to_string(rep.mean_score));
  }
  for (const auto& o : rep.observables) {
    // almost periodic observables are exactly the non μ-f-sensitive ones
    const bool sens = o.mu_f_relative.label == Label::mean_sensitive;
    add("almost_periodic<=>not_mu_f_sensitive[" + o.tag + "]", o.ap.consistent == !sens,
        std::string("ap=") + (o.ap.consistent ? "consistent" : "not_consistent") +
            " mu_f=" + to_string(o.mu_f_relative.label));
    const bool exp = o.expansivity.fraction >= cfg.expansive_threshold;
    add("mu_f_sensitive<=>mu_f_expansive[" + o.tag + "]", sens == exp,
        "eps=" + std::to_string(o.expansivity.epsilon) + " fraction=" + std::to_string(o.expansivity.fraction));
    if (rep.ergodic)
      add("ergodic=>mu_f_dichotomy[" + o.tag + "]", decisive(o.mu_f_relative), to_string(o.mu_f_relative.label));
    if (rep.minimal)
      add("minimal=>f_dichotomy[" + o.tag + "]", decisive(o.f_relative), to_string(o.f_relative.label));
  }
  {
    const bool sens = rep.mu_relative.label == Label::mean_sensitive;
    const bool exp = rep.orbit_expansivity.fraction >= cfg.expansive_threshold;
    add("mu_sensitive<=>mu_expansive", sens == exp,
        "eps=" + std::to_string(rep.orbit_expansivity.epsilon) +
            " fraction=" + std::to_string(rep.orbit_expansivity.fraction));
  }
  if (rep.ergodic) add("ergodic=>mu_dichotomy", decisive(rep.mu_relative), to_string(rep.mu_relative.label));
  if (rep.minimal) add("minimal=>topological_dichotomy", decisive(rep.topological), to_string(rep.topological.label));
  return rep;
}

double translated_ball_max(const System& s, const Point& x, const GroupIndex& g, double depth, ProbeStat stat,
                           const Observable* f, const ClassifyConfig& cfg, std::uint64_t seed) {
  const NestedGrid grid(cfg.sched, s.grid_params(cfg.mesh));
  const std::vector<ProbeStat> stats{stat};
  const PairEvaluator ev(s, f, stats, grid);
  const Point gx = s.act(g, x);
  const Radius r = s.pullback_radius(g, Radius::from_depth(depth));
  const auto ball = s.sample_ball(gx, r, cfg.sampler.n_per_ball, seed);
  const auto vx = ev.values(gx);
  double best = 0.0;
  std::vector<double> out;
  for (const auto& y : ball) {
    ev.eval(gx, y, vx, ev.values(y), out);
    best = std::max(best, out[0]);
  }
  return best;
}

}  // namespace besi
