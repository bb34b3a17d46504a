#include "besi/pseudometrics.hpp"

#include <algorithm>
#include <cmath>

#include "besi/kernels.hpp"
#include "besi/parallel.hpp"

namespace besi {

std::string to_string(MetricKind kind) {
  switch (kind) {
    case MetricKind::df_L2: return "df_L2";
    case MetricKind::df_L1: return "df_L1";
    case MetricKind::rho_f: return "rho_f";
    case MetricKind::db: return "db";
    case MetricKind::rho_b: return "rho_b";
  }
  return "?";
}

MetricKind metric_kind_from_string(const std::string& s) {
  for (MetricKind k : {MetricKind::df_L2, MetricKind::df_L1, MetricKind::rho_f, MetricKind::db, MetricKind::rho_b})
    if (to_string(k) == s) return k;
  throw InvalidArgument("unknown metric kind '" + s + "' (valid: db, df_L1, df_L2, rho_b, rho_f)");
}

bool is_observable_metric(MetricKind kind) {
  return kind == MetricKind::df_L2 || kind == MetricKind::df_L1 || kind == MetricKind::rho_f;
}

double density_infimum(const double* d, std::size_t n, double upper) {
  if (n == 0) return 0.0;
  const auto& k = kernels::active();
  const double N = static_cast<double>(n);
  auto admissible = [&](double eps) { return static_cast<double>(k.count_greater(d, n, eps)) < eps * N; };
  // all-zero differences: every ε > 0 is admissible
  if (k.count_greater(d, n, 0.0) == 0) return 0.0;
  double lo = 0.0, hi = upper;
  while (!admissible(hi)) hi *= 2.0;
  for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    (admissible(mid) ? hi : lo) = mid;
  }
  return hi;
}

std::vector<double> abs_diff_series(const std::vector<cplx>& a, const std::vector<cplx>& b) {
  std::vector<double> out(a.size());
  kernels::abs_diff(a, b, out);
  return out;
}

MetricEstimate reduce_series(MetricKind kind, const std::vector<double>& diffs, const NestedGrid& grid,
                             double upper) {
  require(diffs.size() >= grid.total(), "reduce_series: series shorter than the largest window");
  const auto& k = kernels::active();
  // db is summed exactly on a 2^-53 grid and rounded up to 2^-52, which keeps
  // each window value subadditive in floating point
  const bool exact = kind == MetricKind::db && upper <= 1.0;
  unsigned __int128 units = 0;
  MetricEstimate est;
  est.kind = kind;
  const Schedule& sched = grid.schedule();
  double acc = 0.0;
  std::size_t done = 0;
  for (std::size_t w = 0; w < sched.size(); ++w) {
    const std::size_t end = grid.prefix(w);
    const double count = static_cast<double>(end);
    double v = 0.0;
    switch (kind) {
      case MetricKind::df_L2:
        acc += k.sum_squares(diffs.data() + done, end - done);
        v = std::sqrt(acc / count);
        break;
      case MetricKind::db:
        if (exact) {
          for (std::size_t i = done; i < end; ++i) units += static_cast<std::uint64_t>(std::ceil(std::ldexp(diffs[i], 53)));
          const unsigned __int128 den = 2 * static_cast<unsigned __int128>(end);
          v = std::ldexp(static_cast<double>(static_cast<std::uint64_t>((units + den - 1) / den)), -52);
          break;
        }
        [[fallthrough]];
      case MetricKind::df_L1:
        acc += k.sum(diffs.data() + done, end - done);
        v = acc / count;
        break;
      case MetricKind::rho_f:
      case MetricKind::rho_b:
        v = density_infimum(diffs.data(), end, upper);
        break;
    }
    done = end;
    est.per_window.emplace_back(sched.sizes[w], v);
  }
  const TailStats t = tail_stats(est.per_window, sched.burn_in);
  est.value = t.max;
  const std::size_t K = est.per_window.size();
  if (K - sched.burn_in >= 2) {
    const double a = est.per_window[K - 1].second, b = est.per_window[K - 2].second;
    est.converged = std::abs(a - b) <= 0.05 * std::max(std::abs(a), std::abs(b)) || std::max(a, b) < 1e-12;
  } else {
    est.converged = true;
  }
  return est;
}

MetricEstimate f_pseudometric(MetricKind kind, const System& s, const Observable& f, const Point& x,
                              const Point& y, const Schedule& sched, double mesh) {
  require(is_observable_metric(kind), "f_pseudometric: kind must be df_L2, df_L1 or rho_f");
  const NestedGrid grid(sched, s.grid_params(mesh));
  const auto a = s.orbit_values(f, x, grid);
  const auto b = s.orbit_values(f, y, grid);
  return reduce_series(kind, abs_diff_series(a, b), grid, rho_upper(f));
}

MetricEstimate orbit_pseudometric(MetricKind kind, const System& s, const Point& x, const Point& y,
                                  const Schedule& sched, double mesh) {
  require(kind == MetricKind::db || kind == MetricKind::rho_b, "orbit_pseudometric: kind must be db or rho_b");
  const NestedGrid grid(sched, s.grid_params(mesh));
  return reduce_series(kind, s.orbit_distances(x, y, grid), grid, rho_upper(s));
}

std::vector<double> default_equivalence_grid() {
  std::vector<double> g;
  for (int e = -7; e <= 0; ++e) g.push_back(std::ldexp(1.0, e));
  return g;
}

EquivalenceReport equivalence_check(const System& s, const Observable& f,
                                    const std::vector<std::pair<Point, Point>>& pairs, const Schedule& sched,
                                    const std::vector<double>& eps_grid, double mesh) {
  require(f.sup_bound <= 0.5 + 1e-15, "equivalence_check: observable must satisfy |f| <= 1/2");
  const NestedGrid grid(sched, s.grid_params(mesh));
  EquivalenceReport rep;
  rep.eps_grid = eps_grid;
  const std::size_t n = pairs.size();
  rep.df_l2.resize(n);
  rep.df_l1.resize(n);
  rep.rho_f.resize(n);
  parallel_for(n, [&](std::size_t i) {
    const auto a = s.orbit_values(f, pairs[i].first, grid);
    const auto b = s.orbit_values(f, pairs[i].second, grid);
    const auto d = abs_diff_series(a, b);
    rep.df_l2[i] = reduce_series(MetricKind::df_L2, d, grid, rho_upper(f)).value;
    rep.df_l1[i] = reduce_series(MetricKind::df_L1, d, grid, rho_upper(f)).value;
    rep.rho_f[i] = reduce_series(MetricKind::rho_f, d, grid, rho_upper(f)).value;
  });
  for (std::size_t i = 0; i < n; ++i) {
    for (double eps : eps_grid) {
      rep.checks += 2;
      if (rep.rho_f[i] < eps / 2 && !(rep.df_l1[i] < eps))
        rep.violations.push_back({i, eps, "rho<eps/2=>dL1<eps", rep.rho_f[i], rep.df_l1[i]});
      const double sq = rep.df_l2[i] * rep.df_l2[i];
      if (sq < eps * eps * eps && !(rep.rho_f[i] < eps))
        rep.violations.push_back({i, eps, "dL2^2<eps^3=>rho<eps", sq, rep.rho_f[i]});
    }
  }
  return rep;
}

}  // namespace besi
