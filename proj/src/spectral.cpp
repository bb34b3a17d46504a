#include "besi/spectral.hpp"

#include <algorithm>
#include <cmath>

#include "besi/kernels.hpp"
#include "besi/parallel.hpp"

namespace besi {

namespace {

bool trace_diverges(const std::vector<std::pair<double, cplx>>& trace, std::size_t burn_in, double scale) {
  double osc = 0.0, mag = scale;
  for (std::size_t a = burn_in; a < trace.size(); ++a) {
    mag = std::max(mag, std::abs(trace[a].second));
    for (std::size_t b = a + 1; b < trace.size(); ++b)
      osc = std::max(osc, std::abs(trace[a].second - trace[b].second));
  }
  return osc > 0.2 * mag;
}

double rms(const std::vector<cplx>& v, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += std::norm(v[i]);
  return n ? std::sqrt(s / static_cast<double>(n)) : 0.0;
}

}  // namespace

AverageResult fourier_mode_series(const std::vector<cplx>& values, const NestedGrid& grid,
                                  const std::vector<double>& w) {
  const int d = grid.params().d;
  require(static_cast<int>(w.size()) == d, "fourier_mode: frequency dimension does not match the group");
  require(values.size() >= grid.total(), "fourier_mode: series shorter than the largest window");
  const auto& k = kernels::active();
  const Schedule& sched = grid.schedule();
  AverageResult res;
  cplx acc{0.0, 0.0};
  std::size_t done = 0;
  const bool zero = std::all_of(w.begin(), w.end(), [](double x) { return x == 0.0; });
  for (std::size_t win = 0; win < sched.size(); ++win) {
    const std::size_t end = grid.prefix(win), len = end - done;
    if (zero) {
      for (std::size_t i = done; i < end; ++i) acc += values[i];
    } else if (d == 1) {
      acc += k.phase_sum(values.data() + done, len, w[0] * grid.step(), static_cast<double>(done));
    } else {
      std::vector<double> coords(static_cast<std::size_t>(d) * len);
      GroupIndex g = GroupIndex::zero(grid.params().kind, d);
      for (std::size_t i = 0; i < len; ++i) {
        grid.fill_point(done + i, g);
        for (int a = 0; a < d; ++a) coords[static_cast<std::size_t>(a) * len + i] = g[a];
      }
      acc += k.exp_sum(values.data() + done, coords.data(), len, static_cast<std::size_t>(d), w.data());
    }
    done = end;
    res.per_window.emplace_back(sched.sizes[win], acc / static_cast<double>(end));
  }
  res.value = res.per_window.back().second;
  res.diverged = trace_diverges(res.per_window, sched.burn_in, rms(values, grid.total()));
  return res;
}

AverageResult birkhoff_average(const System& s, const Observable& f, const Point& x, const Schedule& sched,
                               double mesh) {
  const NestedGrid grid(sched, s.grid_params(mesh));
  return fourier_mode_series(s.orbit_values(f, x, grid), grid,
                             std::vector<double>(static_cast<std::size_t>(s.group_dim()), 0.0));
}

AverageResult fourier_mode(const System& s, const Observable& f, const Point& x, const std::vector<double>& w,
                           const Schedule& sched, double mesh) {
  const NestedGrid grid(sched, s.grid_params(mesh));
  return fourier_mode_series(s.orbit_values(f, x, grid), grid, w);
}

std::size_t FrequencyGrid::size() const {
  if (!(step > 0.0) || !(hi > lo)) return 0;
  return static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9));
}

FrequencyGrid default_frequency_grid(GroupKind kind) {
  if (kind == GroupKind::discrete) return {0.0, 1.0, 1e-3, true};
  return {0.0, 2.0, 1e-3, false};
}

namespace {

// Normalized amplitude of the first L samples at frequency w.
cplx amplitude(const std::vector<cplx>& v, std::size_t L, double w, double step) {
  return kernels::active().phase_sum(v.data(), L, w * step, 0.0) / static_cast<double>(L);
}

// Golden-section maximization of |amplitude| on [a, b]; returns the best point seen.
double golden_max(const std::vector<cplx>& v, std::size_t L, double step, double a, double b, double tol) {
  const double r = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - r * (b - a), d = a + r * (b - a);
  double fc = std::abs(amplitude(v, L, c, step)), fd = std::abs(amplitude(v, L, d, step));
  while (b - a > tol) {
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - r * (b - a);
      fc = std::abs(amplitude(v, L, c, step));
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + r * (b - a);
      fd = std::abs(amplitude(v, L, d, step));
    }
  }
  return fc >= fd ? c : d;
}

double wrap_unit(double w) { return w - std::floor(w); }

// Amplitude that a pure tone at frequency u leaks into frequency w over n samples.
cplx leakage(double u, double w, std::size_t n, double step) {
  const double theta = kTwoPi * (u - w) * step;
  const cplx z = std::polar(1.0, theta);
  if (std::abs(z - 1.0) < 1e-12) return 1.0;
  return (std::pow(z, static_cast<double>(n)) - 1.0) / (static_cast<double>(n) * (z - 1.0));
}

}  // namespace

SpectrumScan spectrum_scan_series(const std::vector<cplx>& values, double step, const FrequencyGrid& grid,
                                  const ScanOptions& opts) {
  const std::size_t G = grid.size();
  require(G > 0, "spectrum_scan: empty frequency grid");
  require(!values.empty(), "spectrum_scan: empty orbit series");
  SpectrumScan scan;
  scan.grid = grid;
  const std::size_t N = values.size();
  double energy = 0.0;
  for (const cplx& v : values) energy += std::norm(v);
  scan.f_energy = energy / static_cast<double>(N);
  scan.peak_floor = opts.floor_rel * std::sqrt(scan.f_energy);

  // coarse window whose main lobe spans about two grid steps
  const double coarse_time = 1.0 / (2.0 * grid.step);
  std::size_t Lc = static_cast<std::size_t>(std::ceil(coarse_time / step));
  Lc = std::clamp<std::size_t>(Lc, 1, N);
  scan.coarse_points = Lc;
  scan.coarse.resize(G);
  parallel_for(G, [&](std::size_t i) { scan.coarse[i] = amplitude(values, Lc, grid.at(i), step); });
  if (scan.f_energy == 0.0) return scan;

  std::vector<double> cand;
  for (std::size_t i = 0; i < G; ++i) {
    const double m = std::abs(scan.coarse[i]);
    if (m < 0.5 * scan.peak_floor) continue;
    const bool has_l = i > 0 || grid.periodic, has_r = i + 1 < G || grid.periodic;
    const double ml = has_l ? std::abs(scan.coarse[(i + G - 1) % G]) : -1.0;
    const double mr = has_r ? std::abs(scan.coarse[(i + 1) % G]) : -1.0;
    if (m >= ml && m > mr) cand.push_back(grid.at(i));
  }

  // window ladder: Lc, 2Lc, ... , N
  std::vector<std::size_t> ladder;
  for (std::size_t L = Lc; L < N; L *= 2) ladder.push_back(L);
  ladder.push_back(N);
  const double tol_final = std::min(opts.tolerance, 0.01 / (static_cast<double>(N) * step));

  std::vector<std::optional<SpectralPeak>> found(cand.size());
  parallel_for(cand.size(), [&](std::size_t c) {
    double w = cand[c];
    for (std::size_t li = 0; li < ladder.size(); ++li) {
      const std::size_t L = ladder[li];
      const double T = static_cast<double>(L) * step;
      const double half = 1.0 / T;
      const bool last = li + 1 == ladder.size();
      double a = w - half, b = w + half;
      if (!grid.periodic) {
        a = std::max(a, grid.lo);
        b = std::min(b, grid.hi);
      }
      w = golden_max(values, L, step, a, b, last ? tol_final : 0.01 / T);
      if (std::abs(amplitude(values, L, w, step)) < 0.5 * scan.peak_floor) return;
    }
    if (grid.periodic) w = grid.lo + wrap_unit((w - grid.lo) / (grid.hi - grid.lo)) * (grid.hi - grid.lo);
    const cplx a = amplitude(values, N, w, step);
    if (std::abs(a) >= scan.peak_floor) found[c] = SpectralPeak{w, a, std::abs(a)};
  });

  std::vector<SpectralPeak> peaks;
  for (auto& p : found)
    if (p) peaks.push_back(*p);
  std::sort(peaks.begin(), peaks.end(), [](const auto& x, const auto& y) { return x.magnitude > y.magnitude; });
  const double sep = 1.0 / (static_cast<double>(N) * step);
  const double period = grid.hi - grid.lo;
  for (const auto& p : peaks) {
    bool dup = false;
    cplx residual = p.amplitude;
    for (const auto& q : scan.peaks) {
      double dw = std::abs(p.w - q.w);
      if (grid.periodic) dw = std::min(dw, period - dw);
      dup |= dw <= sep;
      residual -= q.amplitude * leakage(q.w, p.w, N, step);
    }
    // sidelobes of stronger peaks leave almost nothing behind
    if (!dup && std::abs(residual) >= scan.peak_floor) scan.peaks.push_back(p);
  }
  std::sort(scan.peaks.begin(), scan.peaks.end(), [](const auto& x, const auto& y) { return x.w < y.w; });
  return scan;
}

SpectrumScan spectrum_scan(const System& s, const Observable& f, const Point& x, const FrequencyGrid& grid,
                           const Schedule& sched, const ScanOptions& opts, double mesh) {
  require(s.group_dim() == 1, "spectrum_scan: only one-dimensional groups are supported");
  require(grid.size() > 0, "spectrum_scan: empty frequency grid");
  const NestedGrid ng(sched, s.grid_params(mesh));
  return spectrum_scan_series(s.orbit_values(f, x, ng), ng.step(), grid, opts);
}

double discrete_spectrum_score(const SpectrumScan& scan) {
  if (!(scan.f_energy > 0.0)) throw UndefinedScore("discrete_spectrum_score: observable has zero energy");
  double s = 0.0;
  for (const auto& p : scan.peaks) s += p.magnitude * p.magnitude;
  return std::clamp(s / scan.f_energy, 0.0, 1.0);
}

ApProbeResult almost_periodicity_probe_series(const std::vector<cplx>& values, std::size_t n,
                                              const ApOptions& opts) {
  require(opts.k_cap >= 1, "almost_periodicity_probe: K cap must be positive");
  const std::size_t J = 8 * opts.k_cap;
  require(n >= 1 && values.size() >= n + J, "almost_periodicity_probe: series too short for the lag range");
  ApProbeResult res;
  res.lags = J;
  cplx mean{0.0, 0.0};
  for (std::size_t i = 0; i < n; ++i) mean += values[i];
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (std::size_t i = 0; i < n; ++i) var += std::norm(values[i] - mean);
  var /= static_cast<double>(n);
  res.variance = var;

  std::vector<double> eps = opts.eps_absolute;
  if (eps.empty()) {
    const std::vector<double> fac = opts.eps_factors.empty() ? std::vector<double>{0.2, 0.1, 0.05} : opts.eps_factors;
    for (double f : fac) eps.push_back(var > 0.0 ? f * 2.0 * var : f * 1e-12);
  }
  for (double e : eps) require(e > 0.0, "almost_periodicity_probe: epsilon must be positive");

  std::vector<double> ehat(J);
  parallel_for(J, [&](std::size_t j) {
    ehat[j] = kernels::active().lag_sq_diff(values.data(), n, j) / static_cast<double>(n);
  });

  res.consistent = true;
  for (double e : eps) {
    ApEpsilonResult r;
    r.epsilon = e;
    std::vector<char> mask(J);
    std::size_t hits = 0;
    for (std::size_t j = 0; j < J; ++j) {
      mask[j] = ehat[j] <= e;
      hits += mask[j] ? 1 : 0;
    }
    r.density = static_cast<double>(hits) / static_cast<double>(J);
    for (std::size_t K = 1; K <= opts.k_cap; K *= 2) {
      const SyndeticResult sr = syndetic_probe_mask(mask, J, 1, K, GroupKind::discrete, 1.0);
      r.k_side = static_cast<double>(K);
      if (sr.syndetic) {
        r.syndetic = true;
        r.witness.reset();
        break;
      }
      r.witness = sr.witness ? std::optional<double>((*sr.witness)[0]) : std::nullopt;
    }
    if (!r.syndetic && res.consistent) {
      res.consistent = false;
      res.reason = "return times for eps=" + std::to_string(e) + " have gaps beyond the cap K=" +
                   std::to_string(opts.k_cap);
    }
    res.per_epsilon.push_back(r);
  }
  return res;
}

ApProbeResult almost_periodicity_probe(const System& s, const Observable& f, const Point& x,
                                       const Schedule& sched, const ApOptions& opts, double mesh) {
  require(s.group_dim() == 1, "almost_periodicity_probe: only one-dimensional groups are supported");
  sched.validate();
  const NestedGrid big(Schedule::ending_at(sched.largest(), 2, 0), s.grid_params(mesh));
  const std::size_t n = big.total();
  const double lag_time = static_cast<double>(8 * opts.k_cap) * big.step();
  const NestedGrid ext(Schedule::ending_at(sched.largest() + lag_time, 2, 0), s.grid_params(mesh));
  return almost_periodicity_probe_series(s.orbit_values(f, x, ext), n, opts);
}

}  // namespace besi
