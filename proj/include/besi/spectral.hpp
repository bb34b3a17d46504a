#pragma once

// Birkhoff and Fourier–Birkhoff averages along a single orbit, point-spectrum
// scanning and an almost-periodicity probe.

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "besi/systems.hpp"
#include "besi/windows.hpp"

namespace besi {

struct AverageResult {
  cplx value;                                    // last window
  std::vector<std::pair<double, cplx>> per_window;  // (n, average)
  bool diverged = false;
};

AverageResult birkhoff_average(const System& s, const Observable& f, const Point& x, const Schedule& sched,
                               double mesh = 0.1);
/// (1/ν) ∫ e^{-2πi<w, g>} f(T^g x) per window; w has one entry per group dimension.
AverageResult fourier_mode(const System& s, const Observable& f, const Point& x, const std::vector<double>& w,
                           const Schedule& sched, double mesh = 0.1);
/// Same from a precomputed orbit series in nested-grid order.
AverageResult fourier_mode_series(const std::vector<cplx>& values, const NestedGrid& grid,
                                  const std::vector<double>& w);

/// Frequencies lo, lo + step, ... below hi (one-dimensional groups).
struct FrequencyGrid {
  double lo = 0.0;
  double hi = 1.0;
  double step = 1e-3;
  /// Treat the band as a circle (discrete time over [0, 1)).
  bool periodic = true;

  std::size_t size() const;
  double at(std::size_t i) const { return lo + static_cast<double>(i) * step; }
};

FrequencyGrid default_frequency_grid(GroupKind kind);

struct SpectralPeak {
  double w = 0.0;
  cplx amplitude;
  double magnitude = 0.0;
};

struct ScanOptions {
  /// Peaks must reach floor_rel * sqrt(f_energy) at the largest window.
  double floor_rel = 0.05;
  double tolerance = 1e-6;
};

struct SpectrumScan {
  std::vector<SpectralPeak> peaks;
  FrequencyGrid grid;
  double f_energy = 0.0;
  double peak_floor = 0.0;
  /// Coarse-window amplitudes on the grid (for plotting).
  std::vector<cplx> coarse;
  std::size_t coarse_points = 0;
};

SpectrumScan spectrum_scan(const System& s, const Observable& f, const Point& x, const FrequencyGrid& grid,
                           const Schedule& sched, const ScanOptions& opts = {}, double mesh = 0.1);
SpectrumScan spectrum_scan_series(const std::vector<cplx>& values, double step, const FrequencyGrid& grid,
                                  const ScanOptions& opts = {});

/// Σ|a_w|² / f_energy clipped to [0, 1]; throws UndefinedScore for zero energy.
double discrete_spectrum_score(const SpectrumScan& scan);

struct ApEpsilonResult {
  double epsilon = 0.0;
  bool syndetic = false;
  double k_side = 0.0;  // smallest tested K that worked, or the cap
  std::optional<double> witness;  // start of an empty lag interval at the cap
  double density = 0.0;           // fraction of tested lags in the return set
};

struct ApProbeResult {
  bool consistent = false;
  std::string reason;
  std::vector<ApEpsilonResult> per_epsilon;
  std::size_t lags = 0;
  double variance = 0.0;
};

struct ApOptions {
  /// ε values as multiples of 2·Var(f along the orbit); empty uses {0.2, 0.1, 0.05}.
  std::vector<double> eps_factors;
  /// Absolute ε values; override eps_factors when non-empty.
  std::vector<double> eps_absolute;
  /// Largest return-time gap K allowed, in lags.
  std::size_t k_cap = 512;
};

ApProbeResult almost_periodicity_probe(const System& s, const Observable& f, const Point& x,
                                       const Schedule& sched, const ApOptions& opts = {}, double mesh = 0.1);
ApProbeResult almost_periodicity_probe_series(const std::vector<cplx>& values, std::size_t n,
                                              const ApOptions& opts = {});

}  // namespace besi
