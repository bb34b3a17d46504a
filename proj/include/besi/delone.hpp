#pragma once

// Delone sets: constructions, uniform discreteness / relative density checks,
// the translation hull as an R^d system, diffraction and classification.

#include <array>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "besi/classify.hpp"
#include "besi/systems.hpp"

namespace besi {

using Vec = std::array<double, kMaxDim>;

/// Axis-aligned box [lo, hi) in R^d.
struct Box {
  int d = 1;
  Vec lo{};
  Vec hi{};

  static Box cube(int d, double lo, double hi);
  double volume() const;
  double side(int i) const { return hi[static_cast<std::size_t>(i)] - lo[static_cast<std::size_t>(i)]; }
  bool contains(const Vec& x) const;
};

struct LatticeSpec {
  std::vector<Vec> basis;  // d vectors
};
/// Fibonacci model set x_m = m + floor(m/φ + β)/φ.
struct CutProjectSpec {
  double beta = 0.5;
};
struct PerturbedSpec {
  LatticeSpec lattice;
  double amplitude = 0.0;
};
struct PoissonSpec {
  double intensity = 1.0;
};
using Construction = std::variant<LatticeSpec, CutProjectSpec, PerturbedSpec, PoissonSpec>;

std::string describe(const Construction& c);
LatticeSpec integer_lattice(int d);

struct DeloneSet {
  int d = 1;
  Box region;
  std::vector<Vec> points;  // sorted lexicographically
  double r = 0.0;           // packing radius measured on the patch
  double R = 0.0;           // covering radius measured away from the boundary
  std::string construction;
  KnownClass known = KnownClass::unknown;
  bool repetitive = false;  // lattices and model sets
};

DeloneSet build_delone(const Construction& c, const Box& region, std::uint64_t seed = 1);
/// Wraps an explicit point list; measures r and R.
DeloneSet make_delone(std::vector<Vec> points, const Box& region, std::string construction = "points");

/// Uniform-grid spatial index over a point list.
class PointIndex {
 public:
  PointIndex(const std::vector<Vec>& points, int d, double cell);

  /// Index of a point within sup-distance tol of x, or -1.
  std::ptrdiff_t find(const Vec& x, double tol) const;
  /// Index of the point nearest to x in sup norm (-1 when empty).
  std::ptrdiff_t nearest(const Vec& x) const;
  /// Indices of points with lo <= p <= hi componentwise.
  std::vector<std::size_t> in_box(const Vec& lo, const Vec& hi) const;
  std::size_t size() const { return pts_->size(); }

 private:
  std::array<long, kMaxDim> cell_of(const Vec& x) const;
  std::size_t flat(const std::array<long, kMaxDim>& c) const;
  template <class F>
  void visit_cells(const std::array<long, kMaxDim>& lo, const std::array<long, kMaxDim>& hi, F&& f) const;

  const std::vector<Vec>* pts_;
  int d_;
  double cell_;
  Vec origin_{};
  std::array<long, kMaxDim> dims_{1, 1, 1};
  std::vector<std::size_t> start_;
  std::vector<std::size_t> items_;
};

double sup_norm(const Vec& x, int d);

struct DeloneCheck {
  bool ok = true;
  std::string failure;        // "packing" or "covering"
  std::optional<Vec> witness;  // centre of a violating ball
};

/// Verifies that open r-balls hold at most one point and closed R-balls at
/// least one, for centres at distance >= R from the boundary.
DeloneCheck delone_check(const DeloneSet& s, double r, double R);

struct HullParams {
  /// Largest radius at which patches are compared; 0 picks 256 (d = 1) or 4.
  double patch_radius = 0.0;
  /// Translation budget reserved for orbits beyond a sampled point.
  double reach = 0.0;
};

/// The translation hull {Λ - t}: R^d acts by t -> t + s and points are
/// compared with the local-matching metric.
SystemHandle hull_system(std::shared_ptr<const DeloneSet> set, HullParams params = {});

struct DiffractionConfig {
  double band = 2.5;                 // k in [0, band]^d
  std::size_t window_levels = 3;     // sides L, L/2, L/4
  double kappa = 20.0;               // candidates exceed kappa * median
  double relative_floor = 1e-4;      // and this fraction of the maximum
  double ratio_band = 2.0;           // Bragg growth ratio within [1/band, band]
  double peak_halfwidth = 8.0;       // in units of 1/L
  double zero_halfwidth = 4.0;       // in units of 1/L_min
};

struct DiffractionPeak {
  Vec k{};
  double intensity = 0.0;            // at the largest window
  std::vector<double> ratios;        // consecutive growth ratios, normalised by volume
  std::vector<Vec> positions;        // refined position per window level, smallest first
  bool accepted = false;
};

struct DiffractionSpectrum {
  int d = 1;
  std::vector<Vec> freqs;
  std::vector<double> intensities;   // largest window
  std::vector<char> is_peak;
  std::vector<DiffractionPeak> peaks;  // accepted and rejected candidates
  double point_fraction = 0.0;
  std::vector<double> window_sizes;  // ascending
  double step = 0.0;
  double zero_exclusion = 0.0;

  std::size_t accepted_count() const;
  /// Largest position change between the two largest windows over accepted peaks.
  double max_position_drift() const;
};

/// |Σ_{x ∈ Λ ∩ W} e^{-2πi<k,x>}|² / ν(W).
double window_intensity(const DeloneSet& s, const Box& w, const Vec& k);
DiffractionSpectrum diffraction(const DeloneSet& s, const DiffractionConfig& cfg = {});

struct PeriodReport {
  std::vector<Vec> periods;  // independent periods found
  int rank = 0;
  std::size_t candidates_tested = 0;
};
/// Translations p with Λ + p = Λ on the patch interior, up to tol.
PeriodReport find_periods(const DeloneSet& s, double tol = 1e-9);

enum class DeloneClass { crystalline, quasicrystalline, neither };
std::string to_string(DeloneClass c);

struct DeloneConfig {
  ClassifyConfig hull;
  HullParams hull_params;
  DiffractionConfig diffraction;
  double point_fraction_threshold = 0.9;
};
DeloneConfig default_delone_config(int d);

struct DeloneReport {
  DeloneClass cls = DeloneClass::neither;
  std::string system;
  PeriodReport periods;
  Verdict plain;  // sup-distance equicontinuity on the hull
  Verdict mu;     // μ-mean equicontinuity (db, trimmed)
  DiffractionSpectrum diffraction;
};

DeloneReport classify_delone(const DeloneSet& s, const DeloneConfig& cfg);

void write_points(std::ostream& os, const DeloneSet& s);
/// Reads one d-vector per line; blank lines and '#' comments are skipped. The
/// region is the bounding box grown by half a unit unless given.
DeloneSet read_points(std::istream& is, std::optional<Box> region = std::nullopt);

}  // namespace besi
