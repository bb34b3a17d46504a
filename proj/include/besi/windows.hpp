#pragma once

// Følner windows [0, n)^d over Z^d and R^d, geometric schedules, densities and
// syndeticity probes.

#include <array>
#include <cstdint>
#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "besi/common.hpp"

namespace besi {

enum class GroupKind { discrete, continuous };

std::string to_string(GroupKind kind);

inline constexpr int kMaxDim = 3;

/// Element of Z^d or R^d (d <= kMaxDim).
class GroupIndex {
 public:
  GroupIndex() = default;
  GroupIndex(GroupKind kind, std::vector<double> coords);
  static GroupIndex zero(GroupKind kind, int d);
  static GroupIndex scalar(GroupKind kind, double t) { return GroupIndex(kind, {t}); }

  int dim() const { return d_; }
  GroupKind kind() const { return kind_; }
  double operator[](int i) const { return c_[static_cast<std::size_t>(i)]; }
  double& operator[](int i) { return c_[static_cast<std::size_t>(i)]; }
  std::vector<double> coords() const { return {c_.begin(), c_.begin() + d_}; }

  GroupIndex operator+(const GroupIndex& o) const;
  GroupIndex operator-() const;
  bool operator==(const GroupIndex& o) const;

 private:
  std::array<double, kMaxDim> c_{};
  int d_ = 1;
  GroupKind kind_ = GroupKind::discrete;
};

/// Cube [0, n)^d. Discrete windows hold the integer points; continuous windows
/// hold the grid {0, h, 2h, ...}^d with h = mesh.
struct Window {
  double n = 1.0;
  GroupKind kind = GroupKind::discrete;
  int d = 1;
  double mesh = 1.0;

  Window() = default;
  Window(double n, GroupKind kind, int d = 1, double mesh = 0.1);

  /// Points per axis.
  std::size_t side_count() const;
  std::size_t point_count() const;
  /// Counting measure (discrete) or h^d * count (continuous).
  double volume() const;
  /// Volume carried by one grid point.
  double cell_volume() const;
};

struct Enumeration {
  std::vector<GroupIndex> points;
  double volume = 0.0;
};

Enumeration enumerate_window(const Window& w);

/// Window geometry shared by every window of a schedule.
struct GridParams {
  GroupKind kind = GroupKind::discrete;
  int d = 1;
  double mesh = 0.1;  // continuous only
};

/// Strictly increasing window sides; values at indices < burn_in are ignored by
/// tail statistics.
struct Schedule {
  std::vector<double> sizes;
  std::size_t burn_in = 2;

  Schedule() = default;
  Schedule(std::vector<double> sizes, std::size_t burn_in);
  /// n_k = ceil(n1 * 2^k), k = 0..count-1.
  static Schedule geometric(double n1, std::size_t count, std::size_t burn_in = 2);
  /// Schedule whose last window is `largest`, halving backwards.
  static Schedule ending_at(double largest, std::size_t count, std::size_t burn_in = 2);

  void validate() const;
  double largest() const { return sizes.back(); }
  std::size_t size() const { return sizes.size(); }
};

/// Points of the largest window ordered so that every scheduled window is a
/// prefix: points are grouped by the smallest window containing them and ordered
/// lexicographically within a group. In one dimension this is the natural order.
class NestedGrid {
 public:
  NestedGrid(const Schedule& sched, const GridParams& grid);

  const Schedule& schedule() const { return sched_; }
  const GridParams& params() const { return grid_; }
  std::size_t total() const { return prefix_.back(); }
  /// Number of leading points that make up window k.
  std::size_t prefix(std::size_t k) const { return prefix_[k]; }
  double volume(std::size_t k) const { return volumes_[k]; }
  double cell_volume() const { return cell_; }
  /// Lattice step along each axis (1 or mesh).
  double step() const { return step_; }
  bool natural_order() const { return grid_.d == 1; }
  /// i-th point in nested order.
  GroupIndex point(std::size_t i) const;
  /// Writes the i-th point into g, which must already have this grid's kind and dimension.
  void fill_point(std::size_t i, GroupIndex& g) const {
    if (grid_.d == 1) {
      g[0] = static_cast<double>(i) * step_;
      return;
    }
    for (int a = 0; a < grid_.d; ++a) g[a] = cells_[i][static_cast<std::size_t>(a)] * step_;
  }
  /// Integer grid coordinates of the i-th point.
  const std::array<std::uint32_t, kMaxDim>& cell(std::size_t i) const { return cells_[i]; }

 private:
  Schedule sched_;
  GridParams grid_;
  double step_ = 1.0;
  double cell_ = 1.0;
  std::vector<std::size_t> prefix_;
  std::vector<double> volumes_;
  std::vector<std::array<std::uint32_t, kMaxDim>> cells_;  // empty in 1d
};

/// Tail statistics of a per-window trace.
struct TailStats {
  double min = 0.0;
  double max = 0.0;
  double last = 0.0;
};
TailStats tail_stats(const std::vector<std::pair<double, double>>& per_window, std::size_t burn_in);

using Indicator = std::function<bool(const GroupIndex&)>;

struct DensityEstimate {
  double lower = 0.0;
  double upper = 0.0;
  std::vector<std::pair<double, double>> per_window;  // (n, ratio)
};

DensityEstimate density(const Indicator& indicator, const Schedule& sched, const GridParams& grid);

struct SyndeticResult {
  bool syndetic = false;
  /// Corner of an empty translate of [0, K)^d when not syndetic (the
  /// lexicographically last one inside the largest window).
  std::optional<GroupIndex> witness;
  std::size_t empty_translates = 0;
};

SyndeticResult syndetic_probe(const Indicator& indicator, double k_side, const Schedule& sched,
                              const GridParams& grid);
/// Same probe over a precomputed membership mask of the largest window's grid
/// (row-major, axis 0 slowest).
SyndeticResult syndetic_probe_mask(const std::vector<char>& mask, std::size_t side, int d,
                                   std::size_t k_cells, GroupKind kind, double step);

}  // namespace besi
