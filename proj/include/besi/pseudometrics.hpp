#pragma once

// Finite-window estimators for the observable-relative pseudometrics
// (L2, L1, density form) and the orbit pseudometrics (Besicovitch mean and
// density form).

#include <string>
#include <utility>
#include <vector>

#include "besi/systems.hpp"
#include "besi/windows.hpp"

namespace besi {

enum class MetricKind { df_L2, df_L1, rho_f, db, rho_b };

std::string to_string(MetricKind kind);
MetricKind metric_kind_from_string(const std::string& s);
bool is_observable_metric(MetricKind kind);

struct MetricEstimate {
  MetricKind kind = MetricKind::db;
  /// Maximum of the post-burn-in window values.
  double value = 0.0;
  std::vector<std::pair<double, double>> per_window;  // (n, value_n)
  /// Last two post-burn-in values within 5% of each other (diagnostic only).
  bool converged = false;
};

/// inf{ε > 0 : #{i : d_i > ε} < ε n}. `upper` must bound every d_i.
double density_infimum(const double* d, std::size_t n, double upper);

/// Reduces a difference series |f(T^g x) − f(T^g y)| (or dist(T^g x, T^g y)),
/// laid out in nested-grid order, to per-window estimates. `upper` bounds the
/// entries and brackets the density infimum.
MetricEstimate reduce_series(MetricKind kind, const std::vector<double>& diffs, const NestedGrid& grid,
                             double upper);

/// |a_i − b_i| for two orbit series.
std::vector<double> abs_diff_series(const std::vector<cplx>& a, const std::vector<cplx>& b);

MetricEstimate f_pseudometric(MetricKind kind, const System& s, const Observable& f, const Point& x,
                              const Point& y, const Schedule& sched, double mesh = 0.1);
MetricEstimate orbit_pseudometric(MetricKind kind, const System& s, const Point& x, const Point& y,
                                  const Schedule& sched, double mesh = 0.1);

/// Bracket for the density infimum of an observable difference.
inline double rho_upper(const Observable& f) { return std::max(2.0 * f.sup_bound, 1.0); }
inline double rho_upper(const System& s) { return std::max(s.diameter(), 1.0); }

struct EquivalenceViolation {
  std::size_t pair = 0;
  double epsilon = 0.0;
  /// "rho<eps/2=>dL1<eps" or "dL2^2<eps^3=>rho<eps"
  std::string implication;
  double lhs = 0.0;
  double rhs = 0.0;
};

struct EquivalenceReport {
  std::vector<double> eps_grid;
  std::vector<double> df_l2, df_l1, rho_f;  // one entry per pair
  std::vector<EquivalenceViolation> violations;
  std::size_t checks = 0;
};

/// Default ε grid for the equivalence check: 2^-7, ..., 2^0.
std::vector<double> default_equivalence_grid();

/// Checks "ρ_f < ε/2 ⇒ d'_f < ε" and "d_f² < ε³ ⇒ ρ_f < ε" on every pair and
/// grid ε. Requires f.sup_bound <= 1/2.
EquivalenceReport equivalence_check(const System& s, const Observable& f,
                                    const std::vector<std::pair<Point, Point>>& pairs, const Schedule& sched,
                                    const std::vector<double>& eps_grid = default_equivalence_grid(),
                                    double mesh = 0.1);

}  // namespace besi
