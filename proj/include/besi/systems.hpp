#pragma once

// Built-in dynamical systems: point space, group action, metric and measure
// sampler behind one interface.

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "besi/observables.hpp"
#include "besi/points.hpp"
#include "besi/radius.hpp"
#include "besi/random.hpp"
#include "besi/windows.hpp"

namespace besi {

enum class PointKind { torus, symbol_sequence, delone_patch, product };
enum class KnownClass { discrete_spectrum, weakly_mixing, unknown };

std::string to_string(PointKind kind);
std::string to_string(KnownClass kind);

class System {
 public:
  virtual ~System() = default;

  virtual std::string tag() const = 0;
  virtual PointKind point_kind() const = 0;
  virtual GroupKind group_kind() const = 0;
  virtual int group_dim() const { return 1; }

  virtual Point act(const GroupIndex& g, const Point& x) const = 0;
  virtual double dist(const Point& x, const Point& y) const = 0;
  virtual double diameter() const = 0;
  virtual Point sample_mu(std::uint64_t seed) const = 0;
  /// `count` points y with dist(center, y) <= δ. Radii at or above the diameter
  /// give unconstrained μ-samples. Throws SamplingExhausted when rejection fails.
  virtual std::vector<Point> sample_ball(const Point& center, Radius r, std::size_t count,
                                         std::uint64_t seed) const;

  virtual KnownClass known_class() const { return KnownClass::unknown; }
  virtual bool minimal() const { return false; }
  /// Whether μ is ergodic for the action (uniquely ergodic built-ins use minimality).
  virtual bool ergodic() const { return minimal(); }

  /// Ball depths (δ = 2^-depth) probed by the classifiers; the symbolic systems
  /// cap the depth by what the schedule's windows can resolve.
  virtual std::vector<double> ball_depths(const Schedule& sched) const;
  /// Radius δ' such that dist(a, b) <= δ' implies dist(T^-g a, T^-g b) <= δ.
  virtual Radius pullback_radius(const GroupIndex& g, Radius r) const = 0;

  /// f(T^{g_i} x) for the points g_i of the nested grid, in grid order.
  virtual std::vector<cplx> orbit_values(const Observable& f, const Point& x, const NestedGrid& grid) const;
  /// dist(T^{g_i} x, T^{g_i} y) in grid order.
  virtual std::vector<double> orbit_distances(const Point& x, const Point& y, const NestedGrid& grid) const;

  /// Sets y to act(g, x), reusing y's storage where possible. y must start as a
  /// copy of x or a previous result of this call with the same x.
  virtual void advance_in_place(Point& y, const Point& x, const GroupIndex& g) const { y = act(g, x); }

  GridParams grid_params(double mesh = 0.1) const { return {group_kind(), group_dim(), mesh}; }
  void check_grid(const GridParams& grid) const;

 protected:
  virtual Point sample_ball_point(const Point& center, Radius r, Rng& rng) const = 0;
};

using SystemHandle = std::shared_ptr<const System>;

/// Continued-fraction test: true if the expansion of x does not terminate within
/// `terms` steps at the given tolerance.
bool looks_irrational(double x, int terms = 40, double tol = 1e-12);

SystemHandle make_torus_rotation(std::vector<double> alpha, GroupKind kind = GroupKind::discrete);
SystemHandle make_bernoulli_shift(double p);
SystemHandle make_sturmian(double alpha);
enum class SubstitutionRule { fibonacci, thue_morse };
SystemHandle make_substitution_subshift(SubstitutionRule rule);
SystemHandle make_product(SystemHandle a, SystemHandle b);

/// Orbit series f(T^g x) over an enumerated window.
struct OrbitSeries {
  std::vector<cplx> values;
  Window window;
};
OrbitSeries orbit_series(const System& s, const Observable& f, const Point& x, const Window& w);

/// Circle distance between reals mod 1.
double circle_dist(double a, double b);

inline constexpr double kGolden = 1.6180339887498948482;
/// 1/φ, the golden rotation number used by default fixtures.
inline constexpr double kGoldenFraction = 0.6180339887498948482;

}  // namespace besi
