#pragma once

// Empirical mean sensitivity / mean equicontinuity / mean expansivity tests in
// the topological, f-relative, μ-relative and μ-f-relative flavours, and the
// consolidated implication report.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "besi/pseudometrics.hpp"
#include "besi/spectral.hpp"
#include "besi/systems.hpp"

namespace besi {

enum class Flavor { topological, f_relative, mu_relative, mu_f_relative };
enum class Label { mean_equicontinuous, mean_sensitive, inconclusive };

std::string to_string(Flavor f);
std::string to_string(Label l);

/// Pair statistic evaluated inside sampled balls. sup_dist is the plain
/// (non-averaged) sup over the largest window of dist(T^g x, T^g y).
enum class ProbeStat { df_L2, df_L1, rho_f, db, rho_b, sup_dist };
std::string to_string(ProbeStat s);
bool needs_observable(ProbeStat s);

/// Metric used by each flavour: db for the orbit flavours, d'_f for f-relative
/// and ρ_f for μ-f-relative.
ProbeStat flavor_stat(Flavor f);

struct SamplerParams {
  std::size_t n_centers = 32;
  std::size_t n_per_ball = 16;
  /// Ball depths (δ = 2^-depth); empty means the system's default ladder.
  std::vector<double> depths;
};

/// Geometric grid 2^-8 ... 1 with ratio 2^(1/4).
std::vector<double> default_classify_eps_grid();
/// {512, 1024, 2048, 4096, 8192} with burn-in 2.
Schedule default_classify_schedule();

struct ClassifyConfig {
  Schedule sched = default_classify_schedule();
  SamplerParams sampler;
  std::vector<double> eps_grid = default_classify_eps_grid();
  double tau = 0.05;
  double mesh = 0.1;
  std::uint64_t seed = 1;
};

/// Per-centre, per-depth maximum of the statistic over the sampled ball pairs
/// (centre with each ball point, and consecutive ball points).
struct BallProfile {
  std::vector<double> depths;
  std::vector<ProbeStat> stats;
  std::vector<Point> centers;
  /// ball_max[stat][center][depth]
  std::vector<std::vector<std::vector<double>>> ball_max;
  std::size_t pairs_per_ball = 0;

  std::size_t stat_index(ProbeStat s) const;
};

BallProfile ball_profile(const System& s, const Observable* f, const std::vector<ProbeStat>& stats,
                         const ClassifyConfig& cfg, std::uint64_t stream);

struct WitnessPair {
  std::size_t center = 0;
  double depth = 0.0;
  double estimate = 0.0;
};

struct EpsDelta {
  double epsilon = 0.0;
  std::optional<double> depth;  // δ = 2^-depth, absent if no depth worked
};

struct Verdict {
  Label label = Label::inconclusive;
  Flavor flavor = Flavor::topological;
  ProbeStat stat = ProbeStat::db;
  /// Largest grid ε below every ball maximum (0 if none).
  double epsilon = 0.0;
  bool sensitive = false;
  bool equicontinuous = false;
  std::vector<WitnessPair> evidence;
  std::vector<EpsDelta> table;
  std::size_t centers_used = 0;
  std::size_t centers_dropped = 0;
  double tau = 0.0;
  std::string observable;  // empty for the orbit flavours
};

// Evaluation of a profile, exposed so callers can share profiles between tests.
Verdict sensitivity_from_profile(const BallProfile& p, ProbeStat stat, const std::vector<double>& eps_grid);
Verdict equicontinuity_from_profile(const BallProfile& p, ProbeStat stat, const std::vector<double>& eps_grid,
                                    double tau);
/// Shallowest depth at which centre c stays within ε at every deeper depth.
std::optional<double> center_passes(const BallProfile& p, ProbeStat stat, std::size_t c, double eps);

/// Sensitivity test: sensitive if some grid ε lies below the maximum of every
/// tested ball; otherwise inconclusive.
Verdict mean_sensitivity_test(const System& s, const Observable* f, Flavor flavor, const ClassifyConfig& cfg);
/// Equicontinuity test: equicontinuous if every grid ε admits a depth at which
/// all sampled balls stay within ε.
Verdict mean_equicontinuity_test(const System& s, const Observable* f, Flavor flavor, const ClassifyConfig& cfg);
/// Same after discarding the worst ceil(τ N) centres; τ = 0 reproduces
/// mean_equicontinuity_test exactly.
Verdict mu_mean_equicontinuity_test(const System& s, const Observable* f, double tau, const ClassifyConfig& cfg);
/// Runs both tests on independent seed streams and combines them; a double
/// positive yields inconclusive with both flags set.
Verdict classify_flavor(const System& s, const Observable* f, Flavor flavor, const ClassifyConfig& cfg);

struct ExpansivityReport {
  double epsilon = 0.0;
  double fraction = 0.0;
  std::size_t n_pairs = 0;
  std::vector<double> estimates;
};

/// Estimates of the statistic on independent μ-pairs.
std::vector<double> independent_pair_estimates(const System& s, const Observable* f, ProbeStat stat,
                                               std::size_t n_pairs, const Schedule& sched, std::uint64_t seed,
                                               double mesh = 0.1);
ExpansivityReport expansivity_fraction(const System& s, const Observable* f, ProbeStat stat, double eps,
                                       std::size_t n_pairs, const Schedule& sched, std::uint64_t seed,
                                       double mesh = 0.1);
ExpansivityReport expansivity_from_estimates(const std::vector<double>& estimates, double eps);

struct Implication {
  std::string name;
  bool holds = true;
  std::string detail;
};

struct ObservableReport {
  std::string tag;
  Verdict f_relative;
  Verdict mu_f_relative;
  double spectral_score = 0.0;
  std::size_t n_peaks = 0;
  ApProbeResult ap;
  ExpansivityReport expansivity;
};

struct DichotomyConfig {
  ClassifyConfig classify;
  Schedule spectral_sched = Schedule::ending_at(100000, 5, 2);
  std::size_t expansivity_pairs = 500;
  double expansive_threshold = 0.95;
  double score_threshold = 0.9;
  std::size_t ap_cap = 512;
};

struct DichotomyReport {
  std::string system;
  std::string known_class;
  bool minimal = false;
  bool ergodic = false;
  Verdict topological;
  Verdict plain;  // non-averaged equicontinuity (sup over the window)
  Verdict mu_relative;
  ExpansivityReport orbit_expansivity;
  std::vector<ObservableReport> observables;
  double mean_score = 0.0;
  std::vector<Implication> implications;

  std::size_t violations() const;
};

DichotomyReport dichotomy_report(const System& s, const std::vector<Observable>& f_list,
                                 const DichotomyConfig& cfg);

/// Ball statistic maxima for the translate T^g x of a centre, with the ball
/// radius pulled back through the action; used to check inverse invariance.
double translated_ball_max(const System& s, const Point& x, const GroupIndex& g, double depth, ProbeStat stat,
                           const Observable* f, const ClassifyConfig& cfg, std::uint64_t seed);

}  // namespace besi
