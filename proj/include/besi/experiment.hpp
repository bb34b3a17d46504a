#pragma once

// Declarative experiment runner behind the command-line tool.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "besi/delone.hpp"
#include "besi/serialize.hpp"
#include "besi/systems.hpp"

namespace besi {

inline constexpr int kReportFormatVersion = 1;

struct FixtureInfo {
  std::string name;
  std::string category;  // system, delone or observable
  std::string known_class;
  std::string description;
};

/// Built-in catalog sorted by name; entries whose name or description contain
/// `filter` (all entries for an empty filter).
std::vector<FixtureInfo> list_fixtures(const std::string& filter = "");

/// Throws ConfigError listing the valid names.
SystemHandle fixture_system(const std::string& name);
std::vector<std::string> fixture_observables(const std::string& name);
DeloneSet fixture_delone(const std::string& name, std::uint64_t seed);
/// Parses the tags produced by the obs:: factories.
Observable parse_observable(const std::string& tag);

struct RunOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  std::optional<std::size_t> threads;
  std::optional<std::vector<double>> schedule;
};

struct ExperimentOutput {
  json report;
  std::vector<std::pair<std::string, std::string>> files;  // name, content (CSV)
  std::string out_dir;
};

/// Validates the config (ConfigError on any problem) and runs it.
ExperimentOutput run_experiment(const std::string& config_text, const RunOverrides& ov = {});

/// Report without the timing block, for determinism comparisons.
json strip_timing(json report);

/// `run` subcommand: returns the process exit code (0 ok, 2 config error,
/// 3 internal error). Nothing is written unless the config validates.
int run_command(const std::string& config_path, const RunOverrides& ov, std::ostream& out, std::ostream& err);
int list_command(const std::string& filter, std::ostream& out);

}  // namespace besi
