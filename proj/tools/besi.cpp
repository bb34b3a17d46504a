#include <CLI11.hpp>

#include <iostream>
#include <sstream>

#include "besi/experiment.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Mean equicontinuity and sensitivity experiments"};
  app.require_subcommand(1);

  std::string config;
  besi::RunOverrides ov;
  std::uint64_t seed = 0;
  std::string out_dir;
  std::size_t threads = 0;
  std::string schedule;
  auto* run = app.add_subcommand("run", "run an experiment described by a YAML config");
  run->add_option("config", config, "config file")->required();
  auto* seed_opt = run->add_option("--seed", seed, "root seed (overrides the config)");
  auto* out_opt = run->add_option("--out", out_dir, "output directory");
  auto* threads_opt = run->add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);
  auto* sched_opt = run->add_option("--schedule", schedule, "window sizes n1,n2,... (overrides the config)");

  std::string filter;
  auto* list = app.add_subcommand("list", "list built-in systems, Delone sets and observables");
  list->add_option("filter", filter, "substring filter");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  if (*list) return besi::list_command(filter, std::cout);

  if (*seed_opt) ov.seed = seed;
  if (*out_opt) ov.out_dir = out_dir;
  if (*threads_opt) ov.threads = threads;
  if (*sched_opt) {
    std::vector<double> sizes;
    std::stringstream ss(schedule);
    std::string item;
    while (std::getline(ss, item, ',')) {
      try {
        std::size_t pos = 0;
        sizes.push_back(std::stod(item, &pos));
        if (pos != item.size()) throw std::invalid_argument(item);
      } catch (const std::exception&) {
        std::cerr << "config error: --schedule: '" << item << "' is not a number\n";
        return 2;
      }
    }
    if (sizes.empty()) {
      std::cerr << "config error: --schedule: empty\n";
      return 2;
    }
    ov.schedule = sizes;
  }
  return besi::run_command(config, ov, std::cout, std::cerr);
}
