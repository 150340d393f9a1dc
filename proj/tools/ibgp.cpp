#include <cstdint>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "ibgp/errors.hpp"
#include "ibgp/scenario.hpp"
#include "ibgp/version.hpp"

namespace {

struct SubcommandDesc {
  const char* name;
  const char* description;
};

constexpr SubcommandDesc kSubcommands[] = {
    {"verify", "exact worst-case failure probabilities over all attacks"},
    {"simulate", "Monte Carlo outcome frequencies for one observation pattern"},
    {"diagram", "timing-attack families played at every round count"},
    {"sweep", "survival sweep over population size, margin and attacker"},
    {"multi_target", "dispersion defense concentration-bound experiment"},
    {"select", "greedy target selection audited against the exact optimum"},
    {"sensor", "distributed tracking on a sensor line"},
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{std::string(ibgp::kToolName) + " " + ibgp::kToolVersion +
               ": imperfect-observation coordination workbench"};
  app.require_subcommand(1);

  std::string scenario;
  std::string out_dir;
  std::uint64_t seed = 0;
  std::uint64_t trials = 0;
  std::uint64_t budget = 0;
  int jobs = 0;

  for (const auto& desc : kSubcommands) {
    CLI::App* sub = app.add_subcommand(desc.name, desc.description);
    sub->add_option("--scenario", scenario, "scenario JSON file")
        ->required()
        ->check(CLI::ExistingFile);
    sub->add_option("--out", out_dir,
                    "directory for result.json, <command>.csv and manifest.json");
    sub->add_option("--seed", seed, "override the scenario seed");
    sub->add_option("--trials", trials, "override the scenario trials");
    sub->add_option("--budget", budget, "override the scenario budget");
    sub->add_option("--jobs", jobs, "override the scenario jobs");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  CLI::App* sub = app.get_subcommands().front();
  ibgp::RunOptions options;
  if (sub->count("--seed")) options.seed = seed;
  if (sub->count("--trials")) options.trials = trials;
  if (sub->count("--budget")) options.budget = budget;
  if (sub->count("--jobs")) options.jobs = jobs;
  options.out_dir = out_dir;

  try {
    ibgp::RunOutcome outcome =
        ibgp::run_scenario_file(scenario, sub->get_name(), options);
    for (const auto& failure : outcome.check_failures) {
      std::cerr << "check failed: " << failure << "\n";
    }
    if (out_dir.empty()) {
      std::cout << outcome.result_json;
    } else {
      for (const auto& path : outcome.written) std::cout << path << "\n";
    }
    return outcome.exit_code;
  } catch (const ibgp::BudgetError& e) {
    std::cerr << "budget refused: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
