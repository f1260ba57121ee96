// Command-line front end: impulse <subcommand> --config PATH [options]
//
// Exit codes: 0 success, 2 invalid input (config, arguments, artifacts),
// 1 runtime failure.

#include "impulse/commands.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace {

using impulse::CommandOptions;

struct Sub {
  const char* name;
  const char* help;
  std::filesystem::path (*run)(const CommandOptions&);
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Impulse control of stochastic delay systems: solve, simulate, evaluate"};
  app.require_subcommand(1);

  CommandOptions opts;
  std::string backend;
  std::uint64_t seed = 0;
  std::size_t paths = 0;
  std::string out_dir, policy_dir, artifacts_dir;

  const Sub subs[] = {
      {"solve", "Run k-intervention value iteration and write value dumps", impulse::cmd_solve},
      {"simulate", "Write controlled sample paths under a solved policy", impulse::cmd_simulate},
      {"evaluate", "Monte Carlo payoff of a solved policy against no intervention",
       impulse::cmd_evaluate},
      {"probe-flow", "Coupled-path flow stability probe", impulse::cmd_probe_flow},
      {"export-figures", "Value and policy surfaces on constant histories",
       impulse::cmd_export_figures},
      {"check-assumptions", "Sample the regularity assumptions of a problem",
       impulse::cmd_check_assumptions},
      {"oracle-compare", "Compare the solver with exhaustive enumeration on a tree problem",
       impulse::cmd_oracle_compare},
  };

  std::vector<std::pair<CLI::App*, const Sub*>> registered;
  for (const auto& s : subs) {
    CLI::App* sub = app.add_subcommand(s.name, s.help);
    auto* cfg = sub->add_option("--config", opts.config_path, "Run configuration (JSON)");
    if (std::string(s.name) != "export-figures") cfg->required();
    sub->add_option("--out", out_dir, "Output directory (overrides output_dir)");
    sub->add_option("--seed", seed, "Seed (overrides evaluation.seed)");
    sub->add_option("--backend", backend, "Value backend")
        ->check(CLI::IsMember({"grid", "regression"}));
    if (std::string(s.name) == "simulate" || std::string(s.name) == "evaluate") {
      sub->add_option("--policy", policy_dir, "Solve output directory, or 'none'");
    }
    if (std::string(s.name) == "simulate" || std::string(s.name) == "evaluate" ||
        std::string(s.name) == "probe-flow") {
      sub->add_option("--paths", paths, "Number of paths")->check(CLI::PositiveNumber);
    }
    if (std::string(s.name) == "export-figures") {
      sub->add_option("--artifacts", artifacts_dir, "Solve output directory");
    }
    registered.emplace_back(sub, &s);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  for (const auto& [sub, s] : registered) {
    if (!sub->parsed()) continue;
    if (sub->count("--out")) opts.out_dir = out_dir;
    if (sub->count("--seed")) opts.seed = seed;
    if (sub->count("--backend")) {
      opts.backend = backend == "grid" ? impulse::Backend::Grid : impulse::Backend::Regression;
    }
    if (sub->get_option_no_throw("--policy") && sub->count("--policy")) opts.policy_dir = policy_dir;
    if (sub->get_option_no_throw("--paths") && sub->count("--paths")) opts.paths = paths;
    if (sub->get_option_no_throw("--artifacts") && sub->count("--artifacts")) {
      opts.artifacts_dir = artifacts_dir;
    }
    if (std::string(s->name) == "export-figures" && opts.config_path.empty() &&
        !opts.artifacts_dir) {
      std::cerr << "error: export-figures needs --artifacts or --config\n";
      return 2;
    }
    try {
      const auto dir = s->run(opts);
      std::cout << s->name << ": wrote " << dir.string() << "\n";
      return 0;
    } catch (const impulse::ValidationError& e) {
      std::cerr << "error: " << e.what() << "\n";
      return 2;
    } catch (const std::exception& e) {
      std::cerr << "failure: " << e.what() << "\n";
      return 1;
    }
  }
  return 2;
}
