// Command-line front end: run experiments from a JSON spec file, compare
// algorithms, or check a Monte-Carlo sweep against the convergence bound.

#include <string>

#include <CLI11.hpp>

#include "gossipsim/experiment.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Deterministic multi-worker simulator for gossip and model-averaging SGD"};
  app.require_subcommand(1);

  std::string spec_path;
  std::string out_dir = "out";
  gossipsim::CliOverrides overrides;
  std::uint64_t seed = 0;
  std::size_t trials = 0;
  unsigned threads = 0;

  const auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--spec", spec_path, "JSON spec file")->required();
    cmd->add_option("--out", out_dir, "output directory (default: out)");
    cmd->add_option("--seed", seed, "override the base seed of every run");
    cmd->add_option("--trials", trials, "override the trial count");
    cmd->add_option("--threads", threads, "override the worker thread count");
  };

  CLI::App* run = app.add_subcommand("run", "execute every run in the spec; write CSVs and summaries");
  CLI::App* compare = app.add_subcommand(
      "compare", "execute two or more runs and write a merged comparison report");
  CLI::App* bound = app.add_subcommand(
      "bound-check", "run a simple-ma sweep and test it against the convergence bound");
  add_common(run);
  add_common(compare);
  add_common(bound);

  CLI11_PARSE(app, argc, argv);

  const auto fill = [&](const CLI::App* cmd) {
    if (cmd->count("--seed") > 0) overrides.seed = seed;
    if (cmd->count("--trials") > 0) overrides.trials = trials;
    if (cmd->count("--threads") > 0) overrides.threads = threads;
  };

  if (run->parsed()) {
    fill(run);
    return gossipsim::cmd_run(spec_path, out_dir, overrides);
  }
  if (compare->parsed()) {
    fill(compare);
    return gossipsim::cmd_compare(spec_path, out_dir, overrides);
  }
  fill(bound);
  return gossipsim::cmd_bound_check(spec_path, out_dir, overrides);
}
