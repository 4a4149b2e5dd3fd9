#pragma once

#include <optional>
#include <string>
#include <vector>

#include "gossipsim/config.hpp"
#include "gossipsim/simulator.hpp"
#include "gossipsim/theory.hpp"
#include "gossipsim/threadpool.hpp"

namespace gossipsim {

// Monte-Carlo sweep over one run configuration. Each trial replays the run
// with an independent seed derived from (base seed, trial index).
struct TrialSet {
  std::vector<RunMetrics> trials;        // trial order, one entry per trial
  std::vector<StepRecord> mean_history;  // per-step mean over trials
  double mean_final_model_loss = 0.0;
  double mean_final_worker_loss = 0.0;
  double mean_final_sq_dist = 0.0;
  double mean_init_sq_dist = 0.0;
  std::uint64_t total_bytes = 0;  // identical across trials
  double wall_seconds = 0.0;
};

std::uint64_t trial_seed(std::uint64_t base_seed, std::size_t trial);

// Runs `trials` independent replays. With a pool of more than one thread and
// more than one trial, trials run in parallel and each replay is serial;
// otherwise the replay itself uses the pool. Results are identical either
// way, and for any thread count.
TrialSet run_trials(const RunConfig& config, const GradientOracle& oracle, std::size_t trials,
                    ThreadPool* pool = nullptr);

// CSV with header step,mean_loss,sq_dist,consensus_var,cum_bytes. Values are
// printed with std::to_chars, so output is locale-free and byte-stable.
std::string history_csv(std::span<const StepRecord> rows);

void write_text_file(const std::string& path, const std::string& content);

struct CliOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> trials;
  std::optional<unsigned> threads;
};

// Subcommand bodies behind the command-line tool; exposed so tests can drive
// the exact code paths the tool runs. Exit codes: 0 success (bound-check:
// pass), 1 bound-check ran and failed, 2 invalid spec/config, 3 numerical
// divergence, 4 unexpected error.
int cmd_run(const std::string& spec_path, const std::string& out_dir,
            const CliOverrides& overrides);
int cmd_compare(const std::string& spec_path, const std::string& out_dir,
                const CliOverrides& overrides);
int cmd_bound_check(const std::string& spec_path, const std::string& out_dir,
                    const CliOverrides& overrides);

}  // namespace gossipsim
