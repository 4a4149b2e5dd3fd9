#include "gossipsim/experiment.hpp"

#include <charconv>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <stdexcept>

#include "gossipsim/errors.hpp"
#include "gossipsim/rng.hpp"

namespace gossipsim {
namespace {

using nlohmann::json;

void append_number(std::string& out, double value) {
  char buf[64];
  const auto result = std::to_chars(buf, buf + sizeof(buf), value);
  out.append(buf, result.ptr);
}

void append_number(std::string& out, std::uint64_t value) {
  char buf[32];
  const auto result = std::to_chars(buf, buf + sizeof(buf), value);
  out.append(buf, result.ptr);
}

void append_number(std::string& out, std::int64_t value) {
  char buf[32];
  const auto result = std::to_chars(buf, buf + sizeof(buf), value);
  out.append(buf, result.ptr);
}

struct RunOutput {
  std::string name;
  Algorithm algorithm = Algorithm::GossipBmuf;
  TrialSet set;
};

json summary_json(const ExperimentSpec& spec, const NamedRun& run, const GradientOracle& oracle,
                  const TrialSet& set) {
  json doc;
  doc["config"] = single_run_spec_json(spec, run, oracle);
  doc["results"] = {
      {"trials", set.trials.size()},
      {"rows_recorded", set.mean_history.size()},
      {"steps_run", set.trials.front().steps_run},
      {"final_model_loss_mean", set.mean_final_model_loss},
      {"final_worker_loss_mean", set.mean_final_worker_loss},
      {"final_sq_dist_mean", set.mean_final_sq_dist},
      {"init_sq_dist_mean", set.mean_init_sq_dist},
      {"total_bytes", set.total_bytes},
      {"wall_seconds", set.wall_seconds},
  };
  return doc;
}

json compare_json(const ExperimentSpec& spec, const std::vector<RunOutput>& outputs) {
  json runs = json::array();
  std::size_t best = 0;
  for (std::size_t i = 0; i < outputs.size(); ++i) {
    const RunOutput& out = outputs[i];
    runs.push_back({{"name", out.name},
                    {"algorithm", algorithm_name(out.algorithm)},
                    {"final_model_loss_mean", out.set.mean_final_model_loss},
                    {"final_worker_loss_mean", out.set.mean_final_worker_loss},
                    {"final_sq_dist_mean", out.set.mean_final_sq_dist},
                    {"total_bytes", out.set.total_bytes}});
    if (out.set.mean_final_model_loss < outputs[best].set.mean_final_model_loss) best = i;
  }
  return json{{"trials", spec.trials}, {"runs", std::move(runs)}, {"best", outputs[best].name}};
}

void print_compare_table(const std::vector<RunOutput>& outputs) {
  std::printf("%-20s %-14s %16s %16s %14s\n", "name", "algorithm", "final_model_loss",
              "final_worker_loss", "total_bytes");
  for (const RunOutput& out : outputs) {
    std::printf("%-20s %-14s %16.8g %16.8g %14llu\n", out.name.c_str(),
                algorithm_name(out.algorithm), out.set.mean_final_model_loss,
                out.set.mean_final_worker_loss,
                static_cast<unsigned long long>(out.set.total_bytes));
  }
}

struct LoadedSpec {
  ExperimentSpec spec;
  std::unique_ptr<GradientOracle> oracle;
};

LoadedSpec load(const std::string& spec_path, const CliOverrides& overrides) {
  LoadedSpec loaded;
  loaded.spec = load_spec(spec_path);
  if (overrides.seed) {
    for (NamedRun& run : loaded.spec.runs) run.config.seed = *overrides.seed;
  }
  if (overrides.trials) {
    if (*overrides.trials < 1) throw std::invalid_argument("spec: 'trials' must be >= 1");
    loaded.spec.trials = *overrides.trials;
  }
  if (overrides.threads) {
    if (*overrides.threads < 1) throw std::invalid_argument("spec: 'threads' must be >= 1");
    loaded.spec.threads = *overrides.threads;
  }
  loaded.oracle = make_oracle(loaded.spec.objective);
  return loaded;
}

std::vector<RunOutput> execute_runs(const ExperimentSpec& spec, const GradientOracle& oracle,
                                    const std::string& out_dir) {
  std::filesystem::create_directories(out_dir);
  ThreadPool pool(spec.threads);
  std::vector<RunOutput> outputs;
  outputs.reserve(spec.runs.size());
  for (const NamedRun& run : spec.runs) {
    RunOutput out;
    out.name = run.name;
    out.algorithm = run.config.algorithm;
    out.set = run_trials(run.config, oracle, spec.trials, &pool);
    const std::filesystem::path base = std::filesystem::path(out_dir) / run.name;
    write_text_file(base.string() + ".csv", history_csv(out.set.mean_history));
    write_text_file(base.string() + ".summary.json",
                    summary_json(spec, run, oracle, out.set).dump(2) + "\n");
    std::printf("run %-20s trials=%zu rows=%zu final_model_loss=%.8g total_bytes=%llu\n",
                run.name.c_str(), spec.trials, out.set.mean_history.size(),
                out.set.mean_final_model_loss,
                static_cast<unsigned long long>(out.set.total_bytes));
    outputs.push_back(std::move(out));
  }
  if (outputs.size() > 1) {
    write_text_file((std::filesystem::path(out_dir) / "compare.json").string(),
                    compare_json(spec, outputs).dump(2) + "\n");
    print_compare_table(outputs);
  }
  return outputs;
}

int guard(const std::function<int()>& body) {
  try {
    return body();
  } catch (const DivergenceError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  }
}

}  // namespace

std::uint64_t trial_seed(std::uint64_t base_seed, std::size_t trial) {
  return RngStream::keyed(base_seed, StreamKind::TrialSeed, trial).next_u64();
}

TrialSet run_trials(const RunConfig& config, const GradientOracle& oracle, std::size_t trials,
                    ThreadPool* pool) {
  if (trials < 1) throw std::invalid_argument("run_trials: trials must be >= 1");
  validate(config, oracle);

  const auto start = std::chrono::steady_clock::now();
  TrialSet out;
  out.trials.resize(trials);
  const bool parallel_trials = pool != nullptr && pool->size() > 1 && trials > 1;
  // Trials in parallel with serial replays, or one replay using the pool —
  // never both, since the pool is not reentrant. Identical results either way.
  ThreadPool* engine_pool = parallel_trials ? nullptr : pool;
  const auto run_one = [&](std::size_t r) {
    RunConfig trial_config = config;
    trial_config.seed = trial_seed(config.seed, r);
    out.trials[r] = run(trial_config, oracle, engine_pool);
  };
  if (parallel_trials) {
    pool->parallel_for(trials, run_one);
  } else {
    for (std::size_t r = 0; r < trials; ++r) run_one(r);
  }

  const std::vector<StepRecord>& first = out.trials[0].history;
  for (const RunMetrics& m : out.trials) {
    if (m.history.size() != first.size()) {
      throw std::logic_error("run_trials: trials disagree on recorded rows");
    }
  }
  out.mean_history.resize(first.size());
  const double scale = 1.0 / static_cast<double>(trials);
  for (std::size_t r = 0; r < first.size(); ++r) {
    StepRecord rec;
    rec.step = first[r].step;
    rec.cum_bytes = first[r].cum_bytes;
    for (const RunMetrics& m : out.trials) {
      rec.mean_loss += m.history[r].mean_loss;
      rec.sq_dist += m.history[r].sq_dist;
      rec.consensus_var += m.history[r].consensus_var;
    }
    rec.mean_loss *= scale;
    rec.sq_dist *= scale;
    rec.consensus_var *= scale;
    out.mean_history[r] = rec;
  }
  for (const RunMetrics& m : out.trials) {
    out.mean_final_model_loss += m.final_model_loss;
    out.mean_final_worker_loss += m.final_mean_worker_loss;
    out.mean_final_sq_dist += m.final_sq_dist;
    out.mean_init_sq_dist += m.init_sq_dist;
  }
  out.mean_final_model_loss *= scale;
  out.mean_final_worker_loss *= scale;
  out.mean_final_sq_dist *= scale;
  out.mean_init_sq_dist *= scale;
  out.total_bytes = out.trials[0].total_bytes;
  out.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

std::string history_csv(std::span<const StepRecord> rows) {
  std::string out = "step,mean_loss,sq_dist,consensus_var,cum_bytes\n";
  for (const StepRecord& row : rows) {
    append_number(out, row.step);
    out.push_back(',');
    append_number(out, row.mean_loss);
    out.push_back(',');
    append_number(out, row.sq_dist);
    out.push_back(',');
    append_number(out, row.consensus_var);
    out.push_back(',');
    append_number(out, row.cum_bytes);
    out.push_back('\n');
  }
  return out;
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream file(path, std::ios::binary);
  if (!file) throw std::runtime_error("cannot open '" + path + "' for writing");
  file << content;
  if (!file) throw std::runtime_error("failed writing '" + path + "'");
}

int cmd_run(const std::string& spec_path, const std::string& out_dir,
            const CliOverrides& overrides) {
  return guard([&] {
    const LoadedSpec loaded = load(spec_path, overrides);
    execute_runs(loaded.spec, *loaded.oracle, out_dir);
    return 0;
  });
}

int cmd_compare(const std::string& spec_path, const std::string& out_dir,
                const CliOverrides& overrides) {
  return guard([&] {
    const LoadedSpec loaded = load(spec_path, overrides);
    if (loaded.spec.runs.size() < 2) {
      throw std::invalid_argument("spec: compare needs at least two entries under 'runs'");
    }
    execute_runs(loaded.spec, *loaded.oracle, out_dir);
    return 0;
  });
}

int cmd_bound_check(const std::string& spec_path, const std::string& out_dir,
                    const CliOverrides& overrides) {
  return guard([&] {
    const LoadedSpec loaded = load(spec_path, overrides);
    const ExperimentSpec& spec = loaded.spec;
    if (spec.runs.size() != 1) {
      throw std::invalid_argument("spec: bound-check needs exactly one run entry");
    }
    const NamedRun& run = spec.runs.front();
    if (run.config.algorithm != Algorithm::SimpleMa) {
      throw std::invalid_argument("spec: bound-check requires the simple-ma algorithm");
    }
    if (spec.objective.kind != "quadratic") {
      throw std::invalid_argument("spec: bound-check requires the quadratic objective");
    }
    if (run.config.alpha.decay != 1.0) {
      throw std::invalid_argument("spec: bound-check requires a constant step size (decay = 1)");
    }
    if (spec.trials < 30) {
      throw std::invalid_argument("spec: bound-check needs at least 30 trials");
    }

    const auto outputs = execute_runs(spec, *loaded.oracle, out_dir);
    const TrialSet& set = outputs.front().set;

    BoundParams params;
    const auto curvature = loaded.oracle->curvature();
    if (!curvature) throw std::invalid_argument("spec: objective does not expose curvature");
    params.mu = curvature->mu;
    params.lipschitz = curvature->lipschitz;
    params.alpha = run.config.alpha.initial;
    params.workers = run.config.workers;
    params.sigma2 = loaded.oracle->noise_variance();
    params.init_sq_dist = set.mean_init_sq_dist;

    const BoundCheckReport report = check_bound(set.trials, params);
    json doc;
    doc["params"] = {{"mu", params.mu},           {"lipschitz", params.lipschitz},
                     {"alpha", params.alpha},     {"workers", params.workers},
                     {"sigma2", params.sigma2},   {"init_sq_dist", params.init_sq_dist}};
    doc["slack"] = report.slack;
    doc["rho"] = report.rho;
    doc["bias"] = report.bias;
    doc["trials"] = report.trials;
    doc["pass_fraction"] = report.pass_fraction;
    doc["steady_state_mean"] = report.steady_state_mean;
    doc["pass"] = report.pass;
    json rows = json::array();
    for (const BoundCheckRow& row : report.rows) {
      rows.push_back({{"step", row.step},
                      {"observed", row.observed},
                      {"bound", row.bound},
                      {"pass", row.pass}});
    }
    doc["rows"] = std::move(rows);
    write_text_file((std::filesystem::path(out_dir) / "bound_report.json").string(),
                    doc.dump(2) + "\n");
    std::fputs(format_bound_report(report).c_str(), stdout);
    return report.pass ? 0 : 1;
  });
}

}  // namespace gossipsim
