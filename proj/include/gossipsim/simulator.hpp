#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "gossipsim/objectives.hpp"
#include "gossipsim/partition.hpp"
#include "gossipsim/threadpool.hpp"
#include "gossipsim/worker.hpp"

namespace gossipsim {

enum class Algorithm {
  GossipMa,
  GossipBmuf,
  LocalMa,
  LocalBmuf,
  SimpleMa,
  CentralBmuf,
  SingleSgd,
};

// Canonical names used in configs and CLI output (e.g. "gossip-bmuf").
const char* algorithm_name(Algorithm algorithm);
Algorithm parse_algorithm(const std::string& name);
bool uses_bmuf_filter(Algorithm algorithm);

// Piecewise-constant step size: `initial` multiplied by `decay` once every
// `interval` steps. decay = 1 gives a constant schedule.
struct AlphaSchedule {
  double initial = 0.1;
  double decay = 1.0;
  std::int64_t interval = 1;

  double at(std::int64_t t) const;  // t >= 1
};

void validate(const AlphaSchedule& schedule);

// One run = one trajectory of one algorithm from one seed.
struct RunConfig {
  Algorithm algorithm = Algorithm::GossipBmuf;
  std::uint32_t workers = 1;
  std::uint32_t symmetric_degree = 0;  // ring parameter: neighbors reach +/- this many hops
  std::uint32_t fan_in = 0;            // peers drawn per gossip exchange (q)
  std::vector<Component> components;   // lengths and sync periods; offsets derived
  BmufParams bmuf;
  AlphaSchedule alpha;
  std::int64_t steps = 0;
  std::uint64_t seed = 0;
  double init_spread = 0.0;  // stddev of per-worker start perturbation
  ParameterVector theta0;    // empty = origin
  bool match_total_batches = true;  // single-SGD runs steps * workers steps
  bool record_history = true;
};

// Throws std::invalid_argument naming the violated constraint.
void validate(const RunConfig& config, const GradientOracle& oracle);

struct StepRecord {
  std::int64_t step = 0;
  double mean_loss = 0.0;      // average worker loss
  double sq_dist = 0.0;        // sum over workers of |theta_i - theta*|^2
  double consensus_var = 0.0;  // mean over coordinates of across-worker variance
  std::uint64_t cum_bytes = 0; // payload bytes exchanged so far
};

// Runs of at most this many steps record a row per step; longer runs record
// only synchronization steps plus the final step, keeping trial sweeps cheap.
inline constexpr std::int64_t kDenseRecordLimit = 10000;

struct RunMetrics {
  std::vector<StepRecord> history;
  ParameterVector final_model;  // uniform average of final worker models
  double final_model_loss = 0.0;
  double final_mean_worker_loss = 0.0;
  double final_sq_dist = 0.0;
  double init_sq_dist = 0.0;
  std::uint64_t total_bytes = 0;
  std::int64_t steps_run = 0;
  double wall_seconds = 0.0;
};

// Observation points for tests and diagnostics. before_sync fires after the
// local gradient steps of a synchronization step, before any exchange;
// after_sync fires once the exchanged updates are applied; after_step fires
// at the end of every step.
struct EngineHooks {
  std::function<void(std::int64_t step, std::span<const WorkerState> states)> before_sync;
  std::function<void(std::int64_t step, std::span<const WorkerState> states)> after_sync;
  std::function<void(std::int64_t step, std::span<const WorkerState> states)> after_step;
};

// Payload bytes moved at step t (8-byte values; one directed transfer per
// received copy). Gossip and neighborhood runs move workers * fan_in copies
// of each due component; all-gather runs move workers * (workers - 1).
std::uint64_t comm_bytes_at_step(const RunConfig& config, const ComponentLayout& layout,
                                 std::int64_t t);

// Closed-form total of comm_bytes_at_step over t = 1..steps.
std::uint64_t total_comm_bytes(const RunConfig& config);

// Simulate one trajectory. `pool` may be null (serial). Results are identical
// for every pool size. Throws DivergenceError if a gradient or model leaves
// the finite range.
RunMetrics run(const RunConfig& config, const GradientOracle& oracle,
               ThreadPool* pool = nullptr, const EngineHooks* hooks = nullptr);

}  // namespace gossipsim
