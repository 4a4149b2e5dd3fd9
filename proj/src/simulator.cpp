#include "gossipsim/simulator.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "gossipsim/errors.hpp"
#include "gossipsim/rng.hpp"
#include "gossipsim/topology.hpp"

namespace gossipsim {
namespace {

void pfor(ThreadPool* pool, std::size_t count, const std::function<void(std::size_t)>& fn) {
  if (pool != nullptr) {
    pool->parallel_for(count, fn);
    return;
  }
  for (std::size_t i = 0; i < count; ++i) fn(i);
}

double sq_distance(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    const double diff = a[j] - b[j];
    acc += diff * diff;
  }
  return acc;
}

bool is_all_gather(Algorithm algorithm) {
  return algorithm == Algorithm::CentralBmuf || algorithm == Algorithm::SimpleMa;
}

bool is_full_neighborhood(Algorithm algorithm) {
  return algorithm == Algorithm::LocalMa || algorithm == Algorithm::LocalBmuf;
}

// Per-worker copies received for one component exchange.
std::uint64_t copies_per_worker(const RunConfig& config) {
  switch (config.algorithm) {
    case Algorithm::SingleSgd:
      return 0;
    case Algorithm::CentralBmuf:
    case Algorithm::SimpleMa:
      return config.workers - 1;
    case Algorithm::LocalMa:
    case Algorithm::LocalBmuf:
      return degree(RingTopology{config.workers, config.symmetric_degree});
    case Algorithm::GossipMa:
    case Algorithm::GossipBmuf:
      return config.fan_in;
  }
  throw std::logic_error("copies_per_worker: unhandled algorithm");
}

struct InitialStates {
  std::vector<WorkerState> states;
  double init_sq_dist = 0.0;
};

InitialStates make_states(const RunConfig& config, std::size_t dim, std::uint32_t worker_count,
                          const GradientOracle& oracle) {
  ParameterVector base = config.theta0;
  if (base.empty()) base.assign(dim, 0.0);
  InitialStates out;
  out.states.reserve(worker_count);
  for (std::uint32_t i = 0; i < worker_count; ++i) {
    ParameterVector start = base;
    if (config.init_spread > 0.0) {
      RngStream stream = RngStream::keyed(config.seed, StreamKind::InitPerturbation, i);
      for (std::size_t j = 0; j < dim; ++j) {
        start[j] += config.init_spread * stream.next_gaussian();
      }
    }
    out.states.emplace_back(i, start);
  }
  const ParameterVector* optimum = oracle.optimum();
  if (optimum != nullptr) {
    for (const WorkerState& s : out.states) {
      out.init_sq_dist += sq_distance(s.theta, *optimum);
    }
  } else {
    out.init_sq_dist = std::numeric_limits<double>::quiet_NaN();
  }
  return out;
}

// Scratch reused across steps so the hot loop is allocation-free.
struct Workspace {
  std::vector<ParameterVector> grads;
  std::vector<ParameterVector> snapshot;
  std::vector<ParameterVector> avg;
  ParameterVector shared_avg;
  ParameterVector mean_theta;
  std::vector<double> loss_slot;
  std::vector<double> dist_slot;
  std::vector<double> cons_slot;

  Workspace(std::size_t workers, std::size_t dim)
      : grads(workers, ParameterVector(dim)),
        snapshot(workers, ParameterVector(dim)),
        avg(workers, ParameterVector(dim)),
        shared_avg(dim),
        mean_theta(dim),
        loss_slot(workers),
        dist_slot(workers),
        cons_slot(workers) {}
};

// Uniform average of worker models, accumulated in worker order so the result
// is independent of thread count.
void mean_model(const std::vector<WorkerState>& states, ParameterVector& out) {
  out = states[0].theta;
  for (std::size_t i = 1; i < states.size(); ++i) {
    const ParameterVector& theta = states[i].theta;
    for (std::size_t j = 0; j < out.size(); ++j) out[j] += theta[j];
  }
  const double scale = static_cast<double>(states.size());
  for (std::size_t j = 0; j < out.size(); ++j) out[j] /= scale;
}

StepRecord record_step(std::int64_t t, const std::vector<WorkerState>& states,
                       const GradientOracle& oracle, std::uint64_t cum_bytes, ThreadPool* pool,
                       Workspace& ws) {
  const std::size_t n = states.size();
  const ParameterVector* optimum = oracle.optimum();
  pfor(pool, n, [&](std::size_t i) {
    ws.loss_slot[i] = oracle.loss(states[i].theta);
    ws.dist_slot[i] = optimum != nullptr
                          ? sq_distance(states[i].theta, *optimum)
                          : std::numeric_limits<double>::quiet_NaN();
  });
  mean_model(states, ws.mean_theta);
  pfor(pool, n, [&](std::size_t i) {
    ws.cons_slot[i] = sq_distance(states[i].theta, ws.mean_theta);
  });
  StepRecord rec;
  rec.step = t;
  rec.cum_bytes = cum_bytes;
  double loss_sum = 0.0;
  double dist_sum = 0.0;
  double cons_sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    loss_sum += ws.loss_slot[i];
    dist_sum += ws.dist_slot[i];
    cons_sum += ws.cons_slot[i];
  }
  rec.mean_loss = loss_sum / static_cast<double>(n);
  rec.sq_dist = dist_sum;
  const std::size_t dim = ws.mean_theta.size();
  rec.consensus_var = cons_sum / static_cast<double>(n * dim);
  return rec;
}

void finalize(RunMetrics& metrics, const std::vector<WorkerState>& states,
              const GradientOracle& oracle, ThreadPool* pool, Workspace& ws) {
  const std::size_t n = states.size();
  mean_model(states, metrics.final_model);
  metrics.final_model_loss = oracle.loss(metrics.final_model);
  const ParameterVector* optimum = oracle.optimum();
  double loss_sum = 0.0;
  double dist_sum = 0.0;
  pfor(pool, n, [&](std::size_t i) { ws.loss_slot[i] = oracle.loss(states[i].theta); });
  for (std::size_t i = 0; i < n; ++i) {
    loss_sum += ws.loss_slot[i];
    dist_sum += optimum != nullptr ? sq_distance(states[i].theta, *optimum)
                                   : std::numeric_limits<double>::quiet_NaN();
  }
  metrics.final_mean_worker_loss = loss_sum / static_cast<double>(n);
  metrics.final_sq_dist = dist_sum;
}

RunMetrics run_gossip_family(const RunConfig& config, const ComponentLayout& layout,
                             const GradientOracle& oracle, ThreadPool* pool,
                             const EngineHooks* hooks) {
  const std::uint32_t n = config.workers;
  const std::size_t dim = layout.dim();
  const RingTopology topo{n, config.symmetric_degree};
  const bool all_gather = is_all_gather(config.algorithm);
  const bool full_neighborhood = is_full_neighborhood(config.algorithm);
  const bool ma_rule =
      config.algorithm == Algorithm::GossipMa || config.algorithm == Algorithm::LocalMa;

  std::vector<std::vector<std::uint32_t>> neighbor_lists(n);
  if (!all_gather) {
    for (std::uint32_t i = 0; i < n; ++i) neighbor_lists[i] = neighbors(topo, i);
  }

  InitialStates init = make_states(config, dim, n, oracle);
  std::vector<WorkerState>& states = init.states;
  Workspace ws(n, dim);

  RunMetrics metrics;
  metrics.init_sq_dist = init.init_sq_dist;
  const bool dense = config.steps <= kDenseRecordLimit;

  std::uint64_t cum_bytes = 0;
  for (std::int64_t t = 1; t <= config.steps; ++t) {
    const double alpha_t = config.alpha.at(t);
    pfor(pool, n, [&](std::size_t i) {
      const BatchKey key{config.seed, static_cast<std::uint32_t>(i), n, t};
      oracle.grad(states[i].theta, key, ws.grads[i]);
      local_step(states[i], ws.grads[i], alpha_t, t);
      ensure_finite(states[i].theta, t, "model");
    });

    const std::vector<std::size_t> due = layout.due_components(t);
    if (!due.empty()) {
      if (hooks != nullptr && hooks->before_sync) {
        hooks->before_sync(t, std::span<const WorkerState>(states.data(), states.size()));
      }
      // Averaging reads a frozen snapshot of every model, so exchange results
      // cannot depend on the order workers are processed in.
      pfor(pool, n, [&](std::size_t i) { ws.snapshot[i] = states[i].theta; });

      if (all_gather) {
        for (std::size_t c : due) {
          const Component& comp = layout.component(c);
          for (std::size_t j = 0; j < comp.length; ++j) {
            const std::size_t idx = comp.offset + j;
            double acc = ws.snapshot[0][idx];
            for (std::uint32_t i = 1; i < n; ++i) acc += ws.snapshot[i][idx];
            ws.shared_avg[idx] = acc / static_cast<double>(n);
          }
        }
      } else {
        pfor(pool, n, [&](std::size_t i) {
          for (std::size_t c : due) {
            std::vector<std::uint32_t> partners;
            if (full_neighborhood) {
              partners = neighbor_lists[i];
            } else {
              RngStream stream =
                  RngStream::keyed(config.seed, StreamKind::NeighborSample,
                                   static_cast<std::uint64_t>(i), static_cast<std::uint64_t>(c),
                                   static_cast<std::uint64_t>(t));
              partners = sample_neighbors(topo, static_cast<std::uint32_t>(i), config.fan_in,
                                          stream);
            }
            std::vector<std::span<const double>> views;
            views.reserve(partners.size());
            for (std::uint32_t p : partners) views.push_back(layout.view(ws.snapshot[p], c));
            gossip_average(layout.view(ws.snapshot[i], c), views, layout.view(ws.avg[i], c));
          }
        });
      }

      pfor(pool, n, [&](std::size_t i) {
        for (std::size_t c : due) {
          const ParameterVector& source = all_gather ? ws.shared_avg : ws.avg[i];
          std::span<const double> avg_view = layout.view(source, c);
          if (ma_rule) {
            ma_update(states[i], layout, c, avg_view);
          } else {
            bmuf_filter(states[i], layout, c, avg_view, config.bmuf);
          }
        }
      });
      cum_bytes += comm_bytes_at_step(config, layout, t);
      if (hooks != nullptr && hooks->after_sync) {
        hooks->after_sync(t, std::span<const WorkerState>(states.data(), states.size()));
      }
    }

    if (config.record_history && (dense || !due.empty() || t == config.steps)) {
      metrics.history.push_back(record_step(t, states, oracle, cum_bytes, pool, ws));
    }
    if (hooks != nullptr && hooks->after_step) {
      hooks->after_step(t, std::span<const WorkerState>(states.data(), states.size()));
    }
  }

  metrics.total_bytes = cum_bytes;
  metrics.steps_run = config.steps;
  finalize(metrics, states, oracle, pool, ws);
  return metrics;
}

RunMetrics run_simple_ma(const RunConfig& config, const ComponentLayout& layout,
                         const GradientOracle& oracle, ThreadPool* pool,
                         const EngineHooks* hooks) {
  const std::uint32_t n = config.workers;
  const std::size_t dim = layout.dim();

  InitialStates init = make_states(config, dim, n, oracle);
  std::vector<WorkerState>& states = init.states;
  Workspace ws(n, dim);

  RunMetrics metrics;
  metrics.init_sq_dist = init.init_sq_dist;

  const std::uint64_t bytes_per_step =
      static_cast<std::uint64_t>(n) * (n - 1) * static_cast<std::uint64_t>(dim) * 8;

  std::uint64_t cum_bytes = 0;
  for (std::int64_t t = 1; t <= config.steps; ++t) {
    const double alpha_t = config.alpha.at(t);
    // Everyone gathers the current average, then steps from it.
    mean_model(states, ws.mean_theta);
    ensure_finite(ws.mean_theta, t, "model");
    pfor(pool, n, [&](std::size_t i) {
      const BatchKey key{config.seed, static_cast<std::uint32_t>(i), n, t};
      oracle.grad(ws.mean_theta, key, ws.grads[i]);
      ensure_finite(ws.grads[i], t, "gradient");
      for (std::size_t j = 0; j < dim; ++j) {
        states[i].theta[j] = ws.mean_theta[j] - alpha_t * ws.grads[i][j];
      }
    });
    cum_bytes += bytes_per_step;
    if (hooks != nullptr && hooks->after_sync) {
      hooks->after_sync(t, std::span<const WorkerState>(states.data(), states.size()));
    }
    if (config.record_history) {
      metrics.history.push_back(record_step(t, states, oracle, cum_bytes, pool, ws));
    }
    if (hooks != nullptr && hooks->after_step) {
      hooks->after_step(t, std::span<const WorkerState>(states.data(), states.size()));
    }
  }

  metrics.total_bytes = cum_bytes;
  metrics.steps_run = config.steps;
  finalize(metrics, states, oracle, pool, ws);
  return metrics;
}

RunMetrics run_single_sgd(const RunConfig& config, const ComponentLayout& layout,
                          const GradientOracle& oracle, ThreadPool* pool,
                          const EngineHooks* hooks) {
  const std::size_t dim = layout.dim();
  const std::int64_t total_steps =
      config.match_total_batches ? config.steps * static_cast<std::int64_t>(config.workers)
                                 : config.steps;

  InitialStates init = make_states(config, dim, 1, oracle);
  std::vector<WorkerState>& states = init.states;
  Workspace ws(1, dim);

  RunMetrics metrics;
  metrics.init_sq_dist = init.init_sq_dist;
  const bool dense = total_steps <= kDenseRecordLimit;

  for (std::int64_t t = 1; t <= total_steps; ++t) {
    const double alpha_t = config.alpha.at(t);
    const BatchKey key{config.seed, 0, 1, t};
    oracle.grad(states[0].theta, key, ws.grads[0]);
    local_step(states[0], ws.grads[0], alpha_t, t);
    ensure_finite(states[0].theta, t, "model");
    if (config.record_history &&
        (dense || !layout.due_components(t).empty() || t == total_steps)) {
      metrics.history.push_back(record_step(t, states, oracle, 0, pool, ws));
    }
    if (hooks != nullptr && hooks->after_step) {
      hooks->after_step(t, std::span<const WorkerState>(states.data(), states.size()));
    }
  }

  metrics.total_bytes = 0;
  metrics.steps_run = total_steps;
  finalize(metrics, states, oracle, pool, ws);
  return metrics;
}

}  // namespace

const char* algorithm_name(Algorithm algorithm) {
  switch (algorithm) {
    case Algorithm::GossipMa: return "gossip-ma";
    case Algorithm::GossipBmuf: return "gossip-bmuf";
    case Algorithm::LocalMa: return "local-ma";
    case Algorithm::LocalBmuf: return "local-bmuf";
    case Algorithm::SimpleMa: return "simple-ma";
    case Algorithm::CentralBmuf: return "central-bmuf";
    case Algorithm::SingleSgd: return "single-sgd";
  }
  throw std::logic_error("algorithm_name: unhandled algorithm");
}

Algorithm parse_algorithm(const std::string& name) {
  if (name == "gossip-ma") return Algorithm::GossipMa;
  if (name == "gossip-bmuf") return Algorithm::GossipBmuf;
  if (name == "local-ma") return Algorithm::LocalMa;
  if (name == "local-bmuf") return Algorithm::LocalBmuf;
  if (name == "simple-ma") return Algorithm::SimpleMa;
  if (name == "central-bmuf") return Algorithm::CentralBmuf;
  if (name == "single-sgd") return Algorithm::SingleSgd;
  throw std::invalid_argument("unknown algorithm '" + name + "'");
}

bool uses_bmuf_filter(Algorithm algorithm) {
  return algorithm == Algorithm::GossipBmuf || algorithm == Algorithm::LocalBmuf ||
         algorithm == Algorithm::CentralBmuf;
}

double AlphaSchedule::at(std::int64_t t) const {
  if (t < 1) {
    throw std::invalid_argument("alpha schedule: step index must be >= 1");
  }
  if (decay == 1.0) return initial;
  const std::int64_t drops = (t - 1) / interval;
  return initial * std::pow(decay, static_cast<double>(drops));
}

void validate(const AlphaSchedule& schedule) {
  if (!(schedule.initial > 0.0) || !std::isfinite(schedule.initial)) {
    throw std::invalid_argument("alpha schedule: initial step size must be positive");
  }
  if (!(schedule.decay > 0.0 && schedule.decay <= 1.0)) {
    throw std::invalid_argument("alpha schedule: decay must lie in (0, 1]");
  }
  if (schedule.interval < 1) {
    throw std::invalid_argument("alpha schedule: decay interval must be >= 1");
  }
}

void validate(const RunConfig& config, const GradientOracle& oracle) {
  if (config.workers < 1) {
    throw std::invalid_argument("config: workers must be >= 1");
  }
  if (config.steps < 1) {
    throw std::invalid_argument("config: steps must be >= 1");
  }
  const ComponentLayout layout = ComponentLayout::contiguous(config.components);
  if (layout.dim() != oracle.dim()) {
    throw std::invalid_argument("config: component lengths cover " +
                                std::to_string(layout.dim()) + " coordinates but the objective has " +
                                std::to_string(oracle.dim()));
  }
  validate(config.alpha);
  if (uses_bmuf_filter(config.algorithm)) {
    validate(config.bmuf);
  }
  if (!config.theta0.empty() && config.theta0.size() != oracle.dim()) {
    throw std::invalid_argument("config: theta0 dimension mismatch");
  }
  if (!(config.init_spread >= 0.0) || !std::isfinite(config.init_spread)) {
    throw std::invalid_argument("config: init_spread must be finite and >= 0");
  }
  if (config.algorithm == Algorithm::GossipMa || config.algorithm == Algorithm::GossipBmuf ||
      config.algorithm == Algorithm::LocalMa || config.algorithm == Algorithm::LocalBmuf) {
    const RingTopology topo{config.workers, config.symmetric_degree};
    neighbors(topo, 0);  // validates the ring parameters
    if ((config.algorithm == Algorithm::GossipMa || config.algorithm == Algorithm::GossipBmuf) &&
        config.fan_in > degree(topo)) {
      throw std::invalid_argument("config: fan_in exceeds the ring degree " +
                                  std::to_string(degree(topo)));
    }
  }
}

std::uint64_t comm_bytes_at_step(const RunConfig& config, const ComponentLayout& layout,
                                 std::int64_t t) {
  if (config.algorithm == Algorithm::SingleSgd) return 0;
  const std::uint64_t copies = copies_per_worker(config) * config.workers;
  if (config.algorithm == Algorithm::SimpleMa) {
    return copies * static_cast<std::uint64_t>(layout.dim()) * 8;
  }
  std::uint64_t bytes = 0;
  for (std::size_t c : layout.due_components(t)) {
    bytes += copies * static_cast<std::uint64_t>(layout.component(c).length) * 8;
  }
  return bytes;
}

std::uint64_t total_comm_bytes(const RunConfig& config) {
  if (config.algorithm == Algorithm::SingleSgd) return 0;
  const ComponentLayout layout = ComponentLayout::contiguous(config.components);
  const std::uint64_t copies = copies_per_worker(config) * config.workers;
  if (config.algorithm == Algorithm::SimpleMa) {
    return copies * static_cast<std::uint64_t>(layout.dim()) * 8 *
           static_cast<std::uint64_t>(config.steps);
  }
  std::uint64_t bytes = 0;
  for (const Component& comp : layout.components()) {
    const std::uint64_t rounds =
        static_cast<std::uint64_t>(config.steps / comp.sync_period);
    bytes += rounds * copies * static_cast<std::uint64_t>(comp.length) * 8;
  }
  return bytes;
}

RunMetrics run(const RunConfig& config, const GradientOracle& oracle, ThreadPool* pool,
               const EngineHooks* hooks) {
  validate(config, oracle);
  const ComponentLayout layout = ComponentLayout::contiguous(config.components);
  const auto start = std::chrono::steady_clock::now();
  RunMetrics metrics;
  switch (config.algorithm) {
    case Algorithm::SimpleMa:
      metrics = run_simple_ma(config, layout, oracle, pool, hooks);
      break;
    case Algorithm::SingleSgd:
      metrics = run_single_sgd(config, layout, oracle, pool, hooks);
      break;
    default:
      metrics = run_gossip_family(config, layout, oracle, pool, hooks);
      break;
  }
  metrics.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return metrics;
}

}  // namespace gossipsim
