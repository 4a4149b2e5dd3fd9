#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "gossipsim/partition.hpp"

namespace gossipsim {

struct BmufParams {
  double eta = 0.9;   // block momentum, [0, 1)
  double zeta = 1.0;  // block learning rate, > 0
};

// Throws std::invalid_argument if eta or zeta is out of range.
void validate(const BmufParams& params);

// Per-node slots: the local model, the global-model slot, the momentum slot,
// the block-gradient slot, and per-coordinate anchors holding each component's
// value at its most recent synchronization.
struct WorkerState {
  std::uint32_t worker_id = 0;
  ParameterVector theta;
  ParameterVector omega;
  ParameterVector delta;
  ParameterVector g_slot;
  ParameterVector anchors;

  WorkerState() = default;
  WorkerState(std::uint32_t id, const ParameterVector& theta0)
      : worker_id(id),
        theta(theta0),
        omega(theta0),
        delta(theta0.size(), 0.0),
        g_slot(theta0.size(), 0.0),
        anchors(theta0) {}
};

// theta <- theta - alpha * grad over the full vector.
// Throws DivergenceError(step) if grad has non-finite entries.
void local_step(WorkerState& state, std::span<const double> grad, double alpha,
                std::int64_t step);

// Elementwise mean of own and the neighbor values, accumulated in the given
// order (callers pass neighbors sorted by node id so runs are reproducible
// across thread schedules). All spans must share out's length.
void gossip_average(std::span<const double> own,
                    std::span<const std::span<const double>> neighbor_values,
                    std::span<double> out);

// Blockwise filtering update on component `comp` only:
//   G <- avg - anchor, Delta <- eta*Delta + zeta*G, omega <- omega + Delta,
//   theta <- omega + eta*Delta, anchor <- theta.
// omega's and theta's sums are grouped so that eta=0, zeta=1 reproduces the
// plain averaging assignment bit for bit.
void bmuf_filter(WorkerState& state, const ComponentLayout& layout, std::size_t comp,
                 std::span<const double> avg, const BmufParams& params);

// theta <- avg on component `comp`; anchor follows.
void ma_update(WorkerState& state, const ComponentLayout& layout, std::size_t comp,
               std::span<const double> avg);

}  // namespace gossipsim
