#include "gossipsim/worker.hpp"

#include <cmath>
#include <stdexcept>

#include "gossipsim/errors.hpp"

namespace gossipsim {

void validate(const BmufParams& params) {
  if (!(params.eta >= 0.0 && params.eta < 1.0)) {
    throw std::invalid_argument("bmuf: eta must lie in [0, 1)");
  }
  if (!(params.zeta > 0.0)) {
    throw std::invalid_argument("bmuf: zeta must be > 0");
  }
}

void local_step(WorkerState& state, std::span<const double> grad, double alpha,
                std::int64_t step) {
  if (grad.size() != state.theta.size()) {
    throw std::invalid_argument("local_step: gradient dimension mismatch");
  }
  ensure_finite(grad, step, "gradient");
  for (std::size_t j = 0; j < grad.size(); ++j) {
    state.theta[j] -= alpha * grad[j];
  }
}

void gossip_average(std::span<const double> own,
                    std::span<const std::span<const double>> neighbor_values,
                    std::span<double> out) {
  if (own.size() != out.size()) {
    throw std::invalid_argument("gossip_average: length mismatch");
  }
  for (std::size_t j = 0; j < out.size(); ++j) out[j] = own[j];
  for (const auto& nv : neighbor_values) {
    if (nv.size() != out.size()) {
      throw std::invalid_argument("gossip_average: length mismatch");
    }
    for (std::size_t j = 0; j < out.size(); ++j) out[j] += nv[j];
  }
  const double scale = static_cast<double>(neighbor_values.size() + 1);
  for (std::size_t j = 0; j < out.size(); ++j) out[j] /= scale;
}

void bmuf_filter(WorkerState& state, const ComponentLayout& layout, std::size_t comp,
                 std::span<const double> avg, const BmufParams& params) {
  const Component& c = layout.component(comp);
  if (avg.size() != c.length) {
    throw std::invalid_argument("bmuf_filter: averaged component length mismatch");
  }
  const double eta = params.eta;
  const double zeta = params.zeta;
  for (std::size_t j = 0; j < c.length; ++j) {
    const std::size_t idx = c.offset + j;
    const double delta_old = state.delta[idx];
    const double g = avg[j] - state.anchors[idx];
    state.g_slot[idx] = g;
    state.delta[idx] = eta * delta_old + zeta * g;
    // omega + Delta, grouped so that at eta=0, zeta=1 it collapses to avg
    // exactly and the filter matches ma_update bit for bit.
    state.omega[idx] =
        zeta * avg[j] + (eta * delta_old + (state.omega[idx] - zeta * state.anchors[idx]));
    state.theta[idx] = state.omega[idx] + eta * state.delta[idx];
    state.anchors[idx] = state.theta[idx];
  }
}

void ma_update(WorkerState& state, const ComponentLayout& layout, std::size_t comp,
               std::span<const double> avg) {
  const Component& c = layout.component(comp);
  if (avg.size() != c.length) {
    throw std::invalid_argument("ma_update: averaged component length mismatch");
  }
  for (std::size_t j = 0; j < c.length; ++j) {
    const std::size_t idx = c.offset + j;
    state.theta[idx] = avg[j];
    state.anchors[idx] = avg[j];
  }
}

}  // namespace gossipsim
