#include "gossipsim/topology.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace gossipsim {

std::vector<std::uint32_t> neighbors(const RingTopology& topo, std::uint32_t node) {
  if (topo.node_count == 0) {
    throw std::invalid_argument("topology: node_count must be >= 1");
  }
  if (node >= topo.node_count) {
    throw std::invalid_argument("topology: node " + std::to_string(node) +
                                " out of range for n=" + std::to_string(topo.node_count));
  }
  const std::uint64_t n = topo.node_count;
  std::vector<std::uint32_t> ids;
  ids.reserve(2 * static_cast<std::size_t>(topo.symmetric_degree));
  for (std::uint64_t off = 1; off <= topo.symmetric_degree; ++off) {
    ids.push_back(static_cast<std::uint32_t>((node + off) % n));
    ids.push_back(static_cast<std::uint32_t>((node + n - off % n) % n));
  }
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  ids.erase(std::remove(ids.begin(), ids.end(), node), ids.end());
  return ids;
}

std::size_t degree(const RingTopology& topo) {
  if (topo.node_count == 0) {
    throw std::invalid_argument("topology: node_count must be >= 1");
  }
  return std::min<std::size_t>(2 * static_cast<std::size_t>(topo.symmetric_degree),
                               topo.node_count - 1);
}

std::vector<std::uint32_t> sample_neighbors(const RingTopology& topo, std::uint32_t node,
                                            std::size_t count, RngStream& stream) {
  std::vector<std::uint32_t> pool = neighbors(topo, node);
  if (count > pool.size()) {
    throw std::invalid_argument("sample_neighbors: requested " + std::to_string(count) +
                                " of " + std::to_string(pool.size()) + " neighbors");
  }
  // Partial Fisher-Yates; the prefix is the sample.
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(stream.next_below(pool.size() - i));
    std::swap(pool[i], pool[j]);
  }
  pool.resize(count);
  std::sort(pool.begin(), pool.end());
  return pool;
}

}  // namespace gossipsim
