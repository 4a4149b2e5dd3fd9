#pragma once

#include <cstdint>
#include <vector>

#include "gossipsim/rng.hpp"

namespace gossipsim {

// Ring of node_count nodes where each node is connected to its
// symmetric_degree nearest nodes on both sides. Offsets that collide modulo
// node_count are deduplicated, so every node has min(2k, n-1) neighbors.
struct RingTopology {
  std::uint32_t node_count = 1;       // n
  std::uint32_t symmetric_degree = 0; // k
};

// Neighbor ids of `node`, deduplicated, self excluded, sorted ascending.
// Throws std::invalid_argument if node is out of range or node_count == 0.
std::vector<std::uint32_t> neighbors(const RingTopology& topo, std::uint32_t node);

// min(2k, n-1): the degree shared by every node.
std::size_t degree(const RingTopology& topo);

// Uniform sample of `count` distinct neighbors of `node`, sorted ascending.
// count == degree returns the full neighbor list; count > degree throws
// std::invalid_argument.
std::vector<std::uint32_t> sample_neighbors(const RingTopology& topo, std::uint32_t node,
                                            std::size_t count, RngStream& stream);

}  // namespace gossipsim
