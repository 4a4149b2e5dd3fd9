#include <doctest.h>

#include <algorithm>
#include <stdexcept>
#include <vector>

#include "gossipsim/topology.hpp"

using gossipsim::degree;
using gossipsim::neighbors;
using gossipsim::RingTopology;
using gossipsim::RngStream;
using gossipsim::sample_neighbors;
using gossipsim::StreamKind;

TEST_CASE("ring neighborhoods by direct substitution") {
  CHECK(neighbors(RingTopology{8, 1}, 0) == std::vector<std::uint32_t>{1, 7});
  CHECK(neighbors(RingTopology{8, 2}, 7) == std::vector<std::uint32_t>{0, 1, 5, 6});
  CHECK(neighbors(RingTopology{3, 2}, 0) == std::vector<std::uint32_t>{1, 2});
  CHECK(neighbors(RingTopology{1, 1}, 0).empty());
  CHECK(neighbors(RingTopology{2, 1}, 0) == std::vector<std::uint32_t>{1});
  CHECK(neighbors(RingTopology{4, 2}, 0) == std::vector<std::uint32_t>{1, 2, 3});
}

TEST_CASE("degree is min(2k, n-1)") {
  CHECK(degree(RingTopology{8, 2}) == 4);
  CHECK(degree(RingTopology{5, 2}) == 4);
  CHECK(degree(RingTopology{4, 2}) == 3);
  CHECK(degree(RingTopology{1, 3}) == 0);
  CHECK(degree(RingTopology{2, 1}) == 1);
  CHECK(degree(RingTopology{9, 0}) == 0);
}

TEST_CASE("out-of-range arguments are rejected") {
  CHECK_THROWS_AS(neighbors(RingTopology{4, 1}, 4), std::invalid_argument);
  CHECK_THROWS_AS(neighbors(RingTopology{0, 1}, 0), std::invalid_argument);
}

TEST_CASE("neighbor relation is symmetric, self-free, sorted, exact-sized") {
  for (std::uint32_t n = 2; n <= 24; ++n) {
    for (std::uint32_t k = 0; k <= 8; ++k) {
      const RingTopology topo{n, k};
      std::vector<std::vector<std::uint32_t>> lists(n);
      for (std::uint32_t i = 0; i < n; ++i) {
        lists[i] = neighbors(topo, i);
        REQUIRE(lists[i].size() == degree(topo));
        REQUIRE(std::is_sorted(lists[i].begin(), lists[i].end()));
        REQUIRE(std::adjacent_find(lists[i].begin(), lists[i].end()) == lists[i].end());
        REQUIRE(std::find(lists[i].begin(), lists[i].end(), i) == lists[i].end());
      }
      for (std::uint32_t i = 0; i < n; ++i) {
        for (std::uint32_t j : lists[i]) {
          REQUIRE(std::binary_search(lists[j].begin(), lists[j].end(), i));
        }
      }
    }
  }
}

TEST_CASE("sampling all neighbors returns the full list") {
  const RingTopology topo{8, 2};
  RngStream stream = RngStream::keyed(5, StreamKind::NeighborSample, 0, 0, 1);
  CHECK(sample_neighbors(topo, 3, 4, stream) == neighbors(topo, 3));
  RngStream empty_stream = RngStream::keyed(5, StreamKind::NeighborSample, 0, 0, 2);
  CHECK(sample_neighbors(topo, 3, 0, empty_stream).empty());
}

TEST_CASE("oversampling is a configuration error") {
  const RingTopology topo{8, 2};
  RngStream stream = RngStream::keyed(5, StreamKind::NeighborSample, 0, 0, 1);
  CHECK_THROWS_AS(sample_neighbors(topo, 3, 5, stream), std::invalid_argument);
}

TEST_CASE("samples are distinct sorted members, reproducible by identity") {
  const RingTopology topo{10, 3};
  const std::vector<std::uint32_t> pool = neighbors(topo, 4);
  for (std::uint64_t event = 1; event <= 50; ++event) {
    RngStream a = RngStream::keyed(99, StreamKind::NeighborSample, 4, 0, event);
    RngStream b = RngStream::keyed(99, StreamKind::NeighborSample, 4, 0, event);
    const auto sample = sample_neighbors(topo, 4, 3, a);
    CHECK(sample == sample_neighbors(topo, 4, 3, b));
    REQUIRE(sample.size() == 3);
    REQUIRE(std::is_sorted(sample.begin(), sample.end()));
    REQUIRE(std::adjacent_find(sample.begin(), sample.end()) == sample.end());
    for (std::uint32_t id : sample) {
      REQUIRE(std::find(pool.begin(), pool.end(), id) != pool.end());
    }
  }
}

TEST_CASE("each neighbor is picked with its hypergeometric marginal") {
  // n=8, k=2, q=2: every neighbor should appear in half the draws.
  const RingTopology topo{8, 2};
  const std::vector<std::uint32_t> pool = neighbors(topo, 0);
  std::vector<int> hits(pool.size(), 0);
  const int draws = 10000;
  for (int event = 0; event < draws; ++event) {
    RngStream stream =
        RngStream::keyed(123, StreamKind::NeighborSample, 0, 0, static_cast<std::uint64_t>(event));
    for (std::uint32_t id : sample_neighbors(topo, 0, 2, stream)) {
      const auto at = std::find(pool.begin(), pool.end(), id) - pool.begin();
      ++hits[static_cast<std::size_t>(at)];
    }
  }
  for (int h : hits) {
    CHECK(std::abs(h / static_cast<double>(draws) - 0.5) < 0.05);
  }
}
