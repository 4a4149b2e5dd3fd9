#include <doctest.h>

#include <cmath>
#include <set>
#include <vector>

#include "gossipsim/rng.hpp"

using gossipsim::RngStream;
using gossipsim::StreamKind;

TEST_CASE("identical identity reproduces the draw sequence") {
  RngStream a = RngStream::keyed(42, StreamKind::NeighborSample, 3, 1, 17);
  RngStream b = RngStream::keyed(42, StreamKind::NeighborSample, 3, 1, 17);
  for (int i = 0; i < 100; ++i) {
    CHECK(a.next_u64() == b.next_u64());
  }
  RngStream c = RngStream::keyed(42, StreamKind::GradientNoise, 3, 17);
  RngStream d = RngStream::keyed(42, StreamKind::GradientNoise, 3, 17);
  for (int i = 0; i < 100; ++i) {
    CHECK(c.next_gaussian() == d.next_gaussian());
  }
}

TEST_CASE("different identities give different streams") {
  // Any two keys differing in one field should not collide on their first
  // few draws; compare a small cross-section pairwise.
  std::vector<RngStream> streams;
  streams.push_back(RngStream::keyed(1, StreamKind::GradientNoise, 0, 0));
  streams.push_back(RngStream::keyed(2, StreamKind::GradientNoise, 0, 0));
  streams.push_back(RngStream::keyed(1, StreamKind::NeighborSample, 0, 0));
  streams.push_back(RngStream::keyed(1, StreamKind::GradientNoise, 1, 0));
  streams.push_back(RngStream::keyed(1, StreamKind::GradientNoise, 0, 1));
  streams.push_back(RngStream::keyed(1, StreamKind::GradientNoise, 0, 0, 1));
  std::set<std::uint64_t> firsts;
  for (RngStream& s : streams) firsts.insert(s.next_u64());
  CHECK(firsts.size() == streams.size());
}

TEST_CASE("unit draws live in [0,1) with uniform moments") {
  RngStream s = RngStream::keyed(7, StreamKind::Dataset);
  const int draws = 200000;
  double sum = 0.0;
  double sum_sq = 0.0;
  for (int i = 0; i < draws; ++i) {
    const double u = s.next_unit();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    sum += u;
    sum_sq += u * u;
  }
  const double mean = sum / draws;
  const double var = sum_sq / draws - mean * mean;
  CHECK(mean == doctest::Approx(0.5).epsilon(0.01));
  CHECK(var == doctest::Approx(1.0 / 12.0).epsilon(0.03));
}

TEST_CASE("bounded draws stay in range and cover it") {
  RngStream s = RngStream::keyed(9, StreamKind::BatchSample, 2, 5);
  std::vector<int> counts(7, 0);
  for (int i = 0; i < 70000; ++i) {
    const std::uint64_t v = s.next_below(7);
    REQUIRE(v < 7);
    ++counts[static_cast<std::size_t>(v)];
  }
  for (int c : counts) {
    CHECK(c == doctest::Approx(10000).epsilon(0.05));
  }
  RngStream t = RngStream::keyed(9, StreamKind::BatchSample, 2, 6);
  for (int i = 0; i < 100; ++i) CHECK(t.next_below(1) == 0);
}

TEST_CASE("gaussian draws have standard moments") {
  RngStream s = RngStream::keyed(11, StreamKind::GradientNoise, 0, 0);
  const int draws = 200000;
  double sum = 0.0;
  double sum_sq = 0.0;
  double sum_quad = 0.0;
  for (int i = 0; i < draws; ++i) {
    const double g = s.next_gaussian();
    sum += g;
    sum_sq += g * g;
    sum_quad += g * g * g * g;
  }
  const double mean = sum / draws;
  const double var = sum_sq / draws - mean * mean;
  CHECK(std::abs(mean) < 0.02);
  CHECK(var == doctest::Approx(1.0).epsilon(0.03));
  // kurtosis of a standard normal is 3
  CHECK(sum_quad / draws == doctest::Approx(3.0).epsilon(0.1));
}
