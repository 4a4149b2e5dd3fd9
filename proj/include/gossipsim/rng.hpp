#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace gossipsim {

// Purpose tag baked into every stream key so draws for different uses can
// never collide, no matter how the identity integers line up.
enum class StreamKind : std::uint64_t {
  GradientNoise = 1,
  NeighborSample = 2,
  BatchSample = 3,
  InitPerturbation = 4,
  RotationMatrix = 5,
  OptimumVector = 6,
  Dataset = 7,
  TrialSeed = 8,
};

// Deterministic keyed random stream (splitmix64 core). The draw sequence is a
// pure function of the identity (seed, kind, a, b, c); replaying the same
// identity reproduces the same draws regardless of thread count or execution
// order.
class RngStream {
 public:
  static RngStream keyed(std::uint64_t seed, StreamKind kind, std::uint64_t a = 0,
                         std::uint64_t b = 0, std::uint64_t c = 0) {
    RngStream s;
    s.state_ = seed;
    const std::uint64_t fields[4] = {static_cast<std::uint64_t>(kind), a, b, c};
    for (std::uint64_t v : fields) {
      s.state_ = mix(s.state_ + 0x9E3779B97F4A7C15ull);
      s.state_ ^= mix(v + 0xD6E8FEB86659FD93ull);
    }
    return s;
  }

  std::uint64_t next_u64() {
    state_ += 0x9E3779B97F4A7C15ull;
    return mix(state_);
  }

  // Uniform in [0, 1).
  double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform in [0, bound) via the fixed-point multiply trick; bound > 0.
  std::uint64_t next_below(std::uint64_t bound) {
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(next_u64()) * bound) >> 64);
  }

  // Standard normal via Box-Muller. Consumes two words per pair; the second
  // value is cached so a stream yields a reproducible scalar sequence.
  double next_gaussian() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;  // (0, 1]
    const double u2 = next_unit();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

 private:
  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  std::uint64_t state_ = 0;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace gossipsim
