#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "gossipsim/partition.hpp"

namespace gossipsim {

// Identity of one stochastic gradient draw. shard_count is the number of
// workers the data is split across; oracles without sharding ignore it.
struct BatchKey {
  std::uint64_t seed = 0;
  std::uint32_t worker = 0;
  std::uint32_t shard_count = 1;
  std::int64_t step = 0;
};

struct Curvature {
  double mu = 0.0;        // strong-convexity constant
  double lipschitz = 0.0; // gradient Lipschitz constant
};

// Stochastic gradient source. Immutable after construction; safe to share
// across threads.
class GradientOracle {
 public:
  virtual ~GradientOracle() = default;

  virtual std::size_t dim() const = 0;

  // Stochastic gradient at theta; deterministic given the key.
  virtual void grad(std::span<const double> theta, const BatchKey& key,
                    std::span<double> out) const = 0;

  // Exact gradient of the noiseless objective.
  virtual void noiseless_grad(std::span<const double> theta, std::span<double> out) const = 0;

  // Noiseless objective value.
  virtual double loss(std::span<const double> theta) const = 0;

  // Minimizer, when known (exact for the quadratic, a converged full-batch
  // reference for the logistic).
  virtual const ParameterVector* optimum() const { return nullptr; }

  virtual std::optional<Curvature> curvature() const { return std::nullopt; }

  // Bound on E[xi^T xi] of the gradient noise; exact for the quadratic.
  virtual double noise_variance() const { return 0.0; }
};

// f(theta) = 1/2 (theta - theta*)^T A (theta - theta*) with A built from a
// given eigenvalue list and a seeded random rotation, plus isotropic Gaussian
// gradient noise with total variance exactly sigma2. mu and the Lipschitz
// constant are the extreme eigenvalues by construction.
class QuadraticOracle : public GradientOracle {
 public:
  struct Options {
    std::size_t dim = 10;
    double eig_min = 1.0;
    double eig_max = 10.0;
    bool log_spaced = true;
    std::vector<double> eigenvalues;  // overrides dim/eig_min/eig_max when set
    double sigma2 = 0.0;
    bool identity_rotation = false;
    std::uint64_t rotation_seed = 2024;
    std::uint64_t optimum_seed = 99;
    std::vector<double> optimum;  // overrides optimum_seed when set
  };

  explicit QuadraticOracle(Options options);

  std::size_t dim() const override { return eigenvalues_.size(); }
  void grad(std::span<const double> theta, const BatchKey& key,
            std::span<double> out) const override;
  void noiseless_grad(std::span<const double> theta, std::span<double> out) const override;
  double loss(std::span<const double> theta) const override;
  const ParameterVector* optimum() const override { return &theta_star_; }
  std::optional<Curvature> curvature() const override { return Curvature{mu_, lipschitz_}; }
  double noise_variance() const override { return sigma2_; }

  const std::vector<double>& eigenvalues() const { return eigenvalues_; }

 private:
  std::vector<double> eigenvalues_;
  std::vector<double> matrix_;  // A, row-major dim x dim
  ParameterVector theta_star_;
  double sigma2_ = 0.0;
  double mu_ = 0.0;
  double lipschitz_ = 0.0;
};

// Ridge-regularized logistic regression on a synthetic dataset generated from
// a fixed seed. Gradient noise comes from mini-batch subsampling of the
// worker's shard; the reference optimum is solved by full-batch Newton at
// construction.
class LogisticOracle : public GradientOracle {
 public:
  struct Options {
    std::size_t dim = 10;
    std::size_t num_examples = 1024;
    std::size_t batch_size = 16;
    double l2 = 1e-2;
    std::uint64_t data_seed = 7;
  };

  explicit LogisticOracle(Options options);

  std::size_t dim() const override { return dim_; }
  void grad(std::span<const double> theta, const BatchKey& key,
            std::span<double> out) const override;
  void noiseless_grad(std::span<const double> theta, std::span<double> out) const override;
  double loss(std::span<const double> theta) const override;
  const ParameterVector* optimum() const override { return &reference_optimum_; }

  std::size_t num_examples() const { return labels_.size(); }
  // Round-robin shard membership: example j belongs to shard j % shard_count.
  std::vector<std::size_t> shard_examples(std::uint32_t shard, std::uint32_t shard_count) const;

 private:
  double example_margin(std::size_t row, std::span<const double> theta) const;
  void add_example_grad(std::size_t row, std::span<const double> theta, double weight,
                        std::span<double> out) const;

  std::size_t dim_ = 0;
  std::size_t batch_size_ = 0;
  double l2_ = 0.0;
  std::vector<double> features_;  // row-major num_examples x dim
  std::vector<double> labels_;    // +/-1
  ParameterVector reference_optimum_;
};

}  // namespace gossipsim
