#include "gossipsim/objectives.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <Eigen/Dense>

#include "gossipsim/rng.hpp"

namespace gossipsim {
namespace {

std::vector<double> build_eigenvalues(const QuadraticOracle::Options& options) {
  if (!options.eigenvalues.empty()) {
    for (double lambda : options.eigenvalues) {
      if (!(lambda > 0.0)) {
        throw std::invalid_argument("quadratic eigenvalues must be positive");
      }
    }
    return options.eigenvalues;
  }
  if (options.dim == 0) {
    throw std::invalid_argument("quadratic dim must be positive");
  }
  if (!(options.eig_min > 0.0) || options.eig_max < options.eig_min) {
    throw std::invalid_argument("quadratic eigenvalue range invalid");
  }
  std::vector<double> eigenvalues(options.dim);
  if (options.dim == 1) {
    eigenvalues[0] = options.eig_min;
    return eigenvalues;
  }
  const double n1 = static_cast<double>(options.dim - 1);
  for (std::size_t j = 0; j < options.dim; ++j) {
    const double frac = static_cast<double>(j) / n1;
    if (options.log_spaced) {
      eigenvalues[j] =
          options.eig_min * std::pow(options.eig_max / options.eig_min, frac);
    } else {
      eigenvalues[j] = options.eig_min + frac * (options.eig_max - options.eig_min);
    }
  }
  eigenvalues.back() = options.eig_max;  // pin the endpoint against pow rounding
  return eigenvalues;
}

// Haar-ish rotation from the QR factorization of a seeded Gaussian matrix,
// with the customary sign fix so the distribution does not collapse.
Eigen::MatrixXd random_rotation(std::size_t dim, std::uint64_t seed) {
  RngStream stream = RngStream::keyed(seed, StreamKind::RotationMatrix);
  Eigen::MatrixXd raw(dim, dim);
  for (std::size_t r = 0; r < dim; ++r) {
    for (std::size_t c = 0; c < dim; ++c) {
      raw(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = stream.next_gaussian();
    }
  }
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(raw);
  Eigen::MatrixXd q = qr.householderQ();
  Eigen::MatrixXd rmat = qr.matrixQR().triangularView<Eigen::Upper>();
  for (std::size_t c = 0; c < dim; ++c) {
    const auto idx = static_cast<Eigen::Index>(c);
    if (rmat(idx, idx) < 0.0) {
      q.col(idx) = -q.col(idx);
    }
  }
  return q;
}

double sigmoid(double z) {
  if (z >= 0.0) {
    return 1.0 / (1.0 + std::exp(-z));
  }
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// log(1 + exp(-m)) without overflow for large |m|.
double logistic_loss_term(double margin) {
  if (margin > 0.0) {
    return std::log1p(std::exp(-margin));
  }
  return -margin + std::log1p(std::exp(margin));
}

}  // namespace

QuadraticOracle::QuadraticOracle(Options options)
    : eigenvalues_(build_eigenvalues(options)), sigma2_(options.sigma2) {
  if (sigma2_ < 0.0) {
    throw std::invalid_argument("quadratic sigma2 must be non-negative");
  }
  const std::size_t d = eigenvalues_.size();
  mu_ = *std::min_element(eigenvalues_.begin(), eigenvalues_.end());
  lipschitz_ = *std::max_element(eigenvalues_.begin(), eigenvalues_.end());

  Eigen::MatrixXd a;
  if (options.identity_rotation) {
    a = Eigen::MatrixXd::Zero(d, d);
    for (std::size_t j = 0; j < d; ++j) {
      a(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(j)) = eigenvalues_[j];
    }
  } else {
    const Eigen::MatrixXd q = random_rotation(d, options.rotation_seed);
    Eigen::VectorXd lam(d);
    for (std::size_t j = 0; j < d; ++j) {
      lam(static_cast<Eigen::Index>(j)) = eigenvalues_[j];
    }
    a = q * lam.asDiagonal() * q.transpose();
    a = 0.5 * (a + a.transpose());  // restore exact symmetry
  }
  matrix_.resize(d * d);
  for (std::size_t r = 0; r < d; ++r) {
    for (std::size_t c = 0; c < d; ++c) {
      matrix_[r * d + c] = a(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
    }
  }

  if (!options.optimum.empty()) {
    if (options.optimum.size() != d) {
      throw std::invalid_argument("quadratic optimum has wrong dimension");
    }
    theta_star_ = options.optimum;
  } else {
    theta_star_.resize(d);
    RngStream stream = RngStream::keyed(options.optimum_seed, StreamKind::OptimumVector);
    for (std::size_t j = 0; j < d; ++j) {
      theta_star_[j] = stream.next_gaussian();
    }
  }
}

void QuadraticOracle::noiseless_grad(std::span<const double> theta,
                                     std::span<double> out) const {
  const std::size_t d = eigenvalues_.size();
  if (theta.size() != d || out.size() != d) {
    throw std::invalid_argument("quadratic gradient dimension mismatch");
  }
  // g = A (theta - theta*), manual row-major matvec for reproducibility.
  for (std::size_t r = 0; r < d; ++r) {
    double acc = 0.0;
    const double* row = matrix_.data() + r * d;
    for (std::size_t c = 0; c < d; ++c) {
      acc += row[c] * (theta[c] - theta_star_[c]);
    }
    out[r] = acc;
  }
}

void QuadraticOracle::grad(std::span<const double> theta, const BatchKey& key,
                           std::span<double> out) const {
  noiseless_grad(theta, out);
  if (sigma2_ == 0.0) {
    return;
  }
  const std::size_t d = eigenvalues_.size();
  // Isotropic noise with per-coordinate variance sigma2 / d, so the total
  // E[xi^T xi] equals sigma2 exactly.
  const double sd = std::sqrt(sigma2_ / static_cast<double>(d));
  RngStream stream = RngStream::keyed(key.seed, StreamKind::GradientNoise, key.worker,
                                      static_cast<std::uint64_t>(key.step));
  for (std::size_t j = 0; j < d; ++j) {
    out[j] += sd * stream.next_gaussian();
  }
}

double QuadraticOracle::loss(std::span<const double> theta) const {
  const std::size_t d = eigenvalues_.size();
  if (theta.size() != d) {
    throw std::invalid_argument("quadratic loss dimension mismatch");
  }
  // 1/2 (theta - theta*)^T A (theta - theta*)
  double total = 0.0;
  for (std::size_t r = 0; r < d; ++r) {
    double acc = 0.0;
    const double* row = matrix_.data() + r * d;
    for (std::size_t c = 0; c < d; ++c) {
      acc += row[c] * (theta[c] - theta_star_[c]);
    }
    total += (theta[r] - theta_star_[r]) * acc;
  }
  return 0.5 * total;
}

LogisticOracle::LogisticOracle(Options options)
    : dim_(options.dim), batch_size_(options.batch_size), l2_(options.l2) {
  if (dim_ == 0 || options.num_examples == 0) {
    throw std::invalid_argument("logistic dataset must be non-empty");
  }
  if (batch_size_ == 0) {
    throw std::invalid_argument("logistic batch size must be positive");
  }
  if (!(l2_ > 0.0)) {
    throw std::invalid_argument("logistic l2 must be positive for strong convexity");
  }
  const std::size_t m = options.num_examples;
  features_.resize(m * dim_);
  labels_.resize(m);

  // Separable-ish synthetic data: a hidden direction plus Gaussian features.
  RngStream stream = RngStream::keyed(options.data_seed, StreamKind::Dataset);
  std::vector<double> hidden(dim_);
  for (std::size_t j = 0; j < dim_; ++j) {
    hidden[j] = stream.next_gaussian();
  }
  for (std::size_t i = 0; i < m; ++i) {
    double dot = 0.0;
    for (std::size_t j = 0; j < dim_; ++j) {
      const double x = stream.next_gaussian();
      features_[i * dim_ + j] = x;
      dot += x * hidden[j];
    }
    const double flip = stream.next_unit();
    double label = dot >= 0.0 ? 1.0 : -1.0;
    if (flip < 0.1) {
      label = -label;  // 10% label noise keeps the problem non-degenerate
    }
    labels_[i] = label;
  }

  // Full-batch Newton for the reference optimum. The ridge term keeps the
  // Hessian uniformly positive definite, so plain Newton converges fast.
  Eigen::VectorXd w = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dim_));
  const double inv_m = 1.0 / static_cast<double>(m);
  for (int iter = 0; iter < 100; ++iter) {
    Eigen::VectorXd grad_vec = l2_ * w;
    Eigen::MatrixXd hess = l2_ * Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(dim_),
                                                           static_cast<Eigen::Index>(dim_));
    for (std::size_t i = 0; i < m; ++i) {
      const double* row = features_.data() + i * dim_;
      double margin = 0.0;
      for (std::size_t j = 0; j < dim_; ++j) {
        margin += row[j] * w(static_cast<Eigen::Index>(j));
      }
      margin *= labels_[i];
      const double s = sigmoid(-margin);  // d loss / d margin = -s
      const double weight = inv_m * s;
      const double curv = inv_m * s * (1.0 - s);
      for (std::size_t j = 0; j < dim_; ++j) {
        grad_vec(static_cast<Eigen::Index>(j)) -= weight * labels_[i] * row[j];
      }
      for (std::size_t r = 0; r < dim_; ++r) {
        for (std::size_t c = 0; c < dim_; ++c) {
          hess(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) +=
              curv * row[r] * row[c];
        }
      }
    }
    const Eigen::VectorXd step = hess.ldlt().solve(grad_vec);
    w -= step;
    if (step.norm() < 1e-14) {
      break;
    }
  }
  reference_optimum_.resize(dim_);
  for (std::size_t j = 0; j < dim_; ++j) {
    reference_optimum_[j] = w(static_cast<Eigen::Index>(j));
  }
}

std::vector<std::size_t> LogisticOracle::shard_examples(std::uint32_t shard,
                                                        std::uint32_t shard_count) const {
  if (shard_count == 0 || shard >= shard_count) {
    throw std::invalid_argument("invalid shard index");
  }
  std::vector<std::size_t> rows;
  for (std::size_t i = shard; i < labels_.size(); i += shard_count) {
    rows.push_back(i);
  }
  if (rows.empty()) {
    throw std::invalid_argument("shard has no examples; reduce shard count");
  }
  return rows;
}

double LogisticOracle::example_margin(std::size_t row, std::span<const double> theta) const {
  const double* x = features_.data() + row * dim_;
  double dot = 0.0;
  for (std::size_t j = 0; j < dim_; ++j) {
    dot += x[j] * theta[j];
  }
  return labels_[row] * dot;
}

void LogisticOracle::add_example_grad(std::size_t row, std::span<const double> theta,
                                      double weight, std::span<double> out) const {
  const double s = sigmoid(-example_margin(row, theta));
  const double* x = features_.data() + row * dim_;
  const double coeff = -weight * s * labels_[row];
  for (std::size_t j = 0; j < dim_; ++j) {
    out[j] += coeff * x[j];
  }
}

void LogisticOracle::grad(std::span<const double> theta, const BatchKey& key,
                          std::span<double> out) const {
  if (theta.size() != dim_ || out.size() != dim_) {
    throw std::invalid_argument("logistic gradient dimension mismatch");
  }
  std::fill(out.begin(), out.end(), 0.0);
  // Sample batch_size rows (with replacement) from this worker's shard.
  const std::size_t total = labels_.size();
  const std::uint32_t shard_count = key.shard_count == 0 ? 1 : key.shard_count;
  const std::size_t shard_size = total / shard_count + (key.worker < total % shard_count ? 1 : 0);
  if (shard_size == 0) {
    throw std::invalid_argument("shard has no examples; reduce worker count");
  }
  RngStream stream = RngStream::keyed(key.seed, StreamKind::BatchSample, key.worker,
                                      static_cast<std::uint64_t>(key.step));
  const double weight = 1.0 / static_cast<double>(batch_size_);
  for (std::size_t b = 0; b < batch_size_; ++b) {
    const std::uint64_t pick = stream.next_below(shard_size);
    const std::size_t row = key.worker + pick * shard_count;  // round-robin layout
    add_example_grad(row, theta, weight, out);
  }
  for (std::size_t j = 0; j < dim_; ++j) {
    out[j] += l2_ * theta[j];
  }
}

void LogisticOracle::noiseless_grad(std::span<const double> theta,
                                    std::span<double> out) const {
  if (theta.size() != dim_ || out.size() != dim_) {
    throw std::invalid_argument("logistic gradient dimension mismatch");
  }
  std::fill(out.begin(), out.end(), 0.0);
  const double weight = 1.0 / static_cast<double>(labels_.size());
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    add_example_grad(i, theta, weight, out);
  }
  for (std::size_t j = 0; j < dim_; ++j) {
    out[j] += l2_ * theta[j];
  }
}

double LogisticOracle::loss(std::span<const double> theta) const {
  if (theta.size() != dim_) {
    throw std::invalid_argument("logistic loss dimension mismatch");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    total += logistic_loss_term(example_margin(i, theta));
  }
  total /= static_cast<double>(labels_.size());
  double ridge = 0.0;
  for (std::size_t j = 0; j < dim_; ++j) {
    ridge += theta[j] * theta[j];
  }
  return total + 0.5 * l2_ * ridge;
}

}  // namespace gossipsim
