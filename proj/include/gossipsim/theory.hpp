#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "gossipsim/simulator.hpp"

namespace gossipsim {

// Inputs to the averaged-SGD convergence bound for a strongly convex
// objective under a constant step size.
struct BoundParams {
  double mu = 0.0;         // strong-convexity constant
  double lipschitz = 0.0;  // gradient Lipschitz constant
  double alpha = 0.0;      // constant step size, 0 < alpha <= 2/(mu + lipschitz)
  std::uint32_t workers = 1;
  double sigma2 = 0.0;        // gradient noise variance bound
  double init_sq_dist = 0.0;  // |theta_0 - theta* 1|^2 of the stacked start
};

// Throws std::invalid_argument naming the violated constraint.
void validate(const BoundParams& params);

// rho = 1 - 2 alpha mu L / (mu + L); lies in [0, 1) under the step-size
// condition.
double contraction_rate(const BoundParams& params);

// Noise floor of the bound: workers * (mu + L) / (2 mu L) * alpha * sigma2.
double bias_term(const BoundParams& params);

// rho^t * init_sq_dist + bias_term; t >= 0, monotone non-increasing in t.
double ma_bound(const BoundParams& params, std::int64_t t);

// Exact stationary value of the trial-mean sum over workers of
// |theta_i - theta*|^2 for every-step averaging on a quadratic with the given
// eigenvalues and isotropic gradient noise of total variance sigma2:
//   n alpha^2 sigma2 + (alpha sigma2 / d) * sum_j (1-alpha lam_j)^2 /
//                                                 (lam_j (2 - alpha lam_j))
// Requires 0 < alpha lam_j < 2 for every eigenvalue (stability).
double simple_ma_steady_state(double alpha, double sigma2, std::uint32_t workers,
                              std::span<const double> eigenvalues);

struct BoundCheckRow {
  std::int64_t step = 0;
  double observed = 0.0;  // trial-mean sq_dist
  double bound = 0.0;
  bool pass = false;  // observed <= bound * (1 + slack)
};

struct BoundCheckReport {
  std::vector<BoundCheckRow> rows;
  double slack = 0.0;          // 4/sqrt(trials), or 0 when sigma2 = 0
  double pass_fraction = 0.0;  // fraction of steps passing
  double steady_state_mean = 0.0;  // observed mean over the last 10% of steps
  double rho = 0.0;
  double bias = 0.0;
  std::size_t trials = 0;
  bool pass = false;  // pass_fraction >= required_fraction
};

// Compares per-trial sq_dist histories against ma_bound. All trials must
// share the recording schedule; fewer than 30 trials is a statistical-power
// error (std::invalid_argument).
BoundCheckReport check_bound(std::span<const RunMetrics> trials, const BoundParams& params,
                             double required_fraction = 0.95);

// Fixed-width table of the report, one row per recorded step.
std::string format_bound_report(const BoundCheckReport& report);

}  // namespace gossipsim
