#include "gossipsim/theory.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <string>

namespace gossipsim {

void validate(const BoundParams& params) {
  if (!(params.mu > 0.0)) {
    throw std::invalid_argument("bound: mu must be > 0");
  }
  if (!(params.lipschitz >= params.mu)) {
    throw std::invalid_argument("bound: lipschitz constant must be >= mu");
  }
  const double limit = 2.0 / (params.mu + params.lipschitz);
  if (!(params.alpha > 0.0) || params.alpha > limit) {
    throw std::invalid_argument("bound: step size must satisfy 0 < alpha <= 2/(mu + L), here <= " +
                                std::to_string(limit));
  }
  if (params.workers < 1) {
    throw std::invalid_argument("bound: workers must be >= 1");
  }
  if (!(params.sigma2 >= 0.0)) {
    throw std::invalid_argument("bound: sigma2 must be >= 0");
  }
  if (!(params.init_sq_dist >= 0.0) || !std::isfinite(params.init_sq_dist)) {
    throw std::invalid_argument("bound: init_sq_dist must be finite and >= 0");
  }
}

double contraction_rate(const BoundParams& params) {
  validate(params);
  return 1.0 - 2.0 * params.alpha * params.mu * params.lipschitz /
                   (params.mu + params.lipschitz);
}

double bias_term(const BoundParams& params) {
  validate(params);
  return static_cast<double>(params.workers) * (params.mu + params.lipschitz) /
         (2.0 * params.mu * params.lipschitz) * params.alpha * params.sigma2;
}

double ma_bound(const BoundParams& params, std::int64_t t) {
  if (t < 0) {
    throw std::invalid_argument("bound: step index must be >= 0");
  }
  const double rho = contraction_rate(params);
  return std::pow(rho, static_cast<double>(t)) * params.init_sq_dist + bias_term(params);
}

double simple_ma_steady_state(double alpha, double sigma2, std::uint32_t workers,
                              std::span<const double> eigenvalues) {
  if (!(alpha > 0.0)) {
    throw std::invalid_argument("steady state: alpha must be > 0");
  }
  if (!(sigma2 >= 0.0)) {
    throw std::invalid_argument("steady state: sigma2 must be >= 0");
  }
  if (workers < 1) {
    throw std::invalid_argument("steady state: workers must be >= 1");
  }
  if (eigenvalues.empty()) {
    throw std::invalid_argument("steady state: eigenvalue list must be non-empty");
  }
  double mode_sum = 0.0;
  for (double lambda : eigenvalues) {
    const double step = alpha * lambda;
    if (!(lambda > 0.0) || !(step < 2.0)) {
      throw std::invalid_argument("steady state: requires 0 < alpha*lambda < 2 per mode");
    }
    const double residual = 1.0 - step;
    mode_sum += residual * residual / (lambda * (2.0 - step));
  }
  const double n = static_cast<double>(workers);
  const double d = static_cast<double>(eigenvalues.size());
  return n * alpha * alpha * sigma2 + alpha * sigma2 / d * mode_sum;
}

BoundCheckReport check_bound(std::span<const RunMetrics> trials, const BoundParams& params,
                             double required_fraction) {
  validate(params);
  if (trials.size() < 30) {
    throw std::invalid_argument("check_bound: at least 30 trials required for a usable mean, got " +
                                std::to_string(trials.size()));
  }
  const std::size_t rows = trials[0].history.size();
  if (rows == 0) {
    throw std::invalid_argument("check_bound: trials carry no recorded steps");
  }
  for (const RunMetrics& m : trials) {
    if (m.history.size() != rows) {
      throw std::invalid_argument("check_bound: trials disagree on the recording schedule");
    }
  }

  BoundCheckReport report;
  report.trials = trials.size();
  report.slack = params.sigma2 == 0.0 ? 0.0 : 4.0 / std::sqrt(static_cast<double>(trials.size()));
  report.rho = contraction_rate(params);
  report.bias = bias_term(params);
  report.rows.resize(rows);

  std::size_t passed = 0;
  for (std::size_t r = 0; r < rows; ++r) {
    const std::int64_t step = trials[0].history[r].step;
    double mean = 0.0;
    for (const RunMetrics& m : trials) {
      if (m.history[r].step != step) {
        throw std::invalid_argument("check_bound: trials disagree on the recording schedule");
      }
      mean += m.history[r].sq_dist;
    }
    mean /= static_cast<double>(trials.size());
    BoundCheckRow& row = report.rows[r];
    row.step = step;
    row.observed = mean;
    row.bound = ma_bound(params, step);
    row.pass = mean <= row.bound * (1.0 + report.slack);
    if (row.pass) ++passed;
  }
  report.pass_fraction = static_cast<double>(passed) / static_cast<double>(rows);

  const std::size_t tail = rows < 10 ? 1 : rows / 10;
  double tail_sum = 0.0;
  for (std::size_t r = rows - tail; r < rows; ++r) tail_sum += report.rows[r].observed;
  report.steady_state_mean = tail_sum / static_cast<double>(tail);
  report.pass = report.pass_fraction >= required_fraction;
  return report;
}

std::string format_bound_report(const BoundCheckReport& report) {
  std::string out;
  char line[160];
  std::snprintf(line, sizeof(line), "trials=%zu slack=%.6f rho=%.6f bias=%.6g\n", report.trials,
                report.slack, report.rho, report.bias);
  out += line;
  std::snprintf(line, sizeof(line), "%10s %16s %16s %8s\n", "step", "observed", "bound", "pass");
  out += line;
  for (const BoundCheckRow& row : report.rows) {
    std::snprintf(line, sizeof(line), "%10lld %16.8g %16.8g %8s\n",
                  static_cast<long long>(row.step), row.observed, row.bound,
                  row.pass ? "yes" : "NO");
    out += line;
  }
  std::snprintf(line, sizeof(line),
                "pass_fraction=%.4f steady_state_mean=%.8g verdict=%s\n", report.pass_fraction,
                report.steady_state_mean, report.pass ? "PASS" : "FAIL");
  out += line;
  return out;
}

}  // namespace gossipsim
