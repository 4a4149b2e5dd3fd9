#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace gossipsim {

// Raised when a parameter vector or gradient stops being finite. Carries the
// step index so a diverged run can be reported precisely.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(std::int64_t step, const std::string& detail)
      : std::runtime_error("numerical divergence at step " + std::to_string(step) + ": " + detail),
        step_(step) {}

  std::int64_t step() const noexcept { return step_; }

 private:
  std::int64_t step_;
};

}  // namespace gossipsim
