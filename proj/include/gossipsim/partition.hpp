#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace gossipsim {

using ParameterVector = std::vector<double>;

struct Component {
  std::string name;
  std::size_t offset = 0;
  std::size_t length = 0;
  std::int64_t sync_period = 1;  // H
};

// Contiguous, non-overlapping split of a flat parameter vector into named
// components, each with its own synchronization period. Immutable after
// construction and freely shareable.
class ComponentLayout {
 public:
  // Components must tile [0, dim) in order; lengths and periods must be >= 1.
  ComponentLayout(std::vector<Component> components, std::size_t dim);

  // Offsets derived from cumulative lengths.
  static ComponentLayout contiguous(std::vector<Component> components);

  std::size_t dim() const noexcept { return dim_; }
  std::size_t component_count() const noexcept { return components_.size(); }
  const Component& component(std::size_t i) const;
  const std::vector<Component>& components() const noexcept { return components_; }

  // Mutable/read-only window onto component i of vec; writes through the view
  // are visible in vec.
  std::span<double> view(ParameterVector& vec, std::size_t i) const;
  std::span<const double> view(const ParameterVector& vec, std::size_t i) const;

  // Indices of components with t mod H_i == 0. Requires t >= 1.
  std::vector<std::size_t> due_components(std::int64_t t) const;

 private:
  std::vector<Component> components_;
  std::size_t dim_ = 0;
};

// Throws DivergenceError naming `what` if any entry is NaN or infinite.
void ensure_finite(std::span<const double> values, std::int64_t step, const char* what);

}  // namespace gossipsim
