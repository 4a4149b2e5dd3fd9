#include "gossipsim/partition.hpp"

#include <cmath>
#include <stdexcept>

#include "gossipsim/errors.hpp"

namespace gossipsim {

ComponentLayout::ComponentLayout(std::vector<Component> components, std::size_t dim)
    : components_(std::move(components)), dim_(dim) {
  if (components_.empty()) {
    throw std::invalid_argument("layout: at least one component required");
  }
  std::size_t expected_offset = 0;
  for (const Component& c : components_) {
    if (c.length == 0) {
      throw std::invalid_argument("layout: component '" + c.name + "' has zero length");
    }
    if (c.sync_period < 1) {
      throw std::invalid_argument("layout: component '" + c.name + "' has period < 1");
    }
    if (c.offset != expected_offset) {
      throw std::invalid_argument("layout: component '" + c.name +
                                  "' breaks contiguous coverage at offset " +
                                  std::to_string(c.offset));
    }
    expected_offset += c.length;
  }
  if (expected_offset != dim_) {
    throw std::invalid_argument("layout: components cover " + std::to_string(expected_offset) +
                                " of " + std::to_string(dim_) + " coordinates");
  }
}

ComponentLayout ComponentLayout::contiguous(std::vector<Component> components) {
  std::size_t offset = 0;
  for (Component& c : components) {
    c.offset = offset;
    offset += c.length;
  }
  return ComponentLayout(std::move(components), offset);
}

const Component& ComponentLayout::component(std::size_t i) const {
  if (i >= components_.size()) {
    throw std::invalid_argument("layout: component index " + std::to_string(i) + " out of range");
  }
  return components_[i];
}

std::span<double> ComponentLayout::view(ParameterVector& vec, std::size_t i) const {
  const Component& c = component(i);
  if (vec.size() != dim_) {
    throw std::invalid_argument("layout: vector dimension mismatch");
  }
  return std::span<double>(vec.data() + c.offset, c.length);
}

std::span<const double> ComponentLayout::view(const ParameterVector& vec, std::size_t i) const {
  const Component& c = component(i);
  if (vec.size() != dim_) {
    throw std::invalid_argument("layout: vector dimension mismatch");
  }
  return std::span<const double>(vec.data() + c.offset, c.length);
}

std::vector<std::size_t> ComponentLayout::due_components(std::int64_t t) const {
  if (t < 1) {
    throw std::invalid_argument("due_components: step index must be >= 1");
  }
  std::vector<std::size_t> due;
  for (std::size_t i = 0; i < components_.size(); ++i) {
    if (t % components_[i].sync_period == 0) due.push_back(i);
  }
  return due;
}

void ensure_finite(std::span<const double> values, std::int64_t step, const char* what) {
  for (double v : values) {
    if (!std::isfinite(v)) {
      throw DivergenceError(step, what);
    }
  }
}

}  // namespace gossipsim
