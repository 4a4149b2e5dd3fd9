#pragma once

#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "gossipsim/objectives.hpp"
#include "gossipsim/simulator.hpp"

namespace gossipsim {

// Which gradient oracle a spec file asks for, with both option sets carried
// so the echo can reproduce either kind.
struct ObjectiveSpec {
  std::string kind = "quadratic";  // "quadratic" | "logistic"
  QuadraticOracle::Options quadratic;
  LogisticOracle::Options logistic;
};

std::unique_ptr<GradientOracle> make_oracle(const ObjectiveSpec& spec);

struct NamedRun {
  std::string name;
  RunConfig config;
};

// A spec file: one objective, shared trial/thread counts, and one or more
// named runs (each a fully resolved RunConfig after inheritance).
struct ExperimentSpec {
  ObjectiveSpec objective;
  std::size_t trials = 1;
  unsigned threads = 1;
  std::vector<NamedRun> runs;
};

// Parses and validates a spec document. Unknown keys, missing required
// fields, and out-of-range values throw std::invalid_argument naming the
// offender. Run entries inherit every top-level run field and may override
// any of them.
ExperimentSpec parse_spec(const nlohmann::json& doc);
ExperimentSpec load_spec(const std::string& path);

// Complete single-run spec document (defaults made explicit, eigenvalues and
// optimum resolved) whose reload reproduces the run byte for byte.
nlohmann::json single_run_spec_json(const ExperimentSpec& spec, const NamedRun& run,
                                    const GradientOracle& oracle);

}  // namespace gossipsim
