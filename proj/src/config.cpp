#include "gossipsim/config.hpp"

#include <fstream>
#include <set>
#include <stdexcept>

namespace gossipsim {
namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& message) { throw std::invalid_argument("spec: " + message); }

void require_keys(const json& obj, const char* context, const std::set<std::string>& allowed) {
  for (const auto& item : obj.items()) {
    if (allowed.find(item.key()) == allowed.end()) {
      fail(std::string("unknown key '") + item.key() + "' in " + context);
    }
  }
}

template <typename T>
T get_or(const json& obj, const char* key, T fallback) {
  const auto it = obj.find(key);
  if (it == obj.end()) return fallback;
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    fail(std::string("key '") + key + "' has the wrong type");
  }
}

std::vector<double> get_vector(const json& obj, const char* key) {
  const auto it = obj.find(key);
  if (it == obj.end()) return {};
  if (!it->is_array()) fail(std::string("key '") + key + "' must be an array of numbers");
  std::vector<double> out;
  out.reserve(it->size());
  for (const auto& v : *it) {
    if (!v.is_number()) fail(std::string("key '") + key + "' must be an array of numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

ObjectiveSpec parse_objective(const json& obj) {
  require_keys(obj, "objective",
               {"kind", "dim", "eig_min", "eig_max", "log_spaced", "eigenvalues", "sigma2",
                "identity_rotation", "rotation_seed", "optimum_seed", "optimum", "num_examples",
                "batch_size", "l2", "data_seed"});
  ObjectiveSpec spec;
  spec.kind = get_or<std::string>(obj, "kind", "quadratic");
  if (spec.kind == "quadratic") {
    auto& q = spec.quadratic;
    q.dim = get_or<std::size_t>(obj, "dim", q.dim);
    q.eig_min = get_or<double>(obj, "eig_min", q.eig_min);
    q.eig_max = get_or<double>(obj, "eig_max", q.eig_max);
    q.log_spaced = get_or<bool>(obj, "log_spaced", q.log_spaced);
    q.eigenvalues = get_vector(obj, "eigenvalues");
    q.sigma2 = get_or<double>(obj, "sigma2", q.sigma2);
    q.identity_rotation = get_or<bool>(obj, "identity_rotation", q.identity_rotation);
    q.rotation_seed = get_or<std::uint64_t>(obj, "rotation_seed", q.rotation_seed);
    q.optimum_seed = get_or<std::uint64_t>(obj, "optimum_seed", q.optimum_seed);
    q.optimum = get_vector(obj, "optimum");
    for (const char* key : {"num_examples", "batch_size", "l2", "data_seed"}) {
      if (obj.contains(key)) fail(std::string("key '") + key + "' does not apply to a quadratic objective");
    }
  } else if (spec.kind == "logistic") {
    auto& l = spec.logistic;
    l.dim = get_or<std::size_t>(obj, "dim", l.dim);
    l.num_examples = get_or<std::size_t>(obj, "num_examples", l.num_examples);
    l.batch_size = get_or<std::size_t>(obj, "batch_size", l.batch_size);
    l.l2 = get_or<double>(obj, "l2", l.l2);
    l.data_seed = get_or<std::uint64_t>(obj, "data_seed", l.data_seed);
    for (const char* key : {"eig_min", "eig_max", "log_spaced", "eigenvalues", "sigma2",
                            "identity_rotation", "rotation_seed", "optimum_seed", "optimum"}) {
      if (obj.contains(key)) fail(std::string("key '") + key + "' does not apply to a logistic objective");
    }
  } else {
    fail("objective kind must be 'quadratic' or 'logistic', got '" + spec.kind + "'");
  }
  return spec;
}

const std::set<std::string> kRunKeys = {
    "name",         "algorithm",   "workers",     "symmetric_degree",
    "fan_in",       "steps",       "seed",        "alpha",
    "bmuf",         "components",  "sync_periods", "init_spread",
    "theta0",       "match_total_batches"};

AlphaSchedule parse_alpha(const json& obj, AlphaSchedule base) {
  require_keys(obj, "alpha", {"initial", "decay", "interval"});
  base.initial = get_or<double>(obj, "initial", base.initial);
  base.decay = get_or<double>(obj, "decay", base.decay);
  base.interval = get_or<std::int64_t>(obj, "interval", base.interval);
  return base;
}

BmufParams parse_bmuf(const json& obj, BmufParams base) {
  require_keys(obj, "bmuf", {"eta", "zeta"});
  base.eta = get_or<double>(obj, "eta", base.eta);
  base.zeta = get_or<double>(obj, "zeta", base.zeta);
  return base;
}

// Either an explicit component list or a list of sync periods that splits the
// model into near-equal contiguous blocks.
std::vector<Component> parse_components(const json& obj, std::size_t dim,
                                        std::vector<Component> base) {
  const bool explicit_list = obj.contains("components");
  const bool by_periods = obj.contains("sync_periods");
  if (explicit_list && by_periods) fail("give either 'components' or 'sync_periods', not both");
  if (explicit_list) {
    const json& arr = obj.at("components");
    if (!arr.is_array() || arr.empty()) fail("'components' must be a non-empty array");
    std::vector<Component> components;
    for (const auto& entry : arr) {
      require_keys(entry, "components[]", {"name", "length", "sync_period"});
      Component c;
      c.name = get_or<std::string>(entry, "name",
                                   "block" + std::to_string(components.size()));
      if (!entry.contains("length")) fail("component entries need a 'length'");
      c.length = entry.at("length").get<std::size_t>();
      c.sync_period = get_or<std::int64_t>(entry, "sync_period", 1);
      components.push_back(std::move(c));
    }
    return components;
  }
  if (by_periods) {
    const json& arr = obj.at("sync_periods");
    if (!arr.is_array() || arr.empty()) fail("'sync_periods' must be a non-empty array");
    const std::size_t blocks = arr.size();
    if (blocks > dim) fail("more sync periods than model coordinates");
    std::vector<Component> components;
    for (std::size_t i = 0; i < blocks; ++i) {
      Component c;
      c.name = "block" + std::to_string(i);
      c.length = dim / blocks + (i < dim % blocks ? 1 : 0);
      c.sync_period = arr[i].get<std::int64_t>();
      components.push_back(std::move(c));
    }
    return components;
  }
  return base;
}

RunConfig parse_run_fields(const json& obj, RunConfig base, std::size_t dim) {
  base.workers = get_or<std::uint32_t>(obj, "workers", base.workers);
  base.symmetric_degree = get_or<std::uint32_t>(obj, "symmetric_degree", base.symmetric_degree);
  base.fan_in = get_or<std::uint32_t>(obj, "fan_in", base.fan_in);
  base.steps = get_or<std::int64_t>(obj, "steps", base.steps);
  base.seed = get_or<std::uint64_t>(obj, "seed", base.seed);
  base.init_spread = get_or<double>(obj, "init_spread", base.init_spread);
  base.match_total_batches = get_or<bool>(obj, "match_total_batches", base.match_total_batches);
  if (obj.contains("algorithm")) {
    base.algorithm = parse_algorithm(obj.at("algorithm").get<std::string>());
  }
  if (obj.contains("alpha")) base.alpha = parse_alpha(obj.at("alpha"), base.alpha);
  if (obj.contains("bmuf")) base.bmuf = parse_bmuf(obj.at("bmuf"), base.bmuf);
  if (obj.contains("theta0")) base.theta0 = get_vector(obj, "theta0");
  base.components = parse_components(obj, dim, base.components);
  return base;
}

json components_json(const std::vector<Component>& components) {
  json arr = json::array();
  for (const Component& c : components) {
    arr.push_back({{"name", c.name}, {"length", c.length}, {"sync_period", c.sync_period}});
  }
  return arr;
}

json run_fields_json(const NamedRun& run) {
  const RunConfig& c = run.config;
  json obj;
  obj["name"] = run.name;
  obj["algorithm"] = algorithm_name(c.algorithm);
  obj["workers"] = c.workers;
  obj["symmetric_degree"] = c.symmetric_degree;
  obj["fan_in"] = c.fan_in;
  obj["steps"] = c.steps;
  obj["seed"] = c.seed;
  obj["alpha"] = {{"initial", c.alpha.initial}, {"decay", c.alpha.decay},
                  {"interval", c.alpha.interval}};
  obj["bmuf"] = {{"eta", c.bmuf.eta}, {"zeta", c.bmuf.zeta}};
  obj["components"] = components_json(c.components);
  obj["init_spread"] = c.init_spread;
  obj["theta0"] = c.theta0;  // empty array = origin
  obj["match_total_batches"] = c.match_total_batches;
  return obj;
}

}  // namespace

std::unique_ptr<GradientOracle> make_oracle(const ObjectiveSpec& spec) {
  if (spec.kind == "quadratic") return std::make_unique<QuadraticOracle>(spec.quadratic);
  if (spec.kind == "logistic") return std::make_unique<LogisticOracle>(spec.logistic);
  fail("objective kind must be 'quadratic' or 'logistic', got '" + spec.kind + "'");
}

ExperimentSpec parse_spec(const json& doc) {
  if (!doc.is_object()) fail("document root must be an object");
  std::set<std::string> allowed(kRunKeys.begin(), kRunKeys.end());
  allowed.insert({"objective", "trials", "threads", "runs"});
  require_keys(doc, "spec", allowed);

  ExperimentSpec spec;
  if (!doc.contains("objective")) fail("'objective' is required");
  spec.objective = parse_objective(doc.at("objective"));
  spec.trials = get_or<std::size_t>(doc, "trials", 1);
  spec.threads = get_or<unsigned>(doc, "threads", 1);
  if (spec.trials < 1) fail("'trials' must be >= 1");
  if (spec.threads < 1) fail("'threads' must be >= 1");

  // Objective dimension drives the default single-component layout and the
  // sync_periods block split.
  const std::unique_ptr<GradientOracle> oracle = make_oracle(spec.objective);
  const std::size_t dim = oracle->dim();

  RunConfig base;
  base.steps = 100;
  base.components = {Component{"all", 0, dim, 1}};
  base = parse_run_fields(doc, std::move(base), dim);

  if (doc.contains("runs")) {
    const json& arr = doc.at("runs");
    if (!arr.is_array() || arr.empty()) fail("'runs' must be a non-empty array");
    for (const auto& entry : arr) {
      require_keys(entry, "runs[]", kRunKeys);
      NamedRun run;
      run.config = parse_run_fields(entry, base, dim);
      run.name = get_or<std::string>(entry, "name", algorithm_name(run.config.algorithm));
      spec.runs.push_back(std::move(run));
    }
  } else {
    spec.runs.push_back(NamedRun{algorithm_name(base.algorithm), base});
  }

  std::set<std::string> names;
  for (const NamedRun& run : spec.runs) {
    if (!names.insert(run.name).second) fail("duplicate run name '" + run.name + "'");
    validate(run.config, *oracle);
  }
  return spec;
}

ExperimentSpec load_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail("cannot open spec file '" + path + "'");
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    fail("parse error in '" + path + "': " + e.what());
  }
  return parse_spec(doc);
}

nlohmann::json single_run_spec_json(const ExperimentSpec& spec, const NamedRun& run,
                                    const GradientOracle& oracle) {
  json doc;
  json objective;
  objective["kind"] = spec.objective.kind;
  if (spec.objective.kind == "quadratic") {
    const auto* quad = dynamic_cast<const QuadraticOracle*>(&oracle);
    if (quad == nullptr) throw std::logic_error("objective kind does not match oracle");
    const auto& q = spec.objective.quadratic;
    objective["eigenvalues"] = quad->eigenvalues();  // resolved, so reloads are exact
    objective["sigma2"] = q.sigma2;
    objective["identity_rotation"] = q.identity_rotation;
    objective["rotation_seed"] = q.rotation_seed;
    objective["optimum_seed"] = q.optimum_seed;
    objective["optimum"] = *quad->optimum();
  } else {
    const auto& l = spec.objective.logistic;
    objective["dim"] = l.dim;
    objective["num_examples"] = l.num_examples;
    objective["batch_size"] = l.batch_size;
    objective["l2"] = l.l2;
    objective["data_seed"] = l.data_seed;
  }
  doc["objective"] = std::move(objective);
  doc["trials"] = spec.trials;
  doc["threads"] = spec.threads;
  doc["runs"] = json::array({run_fields_json(run)});
  return doc;
}

}  // namespace gossipsim
