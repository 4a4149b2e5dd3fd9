// Acceptance gate: ten checks, one PASS/FAIL line each. The process exits
// with the number of failed checks, so a zero exit means the gate is green.
//
// Usage: acceptance <path-to-simctl>
//
// Checks 7 and 10 shell out to the command-line tool; everything else drives
// the library directly.

#include <sys/wait.h>

#include <array>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "gossipsim/experiment.hpp"
#include "gossipsim/objectives.hpp"
#include "gossipsim/rng.hpp"
#include "gossipsim/simulator.hpp"
#include "gossipsim/theory.hpp"
#include "gossipsim/topology.hpp"
#include "reference_engine.hpp"

using namespace gossipsim;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string g_tool;
fs::path g_work;

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

bool bits_equal(double a, double b) {
  return std::bit_cast<std::uint64_t>(a) == std::bit_cast<std::uint64_t>(b);
}

bool bits_equal(const ParameterVector& a, const ParameterVector& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t j = 0; j < a.size(); ++j) {
    if (!bits_equal(a[j], b[j])) return false;
  }
  return true;
}

// Bit-level equality of everything a run reports.
bool same_outcome(const RunMetrics& a, const RunMetrics& b, std::string& why) {
  if (a.history.size() != b.history.size()) {
    why = "history row counts differ";
    return false;
  }
  for (std::size_t r = 0; r < a.history.size(); ++r) {
    const StepRecord& x = a.history[r];
    const StepRecord& y = b.history[r];
    if (x.step != y.step || x.cum_bytes != y.cum_bytes || !bits_equal(x.mean_loss, y.mean_loss) ||
        !bits_equal(x.sq_dist, y.sq_dist) || !bits_equal(x.consensus_var, y.consensus_var)) {
      why = "history row " + std::to_string(r) + " differs";
      return false;
    }
  }
  if (!bits_equal(a.final_model, b.final_model)) {
    why = "final models differ";
    return false;
  }
  if (!bits_equal(a.final_model_loss, b.final_model_loss) ||
      !bits_equal(a.final_mean_worker_loss, b.final_mean_worker_loss) ||
      !bits_equal(a.final_sq_dist, b.final_sq_dist) || a.total_bytes != b.total_bytes) {
    why = "final metrics differ";
    return false;
  }
  return true;
}

QuadraticOracle rotated_quadratic(std::size_t dim, double sigma2) {
  QuadraticOracle::Options options;
  options.dim = dim;
  options.eig_min = 1.0;
  options.eig_max = 10.0;
  options.sigma2 = sigma2;
  return QuadraticOracle(options);
}

int run_tool(const std::string& args) {
  const std::string command = g_tool + " " + args;
  const int status = std::system(command.c_str());
  if (status == -1) return -1;
  if (WIFEXITED(status)) return WEXITSTATUS(status);
  return -2;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << content;
}

// ---------------------------------------------------------------------------
// 1. Convergence bound on the noisy quadratic.

bool check_1(std::string& detail) {
  const auto start = std::chrono::steady_clock::now();
  const QuadraticOracle oracle = rotated_quadratic(10, 0.04);

  RunConfig config;
  config.algorithm = Algorithm::SimpleMa;
  config.workers = 4;
  config.components = {Component{"all", 0, 10, 1}};
  config.alpha.initial = 2.0 / 11.0;
  config.steps = 500;
  config.seed = 20240501;

  const TrialSet set = run_trials(config, oracle, 200);

  BoundParams params;
  params.mu = 1.0;
  params.lipschitz = 10.0;
  params.alpha = 2.0 / 11.0;
  params.workers = 4;
  params.sigma2 = 0.04;
  params.init_sq_dist = set.mean_init_sq_dist;

  const BoundCheckReport report = check_bound(set.trials, params, 0.95);
  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "pass_fraction=%.4f slack=%.4f steady=%.6g bias=%.6g (200 trials, %.1fs)",
                report.pass_fraction, report.slack, report.steady_state_mean, report.bias,
                seconds_since(start));
  detail = buf;
  return report.pass;
}

// ---------------------------------------------------------------------------
// 2. Steady-state level and its growth with worker count.

bool check_2(std::string& detail) {
  const auto start = std::chrono::steady_clock::now();
  const QuadraticOracle oracle = rotated_quadratic(10, 0.04);
  const double alpha = 2.0 / 11.0;

  std::vector<double> observed, expected;
  for (std::uint32_t n : {2u, 4u, 8u}) {
    RunConfig config;
    config.algorithm = Algorithm::SimpleMa;
    config.workers = n;
    config.components = {Component{"all", 0, 10, 1}};
    config.alpha.initial = alpha;
    config.steps = 500;
    config.seed = 20240502;

    const TrialSet set = run_trials(config, oracle, 200);
    const std::size_t rows = set.mean_history.size();
    const std::size_t tail = rows / 10;
    double sum = 0.0;
    for (std::size_t r = rows - tail; r < rows; ++r) sum += set.mean_history[r].sq_dist;
    observed.push_back(sum / static_cast<double>(tail));
    expected.push_back(simple_ma_steady_state(alpha, 0.04, n, oracle.eigenvalues()));
  }

  bool ok = true;
  for (std::size_t i = 0; i < 3; ++i) {
    if (std::abs(observed[i] / expected[i] - 1.0) > 0.15) ok = false;
  }
  const double r42 = observed[1] / observed[0];
  const double r84 = observed[2] / observed[1];
  if (r42 < 1.4 || r42 > 2.6 || r84 < 1.4 || r84 > 2.6) ok = false;

  char buf[240];
  std::snprintf(buf, sizeof(buf),
                "steady n=2:%.3g/%.3g n=4:%.3g/%.3g n=8:%.3g/%.3g (obs/oracle) ratios %.3f,%.3f "
                "(%.1fs)",
                observed[0], expected[0], observed[1], expected[1], observed[2], expected[2], r42,
                r84, seconds_since(start));
  detail = buf;
  return ok;
}

// ---------------------------------------------------------------------------
// 3. Zero-momentum filtering equals plain averaging, bit for bit.

bool check_3(std::string& detail) {
  const QuadraticOracle oracle = rotated_quadratic(10, 0.04);

  RunConfig config;
  config.algorithm = Algorithm::GossipBmuf;
  config.workers = 8;
  config.symmetric_degree = 2;
  config.fan_in = 2;
  config.components = {Component{"head", 0, 5, 8}, Component{"tail", 0, 5, 32}};
  config.bmuf = BmufParams{0.0, 1.0};
  config.alpha.initial = 0.05;
  config.steps = 1000;
  config.seed = 31337;
  config.init_spread = 0.5;

  RunConfig plain = config;
  plain.algorithm = Algorithm::GossipMa;

  std::string why;
  if (!same_outcome(run(config, oracle), run(plain, oracle), why)) {
    detail = why;
    return false;
  }
  detail = "eta=0 run indistinguishable from plain averaging over 1000 steps";
  return true;
}

// ---------------------------------------------------------------------------
// 4. Pulling the whole neighborhood equals the fixed-neighborhood variants.

bool check_4(std::string& detail) {
  const QuadraticOracle oracle = rotated_quadratic(10, 0.04);

  RunConfig gossip;
  gossip.algorithm = Algorithm::GossipMa;
  gossip.workers = 8;
  gossip.symmetric_degree = 2;
  gossip.fan_in = 4;  // q = 2p = full degree
  gossip.components = {Component{"head", 0, 5, 8}, Component{"tail", 0, 5, 32}};
  gossip.alpha.initial = 0.05;
  gossip.steps = 500;
  gossip.seed = 777;
  gossip.init_spread = 0.5;

  RunConfig local = gossip;
  local.algorithm = Algorithm::LocalMa;
  std::string why;
  if (!same_outcome(run(gossip, oracle), run(local, oracle), why)) {
    detail = "plain averaging: " + why;
    return false;
  }

  RunConfig gossip_f = gossip;
  gossip_f.algorithm = Algorithm::GossipBmuf;
  gossip_f.bmuf = BmufParams{0.9, 1.0};
  RunConfig local_f = gossip_f;
  local_f.algorithm = Algorithm::LocalBmuf;
  if (!same_outcome(run(gossip_f, oracle), run(local_f, oracle), why)) {
    detail = "filtered: " + why;
    return false;
  }

  detail = "q=2p matches the fixed neighborhood for both update rules";
  return true;
}

// ---------------------------------------------------------------------------
// 5. Optimized engine vs straight-line reference transcription.

bool check_5(std::string& detail) {
  QuadraticOracle::Options options;
  options.dim = 6;
  options.eig_min = 1.0;
  options.eig_max = 10.0;
  options.sigma2 = 0.04;
  const QuadraticOracle oracle(options);

  double worst = 0.0;
  for (Algorithm alg : {Algorithm::GossipBmuf, Algorithm::GossipMa}) {
    RunConfig config;
    config.algorithm = alg;
    config.workers = 4;
    config.symmetric_degree = 1;
    config.fan_in = 1;
    config.components = {Component{"head", 0, 3, 8}, Component{"tail", 0, 3, 32}};
    config.bmuf = BmufParams{0.9, 1.0};
    config.alpha.initial = 0.05;
    config.steps = 100;
    config.seed = 2025;
    config.init_spread = 0.5;

    const testing::ReferenceTrace trace = testing::reference_run(config, oracle);
    EngineHooks hooks;
    hooks.after_step = [&](std::int64_t t, std::span<const WorkerState> states) {
      const auto& expect = trace.thetas[static_cast<std::size_t>(t - 1)];
      for (std::size_t i = 0; i < states.size(); ++i) {
        for (std::size_t j = 0; j < states[i].theta.size(); ++j) {
          worst = std::max(worst, std::abs(states[i].theta[j] - expect[i][j]));
        }
      }
    };
    run(config, oracle, nullptr, &hooks);
  }

  char buf[120];
  std::snprintf(buf, sizeof(buf), "max |delta theta| = %.3g over 100 steps x 4 workers x 2 rules",
                worst);
  detail = buf;
  return worst <= 1e-12;
}

// ---------------------------------------------------------------------------
// 6. One worker reduces to plain SGD.

bool check_6(std::string& detail) {
  const QuadraticOracle oracle = rotated_quadratic(10, 0.04);

  RunConfig gossip;
  gossip.algorithm = Algorithm::GossipMa;
  gossip.workers = 1;
  gossip.symmetric_degree = 1;
  gossip.fan_in = 0;
  gossip.components = {Component{"all", 0, 10, 1}};
  gossip.alpha.initial = 0.05;
  gossip.steps = 200;
  gossip.seed = 555;
  gossip.init_spread = 0.3;

  RunConfig solo = gossip;
  solo.algorithm = Algorithm::SingleSgd;

  std::string why;
  if (!same_outcome(run(gossip, oracle), run(solo, oracle), why)) {
    detail = "gossip averaging: " + why;
    return false;
  }

  RunConfig simple = gossip;
  simple.algorithm = Algorithm::SimpleMa;
  RunConfig solo2 = simple;
  solo2.algorithm = Algorithm::SingleSgd;
  if (!same_outcome(run(simple, oracle), run(solo2, oracle), why)) {
    detail = "mean-step averaging: " + why;
    return false;
  }

  detail = "n=1 runs of both averaging families match the solo baseline bit for bit";
  return true;
}

// ---------------------------------------------------------------------------
// 7. Filtered averaging beats plain averaging on the transient-dominated
//    quadratic, via the comparison report of the command-line tool.

bool check_7(std::string& detail) {
  const auto start = std::chrono::steady_clock::now();
  const fs::path dir = g_work / "ordering";
  fs::create_directories(dir);

  const json spec{
      {"objective",
       {{"kind", "quadratic"}, {"dim", 10}, {"eig_min", 1e-3}, {"eig_max", 1.0},
        {"sigma2", 0.01}}},
      {"trials", 50},
      {"workers", 8},
      {"symmetric_degree", 2},
      {"fan_in", 2},
      {"steps", 2000},
      {"seed", 90210},
      {"alpha", {{"initial", 0.2}, {"decay", 0.9}, {"interval", 100}}},
      {"components", {{{"name", "all"}, {"length", 10}, {"sync_period", 8}}}},
      {"runs",
       {{{"name", "gossip-bmuf"}, {"algorithm", "gossip-bmuf"},
         {"bmuf", {{"eta", 0.9}, {"zeta", 1.0}}}},
        {{"name", "gossip-ma"}, {"algorithm", "gossip-ma"}}}}};
  write_file(dir / "spec.json", spec.dump(2) + "\n");

  const fs::path out = dir / "out";
  const int code = run_tool("compare --spec " + (dir / "spec.json").string() + " --out " +
                            out.string() + " --threads 1 > " + (dir / "log.txt").string() +
                            " 2>&1");
  if (code != 0) {
    detail = "compare subcommand exited with " + std::to_string(code);
    return false;
  }

  const json compare = json::parse(slurp(out / "compare.json"));
  double bmuf = 0.0, ma = 0.0;
  for (const auto& entry : compare.at("runs")) {
    if (entry.at("name") == "gossip-bmuf") bmuf = entry.at("final_model_loss_mean").get<double>();
    if (entry.at("name") == "gossip-ma") ma = entry.at("final_model_loss_mean").get<double>();
  }

  char buf[160];
  std::snprintf(buf, sizeof(buf), "final model loss %.6g (filtered) vs %.6g (plain), 50 trials (%.1fs)",
                bmuf, ma, seconds_since(start));
  detail = buf;
  return bmuf > 0.0 && ma > 0.0 && bmuf <= ma;
}

// ---------------------------------------------------------------------------
// 8. Lookahead identity theta - omega = eta * delta after every filter sync.

bool check_8(std::string& detail) {
  const QuadraticOracle oracle = rotated_quadratic(12, 0.04);

  RngStream stream = RngStream::keyed(424242, StreamKind::TrialSeed, 8);
  double worst_rel = 0.0;
  std::int64_t checks = 0;

  for (int round = 0; round < 10; ++round) {
    const Algorithm alg = std::array{Algorithm::GossipBmuf, Algorithm::LocalBmuf,
                                     Algorithm::CentralBmuf}[round % 3];
    RunConfig config;
    config.algorithm = alg;
    config.workers = 2 + static_cast<std::uint32_t>(stream.next_below(7));  // 2..8
    config.symmetric_degree = 1 + static_cast<std::uint32_t>(stream.next_below(3));
    const RingTopology topo{config.workers, config.symmetric_degree};
    config.fan_in = 1 + static_cast<std::uint32_t>(stream.next_below(degree(topo)));
    const std::size_t head = 4 + stream.next_below(5);  // 4..8 of 12
    const std::int64_t h0 = static_cast<std::int64_t>(1) << stream.next_below(4);  // 1,2,4,8
    const std::int64_t h1 = static_cast<std::int64_t>(2) << stream.next_below(3);  // 2,4,8
    config.components = {Component{"head", 0, head, h0}, Component{"tail", 0, 12 - head, h1}};
    config.bmuf.eta = 0.25 + 0.70 * stream.next_unit();   // [0.25, 0.95)
    config.bmuf.zeta = 0.5 + stream.next_unit();          // [0.5, 1.5)
    config.alpha.initial = 0.04;
    config.steps = 64;
    config.seed = 1000 + static_cast<std::uint64_t>(round);
    config.init_spread = 0.4;

    const ComponentLayout layout = ComponentLayout::contiguous(config.components);
    const double eta = config.bmuf.eta;
    EngineHooks hooks;
    hooks.after_sync = [&](std::int64_t t, std::span<const WorkerState> states) {
      for (std::size_t c : layout.due_components(t)) {
        const Component& comp = layout.component(c);
        for (const WorkerState& s : states) {
          for (std::size_t j = 0; j < comp.length; ++j) {
            const std::size_t idx = comp.offset + j;
            const double lhs = s.theta[idx] - s.omega[idx];
            const double rhs = eta * s.delta[idx];
            const double scale = std::max({1.0, std::abs(s.theta[idx]), std::abs(rhs)});
            worst_rel = std::max(worst_rel, std::abs(lhs - rhs) / scale);
            ++checks;
          }
        }
      }
    };
    run(config, oracle, nullptr, &hooks);
  }

  char buf[120];
  std::snprintf(buf, sizeof(buf), "worst relative residual %.3g over %lld coordinate checks",
                worst_rel, static_cast<long long>(checks));
  detail = buf;
  return checks > 0 && worst_rel <= 1e-12;
}

// ---------------------------------------------------------------------------
// 9. Exact communication accounting and the all-gather/gossip ratio.

bool check_9(std::string& detail) {
  const QuadraticOracle oracle = rotated_quadratic(10, 0.04);

  RunConfig gossip;
  gossip.algorithm = Algorithm::GossipBmuf;
  gossip.workers = 8;
  gossip.symmetric_degree = 2;
  gossip.fan_in = 2;
  gossip.components = {Component{"head", 0, 5, 16}, Component{"tail", 0, 5, 128}};
  gossip.alpha.initial = 0.05;
  gossip.steps = 1024;
  gossip.seed = 8888;

  RunConfig central = gossip;
  central.algorithm = Algorithm::CentralBmuf;

  const std::uint64_t gossip_total = run(gossip, oracle).total_bytes;
  const std::uint64_t central_total = run(central, oracle).total_bytes;

  // 64 + 8 sync events; 8 workers x {2, 7} copies x 5 doubles
  const std::uint64_t gossip_expected = 72ull * 8 * 2 * 5 * 8;   // 46080
  const std::uint64_t central_expected = 72ull * 8 * 7 * 5 * 8;  // 161280

  bool ok = gossip_total == gossip_expected && central_total == central_expected;
  ok = ok && total_comm_bytes(gossip) == gossip_expected;
  ok = ok && total_comm_bytes(central) == central_expected;
  ok = ok && central_total * 2 == gossip_total * 7;  // ratio exactly 3.5

  const ComponentLayout layout = ComponentLayout::contiguous(gossip.components);
  for (std::int64_t t : {16, 128, 1024}) {
    const std::uint64_t g = comm_bytes_at_step(gossip, layout, t);
    const std::uint64_t c = comm_bytes_at_step(central, layout, t);
    ok = ok && c * 2 == g * 7;
  }

  char buf[160];
  std::snprintf(buf, sizeof(buf), "gossip %llu bytes, all-gather %llu bytes, ratio 7/2",
                static_cast<unsigned long long>(gossip_total),
                static_cast<unsigned long long>(central_total));
  detail = buf;
  return ok;
}

// ---------------------------------------------------------------------------
// 10. Byte-identical CSVs for 1 vs 8 worker threads, via the tool.

bool check_10(std::string& detail) {
  const fs::path dir = g_work / "threads";
  fs::create_directories(dir);

  const json multi{
      {"objective",
       {{"kind", "quadratic"}, {"dim", 10}, {"eig_min", 1e-3}, {"eig_max", 1.0},
        {"sigma2", 0.01}}},
      {"trials", 6},
      {"workers", 8},
      {"symmetric_degree", 2},
      {"fan_in", 2},
      {"steps", 300},
      {"seed", 90210},
      {"alpha", {{"initial", 0.2}, {"decay", 0.9}, {"interval", 100}}},
      {"components", {{{"name", "all"}, {"length", 10}, {"sync_period", 8}}}},
      {"runs",
       {{{"name", "gossip-bmuf"}, {"algorithm", "gossip-bmuf"},
         {"bmuf", {{"eta", 0.9}, {"zeta", 1.0}}}},
        {{"name", "gossip-ma"}, {"algorithm", "gossip-ma"}}}}};
  write_file(dir / "multi.json", multi.dump(2) + "\n");

  const json single{{"objective",
                     {{"kind", "quadratic"}, {"dim", 10}, {"eig_min", 1.0}, {"eig_max", 10.0},
                      {"sigma2", 0.01}}},
                    {"trials", 1},
                    {"algorithm", "simple-ma"},
                    {"workers", 4},
                    {"steps", 250},
                    {"seed", 4711},
                    {"alpha", {{"initial", 0.1}}}};
  write_file(dir / "single.json", single.dump(2) + "\n");

  const struct {
    const char* spec;
    std::vector<std::string> csvs;
    bool compare_json;
  } cases[] = {
      {"multi.json", {"gossip-bmuf.csv", "gossip-ma.csv"}, true},
      {"single.json", {"simple-ma.csv"}, false},
  };

  for (const auto& c : cases) {
    const fs::path narrow = dir / (std::string(c.spec) + ".t1");
    const fs::path wide = dir / (std::string(c.spec) + ".t8");
    for (const auto& [out, threads] : {std::pair{narrow, "1"}, std::pair{wide, "8"}}) {
      const int code = run_tool("run --spec " + (dir / c.spec).string() + " --out " +
                                out.string() + " --threads " + threads + " > " +
                                (out.string() + ".log") + " 2>&1");
      if (code != 0) {
        detail = std::string(c.spec) + ": run subcommand exited with " + std::to_string(code);
        return false;
      }
    }
    for (const std::string& csv : c.csvs) {
      if (slurp(narrow / csv) != slurp(wide / csv)) {
        detail = std::string(c.spec) + ": " + csv + " differs between 1 and 8 threads";
        return false;
      }
    }
    if (c.compare_json && slurp(narrow / "compare.json") != slurp(wide / "compare.json")) {
      detail = std::string(c.spec) + ": compare.json differs between 1 and 8 threads";
      return false;
    }
  }

  detail = "all CSVs byte-identical across thread counts, two specs";
  return true;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::fprintf(stderr, "usage: %s <path-to-simctl>\n", argv[0]);
    return 64;
  }
  g_tool = argv[1];
  g_work = fs::temp_directory_path() / "gossipsim_acceptance";
  fs::remove_all(g_work);
  fs::create_directories(g_work);

  const struct {
    int id;
    const char* name;
    std::function<bool(std::string&)> body;
  } checks[] = {
      {1, "convergence bound", check_1},
      {2, "steady state grows with workers", check_2},
      {3, "zero-momentum filter equals averaging", check_3},
      {4, "full-neighborhood sampling degenerates", check_4},
      {5, "engine matches straight-line reference", check_5},
      {6, "single worker reduces to plain SGD", check_6},
      {7, "filtered beats plain averaging", check_7},
      {8, "lookahead identity after syncs", check_8},
      {9, "communication accounting exact", check_9},
      {10, "thread-count determinism", check_10},
  };

  int failures = 0;
  for (const auto& check : checks) {
    std::string detail;
    bool ok = false;
    try {
      ok = check.body(detail);
    } catch (const std::exception& e) {
      ok = false;
      detail = std::string("exception: ") + e.what();
    }
    std::printf("%s %d %s: %s\n", ok ? "PASS" : "FAIL", check.id, check.name, detail.c_str());
    std::fflush(stdout);
    if (!ok) ++failures;
  }
  return failures;
}
