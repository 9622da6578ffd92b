#pragma once

#include "pdopt/core.hpp"
#include "pdopt/descent.hpp"
#include "pdopt/lagrangian.hpp"
#include "pdopt/montecarlo.hpp"
#include "pdopt/variants.hpp"

#include <functional>
#include <string>
#include <utility>
#include <vector>

namespace pdopt {

enum class Algorithm {
  gradient,
  nearest_newton,
  brouwer,
  threshold_gradient,
  klpq_threshold,
  klpq_exponential,
};

enum class ExpectationMode { exact, monte_carlo };

// Problem source: either an inline dense table (move_counts + values) or
// a named generator. Generators:
//   sum          G(x) = sum_i x_i
//   random-table i.i.d. uniform [0,1) entries from `seed`
//   congestion   shared move set; G depends only on which occupancy
//                multiplicities occur, so any move relabeling applied to
//                all agents at once leaves it unchanged
struct ProblemConfig {
  std::string generator;        // empty = inline table
  std::vector<int> move_counts;
  std::vector<double> values;   // inline table, row-major, agent 0 slowest
  std::vector<double> costs;    // congestion cost per occupancy count 1..n
  std::uint64_t seed = 0;
};

struct ScheduleConfig {
  double beta0 = 0.1;
  double beta_growth = 2.0;
  int inner_steps = 100;
  int rounds = 8;
  double grad_tolerance = 1e-6;  // exact-mode equilibration stop

  void validate() const;
};

struct RunConfig {
  ProblemConfig problem;
  Algorithm algorithm = Algorithm::gradient;
  ExpectationMode expectation_mode = ExpectationMode::exact;
  DescentConfig descent;
  ScheduleConfig schedule;
  long block_length = 100;
  double kappa_age = 1.0;
  int n_force = 3;
  VariantConfig variant;
  double lambda_mix = 0.5;                  // brouwer damping
  std::vector<std::vector<double>> init_q;  // empty = uniform start
  double init_jitter = 0.0;
  std::string out_dir = ".";
  std::string sample_log;  // empty = no per-sample log
  std::uint64_t master_seed = 0;

  void validate() const;
};

RunConfig parse_run_config(const std::string& json_text);
RunConfig load_run_config(const std::string& path);

struct TraceRow {
  int round = 0;
  int step = 0;
  double beta = 0.0;
  double lagrangian = 0.0;
  double expected_g = 0.0;
  double entropy = 0.0;
  double best_g = 0.0;
};

struct RunResult {
  std::vector<TraceRow> trace;
  VectorXi best_move;
  double best_g = 0.0;
  std::vector<VectorXd> final_q;
  double seconds = 0.0;
};

// Optional streaming consumers; rows arrive in emission order, so a file
// sink sees the partial trace even when the run aborts mid-way.
struct RunSinks {
  std::function<void(const TraceRow&)> trace;
  std::function<void(const JointSample&)> sample;
};

WorldUtility generate_problem(const ProblemConfig& problem);

// Per-agent move bijections.
struct SymmetryMap {
  std::vector<VectorXi> maps;
};

// q'_i(x_i) = q_i(T_i(x_i)). Throws unless every map is a permutation.
ProductDistribution apply_symmetry(const ProductDistribution& q,
                                   const SymmetryMap& symmetry);

// Outer annealing loop: equilibrate at fixed beta for up to inner_steps,
// raise beta geometrically, repeat. Monte-Carlo rounds interleave block
// sampling, forced coverage, aged estimation, and the configured update.
RunResult run(const RunConfig& config, const RunSinks& sinks = {});

// run() plus trace.jsonl / summary.json (and the optional sample log)
// under config.out_dir. A failing run still leaves the rows emitted so
// far in trace.jsonl.
RunResult run_and_write(const RunConfig& config);

std::string summary_json(const RunResult& result);

// Exact report for the `oracle` subcommand: E(G), entropy, Lagrangian at
// the configured start, plus the canonical marginals at beta0.
std::string oracle_report(const RunConfig& config);

// Benchmark suites ("aging", "bit-variance"); returns a JSON report.
std::string bench_report(const std::string& suite, std::uint64_t seed = 0);

const char* algorithm_name(Algorithm algorithm);

}  // namespace pdopt
