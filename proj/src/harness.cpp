#include "pdopt/harness.hpp"

#include "pdopt/oracle.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

namespace pdopt {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

Algorithm parse_algorithm(const std::string& name) {
  if (name == "gradient") return Algorithm::gradient;
  if (name == "nearest-newton") return Algorithm::nearest_newton;
  if (name == "brouwer") return Algorithm::brouwer;
  if (name == "threshold-gradient") return Algorithm::threshold_gradient;
  if (name == "klpq-threshold") return Algorithm::klpq_threshold;
  if (name == "klpq-exponential") return Algorithm::klpq_exponential;
  throw ConfigError("unknown algorithm: " + name);
}

VariantKind parse_variant_kind(const std::string& name) {
  if (name == "none") return VariantKind::none;
  if (name == "percentile") return VariantKind::percentile;
  if (name == "transform") return VariantKind::transform;
  if (name == "threshold-gradient") return VariantKind::threshold_gradient;
  if (name == "klpq-threshold") return VariantKind::klpq_threshold;
  if (name == "klpq-exponential") return VariantKind::klpq_exponential;
  throw ConfigError("unknown variant kind: " + name);
}

}  // namespace

const char* algorithm_name(Algorithm algorithm) {
  switch (algorithm) {
    case Algorithm::gradient: return "gradient";
    case Algorithm::nearest_newton: return "nearest-newton";
    case Algorithm::brouwer: return "brouwer";
    case Algorithm::threshold_gradient: return "threshold-gradient";
    case Algorithm::klpq_threshold: return "klpq-threshold";
    case Algorithm::klpq_exponential: return "klpq-exponential";
  }
  return "?";
}

void ScheduleConfig::validate() const {
  if (beta0 < 0.0) throw ConfigError("beta0 must be >= 0");
  if (beta_growth < 1.0) throw ConfigError("beta_growth must be >= 1");
  if (inner_steps < 1) throw ConfigError("inner_steps must be >= 1");
  if (rounds < 0) throw ConfigError("rounds must be >= 0");
  if (grad_tolerance < 0.0) throw ConfigError("grad_tolerance must be >= 0");
}

void RunConfig::validate() const {
  descent.validate();
  schedule.validate();
  variant.validate();
  if (lambda_mix <= 0.0 || lambda_mix > 1.0)
    throw ConfigError("lambda_mix must lie in (0, 1]");
  if (kappa_age < 0.0) throw ConfigError("kappa_age must be >= 0");
  if (n_force < 0) throw ConfigError("n_force must be >= 0");
  if (init_jitter < 0.0) throw ConfigError("init_jitter must be >= 0");
  if (expectation_mode == ExpectationMode::monte_carlo && block_length < 1)
    throw ConfigError("monte-carlo mode needs block_length >= 1");
  if (variant.kind == VariantKind::percentile &&
      expectation_mode == ExpectationMode::exact)
    throw ConfigError("percentile restriction needs monte-carlo mode");
  const bool algorithm_is_variant =
      algorithm == Algorithm::threshold_gradient ||
      algorithm == Algorithm::klpq_threshold ||
      algorithm == Algorithm::klpq_exponential;
  const bool kind_is_algorithm = variant.kind == VariantKind::threshold_gradient ||
                                 variant.kind == VariantKind::klpq_threshold ||
                                 variant.kind == VariantKind::klpq_exponential;
  if (kind_is_algorithm) {
    if (!algorithm_is_variant ||
        std::string(algorithm_name(algorithm)) !=
            [&] {
              switch (variant.kind) {
                case VariantKind::threshold_gradient: return "threshold-gradient";
                case VariantKind::klpq_threshold: return "klpq-threshold";
                default: return "klpq-exponential";
              }
            }())
      throw ConfigError("variant kind conflicts with the configured algorithm");
  }
  if (variant.kind == VariantKind::percentile && algorithm_is_variant)
    throw ConfigError("percentile restriction applies to estimator-driven "
                      "algorithms only");
}

RunConfig parse_run_config(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad run config JSON: ") + e.what());
  }
  RunConfig config;
  try {
    if (doc.contains("problem")) {
      const json& p = doc["problem"];
      config.problem.generator = p.value("generator", std::string());
      if (p.contains("move_counts"))
        config.problem.move_counts = p["move_counts"].get<std::vector<int>>();
      if (p.contains("values"))
        config.problem.values = p["values"].get<std::vector<double>>();
      if (p.contains("costs"))
        config.problem.costs = p["costs"].get<std::vector<double>>();
      config.problem.seed = p.value("seed", std::uint64_t{0});
    }
    if (doc.contains("algorithm"))
      config.algorithm = parse_algorithm(doc["algorithm"].get<std::string>());
    if (doc.contains("expectation_mode")) {
      const auto mode = doc["expectation_mode"].get<std::string>();
      if (mode == "exact") {
        config.expectation_mode = ExpectationMode::exact;
      } else if (mode == "monte-carlo") {
        config.expectation_mode = ExpectationMode::monte_carlo;
      } else {
        throw ConfigError("unknown expectation_mode: " + mode);
      }
    }
    if (doc.contains("descent")) {
      const json& d = doc["descent"];
      config.descent.alpha = d.value("alpha", config.descent.alpha);
      config.descent.boundary_shrink =
          d.value("boundary_shrink", config.descent.boundary_shrink);
      config.descent.max_backtracks =
          d.value("max_backtracks", config.descent.max_backtracks);
      config.descent.epsilon_floor =
          d.value("epsilon_floor", config.descent.epsilon_floor);
    }
    if (doc.contains("schedule")) {
      const json& s = doc["schedule"];
      config.schedule.beta0 = s.value("beta0", config.schedule.beta0);
      config.schedule.beta_growth =
          s.value("beta_growth", config.schedule.beta_growth);
      config.schedule.inner_steps =
          s.value("inner_steps", config.schedule.inner_steps);
      config.schedule.rounds = s.value("rounds", config.schedule.rounds);
      config.schedule.grad_tolerance =
          s.value("grad_tolerance", config.schedule.grad_tolerance);
    }
    config.block_length = doc.value("block_length", config.block_length);
    config.kappa_age = doc.value("kappa_age", config.kappa_age);
    config.n_force = doc.value("n_force", config.n_force);
    if (doc.contains("variant")) {
      const json& v = doc["variant"];
      if (v.contains("kind"))
        config.variant.kind = parse_variant_kind(v["kind"].get<std::string>());
      config.variant.kappa_pct = v.value("kappa_pct", config.variant.kappa_pct);
      if (v.contains("threshold_k"))
        config.variant.threshold_k = v["threshold_k"].get<double>();
      config.variant.threshold_pct =
          v.value("threshold_pct", config.variant.threshold_pct);
      if (v.contains("smoothing")) {
        const auto smoothing = v["smoothing"].get<std::string>();
        if (smoothing == "heaviside") {
          config.variant.smoothing = Smoothing::heaviside;
        } else if (smoothing == "logistic") {
          config.variant.smoothing = Smoothing::logistic;
        } else {
          throw ConfigError("unknown smoothing: " + smoothing);
        }
      }
      config.variant.logistic_scale =
          v.value("logistic_scale", config.variant.logistic_scale);
      config.variant.transform_lambda =
          v.value("transform_lambda", config.variant.transform_lambda);
    }
    config.lambda_mix = doc.value("lambda_mix", config.lambda_mix);
    if (doc.contains("init_q"))
      config.init_q = doc["init_q"].get<std::vector<std::vector<double>>>();
    config.init_jitter = doc.value("init_jitter", config.init_jitter);
    config.out_dir = doc.value("out_dir", config.out_dir);
    config.sample_log = doc.value("sample_log", config.sample_log);
    config.master_seed = doc.value("master_seed", config.master_seed);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad run config field: ") + e.what());
  }
  config.validate();
  return config;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_run_config(buffer.str());
}

WorldUtility generate_problem(const ProblemConfig& problem) {
  if (problem.generator.empty()) {
    if (problem.move_counts.empty() || problem.values.empty())
      throw ConfigError("inline problem needs move_counts and values");
    CategoricalDomain domain(problem.move_counts);
    VectorXd values = Eigen::Map<const VectorXd>(
        problem.values.data(), static_cast<Eigen::Index>(problem.values.size()));
    return WorldUtility::from_table(std::move(domain), std::move(values));
  }

  CategoricalDomain domain(problem.move_counts);
  check_enumeration_guard(domain);
  const auto size = static_cast<Eigen::Index>(domain.joint_size());

  if (problem.generator == "sum") {
    VectorXd values(size);
    VectorXi move = VectorXi::Zero(domain.agent_count());
    Eigen::Index index = 0;
    do {
      values[index++] = static_cast<double>(move.sum());
    } while (advance_move(domain, move));
    return WorldUtility::from_table(std::move(domain), std::move(values));
  }

  if (problem.generator == "random-table") {
    RandomSource rng(problem.seed);
    VectorXd values(size);
    for (Eigen::Index i = 0; i < size; ++i) values[i] = rng.uniform01();
    return WorldUtility::from_table(std::move(domain), std::move(values));
  }

  if (problem.generator == "congestion") {
    const int agents = domain.agent_count();
    for (int count : domain.move_counts()) {
      if (count != domain.move_count(0))
        throw ConfigError("congestion needs a shared move set");
    }
    if (static_cast<int>(problem.costs.size()) != agents)
      throw ConfigError("congestion needs one cost per occupancy count 1..n");
    VectorXd values(size);
    VectorXi move = VectorXi::Zero(agents);
    std::vector<int> occupancy(static_cast<std::size_t>(domain.move_count(0)));
    Eigen::Index index = 0;
    do {
      std::fill(occupancy.begin(), occupancy.end(), 0);
      for (int i = 0; i < agents; ++i) occupancy[move[i]] += 1;
      // One cost per occupancy multiplicity that occurs anywhere.
      double g = 0.0;
      std::vector<bool> seen(static_cast<std::size_t>(agents) + 1, false);
      for (int m = 0; m < domain.move_count(0); ++m) {
        const int k = occupancy[m];
        if (k > 0 && !seen[k]) {
          seen[k] = true;
          g += problem.costs[static_cast<std::size_t>(k) - 1];
        }
      }
      values[index++] = g;
    } while (advance_move(domain, move));
    return WorldUtility::from_table(std::move(domain), std::move(values));
  }

  throw ConfigError("unknown generator: " + problem.generator);
}

ProductDistribution apply_symmetry(const ProductDistribution& q,
                                   const SymmetryMap& symmetry) {
  if (static_cast<int>(symmetry.maps.size()) != q.agent_count())
    throw ConfigError("symmetry map needs one bijection per agent");
  std::vector<VectorXd> factors;
  factors.reserve(q.agent_count());
  for (int i = 0; i < q.agent_count(); ++i) {
    const VectorXi& map = symmetry.maps[i];
    const int n = q.domain().move_count(i);
    if (map.size() != n)
      throw ConfigError("symmetry map arity mismatch");
    std::vector<bool> hit(static_cast<std::size_t>(n), false);
    for (int j = 0; j < n; ++j) {
      if (map[j] < 0 || map[j] >= n || hit[map[j]])
        throw ConfigError("symmetry map is not a permutation");
      hit[map[j]] = true;
    }
    VectorXd factor(n);
    for (int j = 0; j < n; ++j) factor[j] = q.factor(i)[map[j]];
    factors.push_back(std::move(factor));
  }
  return ProductDistribution(q.domain(), std::move(factors));
}

namespace {

ProductDistribution initial_distribution(const RunConfig& config,
                                         const CategoricalDomain& domain) {
  ProductDistribution q = ProductDistribution::uniform(domain);
  if (!config.init_q.empty()) {
    if (static_cast<int>(config.init_q.size()) != domain.agent_count())
      throw ConfigError("init_q needs one factor per agent");
    std::vector<VectorXd> factors;
    factors.reserve(config.init_q.size());
    for (const auto& row : config.init_q) {
      factors.push_back(Eigen::Map<const VectorXd>(
          row.data(), static_cast<Eigen::Index>(row.size())));
    }
    q = ProductDistribution(domain, std::move(factors));
  }
  if (config.init_jitter > 0.0) {
    RandomSource rng(config.master_seed, 0);
    std::vector<VectorXd> factors = q.factors();
    for (VectorXd& factor : factors) {
      for (Eigen::Index j = 0; j < factor.size(); ++j)
        factor[j] += config.init_jitter * (rng.uniform01() - 0.5);
    }
    q = project_interior(domain, std::move(factors),
                         config.descent.epsilon_floor);
  }
  return q;
}

// Smallest threshold with at least `fraction` of the q-mass strictly
// below it.
double exact_quantile_threshold(const WorldUtility& utility,
                                const ProductDistribution& q, double fraction) {
  check_enumeration_guard(q.domain());
  std::vector<std::pair<double, double>> mass;  // (value, probability)
  VectorXi move = VectorXi::Zero(q.agent_count());
  do {
    mass.emplace_back(utility(move), q.probability(move));
  } while (advance_move(q.domain(), move));
  std::sort(mass.begin(), mass.end());
  double cumulative = 0.0;
  for (const auto& [value, probability] : mass) {
    cumulative += probability;
    if (cumulative >= fraction)
      return std::nextafter(value, std::numeric_limits<double>::infinity());
  }
  return std::nextafter(mass.back().first,
                        std::numeric_limits<double>::infinity());
}

double sample_quantile_threshold(const std::vector<JointSample>& samples,
                                 double fraction) {
  std::vector<double> values;
  values.reserve(samples.size());
  for (const JointSample& sample : samples) {
    if (!sample.forced()) values.push_back(sample.world_value);
  }
  if (values.empty())
    throw ConfigError("threshold schedule needs at least one sample");
  std::sort(values.begin(), values.end());
  const auto rank = static_cast<std::size_t>(
      std::ceil(fraction * static_cast<double>(values.size())));
  const double v = values[std::min(values.size() - 1, rank == 0 ? 0 : rank - 1)];
  return std::nextafter(v, std::numeric_limits<double>::infinity());
}

class Runner {
 public:
  Runner(const RunConfig& config, const RunSinks& sinks)
      : config_(config),
        sinks_(sinks),
        world_(generate_problem(config.problem)),
        domain_(world_.domain()),
        utilities_(world_),
        exact_src_(utilities_),
        accumulator_(domain_),
        accumulator_f_(domain_),
        block_rng_(config.master_seed, 1),
        eval_rng_(config.master_seed, 2),
        q_(initial_distribution(config, domain_)) {
    if (config_.expectation_mode == ExpectationMode::exact)
      check_enumeration_guard(domain_);
    if (config_.variant.kind == VariantKind::transform) {
      transformed_world_ = transform_utility(world_, TransformKind::neg_exp,
                                             config_.variant.transform_lambda);
      utilities_f_ = PrivateUtilitySet(*transformed_world_);
      exact_src_f_ = ExactSource(*utilities_f_);
    }
  }

  RunResult operator()() {
    const auto start = std::chrono::steady_clock::now();
    double beta = config_.schedule.beta0;

    evaluate_candidate(sample_joint(q_, eval_rng_));
    emit_row(0, 0, beta);

    for (int round = 1; round <= config_.schedule.rounds; ++round) {
      reset_stall_tracking();
      for (int step = 1; step <= config_.schedule.inner_steps; ++step) {
        if (config_.expectation_mode == ExpectationMode::exact) {
          q_ = exact_step(beta);
        } else {
          q_ = monte_carlo_step(beta);
        }
        evaluate_candidate(sample_joint(q_, eval_rng_));
        const TraceRow& row = emit_row(round, step, beta);
        update_stall_tracking(row.lagrangian);
        if (equilibrated(beta)) break;
      }
      beta *= config_.schedule.beta_growth;
    }

    RunResult result;
    result.trace = std::move(trace_);
    result.best_move = best_move_;
    result.best_g = best_g_;
    result.final_q = q_.factors();
    result.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
            .count();
    return result;
  }

 private:
  bool transform_active() const { return transform_steps_left_ > 0; }

  const ExpectationSource& active_exact_source() const {
    return transform_active() ? static_cast<const ExpectationSource&>(*exact_src_f_)
                              : exact_src_;
  }

  const WorldUtility& active_world() const {
    return transform_active() ? *transformed_world_ : world_;
  }

  const AgingAccumulator& active_accumulator() const {
    return transform_active() ? accumulator_f_ : accumulator_;
  }

  ProductDistribution exact_step(double beta) {
    switch (config_.algorithm) {
      case Algorithm::gradient:
        return gradient_step(q_, active_exact_source(), beta, config_.descent);
      case Algorithm::nearest_newton:
        return nearest_newton_step(q_, active_exact_source(), beta,
                                   config_.descent);
      case Algorithm::brouwer:
        return brouwer_step(q_, active_exact_source(), beta, config_.lambda_mix);
      case Algorithm::threshold_gradient: {
        const double k = resolve_threshold_exact();
        ExactBitSource bits(active_world(), k, smoothing_scale());
        return threshold_gradient_step(q_, bits, beta, config_.descent.alpha,
                                       config_.descent.epsilon_floor);
      }
      case Algorithm::klpq_threshold:
        return klpq_threshold_step(q_, active_world(), resolve_threshold_exact(),
                                   config_.descent.epsilon_floor);
      case Algorithm::klpq_exponential:
        return klpq_exponential_step(q_, active_world(), beta,
                                     config_.descent.epsilon_floor);
    }
    throw ConfigError("unhandled algorithm");
  }

  ProductDistribution monte_carlo_step(double beta) {
    ++block_index_;
    BlockResult block = run_block(q_, utilities_, config_.block_length,
                                  block_index_, block_rng_);

    BlockStats stats = std::move(block.stats);
    if (config_.variant.kind == VariantKind::percentile) {
      const std::vector<JointSample> kept =
          percentile_filter(block.samples, config_.variant.kappa_pct);
      stats = BlockStats(domain_, block_index_);
      for (const JointSample& sample : kept) stats.add(sample);
    }

    std::vector<JointSample> forced =
        force_samples(q_, utilities_, stats.uncovered(), block_rng_,
                      config_.n_force, block_index_);
    for (const JointSample& sample : forced) stats.add(sample);

    accumulator_.absorb(stats, config_.kappa_age);
    if (transformed_world_) absorb_transformed(stats, block.samples, forced);

    for (const JointSample& sample : block.samples)
      evaluate_candidate_noeval(sample);
    for (const JointSample& sample : forced) evaluate_candidate_noeval(sample);

    switch (config_.algorithm) {
      case Algorithm::gradient:
        return gradient_step(q_, AgedSource(active_accumulator()), beta,
                             config_.descent);
      case Algorithm::nearest_newton:
        return nearest_newton_step(q_, AgedSource(active_accumulator()), beta,
                                   config_.descent);
      case Algorithm::brouwer:
        return brouwer_step(q_, AgedSource(active_accumulator()), beta,
                            config_.lambda_mix);
      case Algorithm::threshold_gradient: {
        const double k = resolve_threshold_mc(block.samples);
        std::vector<JointSample> combined = block.samples;
        combined.insert(combined.end(), forced.begin(), forced.end());
        SampleBitSource bits(combined, k, smoothing_scale());
        return threshold_gradient_step(q_, bits, beta, config_.descent.alpha,
                                       config_.descent.epsilon_floor);
      }
      case Algorithm::klpq_threshold: {
        const double k = resolve_threshold_mc(block.samples);
        std::vector<JointSample> combined = block.samples;
        combined.insert(combined.end(), forced.begin(), forced.end());
        return klpq_threshold_step(q_, combined, k,
                                   config_.descent.epsilon_floor);
      }
      case Algorithm::klpq_exponential: {
        std::vector<JointSample> combined = block.samples;
        combined.insert(combined.end(), forced.begin(), forced.end());
        return klpq_exponential_step(q_, combined, beta,
                                     config_.descent.epsilon_floor);
      }
    }
    throw ConfigError("unhandled algorithm");
  }

  void absorb_transformed(const BlockStats& stats,
                          const std::vector<JointSample>& samples,
                          const std::vector<JointSample>& forced) {
    const double lambda = config_.variant.transform_lambda;
    const auto f = [lambda](double g) { return -std::exp(-lambda * g); };
    BlockStats stats_f(domain_, stats.block_index());
    for (const JointSample& sample : samples) {
      JointSample mapped = sample;
      mapped.world_value = f(sample.world_value);
      for (Eigen::Index i = 0; i < mapped.agent_values.size(); ++i)
        mapped.agent_values[i] = f(mapped.agent_values[i]);
      stats_f.add(mapped);
    }
    for (const JointSample& sample : forced) {
      JointSample mapped = sample;
      mapped.world_value = f(sample.world_value);
      for (Eigen::Index i = 0; i < mapped.agent_values.size(); ++i)
        mapped.agent_values[i] = f(mapped.agent_values[i]);
      stats_f.add(mapped);
    }
    accumulator_f_.absorb(stats_f, config_.kappa_age);
  }

  double smoothing_scale() const {
    return config_.variant.smoothing == Smoothing::logistic
               ? config_.variant.logistic_scale
               : 0.0;
  }

  double resolve_threshold_exact() const {
    if (config_.variant.threshold_k) return *config_.variant.threshold_k;
    return exact_quantile_threshold(active_world(), q_,
                                    config_.variant.threshold_pct);
  }

  double resolve_threshold_mc(const std::vector<JointSample>& samples) const {
    if (config_.variant.threshold_k) return *config_.variant.threshold_k;
    return sample_quantile_threshold(samples, config_.variant.threshold_pct);
  }

  void evaluate_candidate(JointSample sample) {
    sample.world_value = world_(sample.move);
    evaluate_candidate_noeval(sample);
  }

  void evaluate_candidate_noeval(const JointSample& sample) {
    if (sample.world_value < best_g_) {
      best_g_ = sample.world_value;
      best_move_ = sample.move;
    }
    last_seen_g_ = sample.world_value;
    if (sinks_.sample) sinks_.sample(sample);
  }

  const TraceRow& emit_row(int round, int step, double beta) {
    TraceRow row;
    row.round = round;
    row.step = step;
    row.beta = beta;
    row.entropy = entropy(q_);
    if (config_.expectation_mode == ExpectationMode::exact) {
      row.expected_g = exact_expectation(world_, q_);
    } else if (accumulator_.has_world_estimate()) {
      row.expected_g = accumulator_.world_estimate();
    } else {
      row.expected_g = last_seen_g_;  // pre-block estimate: the init draw
    }
    row.lagrangian = beta * row.expected_g - row.entropy;
    row.best_g = best_g_;
    trace_.push_back(row);
    if (sinks_.trace) sinks_.trace(row);
    return trace_.back();
  }

  // Exact-mode equilibration test for the stationarity-driven updates.
  bool equilibrated(double beta) const {
    if (config_.expectation_mode != ExpectationMode::exact) return false;
    if (transform_active()) return false;
    if (config_.algorithm != Algorithm::gradient &&
        config_.algorithm != Algorithm::nearest_newton &&
        config_.algorithm != Algorithm::brouwer)
      return false;
    return projected_gradient_norm(q_, exact_src_, beta) <
           config_.schedule.grad_tolerance;
  }

  void reset_stall_tracking() {
    stall_best_ = std::numeric_limits<double>::infinity();
    stall_streak_ = 0;
  }

  void update_stall_tracking(double lagrangian) {
    if (transform_steps_left_ > 0) {
      --transform_steps_left_;
      if (transform_steps_left_ == 0) reset_stall_tracking();
      return;
    }
    if (config_.variant.kind != VariantKind::transform) return;
    if (lagrangian < stall_best_ - 1e-12) {
      stall_best_ = lagrangian;
      stall_streak_ = 0;
    } else if (++stall_streak_ >= kStallWindow) {
      transform_steps_left_ = kStallWindow;  // reshape for a spell, then revert
      stall_streak_ = 0;
    }
  }

  static constexpr int kStallWindow = 10;

  const RunConfig& config_;
  const RunSinks& sinks_;
  WorldUtility world_;
  CategoricalDomain domain_;
  PrivateUtilitySet utilities_;
  ExactSource exact_src_;
  std::optional<WorldUtility> transformed_world_;
  std::optional<PrivateUtilitySet> utilities_f_;
  std::optional<ExactSource> exact_src_f_;
  AgingAccumulator accumulator_;
  AgingAccumulator accumulator_f_;
  RandomSource block_rng_;
  RandomSource eval_rng_;
  ProductDistribution q_;
  long block_index_ = -1;
  double best_g_ = std::numeric_limits<double>::infinity();
  VectorXi best_move_;
  double last_seen_g_ = std::numeric_limits<double>::quiet_NaN();
  std::vector<TraceRow> trace_;
  double stall_best_ = std::numeric_limits<double>::infinity();
  int stall_streak_ = 0;
  int transform_steps_left_ = 0;
};

}  // namespace

RunResult run(const RunConfig& config, const RunSinks& sinks) {
  config.validate();
  Runner runner(config, sinks);
  return runner();
}

namespace {

std::string trace_row_json(const TraceRow& row) {
  ordered_json j;
  j["round"] = row.round;
  j["step"] = row.step;
  j["beta"] = row.beta;
  j["lagrangian"] = row.lagrangian;
  j["expected_g"] = row.expected_g;
  j["entropy"] = row.entropy;
  j["best_g"] = row.best_g;
  return j.dump();
}

std::string sample_json(const JointSample& sample) {
  ordered_json j;
  j["block"] = sample.block;
  std::vector<int> move(sample.move.data(), sample.move.data() + sample.move.size());
  j["x"] = move;
  j["G"] = sample.world_value;
  j["forced"] = sample.forced();
  return j.dump();
}

}  // namespace

std::string summary_json(const RunResult& result) {
  ordered_json j;
  std::vector<int> best(result.best_move.data(),
                        result.best_move.data() + result.best_move.size());
  j["best_x"] = best;
  j["best_g"] = result.best_g;
  std::vector<std::vector<double>> final_q;
  final_q.reserve(result.final_q.size());
  for (const VectorXd& factor : result.final_q)
    final_q.emplace_back(factor.data(), factor.data() + factor.size());
  j["final_q"] = final_q;
  j["seconds"] = result.seconds;
  return j.dump(2);
}

RunResult run_and_write(const RunConfig& config) {
  namespace fs = std::filesystem;
  fs::create_directories(config.out_dir);
  std::ofstream trace_file(fs::path(config.out_dir) / "trace.jsonl",
                           std::ios::binary);
  if (!trace_file)
    throw ConfigError("cannot open trace.jsonl under " + config.out_dir);
  std::ofstream sample_file;
  if (!config.sample_log.empty()) {
    sample_file.open(config.sample_log, std::ios::binary);
    if (!sample_file)
      throw ConfigError("cannot open sample log " + config.sample_log);
  }

  RunSinks sinks;
  sinks.trace = [&trace_file](const TraceRow& row) {
    trace_file << trace_row_json(row) << '\n';
  };
  if (sample_file.is_open()) {
    sinks.sample = [&sample_file](const JointSample& sample) {
      sample_file << sample_json(sample) << '\n';
    };
  }

  RunResult result = run(config, sinks);  // partial rows are already on disk

  std::ofstream summary_file(fs::path(config.out_dir) / "summary.json",
                             std::ios::binary);
  summary_file << summary_json(result) << '\n';
  return result;
}

std::string oracle_report(const RunConfig& config) {
  const WorldUtility world = generate_problem(config.problem);
  check_enumeration_guard(world.domain());
  const ProductDistribution q = initial_distribution(config, world.domain());
  const double beta = config.schedule.beta0;
  const double expected = exact_expectation(world, q);
  const double ent = entropy(q);
  const ProductDistribution marginals = canonical_marginals(world, beta);

  ordered_json j;
  j["beta"] = beta;
  j["expected_g"] = expected;
  j["entropy"] = ent;
  j["lagrangian"] = beta * expected - ent;
  std::vector<std::vector<double>> factors;
  for (const VectorXd& factor : marginals.factors())
    factors.emplace_back(factor.data(), factor.data() + factor.size());
  j["canonical_marginals"] = factors;
  return j.dump(2);
}

namespace {

std::string aging_bench(std::uint64_t seed) {
  ProblemConfig problem;
  problem.generator = "random-table";
  problem.move_counts = {4, 4};
  problem.seed = seed + 17;
  const WorldUtility world = generate_problem(problem);
  const PrivateUtilitySet utilities(world);
  const CategoricalDomain& domain = world.domain();

  const ProductDistribution uniform = ProductDistribution::uniform(domain);
  const ProductDistribution target = canonical_marginals(world, 5.0);
  const int blocks = 40;
  const int reps = 20;

  ordered_json rows = ordered_json::array();
  for (long block_length : {10L, 50L, 200L}) {
    for (double kappa : {0.0, 1.0, 1e9}) {
      double total_rms = 0.0;
      for (int rep = 0; rep < reps; ++rep) {
        RandomSource rng(seed, 100 + static_cast<std::uint64_t>(rep));
        AgingAccumulator acc(domain);
        ProductDistribution q = uniform;
        for (int t = 0; t < blocks; ++t) {
          const double w = static_cast<double>(t) / (blocks - 1);
          std::vector<VectorXd> factors;
          for (int i = 0; i < domain.agent_count(); ++i)
            factors.push_back((1.0 - w) * uniform.factor(i) +
                              w * target.factor(i));
          q = ProductDistribution(domain, std::move(factors));
          BlockResult block = run_block(q, utilities, block_length, t, rng);
          BlockStats stats = std::move(block.stats);
          for (const JointSample& sample :
               force_samples(q, utilities, stats.uncovered(), rng, 3, t))
            stats.add(sample);
          acc.absorb(stats, kappa);
        }
        double sum_sq = 0.0;
        int cells = 0;
        for (int i = 0; i < domain.agent_count(); ++i) {
          const VectorXd truth = exact_conditionals(world, q, i);
          for (int j = 0; j < domain.move_count(i); ++j) {
            const double err = acc.estimate(i, j) - truth[j];
            sum_sq += err * err;
            ++cells;
          }
        }
        total_rms += std::sqrt(sum_sq / cells);
      }
      ordered_json row;
      row["block_length"] = block_length;
      row["kappa_age"] = kappa;
      row["mean_rms_error"] = total_rms / reps;
      rows.push_back(row);
    }
  }
  ordered_json j;
  j["suite"] = "aging";
  j["description"] =
      "Estimator RMS error after tracking a drifting distribution; lower "
      "is better. kappa_age 0 = flat average, 1e9 = last block only.";
  j["results"] = rows;
  return j.dump(2);
}

std::string bit_variance_bench(std::uint64_t seed) {
  ProblemConfig problem;
  problem.generator = "sum";
  problem.move_counts = {2, 2};
  const WorldUtility world = generate_problem(problem);
  const PrivateUtilitySet utilities(world);
  const ProductDistribution q =
      ProductDistribution::uniform(world.domain());

  const int blocks = 400;
  const long block_length = 100;
  RandomSource rng(seed, 7);

  std::vector<double> g_means;
  std::vector<double> bit_means;
  double g_min = std::numeric_limits<double>::infinity();
  double g_max = -std::numeric_limits<double>::infinity();
  for (int b = 0; b < blocks; ++b) {
    BlockResult block = run_block(q, utilities, block_length, b, rng);
    std::vector<double> values;
    values.reserve(block.samples.size());
    for (const JointSample& sample : block.samples) {
      values.push_back(sample.world_value);
      g_min = std::min(g_min, sample.world_value);
      g_max = std::max(g_max, sample.world_value);
    }
    std::sort(values.begin(), values.end());
    const double median =
        0.5 * (values[values.size() / 2 - 1] + values[values.size() / 2]);
    if (block.stats.has_mean(0, 0))
      g_means.push_back(block.stats.mean(0, 0));
    bit_means.push_back(estimate_bit(block.samples, median, 0, 0));
  }

  const auto variance = [](const std::vector<double>& xs) {
    double mean = 0.0;
    for (double x : xs) mean += x;
    mean /= static_cast<double>(xs.size());
    double var = 0.0;
    for (double x : xs) var += (x - mean) * (x - mean);
    return var / static_cast<double>(xs.size() - 1);
  };

  const double range = g_max - g_min;
  ordered_json j;
  j["suite"] = "bit-variance";
  j["description"] =
      "Variance of the G(x) < K bit estimator vs the conditional-mean "
      "estimator (normalized by squared range) at uniform q, K at the "
      "block median.";
  j["blocks"] = blocks;
  j["block_length"] = block_length;
  j["bit_estimator_variance"] = variance(bit_means);
  j["g_estimator_variance"] = variance(g_means);
  j["g_estimator_variance_normalized"] =
      variance(g_means) / (range * range);
  j["variance_ratio"] =
      variance(bit_means) / (variance(g_means) / (range * range));
  return j.dump(2);
}

}  // namespace

std::string bench_report(const std::string& suite, std::uint64_t seed) {
  if (suite == "aging") return aging_bench(seed);
  if (suite == "bit-variance") return bit_variance_bench(seed);
  throw ConfigError("unknown bench suite: " + suite +
                    " (available: aging, bit-variance)");
}

}  // namespace pdopt
