#include "pdopt/montecarlo.hpp"

#include <cmath>

namespace pdopt {

BlockStats::BlockStats(CategoricalDomain domain, long block_index)
    : domain_(std::move(domain)), block_(block_index) {
  counts_.reserve(domain_.agent_count());
  sums_.reserve(domain_.agent_count());
  for (int i = 0; i < domain_.agent_count(); ++i) {
    counts_.emplace_back(domain_.move_count(i), 0L);
    sums_.emplace_back(domain_.move_count(i), 0.0);
  }
}

void BlockStats::add(const JointSample& sample) {
  if (sample.move.size() != domain_.agent_count())
    throw ConfigError("sample arity does not match the domain");
  const bool private_values = sample.agent_values.size() > 0;
  if (sample.forced()) {
    const int i = sample.forced_agent;
    const int j = sample.move[i];
    counts_[i][j] += 1;
    sums_[i][j] += private_values ? sample.agent_values[i] : sample.world_value;
    return;
  }
  for (int i = 0; i < domain_.agent_count(); ++i) {
    const int j = sample.move[i];
    counts_[i][j] += 1;
    sums_[i][j] += private_values ? sample.agent_values[i] : sample.world_value;
  }
  world_sum_ += sample.world_value;
  world_count_ += 1;
  total_ += 1;
}

long BlockStats::count(int agent, int move) const {
  return counts_.at(agent).at(move);
}

double BlockStats::sum(int agent, int move) const {
  return sums_.at(agent).at(move);
}

double BlockStats::mean(int agent, int move) const {
  if (!has_mean(agent, move))
    throw CoverageError("block mean undefined: pair never sampled");
  return sums_[agent][move] / static_cast<double>(counts_[agent][move]);
}

double BlockStats::world_mean() const {
  if (!has_world_mean())
    throw CoverageError("world mean undefined: empty block");
  return world_sum_ / static_cast<double>(world_count_);
}

std::vector<std::pair<int, int>> BlockStats::uncovered() const {
  std::vector<std::pair<int, int>> pairs;
  for (int i = 0; i < domain_.agent_count(); ++i) {
    for (int j = 0; j < domain_.move_count(i); ++j) {
      if (counts_[i][j] == 0) pairs.emplace_back(i, j);
    }
  }
  return pairs;
}

namespace {

// Evaluate world and, when present, per-agent private values.
void evaluate_sample(JointSample& sample, const PrivateUtilitySet& utilities) {
  sample.world_value = utilities.world()(sample.move);
  bool any_override = false;
  for (int i = 0; i < utilities.domain().agent_count(); ++i) {
    if (utilities.has_override(i)) {
      any_override = true;
      break;
    }
  }
  if (any_override) {
    sample.agent_values.resize(utilities.domain().agent_count());
    for (int i = 0; i < utilities.domain().agent_count(); ++i)
      sample.agent_values[i] = utilities.agent(i)(sample.move);
  }
}

}  // namespace

BlockResult run_block(const ProductDistribution& q,
                      const PrivateUtilitySet& utilities, long block_length,
                      long block_index, RandomSource& rng) {
  if (block_length < 0) throw ConfigError("block length must be >= 0");
  BlockResult result{BlockStats(q.domain(), block_index), {}};
  result.samples.reserve(static_cast<std::size_t>(block_length));
  for (long t = 0; t < block_length; ++t) {
    JointSample sample = sample_joint(q, rng);
    sample.block = block_index;
    try {
      evaluate_sample(sample, utilities);
    } catch (const Error& e) {
      throw PartialBlockError(std::string("block aborted at sample ") +
                              std::to_string(t) + ": " + e.what());
    }
    result.stats.add(sample);
    result.samples.push_back(std::move(sample));
  }
  return result;
}

AgingAccumulator::AgingAccumulator(CategoricalDomain domain)
    : domain_(std::move(domain)) {
  cells_.reserve(domain_.agent_count());
  for (int i = 0; i < domain_.agent_count(); ++i)
    cells_.emplace_back(domain_.move_count(i));
}

void AgingAccumulator::absorb(const BlockStats& stats, double kappa_age) {
  if (!(stats.domain() == domain_))
    throw ConfigError("block stats domain mismatch");
  if (kappa_age < 0.0) throw ConfigError("aging constant must be >= 0");
  if (stats.block_index() <= last_block_)
    throw BlockOrderError("blocks must be absorbed in increasing order");
  const long k = stats.block_index();
  for (int i = 0; i < domain_.agent_count(); ++i) {
    for (int j = 0; j < domain_.move_count(i); ++j) {
      if (!stats.has_mean(i, j)) continue;  // contributes neither term
      Cell& cell = cells_[i][j];
      const double decay =
          cell.last < 0 ? 0.0 : std::exp(-kappa_age * static_cast<double>(k - cell.last));
      cell.value = cell.value * decay + stats.mean(i, j);
      cell.weight = cell.weight * decay + 1.0;
      cell.last = k;
    }
  }
  if (stats.has_world_mean()) {
    const double decay =
        world_.last < 0 ? 0.0
                        : std::exp(-kappa_age * static_cast<double>(k - world_.last));
    world_.value = world_.value * decay + stats.world_mean();
    world_.weight = world_.weight * decay + 1.0;
    world_.last = k;
  }
  last_block_ = k;
}

bool AgingAccumulator::has_estimate(int agent, int move) const {
  return cells_.at(agent).at(move).weight > 0.0;
}

double AgingAccumulator::estimate(int agent, int move) const {
  const Cell& cell = cells_.at(agent).at(move);
  if (cell.weight <= 0.0)
    throw CoverageError("aged estimate unavailable: pair never sampled");
  return cell.value / cell.weight;
}

double AgingAccumulator::world_estimate() const {
  if (!has_world_estimate())
    throw CoverageError("aged world estimate unavailable");
  return world_.value / world_.weight;
}

AgingAccumulator aged_update(AgingAccumulator accumulator,
                             const BlockStats& stats, double kappa_age) {
  accumulator.absorb(stats, kappa_age);
  return accumulator;
}

std::vector<JointSample> force_samples(
    const ProductDistribution& q, const PrivateUtilitySet& utilities,
    const std::vector<std::pair<int, int>>& uncovered, RandomSource& rng,
    int n_force, long block_index) {
  if (n_force < 0) throw ConfigError("n_force must be >= 0");
  std::vector<JointSample> samples;
  samples.reserve(uncovered.size() * static_cast<std::size_t>(n_force));
  for (const auto& [agent, move] : uncovered) {
    if (agent < 0 || agent >= q.agent_count() || move < 0 ||
        move >= q.domain().move_count(agent))
      throw ConfigError("uncovered pair out of range");
    for (int r = 0; r < n_force; ++r) {
      JointSample sample = sample_joint(q, rng);
      sample.move[agent] = move;
      sample.block = block_index;
      sample.forced_agent = agent;
      evaluate_sample(sample, utilities);
      samples.push_back(std::move(sample));
    }
  }
  return samples;
}

double estimate_bit(const std::vector<JointSample>& samples, double threshold_k,
                    int agent, int move) {
  long eligible = 0;
  long below = 0;
  for (const JointSample& sample : samples) {
    if (sample.move[agent] != move) continue;
    if (sample.forced() && sample.forced_agent != agent) continue;
    ++eligible;
    if (sample.world_value < threshold_k) ++below;
  }
  if (eligible == 0)
    throw CoverageError("bit estimate unavailable: pair never sampled");
  return static_cast<double>(below) / static_cast<double>(eligible);
}

double AgedSource::conditional(const ProductDistribution&, int agent,
                               int move) const {
  return accumulator_->estimate(agent, move);
}

double AgedSource::world_expectation(const ProductDistribution&) const {
  return accumulator_->world_estimate();
}

}  // namespace pdopt
