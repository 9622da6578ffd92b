#pragma once

#include "pdopt/core.hpp"
#include "pdopt/lagrangian.hpp"

#include <utility>
#include <vector>

namespace pdopt {

// Per-(agent, move) tallies from one sampling block. Rows of agent i hold
// that agent's own utility values, so a non-team game aggregates every
// agent's estimator from the same shared sample set. Forced samples touch
// only their pinned row and are excluded from the world-utility tally.
class BlockStats {
 public:
  BlockStats(CategoricalDomain domain, long block_index);

  void add(const JointSample& sample);

  long block_index() const { return block_; }
  const CategoricalDomain& domain() const { return domain_; }

  long count(int agent, int move) const;
  double sum(int agent, int move) const;
  bool has_mean(int agent, int move) const { return count(agent, move) > 0; }
  double mean(int agent, int move) const;

  // Unforced samples absorbed so far.
  long total_samples() const { return total_; }

  bool has_world_mean() const { return world_count_ > 0; }
  double world_mean() const;

  // (agent, move) pairs the block never visited.
  std::vector<std::pair<int, int>> uncovered() const;

 private:
  CategoricalDomain domain_;
  long block_ = 0;
  std::vector<std::vector<long>> counts_;
  std::vector<std::vector<double>> sums_;
  long total_ = 0;
  double world_sum_ = 0.0;
  long world_count_ = 0;
};

struct BlockResult {
  BlockStats stats;
  std::vector<JointSample> samples;
};

// Draw block_length joint samples from q, evaluate them, and tally. A
// utility failure mid-block surfaces as PartialBlockError.
BlockResult run_block(const ProductDistribution& q,
                      const PrivateUtilitySet& utilities, long block_length,
                      long block_index, RandomSource& rng);

// Online exponential aging of block means: three scalars per (agent,
// move) pair hold the decayed numerator, the decayed weight, and the last
// block that touched the pair. The stored ratio equals the aged weighted
// average over every block with a defined mean, because a shared decay
// factor cancels between numerator and denominator.
class AgingAccumulator {
 public:
  explicit AgingAccumulator(CategoricalDomain domain);

  // Absorb block stats; the block index must exceed the last one seen.
  void absorb(const BlockStats& stats, double kappa_age);

  bool has_estimate(int agent, int move) const;
  double estimate(int agent, int move) const;

  bool has_world_estimate() const { return world_.weight > 0.0; }
  double world_estimate() const;

  long last_block() const { return last_block_; }
  const CategoricalDomain& domain() const { return domain_; }

 private:
  struct Cell {
    double value = 0.0;
    double weight = 0.0;
    long last = -1;
  };

  CategoricalDomain domain_;
  std::vector<std::vector<Cell>> cells_;
  Cell world_;
  long last_block_ = -1;
};

// Functional form of AgingAccumulator::absorb.
AgingAccumulator aged_update(AgingAccumulator accumulator,
                             const BlockStats& stats, double kappa_age);

// For each uncovered pair, n_force samples with that agent pinned to that
// move and everyone else drawn from their own factors. The pinned agent
// is recorded so downstream estimators update only the pinned row.
std::vector<JointSample> force_samples(
    const ProductDistribution& q, const PrivateUtilitySet& utilities,
    const std::vector<std::pair<int, int>>& uncovered, RandomSource& rng,
    int n_force = 3, long block_index = -1);

// Fraction of the samples with x_agent = move whose world value lies
// strictly below threshold_k. Forced samples count only toward their own
// pinned agent. Throws CoverageError when no sample qualifies.
double estimate_bit(const std::vector<JointSample>& samples, double threshold_k,
                    int agent, int move);

// Expectation source answering from aged sample history. Conditionals
// ignore the distribution argument (they were formed under earlier
// distributions); the per-agent expectation reweights them by the current
// factor.
class AgedSource final : public ExpectationSource {
 public:
  explicit AgedSource(const AgingAccumulator& accumulator)
      : accumulator_(&accumulator) {}

  double conditional(const ProductDistribution& q, int agent,
                     int move) const override;
  double world_expectation(const ProductDistribution& q) const override;

 private:
  const AgingAccumulator* accumulator_;
};

}  // namespace pdopt
