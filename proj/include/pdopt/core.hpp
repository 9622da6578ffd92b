#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace pdopt {

using Eigen::VectorXd;
using Eigen::VectorXi;

// Component floor keeping distributions strictly inside the simplex.
inline constexpr double kEpsilonFloor = 1e-9;
// Factor-sum tolerance accepted when constructing a distribution.
inline constexpr double kNormTolerance = 1e-12;
// Largest joint space the exact enumeration routines will walk.
inline constexpr std::uint64_t kOracleGuard = 10'000'000;

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ConfigError : Error {
  using Error::Error;
};
// Joint space larger than the enumeration guard.
struct GuardExceededError : Error {
  using Error::Error;
};
// KL divergence undefined: p2 vanishes where p1 has mass.
struct SupportError : Error {
  using Error::Error;
};
// A whole factor fell below zero; the step that produced it was oversized.
struct ProjectionError : Error {
  using Error::Error;
};
// Backtracking ran out of attempts without finding an admissible step.
struct StepCollapseError : Error {
  using Error::Error;
};
// Constraint gradients passed to the projection are linearly dependent.
struct DegenerateConstraintsError : Error {
  using Error::Error;
};
// An estimator was queried for an (agent, move) pair it has never seen.
struct CoverageError : Error {
  using Error::Error;
};
// Aged estimator fed a block that is not newer than its last one.
struct BlockOrderError : Error {
  using Error::Error;
};
// Threshold update with no probability mass below the threshold.
struct EmptyTruncationError : Error {
  using Error::Error;
};
// Utility evaluation failed while a sampling block was in flight.
struct PartialBlockError : Error {
  using Error::Error;
};

// Counter-based deterministic RNG: xoshiro256** seeded through SplitMix64
// from a (seed, stream) pair. Identical seed, stream, and call sequence
// produce identical outputs on every platform; distinct streams give
// independent substreams for parallel sampling.
class RandomSource {
 public:
  explicit RandomSource(std::uint64_t seed, std::uint64_t stream = 0);

  std::uint64_t next_u64();
  // Uniform on [0, 1) with 53-bit resolution.
  double uniform01();
  // Index drawn from an (assumed normalized) probability vector.
  int categorical(const VectorXd& probs);

  // Derived generator for substream `id`, independent of this one.
  RandomSource substream(std::uint64_t id) const;

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }

 private:
  std::uint64_t state_[4];
  std::uint64_t seed_ = 0;
  std::uint64_t stream_ = 0;
};

// Finite per-agent move sets. The joint space is the cartesian product;
// its size may overflow a machine word, in which case joint_size()
// saturates and joint_size_overflows() reports it.
class CategoricalDomain {
 public:
  explicit CategoricalDomain(std::vector<int> move_counts);

  int agent_count() const { return static_cast<int>(move_counts_.size()); }
  int move_count(int agent) const { return move_counts_.at(agent); }
  const std::vector<int>& move_counts() const { return move_counts_; }

  std::uint64_t joint_size() const { return joint_size_; }
  bool joint_size_overflows() const { return overflow_; }

  bool operator==(const CategoricalDomain& other) const {
    return move_counts_ == other.move_counts_;
  }

 private:
  std::vector<int> move_counts_;
  std::uint64_t joint_size_ = 1;
  bool overflow_ = false;
};

// Row-major joint indexing, agent 0 slowest-varying.
std::uint64_t joint_index(const CategoricalDomain& domain, const VectorXi& move);
VectorXi move_of_index(const CategoricalDomain& domain, std::uint64_t index);

// In-place lexicographic increment over the joint space (last agent
// fastest). Returns false once the walk wraps back to all zeros.
bool advance_move(const CategoricalDomain& domain, VectorXi& move);
// Same walk with one agent held fixed.
bool advance_move_excluding(const CategoricalDomain& domain, int fixed_agent,
                            VectorXi& move);

// Mixed strategy factored per agent: q(x) = prod_i q_i(x_i). Factors are
// validated (finite, non-negative, summing to one within kNormTolerance)
// and renormalized exactly at construction; instances are immutable.
class ProductDistribution {
 public:
  ProductDistribution(CategoricalDomain domain, std::vector<VectorXd> factors);

  static ProductDistribution uniform(const CategoricalDomain& domain);

  const CategoricalDomain& domain() const { return domain_; }
  int agent_count() const { return domain_.agent_count(); }
  const VectorXd& factor(int agent) const { return factors_.at(agent); }
  const std::vector<VectorXd>& factors() const { return factors_; }

  // True when every component clears the floor. A hair of slack absorbs
  // the renormalization that follows clipping in project_interior.
  bool is_interior(double epsilon_floor = kEpsilonFloor) const;

  double probability(const VectorXi& move) const;

  ProductDistribution with_factor(int agent, VectorXd factor) const;

 private:
  CategoricalDomain domain_;
  std::vector<VectorXd> factors_;
};

// One draw of the joint move, optionally annotated with utility values.
struct JointSample {
  VectorXi move;
  double world_value = std::numeric_limits<double>::quiet_NaN();
  VectorXd agent_values;  // per-agent private values; empty in a team game
  long block = -1;
  int forced_agent = -1;  // >= 0 when produced by forced sampling

  bool forced() const { return forced_agent >= 0; }
};

// Shared objective over joint moves, either a dense row-major table or an
// external callback. Evaluation is deterministic and must be finite.
class WorldUtility {
 public:
  using Callback = std::function<double(const VectorXi&)>;

  static WorldUtility from_table(CategoricalDomain domain, VectorXd values);
  static WorldUtility from_callback(CategoricalDomain domain, Callback fn);

  double operator()(const VectorXi& move) const;

  const CategoricalDomain& domain() const { return domain_; }
  bool has_table() const { return callback_ == nullptr; }
  const VectorXd& table() const;

  // Utility evaluating f(G(x)); dense tables are transformed eagerly.
  WorldUtility transformed(std::function<double(double)> f) const;

 private:
  WorldUtility(CategoricalDomain domain, VectorXd values, Callback fn);

  CategoricalDomain domain_;
  VectorXd values_;
  Callback callback_;
};

// Parse a dense utility table from {"move_counts": [...], "values": [...]}
// (values row-major, agent 0 slowest). The inverse emits the same schema.
WorldUtility load_utility_table(const std::string& json_text);
std::string utility_table_json(const WorldUtility& utility);

// Per-agent private utilities g_i. Lookups fall back to the world utility
// for agents without an override, which makes the default a team game.
class PrivateUtilitySet {
 public:
  explicit PrivateUtilitySet(WorldUtility world);
  PrivateUtilitySet(WorldUtility world,
                    std::vector<std::optional<WorldUtility>> agent_utilities);

  const WorldUtility& world() const { return world_; }
  const WorldUtility& agent(int i) const;
  bool has_override(int i) const;
  const CategoricalDomain& domain() const { return world_.domain(); }

 private:
  WorldUtility world_;
  std::vector<std::optional<WorldUtility>> agent_utilities_;
};

// Shannon entropy of one probability vector, with 0 ln 0 := 0.
double entropy(const VectorXd& probs);
// Entropy of a product distribution (sum of factor entropies).
double entropy(const ProductDistribution& q);

// KL(p1 || p2) = sum p1 ln(p1/p2), >= 0, zero iff equal. Throws
// SupportError when p2 vanishes somewhere p1 does not.
double kl_divergence(const VectorXd& p1, const VectorXd& p2);

// Independent per-agent draw; utility fields left unfilled.
JointSample sample_joint(const ProductDistribution& q, RandomSource& rng);

// Clip every component to at least epsilon_floor, then renormalize each
// factor. Raw factors may carry negative components from an unprojected
// descent step; a factor with no positive mass at all is rejected.
ProductDistribution project_interior(const CategoricalDomain& domain,
                                     std::vector<VectorXd> raw_factors,
                                     double epsilon_floor = kEpsilonFloor);
ProductDistribution project_interior(const ProductDistribution& q,
                                     double epsilon_floor = kEpsilonFloor);

}  // namespace pdopt
