#include "pdopt/core.hpp"

#include <json.hpp>

#include <cmath>
#include <limits>
#include <utility>

namespace pdopt {

namespace {

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

}  // namespace

RandomSource::RandomSource(std::uint64_t seed, std::uint64_t stream)
    : seed_(seed), stream_(stream) {
  std::uint64_t sm = seed ^ (0x9E3779B97F4A7C15ULL * (stream + 1));
  for (auto& word : state_) word = splitmix64(sm);
  if ((state_[0] | state_[1] | state_[2] | state_[3]) == 0) state_[0] = 1;
}

std::uint64_t RandomSource::next_u64() {
  const std::uint64_t result = rotl(state_[1] * 5ULL, 7) * 9ULL;
  const std::uint64_t t = state_[1] << 17;
  state_[2] ^= state_[0];
  state_[3] ^= state_[1];
  state_[1] ^= state_[2];
  state_[0] ^= state_[3];
  state_[2] ^= t;
  state_[3] = rotl(state_[3], 45);
  return result;
}

double RandomSource::uniform01() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

int RandomSource::categorical(const VectorXd& probs) {
  const double u = uniform01();
  double cumulative = 0.0;
  const int n = static_cast<int>(probs.size());
  for (int j = 0; j < n; ++j) {
    cumulative += probs[j];
    if (u < cumulative) return j;
  }
  return n - 1;  // rounding pushed the cumulative sum a hair under 1
}

RandomSource RandomSource::substream(std::uint64_t id) const {
  std::uint64_t sm = stream_ + 0x9E3779B97F4A7C15ULL * (id + 1);
  return RandomSource(seed_, splitmix64(sm));
}

CategoricalDomain::CategoricalDomain(std::vector<int> move_counts)
    : move_counts_(std::move(move_counts)) {
  if (move_counts_.empty())
    throw ConfigError("domain needs at least one agent");
  for (int count : move_counts_) {
    if (count < 1) throw ConfigError("every agent needs at least one move");
    if (!overflow_ &&
        joint_size_ > std::numeric_limits<std::uint64_t>::max() /
                          static_cast<std::uint64_t>(count)) {
      overflow_ = true;
      joint_size_ = std::numeric_limits<std::uint64_t>::max();
    }
    if (!overflow_) joint_size_ *= static_cast<std::uint64_t>(count);
  }
}

std::uint64_t joint_index(const CategoricalDomain& domain, const VectorXi& move) {
  std::uint64_t index = 0;
  for (int i = 0; i < domain.agent_count(); ++i) {
    index = index * static_cast<std::uint64_t>(domain.move_count(i)) +
            static_cast<std::uint64_t>(move[i]);
  }
  return index;
}

VectorXi move_of_index(const CategoricalDomain& domain, std::uint64_t index) {
  VectorXi move(domain.agent_count());
  for (int i = domain.agent_count() - 1; i >= 0; --i) {
    const auto count = static_cast<std::uint64_t>(domain.move_count(i));
    move[i] = static_cast<int>(index % count);
    index /= count;
  }
  return move;
}

bool advance_move(const CategoricalDomain& domain, VectorXi& move) {
  for (int i = domain.agent_count() - 1; i >= 0; --i) {
    if (++move[i] < domain.move_count(i)) return true;
    move[i] = 0;
  }
  return false;
}

bool advance_move_excluding(const CategoricalDomain& domain, int fixed_agent,
                            VectorXi& move) {
  for (int i = domain.agent_count() - 1; i >= 0; --i) {
    if (i == fixed_agent) continue;
    if (++move[i] < domain.move_count(i)) return true;
    move[i] = 0;
  }
  return false;
}

namespace {

void validate_factor(const VectorXd& factor, int expected_size) {
  if (factor.size() != expected_size)
    throw ConfigError("factor length does not match the agent's move count");
  if (!factor.allFinite()) throw ConfigError("factor has non-finite components");
  if ((factor.array() < 0.0).any())
    throw ConfigError("factor has negative components");
  if (std::abs(factor.sum() - 1.0) > kNormTolerance)
    throw ConfigError("factor does not sum to one");
}

}  // namespace

ProductDistribution::ProductDistribution(CategoricalDomain domain,
                                         std::vector<VectorXd> factors)
    : domain_(std::move(domain)), factors_(std::move(factors)) {
  if (static_cast<int>(factors_.size()) != domain_.agent_count())
    throw ConfigError("one factor per agent required");
  for (int i = 0; i < domain_.agent_count(); ++i) {
    validate_factor(factors_[i], domain_.move_count(i));
    factors_[i] /= factors_[i].sum();
  }
}

ProductDistribution ProductDistribution::uniform(const CategoricalDomain& domain) {
  std::vector<VectorXd> factors;
  factors.reserve(domain.agent_count());
  for (int i = 0; i < domain.agent_count(); ++i) {
    factors.push_back(VectorXd::Constant(domain.move_count(i),
                                         1.0 / domain.move_count(i)));
  }
  return ProductDistribution(domain, std::move(factors));
}

bool ProductDistribution::is_interior(double epsilon_floor) const {
  const double floor = epsilon_floor * (1.0 - 1e-6);
  for (const VectorXd& factor : factors_) {
    if ((factor.array() < floor).any()) return false;
  }
  return true;
}

double ProductDistribution::probability(const VectorXi& move) const {
  double p = 1.0;
  for (int i = 0; i < agent_count(); ++i) p *= factors_[i][move[i]];
  return p;
}

ProductDistribution ProductDistribution::with_factor(int agent,
                                                     VectorXd factor) const {
  std::vector<VectorXd> factors = factors_;
  factors.at(agent) = std::move(factor);
  return ProductDistribution(domain_, std::move(factors));
}

WorldUtility::WorldUtility(CategoricalDomain domain, VectorXd values, Callback fn)
    : domain_(std::move(domain)), values_(std::move(values)),
      callback_(std::move(fn)) {}

WorldUtility WorldUtility::from_table(CategoricalDomain domain, VectorXd values) {
  if (domain.joint_size_overflows() ||
      static_cast<std::uint64_t>(values.size()) != domain.joint_size())
    throw ConfigError("table length must equal the joint-space size");
  if (!values.allFinite())
    throw ConfigError("utility table has non-finite entries");
  return WorldUtility(std::move(domain), std::move(values), nullptr);
}

WorldUtility WorldUtility::from_callback(CategoricalDomain domain, Callback fn) {
  if (!fn) throw ConfigError("null utility callback");
  return WorldUtility(std::move(domain), VectorXd(), std::move(fn));
}

double WorldUtility::operator()(const VectorXi& move) const {
  if (move.size() != domain_.agent_count())
    throw ConfigError("joint move has wrong arity");
  for (int i = 0; i < domain_.agent_count(); ++i) {
    if (move[i] < 0 || move[i] >= domain_.move_count(i))
      throw ConfigError("move index out of range");
  }
  double value;
  if (has_table()) {
    value = values_[static_cast<Eigen::Index>(joint_index(domain_, move))];
  } else {
    value = callback_(move);
  }
  if (!std::isfinite(value)) throw Error("utility evaluated to a non-finite value");
  return value;
}

const VectorXd& WorldUtility::table() const {
  if (!has_table()) throw Error("utility has no dense table");
  return values_;
}

WorldUtility WorldUtility::transformed(std::function<double(double)> f) const {
  if (has_table()) {
    VectorXd mapped = values_.unaryExpr(f);
    return from_table(domain_, std::move(mapped));
  }
  Callback base = callback_;
  return from_callback(domain_, [base, f](const VectorXi& x) { return f(base(x)); });
}

WorldUtility load_utility_table(const std::string& json_text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad utility table JSON: ") + e.what());
  }
  if (!doc.contains("move_counts") || !doc.contains("values"))
    throw ConfigError("utility table JSON needs move_counts and values");
  CategoricalDomain domain(doc.at("move_counts").get<std::vector<int>>());
  const auto values = doc.at("values").get<std::vector<double>>();
  VectorXd table = Eigen::Map<const VectorXd>(values.data(),
                                              static_cast<Eigen::Index>(values.size()));
  return WorldUtility::from_table(std::move(domain), std::move(table));
}

std::string utility_table_json(const WorldUtility& utility) {
  nlohmann::ordered_json doc;
  doc["move_counts"] = utility.domain().move_counts();
  std::vector<double> values(utility.table().data(),
                             utility.table().data() + utility.table().size());
  doc["values"] = values;
  return doc.dump();
}

PrivateUtilitySet::PrivateUtilitySet(WorldUtility world)
    : world_(std::move(world)),
      agent_utilities_(world_.domain().agent_count()) {}

PrivateUtilitySet::PrivateUtilitySet(
    WorldUtility world, std::vector<std::optional<WorldUtility>> agent_utilities)
    : world_(std::move(world)), agent_utilities_(std::move(agent_utilities)) {
  if (static_cast<int>(agent_utilities_.size()) != world_.domain().agent_count())
    throw ConfigError("one private-utility slot per agent required");
  for (const auto& g : agent_utilities_) {
    if (g && !(g->domain() == world_.domain()))
      throw ConfigError("private utility domain mismatch");
  }
}

const WorldUtility& PrivateUtilitySet::agent(int i) const {
  const auto& slot = agent_utilities_.at(i);
  return slot ? *slot : world_;
}

bool PrivateUtilitySet::has_override(int i) const {
  return agent_utilities_.at(i).has_value();
}

double entropy(const VectorXd& probs) {
  double h = 0.0;
  for (Eigen::Index j = 0; j < probs.size(); ++j) {
    if (probs[j] > 0.0) h -= probs[j] * std::log(probs[j]);
  }
  return h;
}

double entropy(const ProductDistribution& q) {
  double h = 0.0;
  for (const VectorXd& factor : q.factors()) h += entropy(factor);
  return h;
}

double kl_divergence(const VectorXd& p1, const VectorXd& p2) {
  if (p1.size() != p2.size())
    throw ConfigError("kl_divergence arguments differ in length");
  double kl = 0.0;
  for (Eigen::Index j = 0; j < p1.size(); ++j) {
    if (p1[j] > 0.0) {
      if (p2[j] <= 0.0)
        throw SupportError("kl_divergence undefined: second argument "
                           "vanishes inside the first's support");
      kl += p1[j] * std::log(p1[j] / p2[j]);
    }
  }
  return std::max(kl, 0.0);
}

JointSample sample_joint(const ProductDistribution& q, RandomSource& rng) {
  JointSample sample;
  sample.move.resize(q.agent_count());
  for (int i = 0; i < q.agent_count(); ++i) {
    sample.move[i] = rng.categorical(q.factor(i));
  }
  return sample;
}

ProductDistribution project_interior(const CategoricalDomain& domain,
                                     std::vector<VectorXd> raw_factors,
                                     double epsilon_floor) {
  for (VectorXd& factor : raw_factors) {
    if (!factor.allFinite())
      throw ProjectionError("non-finite factor cannot be projected");
    if ((factor.array() < 0.0).all())
      throw ProjectionError("entire factor below zero: step grossly oversized");
    factor = factor.array().max(epsilon_floor).matrix();
    factor /= factor.sum();
  }
  return ProductDistribution(domain, std::move(raw_factors));
}

ProductDistribution project_interior(const ProductDistribution& q,
                                     double epsilon_floor) {
  return project_interior(q.domain(), q.factors(), epsilon_floor);
}

}  // namespace pdopt
