#include "pdopt/oracle.hpp"

#include <cmath>

namespace pdopt {

void check_enumeration_guard(const CategoricalDomain& domain,
                             std::uint64_t guard) {
  if (domain.joint_size_overflows() || domain.joint_size() > guard)
    throw GuardExceededError("joint space exceeds the enumeration guard");
}

namespace {

// Weight of the complementary moves, prod_{k != agent} q_k(x_k).
double complement_weight(const ProductDistribution& q, int agent,
                         const VectorXi& move) {
  double w = 1.0;
  for (int k = 0; k < q.agent_count(); ++k) {
    if (k != agent) w *= q.factor(k)[move[k]];
  }
  return w;
}

}  // namespace

VectorXd exact_conditionals(const WorldUtility& utility,
                            const ProductDistribution& q, int agent,
                            std::uint64_t guard) {
  check_enumeration_guard(q.domain(), guard);
  const CategoricalDomain& domain = q.domain();
  VectorXd conditionals = VectorXd::Zero(domain.move_count(agent));
  VectorXi move = VectorXi::Zero(domain.agent_count());
  do {
    const double w = complement_weight(q, agent, move);
    if (w == 0.0) continue;
    for (int j = 0; j < domain.move_count(agent); ++j) {
      move[agent] = j;
      conditionals[j] += w * utility(move);
    }
    move[agent] = 0;
  } while (advance_move_excluding(domain, agent, move));
  return conditionals;
}

double exact_conditional(const WorldUtility& utility,
                         const ProductDistribution& q, int agent, int move,
                         std::uint64_t guard) {
  return exact_conditionals(utility, q, agent, guard)[move];
}

double exact_expectation(const WorldUtility& utility,
                         const ProductDistribution& q, std::uint64_t guard) {
  check_enumeration_guard(q.domain(), guard);
  const CategoricalDomain& domain = q.domain();
  double expectation = 0.0;
  VectorXi move = VectorXi::Zero(domain.agent_count());
  do {
    const double p = q.probability(move);
    if (p > 0.0) expectation += p * utility(move);
  } while (advance_move(domain, move));
  return expectation;
}

VectorXd exact_bit_conditionals(const WorldUtility& utility,
                                const ProductDistribution& q, int agent,
                                double threshold_k, double logistic_scale,
                                std::uint64_t guard) {
  check_enumeration_guard(q.domain(), guard);
  const CategoricalDomain& domain = q.domain();
  VectorXd bits = VectorXd::Zero(domain.move_count(agent));
  VectorXi move = VectorXi::Zero(domain.agent_count());
  do {
    const double w = complement_weight(q, agent, move);
    if (w == 0.0) continue;
    for (int j = 0; j < domain.move_count(agent); ++j) {
      move[agent] = j;
      const double g = utility(move);
      double indicator;
      if (logistic_scale > 0.0) {
        indicator = 1.0 / (1.0 + std::exp(-(threshold_k - g) / logistic_scale));
      } else {
        indicator = g < threshold_k ? 1.0 : 0.0;
      }
      bits[j] += w * indicator;
    }
    move[agent] = 0;
  } while (advance_move_excluding(domain, agent, move));
  return bits;
}

VectorXd dense_joint(const ProductDistribution& q, std::uint64_t guard) {
  check_enumeration_guard(q.domain(), guard);
  const CategoricalDomain& domain = q.domain();
  VectorXd joint(static_cast<Eigen::Index>(domain.joint_size()));
  VectorXi move = VectorXi::Zero(domain.agent_count());
  Eigen::Index index = 0;
  do {
    joint[index++] = q.probability(move);
  } while (advance_move(domain, move));
  return joint;
}

CanonicalEnsemble canonical_ensemble(const WorldUtility& utility, double beta,
                                     std::uint64_t guard) {
  if (beta < 0.0) throw ConfigError("inverse temperature must be >= 0");
  const CategoricalDomain& domain = utility.domain();
  check_enumeration_guard(domain, guard);
  VectorXd logits(static_cast<Eigen::Index>(domain.joint_size()));
  VectorXi move = VectorXi::Zero(domain.agent_count());
  Eigen::Index index = 0;
  do {
    logits[index++] = -beta * utility(move);
  } while (advance_move(domain, move));
  logits.array() -= logits.maxCoeff();
  VectorXd weights = logits.array().exp().matrix();
  CanonicalEnsemble ensemble;
  ensemble.beta = beta;
  ensemble.probabilities = weights / weights.sum();
  return ensemble;
}

ProductDistribution joint_marginals(const CategoricalDomain& domain,
                                    const VectorXd& joint) {
  if (domain.joint_size_overflows() ||
      static_cast<std::uint64_t>(joint.size()) != domain.joint_size())
    throw ConfigError("joint vector length does not match the domain");
  std::vector<VectorXd> factors;
  factors.reserve(domain.agent_count());
  for (int i = 0; i < domain.agent_count(); ++i)
    factors.push_back(VectorXd::Zero(domain.move_count(i)));
  VectorXi move = VectorXi::Zero(domain.agent_count());
  Eigen::Index index = 0;
  do {
    for (int i = 0; i < domain.agent_count(); ++i)
      factors[i][move[i]] += joint[index];
    ++index;
  } while (advance_move(domain, move));
  return ProductDistribution(domain, std::move(factors));
}

ProductDistribution canonical_marginals(const WorldUtility& utility, double beta,
                                        std::uint64_t guard) {
  const CanonicalEnsemble ensemble = canonical_ensemble(utility, beta, guard);
  return joint_marginals(utility.domain(), ensemble.probabilities);
}

std::pair<VectorXi, double> global_minimum(const WorldUtility& utility,
                                           std::uint64_t guard) {
  const CategoricalDomain& domain = utility.domain();
  check_enumeration_guard(domain, guard);
  VectorXi move = VectorXi::Zero(domain.agent_count());
  VectorXi best_move = move;
  double best_value = utility(move);
  while (advance_move(domain, move)) {
    const double value = utility(move);
    if (value < best_value) {  // strict: earlier joint index wins ties
      best_value = value;
      best_move = move;
    }
  }
  return {best_move, best_value};
}

}  // namespace pdopt
