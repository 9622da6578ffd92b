#pragma once

#include "pdopt/core.hpp"

#include <utility>
#include <vector>

namespace pdopt {

// Throws GuardExceededError unless the joint space fits under `guard`.
void check_enumeration_guard(const CategoricalDomain& domain,
                             std::uint64_t guard = kOracleGuard);

// E(u | x_i = j) with the other agents distributed as q: full enumeration
// of the complementary subspace.
double exact_conditional(const WorldUtility& utility,
                         const ProductDistribution& q, int agent, int move,
                         std::uint64_t guard = kOracleGuard);

// All conditionals of one agent in a single subspace walk.
VectorXd exact_conditionals(const WorldUtility& utility,
                            const ProductDistribution& q, int agent,
                            std::uint64_t guard = kOracleGuard);

// E_q(u) by full enumeration.
double exact_expectation(const WorldUtility& utility,
                         const ProductDistribution& q,
                         std::uint64_t guard = kOracleGuard);

// P(u < k | x_i = j) under q, or its logistic smoothing
// 1/(1 + exp(-(k - u)/scale)) when scale > 0.
VectorXd exact_bit_conditionals(const WorldUtility& utility,
                                const ProductDistribution& q, int agent,
                                double threshold_k, double logistic_scale = 0.0,
                                std::uint64_t guard = kOracleGuard);

// Dense joint distribution q(x) over the whole space.
VectorXd dense_joint(const ProductDistribution& q,
                     std::uint64_t guard = kOracleGuard);

// Boltzmann weighting of the joint space: p(x) proportional to
// exp(-beta G(x)), normalized with a max shift. Strictly positive for
// finite beta and finite G.
struct CanonicalEnsemble {
  double beta = 0.0;
  VectorXd probabilities;
};

CanonicalEnsemble canonical_ensemble(const WorldUtility& utility, double beta,
                                     std::uint64_t guard = kOracleGuard);

// Per-agent marginals of a dense joint distribution.
ProductDistribution joint_marginals(const CategoricalDomain& domain,
                                    const VectorXd& joint);

// Product of the marginals of the canonical ensemble: the closest product
// distribution to it when closeness is measured toward the ensemble.
ProductDistribution canonical_marginals(const WorldUtility& utility, double beta,
                                        std::uint64_t guard = kOracleGuard);

// Exhaustive argmin with lowest-joint-index tie-break.
std::pair<VectorXi, double> global_minimum(const WorldUtility& utility,
                                           std::uint64_t guard = kOracleGuard);

}  // namespace pdopt
