#include "pdopt/lagrangian.hpp"

#include "pdopt/oracle.hpp"

#include <cmath>

namespace pdopt {

AnnealState::AnnealState(double beta0, double alpha_in, double kappa_pct_in,
                         double kappa_age_in, int block_length_in)
    : alpha(alpha_in), kappa_pct(kappa_pct_in), kappa_age(kappa_age_in),
      block_length(block_length_in), beta_(beta0) {
  if (beta0 < 0.0) throw ConfigError("beta must be >= 0");
  if (alpha <= 0.0) throw ConfigError("step size must be > 0");
  if (kappa_pct <= 0.0 || kappa_pct > 1.0)
    throw ConfigError("kappa_pct must lie in (0, 1]");
  if (kappa_age < 0.0) throw ConfigError("aging constant must be >= 0");
  if (block_length < 1) throw ConfigError("block length must be positive");
}

void AnnealState::raise_beta(double new_beta) {
  if (new_beta < beta_)
    throw ConfigError("inverse temperature may only increase");
  beta_ = new_beta;
}

VectorXd ExpectationSource::conditionals(const ProductDistribution& q,
                                         int agent) const {
  VectorXd values(q.domain().move_count(agent));
  for (int j = 0; j < values.size(); ++j) values[j] = conditional(q, agent, j);
  return values;
}

double ExpectationSource::expectation(const ProductDistribution& q,
                                      int agent) const {
  return q.factor(agent).dot(conditionals(q, agent));
}

ExactSource::ExactSource(PrivateUtilitySet utilities, std::uint64_t guard)
    : utilities_(std::move(utilities)), guard_(guard) {}

double ExactSource::conditional(const ProductDistribution& q, int agent,
                                int move) const {
  return exact_conditional(utilities_.agent(agent), q, agent, move, guard_);
}

VectorXd ExactSource::conditionals(const ProductDistribution& q,
                                   int agent) const {
  return exact_conditionals(utilities_.agent(agent), q, agent, guard_);
}

double ExactSource::world_expectation(const ProductDistribution& q) const {
  return exact_expectation(utilities_.world(), q, guard_);
}

double maxent_lagrangian(const ProductDistribution& q,
                         const ExpectationSource& src, double beta) {
  return beta * src.world_expectation(q) - entropy(q);
}

VectorXd boltzmann_response(const ProductDistribution& q,
                            const ExpectationSource& src, int agent,
                            double beta) {
  VectorXd logits = -beta * src.conditionals(q, agent);
  logits.array() -= logits.maxCoeff();
  const VectorXd weights = logits.array().exp().matrix();
  return weights / weights.sum();
}

ProductDistribution brouwer_step(const ProductDistribution& q,
                                 const ExpectationSource& src, double beta,
                                 double lambda_mix) {
  if (lambda_mix <= 0.0 || lambda_mix > 1.0)
    throw ConfigError("lambda_mix must lie in (0, 1]");
  std::vector<VectorXd> factors;
  factors.reserve(q.agent_count());
  for (int i = 0; i < q.agent_count(); ++i) {
    const VectorXd response = boltzmann_response(q, src, i, beta);
    factors.push_back((1.0 - lambda_mix) * q.factor(i) + lambda_mix * response);
  }
  return ProductDistribution(q.domain(), std::move(factors));
}

double brouwer_residual(const ProductDistribution& q,
                        const ExpectationSource& src, double beta) {
  double residual = 0.0;
  for (int i = 0; i < q.agent_count(); ++i) {
    const VectorXd response = boltzmann_response(q, src, i, beta);
    residual = std::max(residual,
                        (q.factor(i) - response).cwiseAbs().maxCoeff());
  }
  return residual;
}

}  // namespace pdopt
