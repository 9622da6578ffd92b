#include "pdopt/variants.hpp"

#include "pdopt/montecarlo.hpp"
#include "pdopt/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace pdopt {

void VariantConfig::validate() const {
  if (kappa_pct <= 0.0 || kappa_pct > 1.0)
    throw ConfigError("kappa_pct must lie in (0, 1]");
  if (threshold_pct <= 0.0 || threshold_pct > 1.0)
    throw ConfigError("threshold_pct must lie in (0, 1]");
  if (logistic_scale <= 0.0)
    throw ConfigError("logistic scale must be > 0");
  if (transform_lambda <= 0.0)
    throw ConfigError("transform lambda must be > 0");
}

std::vector<JointSample> percentile_filter(const std::vector<JointSample>& samples,
                                           double kappa_pct) {
  if (samples.empty())
    throw ConfigError("percentile filter needs at least one sample");
  if (kappa_pct <= 0.0 || kappa_pct > 1.0)
    throw ConfigError("kappa_pct must lie in (0, 1]");
  const std::size_t keep = static_cast<std::size_t>(
      std::ceil(kappa_pct * static_cast<double>(samples.size())));
  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return samples[a].world_value < samples[b].world_value;
  });
  order.resize(keep);
  std::sort(order.begin(), order.end());  // restore original sample order
  std::vector<JointSample> kept;
  kept.reserve(keep);
  for (std::size_t index : order) kept.push_back(samples[index]);
  return kept;
}

WorldUtility transform_utility(const WorldUtility& utility, TransformKind kind,
                               double lambda) {
  switch (kind) {
    case TransformKind::identity:
      return utility;
    case TransformKind::neg_exp:
      if (lambda <= 0.0)
        throw ConfigError("transform lambda must be > 0");
      return utility.transformed(
          [lambda](double g) { return -std::exp(-lambda * g); });
  }
  throw ConfigError("unknown transform kind");
}

VectorXd BitSource::bits(const ProductDistribution& q, int agent) const {
  VectorXd values(q.domain().move_count(agent));
  for (int j = 0; j < values.size(); ++j) values[j] = bit(q, agent, j);
  return values;
}

ExactBitSource::ExactBitSource(WorldUtility world, double threshold_k,
                               double logistic_scale, std::uint64_t guard)
    : world_(std::move(world)), threshold_k_(threshold_k),
      logistic_scale_(logistic_scale), guard_(guard) {}

double ExactBitSource::bit(const ProductDistribution& q, int agent,
                           int move) const {
  return bits(q, agent)[move];
}

VectorXd ExactBitSource::bits(const ProductDistribution& q, int agent) const {
  return exact_bit_conditionals(world_, q, agent, threshold_k_, logistic_scale_,
                                guard_);
}

SampleBitSource::SampleBitSource(const std::vector<JointSample>& samples,
                                 double threshold_k, double logistic_scale)
    : samples_(&samples), threshold_k_(threshold_k),
      logistic_scale_(logistic_scale) {}

double SampleBitSource::bit(const ProductDistribution&, int agent,
                            int move) const {
  if (logistic_scale_ <= 0.0)
    return estimate_bit(*samples_, threshold_k_, agent, move);
  long eligible = 0;
  double total = 0.0;
  for (const JointSample& sample : *samples_) {
    if (sample.move[agent] != move) continue;
    if (sample.forced() && sample.forced_agent != agent) continue;
    ++eligible;
    total += 1.0 / (1.0 + std::exp(-(threshold_k_ - sample.world_value) /
                                   logistic_scale_));
  }
  if (eligible == 0)
    throw CoverageError("bit estimate unavailable: pair never sampled");
  return total / static_cast<double>(eligible);
}

ProductDistribution threshold_gradient_step(const ProductDistribution& q,
                                            const BitSource& bit_src,
                                            double beta, double alpha,
                                            double epsilon_floor) {
  if (alpha < 0.0) throw ConfigError("step size must be >= 0");
  std::vector<VectorXd> raw;
  raw.reserve(q.agent_count());
  for (int i = 0; i < q.agent_count(); ++i) {
    const VectorXd v = beta * bit_src.bits(q, i) +
                       q.factor(i).array().log().matrix();
    raw.push_back(q.factor(i) + alpha * (v.array() - v.mean()).matrix());
  }
  return project_interior(q.domain(), std::move(raw), epsilon_floor);
}

namespace {

// Shared tail of the marginal updates: q_i(j) proportional to
// q_i(j) * weight_i(j), smoothed away from zero and renormalized.
ProductDistribution reweighted_marginals(const ProductDistribution& q,
                                         const std::vector<VectorXd>& weights,
                                         double epsilon_floor) {
  std::vector<VectorXd> raw;
  raw.reserve(q.agent_count());
  for (int i = 0; i < q.agent_count(); ++i) {
    VectorXd factor = (q.factor(i).array() * weights[i].array()).matrix();
    const double mass = factor.sum();
    if (mass <= 0.0)
      throw EmptyTruncationError("no probability mass below the threshold");
    factor /= mass;
    raw.push_back(std::move(factor));
  }
  return project_interior(q.domain(), std::move(raw), epsilon_floor);
}

}  // namespace

ProductDistribution klpq_threshold_step(const ProductDistribution& q,
                                        const WorldUtility& utility,
                                        double threshold_k,
                                        double epsilon_floor,
                                        std::uint64_t guard) {
  std::vector<VectorXd> weights;
  weights.reserve(q.agent_count());
  for (int i = 0; i < q.agent_count(); ++i)
    weights.push_back(
        exact_bit_conditionals(utility, q, i, threshold_k, 0.0, guard));
  return reweighted_marginals(q, weights, epsilon_floor);
}

ProductDistribution klpq_threshold_step(const ProductDistribution& q,
                                        const std::vector<JointSample>& samples,
                                        double threshold_k,
                                        double epsilon_floor) {
  bool any_below = false;
  for (const JointSample& sample : samples) {
    if (!sample.forced() && sample.world_value < threshold_k) {
      any_below = true;
      break;
    }
  }
  if (!any_below)
    throw EmptyTruncationError("no sample lies below the threshold");
  std::vector<VectorXd> weights;
  weights.reserve(q.agent_count());
  for (int i = 0; i < q.agent_count(); ++i) {
    VectorXd bits(q.domain().move_count(i));
    for (int j = 0; j < bits.size(); ++j)
      bits[j] = estimate_bit(samples, threshold_k, i, j) + epsilon_floor;
    weights.push_back(std::move(bits));
  }
  return reweighted_marginals(q, weights, epsilon_floor);
}

namespace {

// E(exp(-beta (G - shift)) | x_i = j) for every agent: the common shift
// drops out of the marginal update after normalization.
std::vector<VectorXd> exact_kernel_conditionals(const ProductDistribution& q,
                                                const WorldUtility& utility,
                                                double beta,
                                                std::uint64_t guard) {
  check_enumeration_guard(q.domain(), guard);
  const CategoricalDomain& domain = q.domain();
  double shift = std::numeric_limits<double>::infinity();
  VectorXi move = VectorXi::Zero(domain.agent_count());
  do {
    shift = std::min(shift, utility(move));
  } while (advance_move(domain, move));

  std::vector<VectorXd> kernels;
  kernels.reserve(domain.agent_count());
  for (int i = 0; i < domain.agent_count(); ++i) {
    VectorXd kernel = VectorXd::Zero(domain.move_count(i));
    move.setZero();
    do {
      double w = 1.0;
      for (int k = 0; k < domain.agent_count(); ++k)
        if (k != i) w *= q.factor(k)[move[k]];
      if (w == 0.0) continue;
      for (int j = 0; j < domain.move_count(i); ++j) {
        move[i] = j;
        kernel[j] += w * std::exp(-beta * (utility(move) - shift));
      }
      move[i] = 0;
    } while (advance_move_excluding(domain, i, move));
    kernels.push_back(std::move(kernel));
  }
  return kernels;
}

}  // namespace

ProductDistribution klpq_exponential_step(const ProductDistribution& q,
                                          const WorldUtility& utility,
                                          double beta, double epsilon_floor,
                                          std::uint64_t guard) {
  if (beta < 0.0) throw ConfigError("inverse temperature must be >= 0");
  const std::vector<VectorXd> weights =
      exact_kernel_conditionals(q, utility, beta, guard);
  return reweighted_marginals(q, weights, epsilon_floor);
}

ProductDistribution klpq_exponential_step(const ProductDistribution& q,
                                          const std::vector<JointSample>& samples,
                                          double beta, double epsilon_floor) {
  if (beta < 0.0) throw ConfigError("inverse temperature must be >= 0");
  if (samples.empty())
    throw ConfigError("kernel update needs at least one sample");
  double shift = std::numeric_limits<double>::infinity();
  for (const JointSample& sample : samples)
    shift = std::min(shift, sample.world_value);
  std::vector<VectorXd> weights;
  weights.reserve(q.agent_count());
  for (int i = 0; i < q.agent_count(); ++i) {
    VectorXd totals = VectorXd::Zero(q.domain().move_count(i));
    VectorXi counts = VectorXi::Zero(q.domain().move_count(i));
    for (const JointSample& sample : samples) {
      if (sample.forced() && sample.forced_agent != i) continue;
      const int j = sample.move[i];
      totals[j] += std::exp(-beta * (sample.world_value - shift));
      counts[j] += 1;
    }
    VectorXd kernel(totals.size());
    for (int j = 0; j < kernel.size(); ++j) {
      kernel[j] = counts[j] > 0
                      ? totals[j] / static_cast<double>(counts[j]) + epsilon_floor
                      : epsilon_floor;
    }
    weights.push_back(std::move(kernel));
  }
  return reweighted_marginals(q, weights, epsilon_floor);
}

}  // namespace pdopt
