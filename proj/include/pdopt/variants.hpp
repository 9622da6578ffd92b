#pragma once

#include "pdopt/core.hpp"

#include <optional>
#include <vector>

namespace pdopt {

enum class VariantKind {
  none,
  percentile,
  transform,
  threshold_gradient,
  klpq_threshold,
  klpq_exponential,
};

enum class Smoothing { heaviside, logistic };

enum class TransformKind { identity, neg_exp };

struct VariantConfig {
  VariantKind kind = VariantKind::none;
  double kappa_pct = 0.25;           // percentile retention fraction
  std::optional<double> threshold_k; // fixed threshold; unset = scheduled
  double threshold_pct = 0.25;       // fraction meant to fall below K
  Smoothing smoothing = Smoothing::heaviside;
  double logistic_scale = 1.0;
  double transform_lambda = 1.0;     // f(G) = -exp(-lambda G)

  void validate() const;
};

// Keep the ceil(kappa_pct * N) samples with the smallest world value,
// earlier samples winning ties, in their original order.
std::vector<JointSample> percentile_filter(const std::vector<JointSample>& samples,
                                           double kappa_pct);

// Monotone reshaping of the objective. neg_exp gives -exp(-lambda G):
// concave, strictly increasing, bounded above, so the minimizer set is
// untouched while good values are accentuated.
WorldUtility transform_utility(const WorldUtility& utility, TransformKind kind,
                               double lambda = 1.0);

// Provider of b_i(j) = P(G < K | x_i = j), exactly or from samples,
// optionally with the sharp indicator replaced by a logistic ramp.
class BitSource {
 public:
  virtual ~BitSource() = default;
  virtual double bit(const ProductDistribution& q, int agent,
                     int move) const = 0;
  virtual VectorXd bits(const ProductDistribution& q, int agent) const;
  virtual double threshold() const = 0;
};

class ExactBitSource final : public BitSource {
 public:
  ExactBitSource(WorldUtility world, double threshold_k,
                 double logistic_scale = 0.0, std::uint64_t guard = kOracleGuard);

  double bit(const ProductDistribution& q, int agent, int move) const override;
  VectorXd bits(const ProductDistribution& q, int agent) const override;
  double threshold() const override { return threshold_k_; }

 private:
  WorldUtility world_;
  double threshold_k_;
  double logistic_scale_;
  std::uint64_t guard_;
};

// Non-owning view over a sample list; keep the samples alive while using it.
class SampleBitSource final : public BitSource {
 public:
  SampleBitSource(const std::vector<JointSample>& samples, double threshold_k,
                  double logistic_scale = 0.0);

  double bit(const ProductDistribution& q, int agent, int move) const override;
  double threshold() const override { return threshold_k_; }

 private:
  const std::vector<JointSample>* samples_;
  double threshold_k_;
  double logistic_scale_;
};

// Gradient-style update for the objective P(G > K): adds
//   alpha [ beta b_i(j) + ln q_i(j) - mean_j'(beta b_i(j') + ln q_i(j')) ]
// to each component, then projects back to the interior.
ProductDistribution threshold_gradient_step(const ProductDistribution& q,
                                            const BitSource& bit_src,
                                            double beta, double alpha,
                                            double epsilon_floor = kEpsilonFloor);

// Replace q with the per-agent marginals of q truncated below K:
//   q_i(j) <- q_i(j) P(G < K | x_i = j) / P(G < K).
// Exact form; throws EmptyTruncationError when nothing lies below K.
ProductDistribution klpq_threshold_step(const ProductDistribution& q,
                                        const WorldUtility& utility,
                                        double threshold_k,
                                        double epsilon_floor = kEpsilonFloor,
                                        std::uint64_t guard = kOracleGuard);
// Sample form: conditional frequencies with add-epsilon smoothing.
ProductDistribution klpq_threshold_step(const ProductDistribution& q,
                                        const std::vector<JointSample>& samples,
                                        double threshold_k,
                                        double epsilon_floor = kEpsilonFloor);

// Same with the sharp truncation replaced by the kernel exp(-beta G):
//   q_i(j) <- q_i(j) E(e^{-beta G} | x_i = j) / E(e^{-beta G}).
// Weights are max-shifted before exponentiation.
ProductDistribution klpq_exponential_step(const ProductDistribution& q,
                                          const WorldUtility& utility,
                                          double beta,
                                          double epsilon_floor = kEpsilonFloor,
                                          std::uint64_t guard = kOracleGuard);
ProductDistribution klpq_exponential_step(const ProductDistribution& q,
                                          const std::vector<JointSample>& samples,
                                          double beta,
                                          double epsilon_floor = kEpsilonFloor);

}  // namespace pdopt
