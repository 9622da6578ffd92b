#pragma once

#include "pdopt/core.hpp"

#include <memory>

namespace pdopt {

// Mutable knobs of the annealing loop. The inverse temperature may only
// rise; a target expectation level never needs to be stored because the
// monotone schedule replaces it.
class AnnealState {
 public:
  AnnealState(double beta0, double alpha, double kappa_pct = 1.0,
              double kappa_age = 0.0, int block_length = 1);

  double beta() const { return beta_; }
  void raise_beta(double new_beta);

  double alpha = 0.0;
  long iteration = 0;
  double threshold_k = 0.0;
  double kappa_pct = 1.0;
  double kappa_age = 0.0;
  int block_length = 1;

 private:
  double beta_ = 0.0;
};

// Provider of conditional and total expected utilities at the current
// distribution. The exact implementation enumerates; the Monte-Carlo one
// (montecarlo module) answers from aged sample history and ignores the
// distribution argument for conditionals.
class ExpectationSource {
 public:
  virtual ~ExpectationSource() = default;

  // E(g_i | x_i = j) with the other agents distributed as q.
  virtual double conditional(const ProductDistribution& q, int agent,
                             int move) const = 0;
  // All of agent i's conditionals at once.
  virtual VectorXd conditionals(const ProductDistribution& q, int agent) const;
  // E(g_i) under q; defaults to the q_i-weighted sum of conditionals.
  virtual double expectation(const ProductDistribution& q, int agent) const;
  // E(G) under q, world utility regardless of private overrides.
  virtual double world_expectation(const ProductDistribution& q) const = 0;
};

// Enumeration-backed source.
class ExactSource final : public ExpectationSource {
 public:
  explicit ExactSource(PrivateUtilitySet utilities,
                       std::uint64_t guard = kOracleGuard);

  double conditional(const ProductDistribution& q, int agent,
                     int move) const override;
  VectorXd conditionals(const ProductDistribution& q, int agent) const override;
  double world_expectation(const ProductDistribution& q) const override;

  const PrivateUtilitySet& utilities() const { return utilities_; }

 private:
  PrivateUtilitySet utilities_;
  std::uint64_t guard_;
};

// beta E(G) - S(q). The constant offset from the target level is dropped;
// the annealing schedule makes it irrelevant.
double maxent_lagrangian(const ProductDistribution& q,
                         const ExpectationSource& src, double beta);

// Agent i's optimal factor with everyone else frozen:
// q_i(j) proportional to exp(-beta E(g_i | x_i = j)), max-shifted before
// exponentiation so large beta cannot overflow.
VectorXd boltzmann_response(const ProductDistribution& q,
                            const ExpectationSource& src, int agent,
                            double beta);

// Every agent jumps to its response against the pre-step q at once;
// lambda_mix in (0, 1] blends toward the response (1 = full replacement).
ProductDistribution brouwer_step(const ProductDistribution& q,
                                 const ExpectationSource& src, double beta,
                                 double lambda_mix = 1.0);

// Largest |q_i - response_i| component across agents; zero exactly at a
// simultaneous fixed point of the coupled responses.
double brouwer_residual(const ProductDistribution& q,
                        const ExpectationSource& src, double beta);

}  // namespace pdopt
