#pragma once

#include "pdopt/core.hpp"
#include "pdopt/lagrangian.hpp"

#include <utility>
#include <vector>

namespace pdopt {

struct DescentConfig {
  double alpha = 0.05;          // step size
  double boundary_shrink = 0.5; // geometric backoff near the simplex border
  int max_backtracks = 30;
  double epsilon_floor = kEpsilonFloor;

  void validate() const;
};

// Steepest feasible direction: g plus the combination of constraint
// gradients that makes the result orthogonal to every one of them.
// Returned unnormalized; the caller scales it. Linearly dependent
// constraints are rejected.
VectorXd constrained_steepest_direction(
    const VectorXd& gradient,
    const std::vector<VectorXd>& constraint_gradients);

// Per-agent projected gradient of the maxent Lagrangian:
// u_i(j) = beta E(g_i | x_i = j) + ln q_i(j), centered by its plain mean
// over agent i's moves. Each agent's block depends only on its own
// conditionals, so the update is computable agent-locally.
std::vector<VectorXd> lagrangian_gradient(const ProductDistribution& q,
                                          const ExpectationSource& src,
                                          double beta);

// l2 norm of the stacked projected gradient.
double projected_gradient_norm(const ProductDistribution& q,
                               const ExpectationSource& src, double beta);

// One simplex-projected steepest-descent step. The raw update preserves
// factor sums; components that dip under the floor are clipped back by
// project_interior. Backtracking halves alpha when projection reports a
// grossly oversized step, and gives up with StepCollapseError after
// max_backtracks attempts.
ProductDistribution gradient_step(const ProductDistribution& q,
                                  const ExpectationSource& src, double beta,
                                  const DescentConfig& cfg);

// Factor-space Newton jump toward the product distribution closest to the
// quadratic model's minimizer:
//   q*_i(j)/q_i(j) = 1 - S(q_i) - ln q_i(j) - beta [E(g_i|x_i=j) - E(g_i)].
// The returned point is q + eta (q* - q) with eta the largest of
// {1, shrink, shrink^2, ...} that stays interior; if no eta in that range
// does, the smallest is taken and clipped.
ProductDistribution nearest_newton_step(const ProductDistribution& q,
                                        const ExpectationSource& src,
                                        double beta, const DescentConfig& cfg);

// Full Newton target q* without partial stepping (exposed for tests of
// the jump direction itself).
std::vector<VectorXd> nearest_newton_target(const ProductDistribution& q,
                                            const ExpectationSource& src,
                                            double beta);

// Eigenvalues (larger first) of the symmetric 2x2 matrix
// [[s, a], [a, t]]: (s + t +/- sqrt(4 a^2 + (s - t)^2)) / 2. Probes local
// convexity of a two-coordinate restriction of the Lagrangian.
std::pair<double, double> hessian2x2_eigenvalues(double s, double t,
                                                 double coupling);

}  // namespace pdopt
