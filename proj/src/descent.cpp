#include "pdopt/descent.hpp"

#include <cmath>

namespace pdopt {

void DescentConfig::validate() const {
  if (alpha <= 0.0) throw ConfigError("step size must be > 0");
  if (boundary_shrink <= 0.0 || boundary_shrink >= 1.0)
    throw ConfigError("boundary shrink factor must lie in (0, 1)");
  if (max_backtracks < 0) throw ConfigError("max backtracks must be >= 0");
  if (epsilon_floor <= 0.0) throw ConfigError("epsilon floor must be > 0");
}

VectorXd constrained_steepest_direction(
    const VectorXd& gradient,
    const std::vector<VectorXd>& constraint_gradients) {
  if (constraint_gradients.empty()) return gradient;
  const Eigen::Index n = gradient.size();
  Eigen::MatrixXd basis(n, static_cast<Eigen::Index>(constraint_gradients.size()));
  for (std::size_t c = 0; c < constraint_gradients.size(); ++c) {
    if (constraint_gradients[c].size() != n)
      throw ConfigError("constraint gradient has wrong dimension");
    basis.col(static_cast<Eigen::Index>(c)) = constraint_gradients[c];
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(basis);
  if (qr.rank() < basis.cols())
    throw DegenerateConstraintsError("constraint gradients are linearly dependent");
  // Least-squares coefficients of g on the constraint span; the residual
  // is orthogonal to every constraint gradient.
  return gradient - basis * qr.solve(gradient);
}

namespace {

// u_i(j) = beta E(g_i | x_i = j) + ln q_i(j) for one agent.
VectorXd agent_utility_vector(const ProductDistribution& q,
                              const ExpectationSource& src, int agent,
                              double beta) {
  return beta * src.conditionals(q, agent) +
         q.factor(agent).array().log().matrix();
}

}  // namespace

std::vector<VectorXd> lagrangian_gradient(const ProductDistribution& q,
                                          const ExpectationSource& src,
                                          double beta) {
  std::vector<VectorXd> gradient;
  gradient.reserve(q.agent_count());
  for (int i = 0; i < q.agent_count(); ++i) {
    VectorXd u = agent_utility_vector(q, src, i, beta);
    gradient.push_back((u.array() - u.mean()).matrix());
  }
  return gradient;
}

double projected_gradient_norm(const ProductDistribution& q,
                               const ExpectationSource& src, double beta) {
  double sum_sq = 0.0;
  for (const VectorXd& block : lagrangian_gradient(q, src, beta))
    sum_sq += block.squaredNorm();
  return std::sqrt(sum_sq);
}

ProductDistribution gradient_step(const ProductDistribution& q,
                                  const ExpectationSource& src, double beta,
                                  const DescentConfig& cfg) {
  cfg.validate();
  const std::vector<VectorXd> gradient = lagrangian_gradient(q, src, beta);
  double alpha = cfg.alpha;
  for (int attempt = 0; attempt <= cfg.max_backtracks; ++attempt) {
    std::vector<VectorXd> raw;
    raw.reserve(q.agent_count());
    for (int i = 0; i < q.agent_count(); ++i)
      raw.push_back(q.factor(i) - alpha * gradient[i]);
    try {
      return project_interior(q.domain(), std::move(raw), cfg.epsilon_floor);
    } catch (const ProjectionError&) {
      alpha *= 0.5;
    }
  }
  throw StepCollapseError("gradient step kept overshooting after all backtracks");
}

std::vector<VectorXd> nearest_newton_target(const ProductDistribution& q,
                                            const ExpectationSource& src,
                                            double beta) {
  std::vector<VectorXd> target;
  target.reserve(q.agent_count());
  for (int i = 0; i < q.agent_count(); ++i) {
    const VectorXd& factor = q.factor(i);
    const VectorXd conditionals = src.conditionals(q, i);
    const double expected = factor.dot(conditionals);
    const double factor_entropy = entropy(factor);
    const Eigen::ArrayXd ratio = (1.0 - factor_entropy) -
                                 factor.array().log() -
                                 beta * (conditionals.array() - expected);
    target.push_back((factor.array() * ratio).matrix());
  }
  return target;
}

ProductDistribution nearest_newton_step(const ProductDistribution& q,
                                        const ExpectationSource& src,
                                        double beta, const DescentConfig& cfg) {
  cfg.validate();
  const std::vector<VectorXd> target = nearest_newton_target(q, src, beta);
  const double floor = cfg.epsilon_floor * (1.0 - 1e-6);
  double eta = 1.0;
  for (int attempt = 0; attempt <= cfg.max_backtracks; ++attempt) {
    bool interior = true;
    std::vector<VectorXd> blended;
    blended.reserve(q.agent_count());
    for (int i = 0; i < q.agent_count(); ++i) {
      VectorXd factor = (1.0 - eta) * q.factor(i) + eta * target[i];
      if ((factor.array() < floor).any()) interior = false;
      blended.push_back(std::move(factor));
    }
    if (interior)
      return project_interior(q.domain(), std::move(blended), cfg.epsilon_floor);
    eta *= cfg.boundary_shrink;
  }
  // No partial jump stayed interior (a floored component is being pushed
  // outward); take the smallest and let the projection clip it.
  std::vector<VectorXd> blended;
  blended.reserve(q.agent_count());
  for (int i = 0; i < q.agent_count(); ++i)
    blended.push_back((1.0 - eta) * q.factor(i) + eta * target[i]);
  return project_interior(q.domain(), std::move(blended), cfg.epsilon_floor);
}

std::pair<double, double> hessian2x2_eigenvalues(double s, double t,
                                                 double coupling) {
  if (!std::isfinite(s) || !std::isfinite(t) || !std::isfinite(coupling))
    throw ConfigError("hessian entries must be finite");
  const double radius = std::sqrt(4.0 * coupling * coupling + (s - t) * (s - t));
  return {(s + t + radius) / 2.0, (s + t - radius) / 2.0};
}

}  // namespace pdopt
