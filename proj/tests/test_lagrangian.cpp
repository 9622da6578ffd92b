#include "pdopt/lagrangian.hpp"

#include "pdopt/descent.hpp"
#include "pdopt/oracle.hpp"

#include <doctest.h>

#include <cmath>

using namespace pdopt;

namespace {

WorldUtility p0() {
  VectorXd values(4);
  values << 0, 1, 1, 2;
  return WorldUtility::from_table(CategoricalDomain({2, 2}), values);
}

VectorXd vec2(double a, double b) {
  VectorXd v(2);
  v << a, b;
  return v;
}

}  // namespace

TEST_SUITE("lagrangian") {

TEST_CASE("anneal state enforces the monotone schedule") {
  AnnealState state(0.5, 0.1);
  state.raise_beta(0.5);
  state.raise_beta(2.0);
  CHECK(state.beta() == 2.0);
  CHECK_THROWS_AS(state.raise_beta(1.0), ConfigError);

  CHECK_THROWS_AS(AnnealState(-1.0, 0.1), ConfigError);
  CHECK_THROWS_AS(AnnealState(1.0, 0.0), ConfigError);
  CHECK_THROWS_AS(AnnealState(1.0, 0.1, 1.5), ConfigError);
  CHECK_THROWS_AS(AnnealState(1.0, 0.1, 0.5, -1.0), ConfigError);
}

TEST_CASE("maxent lagrangian values") {
  const WorldUtility g = p0();
  const PrivateUtilitySet utilities(g);
  const ExactSource src(utilities);
  const auto uniform = ProductDistribution::uniform(g.domain());

  CHECK(maxent_lagrangian(uniform, src, 1.0) ==
        doctest::Approx(1.0 - 2.0 * std::log(2.0)).epsilon(1e-12));
  CHECK(maxent_lagrangian(uniform, src, 1.0) ==
        doctest::Approx(-0.386294).epsilon(1e-5));

  // beta = 0 collapses to negative entropy.
  ProductDistribution skewed(g.domain(), {vec2(0.75, 0.25), vec2(0.5, 0.5)});
  CHECK(maxent_lagrangian(skewed, src, 0.0) ==
        doctest::Approx(-entropy(skewed)).epsilon(1e-14));

  ProductDistribution at_origin(g.domain(), {vec2(1, 0), vec2(1, 0)});
  CHECK(maxent_lagrangian(at_origin, src, 1.0) == 0.0);
}

TEST_CASE("boltzmann response") {
  const WorldUtility g = p0();
  const ExactSource src{PrivateUtilitySet(g)};
  const auto uniform = ProductDistribution::uniform(g.domain());

  SUBCASE("flat at beta zero") {
    const VectorXd response = boltzmann_response(uniform, src, 0, 0.0);
    CHECK(response[0] == 0.5);
    CHECK(response[1] == 0.5);
  }

  SUBCASE("matches the closed form at beta one") {
    const VectorXd response = boltzmann_response(uniform, src, 0, 1.0);
    const double z = std::exp(-0.5) + std::exp(-1.5);
    CHECK(response[0] == doctest::Approx(std::exp(-0.5) / z).epsilon(1e-12));
    CHECK(response[0] == doctest::Approx(0.731059).epsilon(1e-6));
    CHECK(response[1] == doctest::Approx(0.268941).epsilon(1e-6));
  }

  SUBCASE("numerically one-hot at large beta") {
    const VectorXd response = boltzmann_response(uniform, src, 0, 100.0);
    CHECK(response[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(response[1] == doctest::Approx(3.72e-44).epsilon(0.01));
    CHECK(std::isfinite(response[1]));
  }
}

TEST_CASE("response zeroes the agent's own projected gradient") {
  RandomSource rng(3);
  CategoricalDomain domain({3, 3, 3});
  RandomSource table_rng(55);
  VectorXd values(27);
  for (Eigen::Index i = 0; i < 27; ++i) values[i] = table_rng.uniform01();
  const WorldUtility g = WorldUtility::from_table(domain, values);
  const ExactSource src{PrivateUtilitySet(g)};

  ProductDistribution q = ProductDistribution::uniform(domain);
  for (double beta : {0.3, 1.0, 4.0}) {
    for (int i = 0; i < domain.agent_count(); ++i) {
      const ProductDistribution replaced =
          q.with_factor(i, boltzmann_response(q, src, i, beta));
      const auto gradient = lagrangian_gradient(replaced, src, beta);
      CHECK(gradient[i].norm() < 1e-8);
    }
  }
}

TEST_CASE("brouwer step") {
  const WorldUtility g = p0();
  const ExactSource src{PrivateUtilitySet(g)};
  const auto domain = g.domain();

  SUBCASE("beta zero flattens any start") {
    ProductDistribution skewed(domain, {vec2(0.9, 0.1), vec2(0.2, 0.8)});
    const ProductDistribution next = brouwer_step(skewed, src, 0.0);
    CHECK(next.factor(0)[0] == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(next.factor(1)[0] == doctest::Approx(0.5).epsilon(1e-15));
  }

  SUBCASE("single full step from uniform") {
    const auto uniform = ProductDistribution::uniform(domain);
    const ProductDistribution next = brouwer_step(uniform, src, 1.0);
    CHECK(next.factor(0)[0] == doctest::Approx(0.731059).epsilon(1e-6));
    CHECK(next.factor(1)[0] == doctest::Approx(0.731059).epsilon(1e-6));
  }

  SUBCASE("iteration reaches a consistent fixed point") {
    ProductDistribution q(domain, {vec2(0.9, 0.1), vec2(0.3, 0.7)});
    for (int iter = 0; iter < 200; ++iter) q = brouwer_step(q, src, 1.0, 0.5);
    CHECK(brouwer_residual(q, src, 1.0) < 1e-10);
  }

  SUBCASE("mixing weight is validated") {
    const auto uniform = ProductDistribution::uniform(domain);
    CHECK_THROWS_AS(brouwer_step(uniform, src, 1.0, 0.0), ConfigError);
    CHECK_THROWS_AS(brouwer_step(uniform, src, 1.0, 1.5), ConfigError);
  }
}

TEST_CASE("expected utility falls with beta at the variance rate") {
  // d/dbeta E(G) at the per-agent response equals -Var of the
  // conditionals under that response.
  const WorldUtility g = p0();
  const ExactSource src{PrivateUtilitySet(g)};
  const auto uniform = ProductDistribution::uniform(g.domain());

  const auto expected_at = [&](double beta) {
    const VectorXd response = boltzmann_response(uniform, src, 0, beta);
    const VectorXd conditionals = src.conditionals(uniform, 0);
    return response.dot(conditionals);
  };
  const auto variance_at = [&](double beta) {
    const VectorXd response = boltzmann_response(uniform, src, 0, beta);
    const VectorXd conditionals = src.conditionals(uniform, 0);
    const double mean = response.dot(conditionals);
    return response.dot((conditionals.array() - mean).square().matrix());
  };

  const double h = 1e-4;
  for (double beta : {0.0, 0.5, 1.0, 2.0}) {
    const double derivative =
        (expected_at(beta + h) - expected_at(beta - h)) / (2.0 * h);
    const double variance = variance_at(beta);
    CHECK(std::abs(derivative + variance) <=
          1e-4 * std::max(variance, 1e-12));
  }
  CHECK(variance_at(0.0) == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("private utilities feed per-agent conditionals") {
  const WorldUtility g = p0();
  const auto domain = g.domain();
  // Agent 0 scores only its own move.
  WorldUtility own = WorldUtility::from_callback(
      domain, [](const VectorXi& x) { return double(x[0]); });
  const PrivateUtilitySet utilities(g, {own, std::nullopt});
  const ExactSource src(utilities);
  const auto uniform = ProductDistribution::uniform(domain);

  CHECK(src.conditional(uniform, 0, 0) == doctest::Approx(0.0));
  CHECK(src.conditional(uniform, 0, 1) == doctest::Approx(1.0));
  // Agent 1 still sees the world utility.
  CHECK(src.conditional(uniform, 1, 0) == doctest::Approx(0.5));
  // The Lagrangian's expectation stays the world one.
  CHECK(src.world_expectation(uniform) == doctest::Approx(1.0));
}

}  // TEST_SUITE
