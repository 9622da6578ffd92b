#include "pdopt/oracle.hpp"

#include <doctest.h>

#include <cmath>

using namespace pdopt;

namespace {

// G(x0, x1) = x0 + x1 on 2x2; the workhorse test problem.
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

WorldUtility random_table(const CategoricalDomain& domain, std::uint64_t seed) {
  RandomSource rng(seed);
  VectorXd values(static_cast<Eigen::Index>(domain.joint_size()));
  for (Eigen::Index i = 0; i < values.size(); ++i) values[i] = rng.uniform01();
  return WorldUtility::from_table(domain, values);
}

ProductDistribution random_interior(const CategoricalDomain& domain,
                                    RandomSource& rng) {
  std::vector<VectorXd> factors;
  for (int i = 0; i < domain.agent_count(); ++i) {
    VectorXd f(domain.move_count(i));
    for (Eigen::Index j = 0; j < f.size(); ++j)
      f[j] = 0.05 + rng.uniform01();
    factors.push_back(f / f.sum());
  }
  return ProductDistribution(domain, std::move(factors));
}

}  // namespace

TEST_SUITE("oracle") {

TEST_CASE("conditionals on the sum problem") {
  const WorldUtility g = p0();
  const auto uniform = ProductDistribution::uniform(g.domain());

  CHECK(exact_conditional(g, uniform, 0, 0) == doctest::Approx(0.5));
  CHECK(exact_conditional(g, uniform, 0, 1) == doctest::Approx(1.5));

  // Conditioning on a point mass for the other agent.
  ProductDistribution pinned(g.domain(), {vec2(0.5, 0.5), vec2(0.0, 1.0)});
  CHECK(exact_conditional(g, pinned, 0, 0) == 1.0);
}

TEST_CASE("expectations by enumeration") {
  const WorldUtility g = p0();
  const auto domain = g.domain();

  CHECK(exact_expectation(g, ProductDistribution::uniform(domain)) ==
        doctest::Approx(1.0));

  ProductDistribution at_origin(domain, {vec2(1.0, 0.0), vec2(1.0, 0.0)});
  CHECK(exact_expectation(g, at_origin) == 0.0);

  ProductDistribution skewed(domain, {vec2(0.75, 0.25), vec2(0.5, 0.5)});
  CHECK(exact_expectation(g, skewed) == doctest::Approx(0.75));
}

TEST_CASE("expectation equals the factor-weighted conditionals") {
  RandomSource rng(21);
  for (std::uint64_t seed : {1, 2, 3}) {
    CategoricalDomain domain({3, 2, 4});
    const WorldUtility g = random_table(domain, seed);
    const ProductDistribution q = random_interior(domain, rng);
    const double expectation = exact_expectation(g, q);
    for (int i = 0; i < domain.agent_count(); ++i) {
      double recombined = 0.0;
      for (int j = 0; j < domain.move_count(i); ++j)
        recombined += q.factor(i)[j] * exact_conditional(g, q, i, j);
      CHECK(expectation == doctest::Approx(recombined).epsilon(1e-10));
    }
  }
}

TEST_CASE("canonical ensemble and marginals") {
  const WorldUtility g = p0();

  SUBCASE("beta zero is exactly uniform") {
    const ProductDistribution q = canonical_marginals(g, 0.0);
    for (int i = 0; i < 2; ++i) {
      CHECK(q.factor(i).maxCoeff() == q.factor(i).minCoeff());
      CHECK(q.factor(i)[0] == doctest::Approx(0.5).epsilon(1e-15));
    }
  }

  SUBCASE("large beta concentrates on the minimizer") {
    const ProductDistribution q = canonical_marginals(g, 200.0);
    CHECK(q.factor(0)[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(q.factor(1)[0] == doctest::Approx(1.0).epsilon(1e-12));
  }

  SUBCASE("beta one matches the closed form") {
    const double e1 = std::exp(-1.0);
    const double expected = (1.0 + e1) / (1.0 + 2.0 * e1 + e1 * e1);
    const ProductDistribution q = canonical_marginals(g, 1.0);
    CHECK(q.factor(0)[0] == doctest::Approx(expected).epsilon(1e-12));
    CHECK(q.factor(1)[0] == doctest::Approx(expected).epsilon(1e-12));
    CHECK(expected == doctest::Approx(0.731059).epsilon(1e-6));
  }

  SUBCASE("ensemble probabilities are positive and normalized") {
    const CanonicalEnsemble ensemble = canonical_ensemble(g, 3.0);
    CHECK(ensemble.probabilities.minCoeff() > 0.0);
    CHECK(ensemble.probabilities.sum() == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("canonical marginals beat a grid of product distributions") {
  // Every grid point's distance to the ensemble is at least the
  // marginals' distance, up to float noise.
  const WorldUtility g = p0();
  const double beta = 1.0;
  const CanonicalEnsemble ensemble = canonical_ensemble(g, beta);
  const ProductDistribution marginals = canonical_marginals(g, beta);
  const double best =
      kl_divergence(ensemble.probabilities, dense_joint(marginals));

  for (int a = 1; a < 101; ++a) {
    for (int b = 1; b < 101; ++b) {
      if (a == 100 || b == 100) continue;  // boundary: infinite distance
      ProductDistribution grid(
          g.domain(), {vec2(a / 100.0, 1.0 - a / 100.0),
                       vec2(b / 100.0, 1.0 - b / 100.0)});
      const double kl = kl_divergence(ensemble.probabilities, dense_joint(grid));
      CHECK(kl >= best - 1e-9);
    }
  }
}

TEST_CASE("global minimum with deterministic tie-break") {
  const auto [move, value] = global_minimum(p0());
  CHECK(move[0] == 0);
  CHECK(move[1] == 0);
  CHECK(value == 0.0);

  // Constant table: the first joint move wins.
  WorldUtility flat =
      WorldUtility::from_table(CategoricalDomain({2, 3}), VectorXd::Ones(6));
  const auto [flat_move, flat_value] = global_minimum(flat);
  CHECK(joint_index(flat.domain(), flat_move) == 0);
  CHECK(flat_value == 1.0);

  // Independent linear scan over a seeded random table.
  CategoricalDomain domain({4, 4, 4, 4});
  const WorldUtility g = random_table(domain, 7);
  Eigen::Index best_index = 0;
  for (Eigen::Index i = 1; i < g.table().size(); ++i)
    if (g.table()[i] < g.table()[best_index]) best_index = i;
  const auto [rmove, rvalue] = global_minimum(g);
  CHECK(joint_index(domain, rmove) == static_cast<std::uint64_t>(best_index));
  CHECK(rvalue == g.table()[best_index]);
}

TEST_CASE("enumeration guard rejects oversized spaces") {
  CategoricalDomain big(std::vector<int>(10, 10));  // 10^10 joint moves
  WorldUtility g = WorldUtility::from_callback(
      big, [](const VectorXi& x) { return double(x.sum()); });
  const auto q = ProductDistribution::uniform(big);
  CHECK_THROWS_AS(exact_expectation(g, q), GuardExceededError);
  CHECK_THROWS_AS(exact_conditional(g, q, 0, 0), GuardExceededError);
  CHECK_THROWS_AS(canonical_marginals(g, 1.0), GuardExceededError);
  CHECK_THROWS_AS(global_minimum(g), GuardExceededError);
}

}  // TEST_SUITE
