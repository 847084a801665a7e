#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "pqvar/rng.hpp"
#include "pqvar/spectrum.hpp"

using namespace pqvar;

TEST_CASE("principal eigenpair, linear case on (0, pi): lambda1 = 1, u1 ~ sin") {
  auto mesh = build_mesh(1, {0.0, M_PI}, 256);
  const auto pair = principal_eigenpair(mesh, 2.0, ScalarField::constant(1.0));
  REQUIRE(pair.converged);
  CHECK(pair.lambda_hat == doctest::Approx(1.0).epsilon(1e-3));
  CHECK(lr_norm(pair.eigenfunction, 2.0) == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(pair.eigenfunction.interior_min() > 0.0);

  // profile matches the normalized sine
  const double scale = std::sqrt(2.0 / M_PI);  // ||sin||_2 = sqrt(pi/2) on (0, pi)
  double worst = 0.0;
  for (int i = 0; i < mesh->num_nodes(); ++i)
    worst = std::max(worst, std::abs(pair.eigenfunction.values[i] -
                                     scale * std::sin(mesh->nodes[i][0])));
  CHECK(worst < 5e-3);
}

TEST_CASE("principal eigenpair, r = 3 on (0, 1) matches the closed form") {
  auto mesh = build_mesh(1, {0.0, 1.0}, 256);
  const auto pair = principal_eigenpair(mesh, 3.0, ScalarField::constant(1.0));
  REQUIRE(pair.converged);
  const double exact = oracles::lambda_1d(1, 3.0, 1.0);  // (r-1) (pi_r)^r = 28.2888
  CHECK(pair.lambda_hat == doctest::Approx(exact).epsilon(0.01));
  CHECK(pair.eigenfunction.interior_min() > 0.0);
}

TEST_CASE("weight scaling: doubling a doubles lambda1") {
  auto mesh = build_mesh(1, {0.0, M_PI}, 64);
  const auto one = principal_eigenpair(mesh, 3.0, ScalarField::constant(1.0));
  const auto two = principal_eigenpair(mesh, 3.0, ScalarField::constant(2.0));
  CHECK(two.lambda_hat == doctest::Approx(2.0 * one.lambda_hat).epsilon(1e-6));
}

TEST_CASE("2D principal eigenvalue on the unit square, r = 2") {
  auto mesh = build_mesh(2, {0.0, 1.0, 0.0, 1.0}, 16);
  const auto pair = principal_eigenpair(mesh, 2.0, ScalarField::constant(1.0));
  REQUIRE(pair.converged);
  CHECK(pair.lambda_hat == doctest::Approx(2.0 * M_PI * M_PI).epsilon(0.02));
  CHECK(pair.eigenfunction.interior_min() > 0.0);
}

TEST_CASE("eigen_residual: perturbation strictly increases the residual") {
  auto mesh = build_mesh(1, {0.0, M_PI}, 64);
  auto pair = principal_eigenpair(mesh, 2.0, ScalarField::constant(1.0));
  const double base = eigen_residual(pair);
  CHECK(base <= 1e-8);

  Rng rng(4242);
  auto noise = random_interior(mesh, rng, -1.0, 1.0);
  EigenPair perturbed = pair;
  for (std::size_t i = 0; i < perturbed.eigenfunction.values.size(); ++i)
    perturbed.eigenfunction.values[i] += 0.1 * noise.values[i];
  CHECK(eigen_residual(perturbed) > base * 100);
}

TEST_CASE("residual nonincreasing and lambda1 decreasing under refinement") {
  double prev_resid = 1e300, prev_lambda = 1e300;
  for (int n : {64, 128, 256}) {
    auto mesh = build_mesh(1, {0.0, M_PI}, n);
    const auto pair = principal_eigenpair(mesh, 3.0, ScalarField::constant(1.0));
    REQUIRE(pair.converged);
    CHECK(pair.residual_norm <= prev_resid + 1e-9);
    CHECK(pair.lambda_hat <= prev_lambda + 1e-8);
    prev_resid = pair.residual_norm;
    prev_lambda = pair.lambda_hat;
  }
  CHECK(prev_lambda == doctest::Approx(oracles::lambda_1d(1, 3.0, M_PI)).epsilon(5e-3));
}

TEST_CASE("margin property: weighted p-energy dominates eta-mass with a gap") {
  auto mesh = build_mesh(1, {0.0, M_PI}, 64);
  const double p = 3.0;
  const ScalarField a1 = ScalarField::constant(1.0);
  const auto pair = principal_eigenpair(mesh, p, a1);
  const double eta = pair.lambda_hat - 0.1;
  Rng root(31);
  double chat = 1e300;
  for (int trial = 0; trial < 100; ++trial) {
    Rng rng = root.fork(trial);
    auto u = random_interior(mesh, rng, -1.0, 1.0);
    const double num = sobolev_gradient_norm(u, p, a1) -
                       eta * std::pow(lr_norm(u, p), p);
    const double den = sobolev_gradient_norm(u, p, ScalarField::constant(1.0));
    chat = std::min(chat, num / den);
  }
  CHECK(chat > 0.0);
}

TEST_CASE("second eigenvalue, linear case on (0, pi): path minimax near 4") {
  auto mesh = build_mesh(1, {0.0, M_PI}, 128);
  SpectrumParams params;
  params.tol = 1e-8;
  const auto second = second_eigenvalue(mesh, 2.0, ScalarField::constant(1.0), 41, params);
  CHECK(second.linear_oracle == doctest::Approx(4.0).epsilon(1e-3));
  CHECK(second.lambda_hat_2 == doctest::Approx(4.0).epsilon(0.005));

  // strict ordering above the principal value
  const auto first = principal_eigenpair(mesh, 2.0, ScalarField::constant(1.0));
  CHECK(second.lambda_hat_2 > first.lambda_hat);

  // the max-attaining knot is a nodal profile
  const auto& top = second.path.knots[second.max_knot];
  const double sup = top.sup_norm();
  CHECK(top.interior_max() > 1e-3 * sup);
  CHECK(top.interior_min() < -1e-3 * sup);
}

TEST_CASE("second eigenvalue, r = 3 on (0, 1) within 5% of the closed form") {
  auto mesh = build_mesh(1, {0.0, 1.0}, 128);
  const auto second = second_eigenvalue(mesh, 3.0, ScalarField::constant(1.0), 41);
  const double exact = oracles::lambda_1d(2, 3.0, 1.0);  // 2 (2 pi_3)^3 = 226.31
  CHECK(second.lambda_hat_2 == doctest::Approx(exact).epsilon(0.05));
  CHECK(std::isnan(second.linear_oracle));
}

TEST_CASE("path endpoints and sphere constraint") {
  auto mesh = build_mesh(1, {0.0, M_PI}, 64);
  const auto pair = principal_eigenpair(mesh, 2.0, ScalarField::constant(1.0));
  const auto second =
      second_eigenvalue(mesh, 2.0, ScalarField::constant(1.0), 21, {}, &pair);
  REQUIRE(second.path.knots.size() == 21);
  for (const auto& knot : second.path.knots)
    CHECK(lr_norm(knot, 2.0) == doctest::Approx(1.0).epsilon(1e-10));
  for (std::size_t i = 0; i < pair.eigenfunction.values.size(); ++i) {
    CHECK(second.path.knots.front().values[i] == -pair.eigenfunction.values[i]);
    CHECK(second.path.knots.back().values[i] == pair.eigenfunction.values[i]);
  }
}

TEST_CASE("second_eigenvalue rejects degenerate knot counts") {
  auto mesh = build_mesh(1, {0.0, M_PI}, 16);
  CHECK_THROWS_AS(second_eigenvalue(mesh, 2.0, ScalarField::constant(1.0), 2),
                  std::invalid_argument);
}

TEST_CASE("principal_eigenpair validates inputs") {
  auto mesh = build_mesh(1, {0.0, M_PI}, 16);
  CHECK_THROWS_AS(principal_eigenpair(mesh, 1.0, ScalarField::constant(1.0)),
                  std::invalid_argument);
  CHECK_THROWS_AS(principal_eigenpair(mesh, 2.0, ScalarField::constant(-1.0)),
                  std::invalid_argument);
}
