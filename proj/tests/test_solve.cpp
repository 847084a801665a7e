#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <memory>

#include "oracles.hpp"
#include "pqvar/solve.hpp"
#include "pqvar/spectrum.hpp"

using namespace pqvar;

namespace {

// Reference setting: 1D (0, pi), p = 3, q = 2, unit weights, resonant family.
struct Setting {
  std::shared_ptr<const Mesh> mesh;
  ProblemSpec spec;
  EigenPair eq1;  // principal pair of (q, a2)
  EigenPair ep1;  // principal pair of (p, a1)
  SolverParams params;
};

Setting make_setting(double lambda, int n = 128) {
  Setting s;
  s.mesh = build_mesh(1, {0.0, M_PI}, n);
  s.eq1 = principal_eigenpair(s.mesh, 2.0, ScalarField::constant(1.0));
  s.ep1 = principal_eigenpair(s.mesh, 3.0, ScalarField::constant(1.0));
  s.spec.p = 3.0;
  s.spec.q = 2.0;
  s.spec.lambda = lambda;
  s.spec.f = builtin_nonlinearity("resonant_power", s.ep1.lambda_hat, 1.0, 2.5, 2.0, 3.0);
  s.params = SolverParams::defaults_for(1);
  return s;
}

DiscreteFunction scaled(const DiscreteFunction& u, double t) {
  DiscreteFunction w = u;
  for (double& v : w.values) v *= t;
  return w;
}

void check_trace_monotone(const SolverReport& rep) {
  for (std::size_t i = 1; i < rep.trace.size(); ++i)
    CHECK(rep.trace[i].first <=
          rep.trace[i - 1].first + 1e-13 * (1.0 + std::abs(rep.trace[i - 1].first)));
}

}  // namespace

TEST_CASE("classify: nodal-value rules") {
  auto mesh = build_mesh(1, {0.0, 1.0}, 4);
  CHECK(classify(DiscreteFunction::from_nodal(mesh, {0, 1e-9, -1e-9, 1e-8, 0})) ==
        Classification::Trivial);
  CHECK(classify(DiscreteFunction::from_nodal(mesh, {0, 0.5, 1.0, 0.5, 0})) ==
        Classification::Positive);
  CHECK(classify(DiscreteFunction::from_nodal(mesh, {0, -0.5, -1.0, -0.5, 0})) ==
        Classification::Negative);
  CHECK(classify(DiscreteFunction::from_nodal(mesh, {0, 0.5, -0.5, 0.5, 0})) ==
        Classification::Nodal);
}

TEST_CASE("minimize from the zero start stays at the trivial critical point") {
  Setting s = make_setting(2.0);
  auto rep = minimize(FunctionalSpec::phi_plus(s.spec), DiscreteFunction::zeros(s.mesh),
                      s.params);
  CHECK(rep.converged);
  CHECK(rep.iterations == 0);
  CHECK(rep.energy == 0.0);
  CHECK(rep.classification == Classification::Trivial);
}

TEST_CASE("constant-sign solutions above the q-threshold") {
  Setting s = make_setting(2.0);  // lambda1(q, a2) = 1, so lambda = lambda1 + 1

  auto ev_plus =
      std::make_shared<EnergyEvaluator>(FunctionalSpec::phi_plus(s.spec), s.mesh);
  Objective plus = make_objective(ev_plus);
  auto rep = minimize(plus, scaled(s.eq1.eigenfunction, 0.1), s.params);
  REQUIRE(rep.converged);
  CHECK(rep.energy < 0.0);
  CHECK(rep.classification == Classification::Positive);
  CHECK(rep.solution.interior_min() > 0.0);
  CHECK(free_residual_norm(s.spec, rep.solution) <= 1e-6);
  check_trace_monotone(rep);

  // sign invariance: the negative part is flat zero at convergence
  CHECK(negative_part(rep.solution).sup_norm() <= kTrivialTol);

  // phi_minus mirror from the mirrored start
  auto rep_neg = minimize(FunctionalSpec::phi_minus(s.spec),
                          scaled(s.eq1.eigenfunction, -0.1), s.params);
  REQUIRE(rep_neg.converged);
  CHECK(rep_neg.energy < 0.0);
  CHECK(rep_neg.classification == Classification::Negative);
  // oddness: the family is odd, so the solutions mirror within 1e-8
  double mirror_diff = 0.0;
  for (std::size_t i = 0; i < rep.solution.values.size(); ++i)
    mirror_diff = std::max(
        mirror_diff, std::abs(rep_neg.solution.values[i] + rep.solution.values[i]));
  CHECK(mirror_diff <= 1e-8);
}

TEST_CASE("mirrored objective evaluates the reflected functional") {
  Setting s = make_setting(2.0);
  auto ev = std::make_shared<EnergyEvaluator>(FunctionalSpec::phi_plus(s.spec), s.mesh);
  Objective obj = make_objective(ev);
  Objective mir = mirrored(obj);
  auto u = scaled(s.eq1.eigenfunction, 0.37);
  CHECK(mir.value(scaled(u, -1.0)) == obj.value(u));
  const auto eg = obj.eval(u);
  const auto meg = mir.eval(scaled(u, -1.0));
  for (std::size_t i = 0; i < eg.gradient.size(); ++i)
    CHECK(meg.gradient[i] == -eg.gradient[i]);
}

TEST_CASE("auxiliary problem: uniqueness across starts and odd mirror") {
  Setting s = make_setting(2.0);
  const double lam1 = s.eq1.lambda_hat;

  CHECK_THROWS_AS(solve_auxiliary(s.spec, s.mesh, lam1, 1.5, 1.0, s.params, 4),
                  std::invalid_argument);  // eps outside (0, lambda - lam1)

  auto aux = solve_auxiliary(s.spec, s.mesh, lam1, 0.5, 1.0, s.params, 8);
  CHECK(aux.unique);
  CHECK(aux.worst_rel_diff <= 1e-6);
  CHECK(aux.report.solution.interior_min() > 0.0);
  CHECK(aux.report.converged);

  auto auxn = solve_auxiliary(s.spec, s.mesh, lam1, 0.5, 1.0, s.params, 8, -1);
  CHECK(auxn.unique);
  // oddness of the auxiliary problem: v = -u from bitwise-symmetric runs
  double diff = 0.0;
  for (std::size_t i = 0; i < aux.report.solution.values.size(); ++i)
    diff = std::max(diff, std::abs(auxn.report.solution.values[i] +
                                   aux.report.solution.values[i]));
  CHECK(diff <= 1e-10);
}

TEST_CASE("beta_plus anchored at a solution reproduces the auxiliary solution") {
  Setting s = make_setting(2.0);
  const double lam1 = s.eq1.lambda_hat;

  auto pos = minimize(FunctionalSpec::phi_plus(s.spec), scaled(s.eq1.eigenfunction, 0.1),
                      s.params);
  REQUIRE(pos.converged);
  auto aux = solve_auxiliary(s.spec, s.mesh, lam1, 0.5, 1.0, s.params, 4);
  REQUIRE(aux.unique);

  auto anchor = std::make_shared<DiscreteFunction>(pos.solution);
  auto beta = minimize(FunctionalSpec::beta_plus(s.spec, lam1, 0.5, 1.0, anchor),
                       scaled(s.eq1.eigenfunction, 0.1), s.params);
  REQUIRE(beta.converged);
  double diff = 0.0;
  for (std::size_t i = 0; i < beta.solution.values.size(); ++i)
    diff = std::max(diff,
                    std::abs(beta.solution.values[i] - aux.report.solution.values[i]));
  CHECK(diff / aux.report.solution.sup_norm() <= 1e-6);
  // and the beta minimizer sits below its anchor
  for (std::size_t i = 0; i < beta.solution.values.size(); ++i)
    CHECK(beta.solution.values[i] <= pos.solution.values[i] + 1e-8);
}

TEST_CASE("extremal iteration: ordering chain and fixed point") {
  Setting s = make_setting(2.0);
  const double lam1 = s.eq1.lambda_hat;

  auto pos = minimize(FunctionalSpec::phi_plus(s.spec), scaled(s.eq1.eigenfunction, 0.1),
                      s.params);
  auto neg = minimize(FunctionalSpec::phi_minus(s.spec), scaled(s.eq1.eigenfunction, -0.1),
                      s.params);
  auto aux = solve_auxiliary(s.spec, s.mesh, lam1, 0.5, 1.0, s.params, 4);
  auto auxn = solve_auxiliary(s.spec, s.mesh, lam1, 0.5, 1.0, s.params, 4, -1);
  REQUIRE(pos.converged);
  REQUIRE(aux.unique);

  auto ext = extremal_positive(s.spec, s.mesh, pos.solution, aux.report.solution,
                               s.eq1.eigenfunction, s.params);
  CHECK(ext.fixed_point);
  CHECK(ext.ordering_ok);
  CHECK(ext.worst_ordering_violation <= 1e-8);
  CHECK(free_residual_norm(s.spec, ext.extremal) <= 1e-6);

  // a seed that is already minimal is a fixed point in one outer iteration
  auto again = extremal_positive(s.spec, s.mesh, ext.extremal, aux.report.solution,
                                 s.eq1.eigenfunction, s.params);
  CHECK(again.fixed_point);
  CHECK(again.outer_iterations == 1);

  // negative mirror: v_seed <= v* <= v_bar
  auto extn = extremal_negative(s.spec, s.mesh, neg.solution, auxn.report.solution,
                                s.eq1.eigenfunction, s.params);
  CHECK(extn.fixed_point);
  CHECK(extn.ordering_ok);

  // rejects a sign-violating seed
  CHECK_THROWS_AS(extremal_positive(s.spec, s.mesh, neg.solution, aux.report.solution,
                                    s.eq1.eigenfunction, s.params),
                  std::invalid_argument);
}

TEST_CASE("mountain pass finds a nodal solution between the extremal pair") {
  Setting s = make_setting(5.0);  // lambda2(q, a2) = 4, so lambda = lambda2 + 1
  const double lam1 = s.eq1.lambda_hat;

  auto pos = minimize(FunctionalSpec::phi_plus(s.spec), scaled(s.eq1.eigenfunction, 0.1),
                      s.params);
  auto neg = minimize(FunctionalSpec::phi_minus(s.spec), scaled(s.eq1.eigenfunction, -0.1),
                      s.params);
  auto aux = solve_auxiliary(s.spec, s.mesh, lam1, 0.5, 1.0, s.params, 4);
  auto auxn = solve_auxiliary(s.spec, s.mesh, lam1, 0.5, 1.0, s.params, 4, -1);
  REQUIRE((pos.converged && neg.converged && aux.unique && auxn.unique));

  auto ext = extremal_positive(s.spec, s.mesh, pos.solution, aux.report.solution,
                               s.eq1.eigenfunction, s.params);
  auto extn = extremal_negative(s.spec, s.mesh, neg.solution, auxn.report.solution,
                                s.eq1.eigenfunction, s.params);
  REQUIRE((ext.fixed_point && extn.fixed_point));

  auto second = second_eigenvalue(s.mesh, 2.0, ScalarField::constant(1.0), 31, {}, &s.eq1);
  REQUIRE(s.spec.lambda > second.lambda_hat_2);

  auto mp = mountain_pass_nodal(s.spec, s.mesh, ext.extremal, extn.extremal, second.path,
                                s.params, 17);
  CHECK(mp.ring_ok);
  CHECK(mp.found_nodal);
  CHECK(mp.report.classification == Classification::Nodal);

  // both signs present beyond the sign tolerance
  const double sup = mp.report.solution.sup_norm();
  CHECK(mp.report.solution.interior_max() > 1e-6 * sup);
  CHECK(mp.report.solution.interior_min() < -1e-6 * sup);

  // trapped in the order interval
  for (std::size_t i = 0; i < mp.report.solution.values.size(); ++i) {
    CHECK(mp.report.solution.values[i] >= extn.extremal.values[i] - 1e-8);
    CHECK(mp.report.solution.values[i] <= ext.extremal.values[i] + 1e-8);
  }

  // endpoint energies sit below the sampled ring infimum
  CHECK(mp.energy_u_star < mp.ring_infimum);
  CHECK(mp.energy_v_star < mp.ring_infimum);

  // the pass point solves the equation
  CHECK(free_residual_norm(s.spec, mp.report.solution) <= 1e-6);

  // degenerate interval is rejected
  auto zero = DiscreteFunction::zeros(s.mesh);
  CHECK_THROWS_AS(
      mountain_pass_nodal(s.spec, s.mesh, zero, zero, second.path, s.params, 17),
      std::invalid_argument);
}

TEST_CASE("nonexistence scan below the threshold, existence control above") {
  Setting below = make_setting(0.5);  // 0.5 * lambda1(q, a2)
  auto scan = nonexistence_scan(below.spec, below.mesh, below.eq1.eigenfunction,
                                below.params, 16);
  CHECK(scan.all_trivial);
  CHECK(scan.worst_sup_norm <= 1e-6);

  Setting above = make_setting(2.0);
  auto control = nonexistence_scan(above.spec, above.mesh, above.eq1.eigenfunction,
                                   above.params, 16);
  CHECK_FALSE(control.all_trivial);

  // zero start lands on the trivial point immediately
  auto rep = minimize(FunctionalSpec::phi_free(below.spec),
                      DiscreteFunction::zeros(below.mesh), below.params);
  CHECK(rep.converged);
  CHECK(rep.classification == Classification::Trivial);
}
