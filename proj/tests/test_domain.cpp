#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "pqvar/discrete_function.hpp"
#include "pqvar/mesh.hpp"
#include "pqvar/rng.hpp"
#include "pqvar/scalar_field.hpp"

using namespace pqvar;

TEST_CASE("1D mesh: uniform partition of (0, pi) with n = 4") {
  auto mesh = build_mesh(1, {0.0, M_PI}, 4);
  REQUIRE(mesh->num_nodes() == 5);
  REQUIRE(mesh->num_elements() == 4);
  for (int i = 0; i <= 4; ++i)
    CHECK(mesh->nodes[i][0] == doctest::Approx(i * M_PI / 4).epsilon(1e-14));
  for (double m : mesh->measures) CHECK(m == doctest::Approx(M_PI / 4).epsilon(1e-14));
  CHECK(mesh->boundary[0] == 1);
  CHECK(mesh->boundary[4] == 1);
  for (int i = 1; i < 4; ++i) CHECK(mesh->boundary[i] == 0);
}

TEST_CASE("1D mesh: (0,1) with n = 2") {
  auto mesh = build_mesh(1, {0.0, 1.0}, 2);
  REQUIRE(mesh->num_nodes() == 3);
  CHECK(mesh->nodes[1][0] == doctest::Approx(0.5));
  CHECK(mesh->measures[0] == doctest::Approx(0.5));
  CHECK(mesh->measures[1] == doctest::Approx(0.5));
}

TEST_CASE("2D mesh: unit square with n = 2") {
  auto mesh = build_mesh(2, {0.0, 1.0, 0.0, 1.0}, 2);
  CHECK(mesh->num_nodes() == 9);
  CHECK(mesh->num_elements() == 8);
  // Shoelace total of the triangulation equals the rectangle area.
  double area = 0.0;
  for (int e = 0; e < mesh->num_elements(); ++e) {
    const auto& el = mesh->elements[e];
    const auto &p0 = mesh->nodes[el[0]], &p1 = mesh->nodes[el[1]], &p2 = mesh->nodes[el[2]];
    area += 0.5 * std::abs((p1[0] - p0[0]) * (p2[1] - p0[1]) -
                           (p2[0] - p0[0]) * (p1[1] - p0[1]));
  }
  CHECK(area == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(mesh->domain_measure() == doctest::Approx(1.0).epsilon(1e-13));
  // 8 boundary nodes, 1 interior on the 3x3 grid
  CHECK(mesh->num_interior() == 1);
}

TEST_CASE("mesh invariants: measures positive, coverage exact") {
  for (int n : {2, 7, 33}) {
    auto mesh = build_mesh(1, {0.0, M_PI}, n);
    for (double m : mesh->measures) CHECK(m > 0.0);
    CHECK(mesh->domain_measure() == doctest::Approx(M_PI).epsilon(1e-12));
  }
  auto mesh2 = build_mesh(2, {0.0, 2.0, -1.0, 1.0}, 5);
  CHECK(mesh2->domain_measure() == doctest::Approx(4.0).epsilon(1e-12));
}

TEST_CASE("build_mesh rejects unusable discretizations") {
  CHECK_THROWS_AS(build_mesh(1, {0.0, 1.0}, 1), std::invalid_argument);
  CHECK_THROWS_AS(build_mesh(1, {1.0, 1.0}, 4), std::invalid_argument);
  CHECK_THROWS_AS(build_mesh(2, {0.0, 1.0, 2.0, 2.0}, 4), std::invalid_argument);
  CHECK_THROWS_AS(build_mesh(3, {0.0, 1.0}, 4), std::invalid_argument);
}

TEST_CASE("DiscreteFunction enforces the Dirichlet and finiteness invariants") {
  auto mesh = build_mesh(1, {0.0, 1.0}, 2);
  CHECK_THROWS_AS(DiscreteFunction::from_nodal(mesh, {1.0, 0.0, 0.0}), std::invalid_argument);
  CHECK_THROWS_AS(DiscreteFunction::from_nodal(mesh, {0.0, NAN, 0.0}), std::invalid_argument);
  auto u = DiscreteFunction::from_nodal(mesh, {0.0, 2.0, 0.0});
  CHECK(u.sup_norm() == 2.0);
}

TEST_CASE("sobolev_gradient_norm: hand-quadrature hat examples") {
  auto mesh = build_mesh(1, {0.0, 1.0}, 2);
  auto hat = DiscreteFunction::from_nodal(mesh, {0.0, 1.0, 0.0});

  // |grad| = 2 on each half: (2^2)(0.5) + (-2)^2(0.5) = 4
  CHECK(sobolev_gradient_norm(hat, 2.0, ScalarField::constant(1.0)) ==
        doctest::Approx(4.0).epsilon(1e-14));
  // r = 3, a = 2: 2 * (2^3) * 1 = 16
  CHECK(sobolev_gradient_norm(hat, 3.0, ScalarField::constant(2.0)) ==
        doctest::Approx(16.0).epsilon(1e-14));

  auto zero = DiscreteFunction::zeros(mesh);
  CHECK(sobolev_gradient_norm(zero, 2.0, ScalarField::constant(1.0)) == 0.0);

  CHECK_THROWS_AS(sobolev_gradient_norm(hat, 2.0, ScalarField::constant(-1.0)),
                  std::invalid_argument);
  CHECK_THROWS_AS(sobolev_gradient_norm(hat, 1.0, ScalarField::constant(1.0)),
                  std::invalid_argument);
}

TEST_CASE("sobolev_gradient_norm respects the weight lower bound") {
  auto mesh = build_mesh(1, {0.0, M_PI}, 16);
  Rng rng(7);
  auto u = random_interior(mesh, rng, -1.0, 1.0);
  const ScalarField a = ScalarField::affine(2.0, 0.1);  // min near 2.0 on (0, pi)
  const double c1 = a.min_on_quadrature(*mesh);
  CHECK(sobolev_gradient_norm(u, 3.0, a) >=
        c1 * sobolev_gradient_norm(u, 3.0, ScalarField::constant(1.0)) - 1e-12);
}

TEST_CASE("lr_norm: exact quadrature of the hat squared") {
  auto mesh = build_mesh(1, {0.0, 1.0}, 2);
  auto hat = DiscreteFunction::from_nodal(mesh, {0.0, 1.0, 0.0});
  // Hand integration: int of (linear ramp)^2 over each half is
  // h (u_i^2 + u_i u_j + u_j^2) / 3 = 1/6, so the total is 1/3. The 1D rule
  // is degree >= 2, so the value is exact.
  CHECK(lr_norm(hat, 2.0) == doctest::Approx(std::sqrt(1.0 / 3.0)).epsilon(1e-14));
  CHECK(lr_norm(DiscreteFunction::zeros(mesh), 2.0) == 0.0);
  CHECK_THROWS_AS(lr_norm(hat, 0.5), std::invalid_argument);
}

TEST_CASE("lr_norm: interior-one function converges to measure 1") {
  double prev_err = 1.0;
  for (int n : {8, 32, 128}) {
    auto mesh = build_mesh(1, {0.0, 1.0}, n);
    auto one = DiscreteFunction::interpolate(mesh, [](double, double) { return 1.0; });
    const double v = lr_norm(one, 2.0);
    CHECK(v > 0.0);
    CHECK(v < 1.0);
    const double err = 1.0 - v;
    CHECK(err < prev_err);
    prev_err = err;
  }
  CHECK(prev_err < 6e-3);  // boundary-layer error ~ (2/3) h
}

TEST_CASE("lr_norm of the sin interpolant converges at O(h^2)") {
  // || sin(pi x) ||_2 on (0,1) is sqrt(1/2).
  const double exact = std::sqrt(0.5);
  double errs[3];
  int idx = 0;
  for (int n : {16, 32, 64}) {
    auto mesh = build_mesh(1, {0.0, 1.0}, n);
    auto u = DiscreteFunction::interpolate(
        mesh, [](double x, double) { return std::sin(M_PI * x); });
    errs[idx++] = std::abs(lr_norm(u, 2.0) - exact);
  }
  CHECK(errs[0] / errs[1] == doctest::Approx(4.0).epsilon(0.25));
  CHECK(errs[1] / errs[2] == doctest::Approx(4.0).epsilon(0.25));
}

TEST_CASE("positive/negative parts: definition and identities") {
  auto mesh = build_mesh(1, {0.0, 1.0}, 3);
  auto u = DiscreteFunction::from_nodal(mesh, {0.0, -2.0, 3.0, 0.0});
  auto up = positive_part(u), un = negative_part(u);
  CHECK(up.values == std::vector<double>{0.0, 0.0, 3.0, 0.0});
  CHECK(un.values == std::vector<double>{0.0, 2.0, 0.0, 0.0});

  auto v = DiscreteFunction::from_nodal(mesh, {0.0, 1.0, 2.0, 0.0});
  CHECK(positive_part(v).values == v.values);
  CHECK(negative_part(v).sup_norm() == 0.0);

  // u = u+ - u- and |u| = u+ + u- exactly nodewise on random data
  Rng rng(42);
  for (int trial = 0; trial < 20; ++trial) {
    auto mesh2 = build_mesh(1, {0.0, 1.0}, 17);
    Rng sub = rng.fork(trial);
    auto w = random_interior(mesh2, sub, -5.0, 5.0);
    auto wp = positive_part(w), wn = negative_part(w);
    for (std::size_t i = 0; i < w.values.size(); ++i) {
      CHECK(wp.values[i] - wn.values[i] == w.values[i]);
      CHECK(wp.values[i] + wn.values[i] == std::abs(w.values[i]));
    }
  }
}

TEST_CASE("ScalarField kinds evaluate on quadrature points") {
  auto mesh = build_mesh(2, {0.0, 1.0, 0.0, 1.0}, 4);
  CHECK(ScalarField::constant(2.5).min_on_quadrature(*mesh) == 2.5);

  const ScalarField aff = ScalarField::affine(1.0, 2.0, -0.5);
  const auto q = aff.at_quadrature(*mesh);
  CHECK(static_cast<int>(q.size()) == mesh->num_elements() * mesh->quad_per_element());
  const auto pt = mesh->quad_point(3, 1);
  CHECK(aff.eval(*mesh, 3, 1) ==
        doctest::Approx(1.0 + 2.0 * pt[0] - 0.5 * pt[1]).epsilon(1e-14));

  std::vector<double> nodal(mesh->num_nodes(), 1.0);
  const ScalarField tab = ScalarField::tabulated(mesh, nodal);
  CHECK(tab.min_on_quadrature(*mesh) == doctest::Approx(1.0));
  auto other = build_mesh(2, {0.0, 1.0, 0.0, 1.0}, 4);
  CHECK_THROWS_AS(tab.eval(*other, 0, 0), std::invalid_argument);
}

TEST_CASE("CSV round trip preserves nodal values") {
  auto mesh = build_mesh(2, {0.0, 1.0, 0.0, 2.0}, 3);
  Rng rng(9);
  auto u = random_interior(mesh, rng, -1.0, 1.0);
  const std::string path = "test_domain_roundtrip.csv";
  write_csv(u, path);
  const auto values = read_nodal_csv(path, mesh->num_nodes());
  for (std::size_t i = 0; i < values.size(); ++i) CHECK(values[i] == u.values[i]);
  std::remove(path.c_str());
}
