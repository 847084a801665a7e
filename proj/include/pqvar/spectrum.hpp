#pragma once

#include <memory>
#include <vector>

#include "pqvar/discrete_function.hpp"
#include "pqvar/mesh.hpp"
#include "pqvar/scalar_field.hpp"

namespace pqvar {

struct SpectrumParams {
  double tol = 1e-8;      // sup-norm of the nodal weak-form eigen-residual
  int max_iters = 50000;
  double armijo_c = 1e-4;
  double backtrack = 0.5;
};

/// Principal eigenpair of the weighted r-Laplacian: lambda_hat minimizes the
/// Rayleigh quotient, the eigenfunction is L^r-normalized, nonnegative, and
/// strictly positive at interior nodes.
struct EigenPair {
  double lambda_hat = 0.0;
  DiscreteFunction eigenfunction;
  double r = 2.0;
  ScalarField a;
  double residual_norm = 0.0;
  bool converged = false;
  int iterations = 0;
};

/// Discrete path on the L^r unit sphere with endpoints -u1 and +u1.
struct Path {
  std::vector<DiscreteFunction> knots;
};

struct SecondEigenResult {
  double lambda_hat_2 = 0.0;  // converged max of the path energies (upper estimate)
  Path path;
  int max_knot = 0;
  double linear_oracle = 0.0;  // dense eigensolve value when r == 2, else NaN
  bool converged = false;
  int iterations = 0;
};

/// Minimizes the Rayleigh quotient by preconditioned projected descent on
/// the L^r sphere from the positive interior-constant start. Throws on bad
/// (r, a); a non-converged run is reported, never silently returned as good.
EigenPair principal_eigenpair(std::shared_ptr<const Mesh> mesh, double r,
                              const ScalarField& a, const SpectrumParams& params = {});

/// Sup-norm of the nodal weak-form residual of the pair.
double eigen_residual(const EigenPair& pair);

/// Path minimax for the second eigenvalue: alternates descent on the
/// max-energy knot with arclength re-spacing. Requires path_knots >= 3.
/// For r == 2 the dense generalized eigensolve provides an internal oracle,
/// reported alongside the path estimate.
SecondEigenResult second_eigenvalue(std::shared_ptr<const Mesh> mesh, double r,
                                    const ScalarField& a, int path_knots = 21,
                                    const SpectrumParams& params = {},
                                    const EigenPair* principal = nullptr);

/// Dense generalized symmetric eigensolve of the linear (r = 2) problem;
/// returns the `count` smallest eigenvalues with L^2-normalized
/// eigenvectors. Backed by Eigen; intended as oracle at desk scales.
struct LinearEigenSolution {
  std::vector<double> values;
  std::vector<DiscreteFunction> vectors;
};
LinearEigenSolution linear_eigenpairs(std::shared_ptr<const Mesh> mesh,
                                      const ScalarField& a, int count);

}  // namespace pqvar
