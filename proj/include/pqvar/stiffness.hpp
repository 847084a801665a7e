#pragma once

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <memory>
#include <vector>

#include "pqvar/mesh.hpp"
#include "pqvar/scalar_field.hpp"

namespace pqvar {

/// Sobolev-gradient preconditioner: solves K d = g on the interior nodes,
/// where K is the linear stiffness matrix weighted by a. Factored once per
/// (mesh, weight); apply() is a sparse triangular solve.
class StiffnessPreconditioner {
public:
  StiffnessPreconditioner(std::shared_ptr<const Mesh> mesh, const ScalarField& a);

  /// Variant with an explicit per-element diffusion coefficient (already
  /// integrated over the element), e.g. the linearization a |grad u|^(r-2)
  /// of a degenerate operator.
  StiffnessPreconditioner(std::shared_ptr<const Mesh> mesh,
                          const std::vector<double>& element_coefficients);

  /// d = K^{-1} g on interior nodes; boundary entries are zeroed.
  void apply(const std::vector<double>& g, std::vector<double>& d) const;

private:
  std::shared_ptr<const Mesh> mesh_;
  std::vector<int> slot_;  // node -> interior index or -1
  std::vector<int> interior_;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt_;
};

}  // namespace pqvar
