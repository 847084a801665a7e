#include "pqvar/stiffness.hpp"

#include <stdexcept>

namespace pqvar {

namespace {

std::vector<double> integrated_weight(const Mesh& m, const ScalarField& a) {
  std::vector<double> wa(m.num_elements(), 0.0);
  for (int e = 0; e < m.num_elements(); ++e)
    for (int k = 0; k < m.quad_per_element(); ++k)
      wa[e] += m.quad_weight(e, k) * a.eval(m, e, k);
  return wa;
}

}  // namespace

StiffnessPreconditioner::StiffnessPreconditioner(std::shared_ptr<const Mesh> mesh,
                                                 const ScalarField& a)
    : StiffnessPreconditioner(mesh, integrated_weight(*mesh, a)) {}

StiffnessPreconditioner::StiffnessPreconditioner(
    std::shared_ptr<const Mesh> mesh, const std::vector<double>& element_coefficients)
    : mesh_(std::move(mesh)), slot_(mesh_->num_nodes(), -1) {
  const Mesh& m = *mesh_;
  if (static_cast<int>(element_coefficients.size()) != m.num_elements())
    throw std::invalid_argument("StiffnessPreconditioner: coefficient count mismatch");
  for (int i = 0; i < m.num_nodes(); ++i)
    if (!m.boundary[i]) {
      slot_[i] = static_cast<int>(interior_.size());
      interior_.push_back(i);
    }
  const int nd = static_cast<int>(interior_.size());

  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(static_cast<std::size_t>(m.num_elements()) * 9);
  for (int e = 0; e < m.num_elements(); ++e) {
    const double wa = element_coefficients[e];
    for (int vi = 0; vi < m.verts_per_element(); ++vi) {
      const int i = slot_[m.elements[e][vi]];
      if (i < 0) continue;
      for (int vj = 0; vj < m.verts_per_element(); ++vj) {
        const int j = slot_[m.elements[e][vj]];
        if (j < 0) continue;
        triplets.emplace_back(i, j,
                              wa * (m.grads[e][vi][0] * m.grads[e][vj][0] +
                                    m.grads[e][vi][1] * m.grads[e][vj][1]));
      }
    }
  }
  Eigen::SparseMatrix<double> K(nd, nd);
  K.setFromTriplets(triplets.begin(), triplets.end());
  ldlt_.compute(K);
  if (ldlt_.info() != Eigen::Success)
    throw std::runtime_error("StiffnessPreconditioner: factorization failed");
}

void StiffnessPreconditioner::apply(const std::vector<double>& g,
                                    std::vector<double>& d) const {
  const int nd = static_cast<int>(interior_.size());
  Eigen::VectorXd rhs(nd);
  for (int k = 0; k < nd; ++k) rhs(k) = g[interior_[k]];
  const Eigen::VectorXd sol = ldlt_.solve(rhs);
  d.assign(g.size(), 0.0);
  for (int k = 0; k < nd; ++k) d[interior_[k]] = sol(k);
}

}  // namespace pqvar
