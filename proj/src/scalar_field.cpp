#include "pqvar/scalar_field.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace pqvar {

ScalarField ScalarField::constant(double v) {
  ScalarField f;
  f.kind_ = Kind::Constant;
  f.c0_ = v;
  return f;
}

ScalarField ScalarField::affine(double c0, double cx, double cy) {
  ScalarField f;
  f.kind_ = Kind::Affine;
  f.c0_ = c0;
  f.cx_ = cx;
  f.cy_ = cy;
  return f;
}

ScalarField ScalarField::tabulated(std::shared_ptr<const Mesh> mesh,
                                   std::vector<double> nodal_values) {
  if (!mesh) throw std::invalid_argument("ScalarField::tabulated: null mesh");
  if (static_cast<int>(nodal_values.size()) != mesh->num_nodes())
    throw std::invalid_argument("ScalarField::tabulated: value count != node count");
  for (double v : nodal_values)
    if (!std::isfinite(v))
      throw std::invalid_argument("ScalarField::tabulated: non-finite value");
  ScalarField f;
  f.kind_ = Kind::Tabulated;
  f.mesh_ = std::move(mesh);
  f.nodal_ = std::move(nodal_values);
  return f;
}

double ScalarField::eval(const Mesh& mesh, int e, int k) const {
  switch (kind_) {
    case Kind::Constant:
      return c0_;
    case Kind::Affine: {
      const auto pt = mesh.quad_point(e, k);
      return c0_ + cx_ * pt[0] + cy_ * pt[1];
    }
    case Kind::Tabulated: {
      if (mesh_.get() != &mesh)
        throw std::invalid_argument("ScalarField: tabulated field evaluated on a foreign mesh");
      const auto& el = mesh.elements[e];
      const auto& b = mesh.quad_bary[k];
      double v = 0.0;
      for (int i = 0; i < mesh.verts_per_element(); ++i) v += b[i] * nodal_[el[i]];
      return v;
    }
  }
  return 0.0;
}

std::vector<double> ScalarField::at_quadrature(const Mesh& mesh) const {
  const int nq = mesh.quad_per_element();
  std::vector<double> out(static_cast<std::size_t>(mesh.num_elements()) * nq);
  for (int e = 0; e < mesh.num_elements(); ++e)
    for (int k = 0; k < nq; ++k) out[e * nq + k] = eval(mesh, e, k);
  return out;
}

double ScalarField::min_on_quadrature(const Mesh& mesh) const {
  double m = std::numeric_limits<double>::infinity();
  for (int e = 0; e < mesh.num_elements(); ++e)
    for (int k = 0; k < mesh.quad_per_element(); ++k) m = std::min(m, eval(mesh, e, k));
  return m;
}

}  // namespace pqvar
