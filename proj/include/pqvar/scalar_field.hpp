#pragma once

#include <memory>
#include <string>
#include <vector>

#include "pqvar/mesh.hpp"

namespace pqvar {

/// Spatial coefficient a(z): constant, affine in the coordinates, or
/// tabulated per mesh node (evaluated by P1 interpolation, so a tabulated
/// field can only be evaluated on its own mesh). Immutable after
/// construction.
class ScalarField {
public:
  enum class Kind { Constant, Affine, Tabulated };

  ScalarField() : kind_(Kind::Constant), c0_(1.0) {}

  static ScalarField constant(double v);
  static ScalarField affine(double c0, double cx, double cy = 0.0);
  static ScalarField tabulated(std::shared_ptr<const Mesh> mesh,
                               std::vector<double> nodal_values);

  Kind kind() const { return kind_; }
  double constant_value() const { return c0_; }
  const std::vector<double>& nodal_values() const { return nodal_; }

  /// Value at quadrature point k of element e of `mesh`.
  double eval(const Mesh& mesh, int e, int k) const;

  /// Values at every quadrature point, flattened as [e * nq + k].
  std::vector<double> at_quadrature(const Mesh& mesh) const;

  double min_on_quadrature(const Mesh& mesh) const;

private:
  Kind kind_;
  double c0_ = 0.0, cx_ = 0.0, cy_ = 0.0;
  std::shared_ptr<const Mesh> mesh_;  // tabulated only
  std::vector<double> nodal_;
};

}  // namespace pqvar
