#pragma once

#include <functional>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "pqvar/mesh.hpp"
#include "pqvar/rng.hpp"
#include "pqvar/scalar_field.hpp"

namespace pqvar {

/// Nodal coefficient vector of a P1 function with homogeneous Dirichlet
/// boundary: values at boundary-tagged nodes are exactly 0 and all entries
/// are finite. Value-semantic snapshot; the mesh is shared immutable state.
struct DiscreteFunction {
  std::shared_ptr<const Mesh> mesh;
  std::vector<double> values;

  static DiscreteFunction zeros(std::shared_ptr<const Mesh> mesh);

  /// Wraps nodal values, validating the Dirichlet and finiteness invariants.
  static DiscreteFunction from_nodal(std::shared_ptr<const Mesh> mesh,
                                     std::vector<double> values);

  /// Nodal interpolant of f(x, y); boundary nodes are forced to exactly 0.
  static DiscreteFunction interpolate(std::shared_ptr<const Mesh> mesh,
                                      const std::function<double(double, double)>& f);

  double value_at_quad(int e, int k) const;
  double sup_norm() const;
  double interior_min() const;
  double interior_max() const;

  /// Enforces exact zeros at boundary nodes (used after nodal arithmetic).
  void clamp_boundary();
};

/// u+(z) = max(u, 0) nodewise.
DiscreteFunction positive_part(const DiscreteFunction& u);
/// u-(z) = max(-u, 0) nodewise (so u = u+ - u- and |u| = u+ + u-).
DiscreteFunction negative_part(const DiscreteFunction& u);

/// Integral of a(z) |grad u|^r over the domain (per-element quadrature of
/// the weight; the P1 gradient is exact). Throws if r <= 1 or if the weight
/// is nonpositive at a quadrature point.
double sobolev_gradient_norm(const DiscreteFunction& u, double r, const ScalarField& a);

/// (Integral of |u|^r)^(1/r) by per-element quadrature. Throws if r <= 1.
double lr_norm(const DiscreteFunction& u, double r);

/// Random function: uniform values in [lo, hi] at interior nodes, 0 on the
/// boundary.
DiscreteFunction random_interior(std::shared_ptr<const Mesh> mesh, Rng& rng,
                                 double lo, double hi);

/// CSV serialization, header "node_index,x[,y],value", 17 significant digits.
void write_csv(const DiscreteFunction& u, std::ostream& out);
void write_csv(const DiscreteFunction& u, const std::string& path);

/// Reads nodal values from a CSV produced by write_csv (the coordinate
/// columns are ignored; rows are matched by node_index).
std::vector<double> read_nodal_csv(const std::string& path, int expected_nodes);

}  // namespace pqvar
