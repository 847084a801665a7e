#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <vector>

namespace pqvar {

/// Axis-aligned extent: an interval [x0,x1] in 1D, a rectangle
/// [x0,x1] x [y0,y1] in 2D.
struct Extent {
  double x0 = 0.0, x1 = 1.0;
  double y0 = 0.0, y1 = 1.0;
};

/// Uniform P1 mesh of an interval (segments) or a rectangle (squares split
/// into triangles), with homogeneous-Dirichlet boundary tagging.
///
/// The per-element quadrature rule has polynomial degree of exactness >= 2
/// (2-point Gauss on segments, 3-point edge-midpoint on triangles), so
/// integrals of (piecewise-linear)^2 are exact. P1 gradients are constant
/// per element and precomputed per vertex.
///
/// Immutable after construction; safe to share across threads.
struct Mesh {
  int dim = 1;
  Extent extent;
  int n = 0;  // subdivisions per axis

  std::vector<std::array<double, 2>> nodes;     // y unused in 1D
  std::vector<std::array<int, 3>> elements;     // [2] == -1 for segments
  std::vector<std::uint8_t> boundary;           // 1 on Dirichlet nodes
  std::vector<double> measures;                 // element length/area, > 0

  // Reference quadrature rule shared by all elements: barycentric
  // coordinates w.r.t. the element vertices and weights summing to 1.
  std::vector<std::array<double, 3>> quad_bary;
  std::vector<double> quad_ref_weight;

  // grads[e][v] = gradient of the P1 basis of local vertex v on element e.
  std::vector<std::array<std::array<double, 2>, 3>> grads;

  // lumped_mass[i] = integral of the nodal hat basis of node i.
  std::vector<double> lumped_mass;

  int verts_per_element() const { return dim == 1 ? 2 : 3; }
  int quad_per_element() const { return static_cast<int>(quad_bary.size()); }

  /// Physical coordinates of quadrature point k of element e.
  std::array<double, 2> quad_point(int e, int k) const;
  /// Quadrature weight (includes the element measure).
  double quad_weight(int e, int k) const {
    return quad_ref_weight[static_cast<std::size_t>(k)] *
           measures[static_cast<std::size_t>(e)];
  }

  double domain_measure() const;
  int num_nodes() const { return static_cast<int>(nodes.size()); }
  int num_elements() const { return static_cast<int>(elements.size()); }
  int num_interior() const;
};

/// Builds the uniform mesh. Throws std::invalid_argument for n < 2, a
/// degenerate extent, or dim outside {1, 2}.
std::shared_ptr<const Mesh> build_mesh(int dim, const Extent& extent, int n);

}  // namespace pqvar
