#include "pqvar/mesh.hpp"

#include <cmath>
#include <stdexcept>

namespace pqvar {

std::array<double, 2> Mesh::quad_point(int e, int k) const {
  const auto& el = elements[e];
  const auto& b = quad_bary[k];
  std::array<double, 2> pt = {0.0, 0.0};
  for (int v = 0; v < verts_per_element(); ++v) {
    pt[0] += b[v] * nodes[el[v]][0];
    pt[1] += b[v] * nodes[el[v]][1];
  }
  return pt;
}

double Mesh::domain_measure() const {
  double s = 0.0;
  for (double m : measures) s += m;
  return s;
}

int Mesh::num_interior() const {
  int c = 0;
  for (auto b : boundary)
    if (!b) ++c;
  return c;
}

namespace {

void build_1d(Mesh& m) {
  const int n = m.n;
  const double h = (m.extent.x1 - m.extent.x0) / n;

  m.nodes.resize(n + 1);
  m.boundary.assign(n + 1, 0);
  for (int i = 0; i <= n; ++i) m.nodes[i] = {m.extent.x0 + h * i, 0.0};
  m.boundary.front() = 1;
  m.boundary.back() = 1;

  m.elements.resize(n);
  m.measures.assign(n, h);
  for (int e = 0; e < n; ++e) m.elements[e] = {e, e + 1, -1};

  // 2-point Gauss on the segment: exact through cubics.
  const double g = 1.0 / std::sqrt(3.0);
  const double s0 = 0.5 * (1.0 - g), s1 = 0.5 * (1.0 + g);
  m.quad_bary = {{{1.0 - s0, s0, 0.0}}, {{1.0 - s1, s1, 0.0}}};
  m.quad_ref_weight = {0.5, 0.5};

  m.grads.resize(n);
  for (int e = 0; e < n; ++e) {
    m.grads[e][0] = {-1.0 / h, 0.0};
    m.grads[e][1] = {1.0 / h, 0.0};
    m.grads[e][2] = {0.0, 0.0};
  }
}

void build_2d(Mesh& m) {
  const int n = m.n;
  const double hx = (m.extent.x1 - m.extent.x0) / n;
  const double hy = (m.extent.y1 - m.extent.y0) / n;
  const int npx = n + 1;

  m.nodes.resize(npx * npx);
  m.boundary.assign(npx * npx, 0);
  for (int j = 0; j <= n; ++j) {
    for (int i = 0; i <= n; ++i) {
      const int id = j * npx + i;
      m.nodes[id] = {m.extent.x0 + hx * i, m.extent.y0 + hy * j};
      if (i == 0 || j == 0 || i == n || j == n) m.boundary[id] = 1;
    }
  }

  auto vid = [npx](int i, int j) { return j * npx + i; };
  m.elements.reserve(2 * n * n);
  m.measures.assign(2 * n * n, 0.5 * hx * hy);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      const int v00 = vid(i, j), v10 = vid(i + 1, j);
      const int v01 = vid(i, j + 1), v11 = vid(i + 1, j + 1);
      m.elements.push_back({v00, v10, v11});
      m.elements.push_back({v00, v11, v01});
    }
  }

  // 3-point edge-midpoint rule: exact for quadratics on triangles.
  m.quad_bary = {{{0.5, 0.5, 0.0}}, {{0.0, 0.5, 0.5}}, {{0.5, 0.0, 0.5}}};
  m.quad_ref_weight = {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};

  m.grads.resize(m.elements.size());
  for (int e = 0; e < m.num_elements(); ++e) {
    const auto& el = m.elements[e];
    const auto& p0 = m.nodes[el[0]];
    const auto& p1 = m.nodes[el[1]];
    const auto& p2 = m.nodes[el[2]];
    const double det =
        (p1[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (p1[1] - p0[1]);
    // gradient of the barycentric coordinate of vertex v: rotated opposite edge / det
    m.grads[e][0] = {(p1[1] - p2[1]) / det, (p2[0] - p1[0]) / det};
    m.grads[e][1] = {(p2[1] - p0[1]) / det, (p0[0] - p2[0]) / det};
    m.grads[e][2] = {(p0[1] - p1[1]) / det, (p1[0] - p0[0]) / det};
  }
}

}  // namespace

std::shared_ptr<const Mesh> build_mesh(int dim, const Extent& extent, int n) {
  if (dim != 1 && dim != 2) throw std::invalid_argument("build_mesh: dim must be 1 or 2");
  if (n < 2) throw std::invalid_argument("build_mesh: need n >= 2 subdivisions");
  if (!(extent.x1 > extent.x0))
    throw std::invalid_argument("build_mesh: degenerate extent in x");
  if (dim == 2 && !(extent.y1 > extent.y0))
    throw std::invalid_argument("build_mesh: degenerate extent in y");

  auto mesh = std::make_shared<Mesh>();
  mesh->dim = dim;
  mesh->extent = extent;
  mesh->n = n;
  if (dim == 1)
    build_1d(*mesh);
  else
    build_2d(*mesh);

  mesh->lumped_mass.assign(mesh->nodes.size(), 0.0);
  for (int e = 0; e < mesh->num_elements(); ++e) {
    const auto& el = mesh->elements[e];
    for (int k = 0; k < mesh->quad_per_element(); ++k) {
      const double w = mesh->quad_weight(e, k);
      for (int v = 0; v < mesh->verts_per_element(); ++v)
        mesh->lumped_mass[el[v]] += w * mesh->quad_bary[k][v];
    }
  }
  return mesh;
}

}  // namespace pqvar
