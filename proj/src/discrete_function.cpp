#include "pqvar/discrete_function.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace pqvar {

DiscreteFunction DiscreteFunction::zeros(std::shared_ptr<const Mesh> mesh) {
  DiscreteFunction u;
  u.values.assign(mesh->num_nodes(), 0.0);
  u.mesh = std::move(mesh);
  return u;
}

DiscreteFunction DiscreteFunction::from_nodal(std::shared_ptr<const Mesh> mesh,
                                              std::vector<double> values) {
  if (!mesh) throw std::invalid_argument("DiscreteFunction: null mesh");
  if (static_cast<int>(values.size()) != mesh->num_nodes())
    throw std::invalid_argument("DiscreteFunction: value count != node count");
  for (int i = 0; i < mesh->num_nodes(); ++i) {
    if (!std::isfinite(values[i]))
      throw std::invalid_argument("DiscreteFunction: non-finite nodal value");
    if (mesh->boundary[i] && values[i] != 0.0)
      throw std::invalid_argument("DiscreteFunction: nonzero value at Dirichlet node");
  }
  DiscreteFunction u;
  u.mesh = std::move(mesh);
  u.values = std::move(values);
  return u;
}

DiscreteFunction DiscreteFunction::interpolate(
    std::shared_ptr<const Mesh> mesh, const std::function<double(double, double)>& f) {
  DiscreteFunction u = zeros(mesh);
  for (int i = 0; i < mesh->num_nodes(); ++i)
    if (!mesh->boundary[i]) u.values[i] = f(mesh->nodes[i][0], mesh->nodes[i][1]);
  return u;
}

double DiscreteFunction::value_at_quad(int e, int k) const {
  const auto& el = mesh->elements[e];
  const auto& b = mesh->quad_bary[k];
  double v = 0.0;
  for (int i = 0; i < mesh->verts_per_element(); ++i) v += b[i] * values[el[i]];
  return v;
}

double DiscreteFunction::sup_norm() const {
  double m = 0.0;
  for (double v : values) m = std::max(m, std::abs(v));
  return m;
}

double DiscreteFunction::interior_min() const {
  double m = std::numeric_limits<double>::infinity();
  for (int i = 0; i < mesh->num_nodes(); ++i)
    if (!mesh->boundary[i]) m = std::min(m, values[i]);
  return m;
}

double DiscreteFunction::interior_max() const {
  double m = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < mesh->num_nodes(); ++i)
    if (!mesh->boundary[i]) m = std::max(m, values[i]);
  return m;
}

void DiscreteFunction::clamp_boundary() {
  for (int i = 0; i < mesh->num_nodes(); ++i)
    if (mesh->boundary[i]) values[i] = 0.0;
}

DiscreteFunction positive_part(const DiscreteFunction& u) {
  DiscreteFunction out = u;
  for (double& v : out.values) v = std::max(v, 0.0);
  return out;
}

DiscreteFunction negative_part(const DiscreteFunction& u) {
  DiscreteFunction out = u;
  for (double& v : out.values) v = std::max(-v, 0.0);
  return out;
}

double sobolev_gradient_norm(const DiscreteFunction& u, double r, const ScalarField& a) {
  if (!(r > 1.0)) throw std::invalid_argument("sobolev_gradient_norm: need r > 1");
  const Mesh& mesh = *u.mesh;
  double total = 0.0;
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const auto& el = mesh.elements[e];
    double gx = 0.0, gy = 0.0;
    for (int v = 0; v < mesh.verts_per_element(); ++v) {
      gx += u.values[el[v]] * mesh.grads[e][v][0];
      gy += u.values[el[v]] * mesh.grads[e][v][1];
    }
    const double gnorm = mesh.dim == 1 ? std::abs(gx) : std::sqrt(gx * gx + gy * gy);
    double wa = 0.0;
    for (int k = 0; k < mesh.quad_per_element(); ++k) {
      const double av = a.eval(mesh, e, k);
      if (!(av > 0.0))
        throw std::invalid_argument("sobolev_gradient_norm: nonpositive weight at quadrature point");
      wa += mesh.quad_weight(e, k) * av;
    }
    total += wa * std::pow(gnorm, r);
  }
  return total;
}

double lr_norm(const DiscreteFunction& u, double r) {
  if (!(r > 1.0)) throw std::invalid_argument("lr_norm: need r > 1");
  const Mesh& mesh = *u.mesh;
  double total = 0.0;
  for (int e = 0; e < mesh.num_elements(); ++e)
    for (int k = 0; k < mesh.quad_per_element(); ++k)
      total += mesh.quad_weight(e, k) * std::pow(std::abs(u.value_at_quad(e, k)), r);
  return std::pow(total, 1.0 / r);
}

DiscreteFunction random_interior(std::shared_ptr<const Mesh> mesh, Rng& rng,
                                 double lo, double hi) {
  DiscreteFunction u = DiscreteFunction::zeros(mesh);
  for (int i = 0; i < u.mesh->num_nodes(); ++i)
    if (!u.mesh->boundary[i]) u.values[i] = rng.uniform(lo, hi);
  return u;
}

void write_csv(const DiscreteFunction& u, std::ostream& out) {
  const Mesh& mesh = *u.mesh;
  char buf[96];
  out << (mesh.dim == 1 ? "node_index,x,value\n" : "node_index,x,y,value\n");
  for (int i = 0; i < mesh.num_nodes(); ++i) {
    if (mesh.dim == 1)
      std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g\n", i, mesh.nodes[i][0], u.values[i]);
    else
      std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g\n", i, mesh.nodes[i][0],
                    mesh.nodes[i][1], u.values[i]);
    out << buf;
  }
}

void write_csv(const DiscreteFunction& u, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_csv: cannot open " + path);
  write_csv(u, out);
}

std::vector<double> read_nodal_csv(const std::string& path, int expected_nodes) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("read_nodal_csv: cannot open " + path);
  std::vector<double> values(expected_nodes, 0.0);
  std::vector<bool> seen(expected_nodes, false);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("read_nodal_csv: empty file " + path);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string tok;
    std::vector<std::string> cols;
    while (std::getline(ss, tok, ',')) cols.push_back(tok);
    if (cols.size() < 2) throw std::runtime_error("read_nodal_csv: bad row: " + line);
    const int idx = std::stoi(cols.front());
    if (idx < 0 || idx >= expected_nodes)
      throw std::runtime_error("read_nodal_csv: node index out of range: " + cols.front());
    values[idx] = std::stod(cols.back());
    seen[idx] = true;
  }
  for (int i = 0; i < expected_nodes; ++i)
    if (!seen[i]) throw std::runtime_error("read_nodal_csv: missing node " + std::to_string(i));
  return values;
}

}  // namespace pqvar
