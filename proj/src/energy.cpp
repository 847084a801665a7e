#include "pqvar/energy.hpp"

#include <cmath>
#include <stdexcept>

#include "pqvar/powers.hpp"

namespace pqvar {

// ---------------------------------------------------------------------------
// Pointwise reactions and primitives.
//
// The free reaction of the equation is g0(x) = lambda |x|^(q-2) x + f(x) with
// primitive G0(x) = (lambda/q)|x|^q + F(x). Truncations splice g0 (or the
// auxiliary reaction) with branches frozen at the anchor values; primitives
// are spliced in closed form, which keeps the discrete gradients exact.
// ---------------------------------------------------------------------------

namespace {

double free_reaction(const ProblemSpec& pb, double x) {
  return pb.lambda * spow(x, pb.q - 1.0) + pb.f.f(x);
}

double free_primitive(const ProblemSpec& pb, double x) {
  return pb.lambda / pb.q * apow(x, pb.q) + pb.f.F(x);
}

double aux_reaction(const ProblemSpec& pb, double eps, double c7, double x) {
  if (x <= 0.0) return 0.0;
  return (pb.lambda - eps) * spow(x, pb.q - 1.0) - c7 * spow(x, pb.p - 1.0);
}

double aux_primitive(const ProblemSpec& pb, double eps, double c7, double x) {
  if (x <= 0.0) return 0.0;
  return (pb.lambda - eps) / pb.q * apow(x, pb.q) - c7 / pb.p * apow(x, pb.p);
}

}  // namespace

double truncation_k_plus(const ProblemSpec& pb, double eps, double c7, double anchor_u,
                         double x) {
  if (x <= anchor_u) return aux_reaction(pb, eps, c7, x);
  return aux_reaction(pb, eps, c7, anchor_u);
}

double truncation_k_plus_primitive(const ProblemSpec& pb, double eps, double c7,
                                   double anchor_u, double x) {
  if (x <= anchor_u) return aux_primitive(pb, eps, c7, x);
  return aux_primitive(pb, eps, c7, anchor_u) +
         aux_reaction(pb, eps, c7, anchor_u) * (x - anchor_u);
}

double truncation_mu(const ProblemSpec& pb, double anchor_u, double anchor_v, double x) {
  if (x < anchor_v) return free_reaction(pb, anchor_v);
  if (x > anchor_u) return free_reaction(pb, anchor_u);
  return free_reaction(pb, x);
}

double truncation_mu_primitive(const ProblemSpec& pb, double anchor_u, double anchor_v,
                               double x) {
  // Requires anchor_v <= 0 <= anchor_u, so the integral from 0 crosses at
  // most one splice point.
  if (x < anchor_v)
    return free_primitive(pb, anchor_v) + free_reaction(pb, anchor_v) * (x - anchor_v);
  if (x > anchor_u)
    return free_primitive(pb, anchor_u) + free_reaction(pb, anchor_u) * (x - anchor_u);
  return free_primitive(pb, x);
}

double truncation_mu_plus(const ProblemSpec& pb, double anchor_u, double anchor_v, double x) {
  return truncation_mu(pb, anchor_u, anchor_v, x > 0.0 ? x : 0.0);
}

double truncation_mu_minus(const ProblemSpec& pb, double anchor_u, double anchor_v, double x) {
  return truncation_mu(pb, anchor_u, anchor_v, x < 0.0 ? x : 0.0);
}

// ---------------------------------------------------------------------------
// FunctionalSpec factories.
// ---------------------------------------------------------------------------

namespace {

void require_nonneg(const DiscreteFunction& u, const char* what) {
  for (double v : u.values)
    if (v < 0.0) throw std::invalid_argument(std::string(what) + ": anchor must be >= 0");
}

void require_interval_anchors(const DiscreteFunction& u_star, const DiscreteFunction& v_star) {
  if (u_star.mesh != v_star.mesh)
    throw std::invalid_argument("psihat: anchors live on different meshes");
  for (std::size_t i = 0; i < u_star.values.size(); ++i) {
    if (v_star.values[i] > 0.0 || u_star.values[i] < 0.0 ||
        v_star.values[i] > u_star.values[i])
      throw std::invalid_argument("psihat: anchors must satisfy v* <= 0 <= u* nodewise");
  }
}

void require_aux_constants(const ProblemSpec& pb, double lambda1_q_a2, double eps,
                           double c7) {
  if (!(pb.lambda > lambda1_q_a2))
    throw std::invalid_argument("auxiliary functional: need lambda > lambda1(q, a2)");
  if (!(eps > 0.0 && eps < pb.lambda - lambda1_q_a2))
    throw std::invalid_argument("auxiliary functional: eps outside (0, lambda - lambda1(q, a2))");
  if (!(c7 > 0.0)) throw std::invalid_argument("auxiliary functional: need c7 > 0");
}

}  // namespace

FunctionalSpec FunctionalSpec::phi_plus(ProblemSpec problem) {
  FunctionalSpec s;
  s.kind = FunctionalKind::PhiPlus;
  s.problem = std::move(problem);
  return s;
}

FunctionalSpec FunctionalSpec::phi_minus(ProblemSpec problem) {
  FunctionalSpec s;
  s.kind = FunctionalKind::PhiMinus;
  s.problem = std::move(problem);
  return s;
}

FunctionalSpec FunctionalSpec::phi_free(ProblemSpec problem) {
  FunctionalSpec s;
  s.kind = FunctionalKind::PhiFree;
  s.problem = std::move(problem);
  return s;
}

FunctionalSpec FunctionalSpec::psi_aux_plus(ProblemSpec problem, double lambda1_q_a2,
                                            double eps, double c7) {
  require_aux_constants(problem, lambda1_q_a2, eps, c7);
  FunctionalSpec s;
  s.kind = FunctionalKind::PsiAuxPlus;
  s.problem = std::move(problem);
  s.eps = eps;
  s.c7 = c7;
  return s;
}

FunctionalSpec FunctionalSpec::beta_plus(ProblemSpec problem, double lambda1_q_a2,
                                         double eps, double c7,
                                         std::shared_ptr<const DiscreteFunction> anchor) {
  require_aux_constants(problem, lambda1_q_a2, eps, c7);
  if (!anchor) throw std::invalid_argument("beta_plus: missing anchor");
  require_nonneg(*anchor, "beta_plus");
  FunctionalSpec s;
  s.kind = FunctionalKind::BetaPlus;
  s.problem = std::move(problem);
  s.eps = eps;
  s.c7 = c7;
  s.anchor_u = std::move(anchor);
  return s;
}

namespace {
FunctionalSpec make_psihat(FunctionalKind kind, ProblemSpec problem,
                           std::shared_ptr<const DiscreteFunction> u_star,
                           std::shared_ptr<const DiscreteFunction> v_star) {
  if (!u_star || !v_star) throw std::invalid_argument("psihat: missing anchors");
  require_interval_anchors(*u_star, *v_star);
  FunctionalSpec s;
  s.kind = kind;
  s.problem = std::move(problem);
  s.anchor_u = std::move(u_star);
  s.anchor_v = std::move(v_star);
  return s;
}
}  // namespace

FunctionalSpec FunctionalSpec::psihat(ProblemSpec problem,
                                      std::shared_ptr<const DiscreteFunction> u_star,
                                      std::shared_ptr<const DiscreteFunction> v_star) {
  return make_psihat(FunctionalKind::PsiHat, std::move(problem), std::move(u_star),
                     std::move(v_star));
}

FunctionalSpec FunctionalSpec::psihat_plus(ProblemSpec problem,
                                           std::shared_ptr<const DiscreteFunction> u_star,
                                           std::shared_ptr<const DiscreteFunction> v_star) {
  return make_psihat(FunctionalKind::PsiHatPlus, std::move(problem), std::move(u_star),
                     std::move(v_star));
}

FunctionalSpec FunctionalSpec::psihat_minus(ProblemSpec problem,
                                            std::shared_ptr<const DiscreteFunction> u_star,
                                            std::shared_ptr<const DiscreteFunction> v_star) {
  return make_psihat(FunctionalKind::PsiHatMinus, std::move(problem), std::move(u_star),
                     std::move(v_star));
}

FunctionalSpec FunctionalSpec::rayleigh_numerator(double r, ScalarField a) {
  if (!(r > 1.0)) throw std::invalid_argument("rayleigh_numerator: need r > 1");
  FunctionalSpec s;
  s.kind = FunctionalKind::RayleighNumerator;
  s.ray_r = r;
  s.ray_a = std::move(a);
  return s;
}

// ---------------------------------------------------------------------------
// EnergyEvaluator.
// ---------------------------------------------------------------------------

EnergyEvaluator::EnergyEvaluator(FunctionalSpec spec, std::shared_ptr<const Mesh> mesh)
    : spec_(std::move(spec)), mesh_(std::move(mesh)) {
  if (!mesh_) throw std::invalid_argument("EnergyEvaluator: null mesh");
  const Mesh& m = *mesh_;
  const int nq = m.quad_per_element();

  const bool rayleigh = spec_.kind == FunctionalKind::RayleighNumerator;
  if (!rayleigh) spec_.problem.validate(m);
  has_reaction_ = !rayleigh;

  a1_elem_.assign(m.num_elements(), 0.0);
  a2_elem_.assign(m.num_elements(), 0.0);
  const ScalarField& w1 = rayleigh ? spec_.ray_a : spec_.problem.a1;
  for (int e = 0; e < m.num_elements(); ++e) {
    for (int k = 0; k < nq; ++k) {
      a1_elem_[e] += m.quad_weight(e, k) * w1.eval(m, e, k);
      if (!rayleigh) a2_elem_[e] += m.quad_weight(e, k) * spec_.problem.a2.eval(m, e, k);
    }
  }

  auto sample = [&](const DiscreteFunction& f, std::vector<double>& out) {
    if (f.mesh.get() != mesh_.get())
      throw std::invalid_argument("EnergyEvaluator: anchor on a foreign mesh");
    out.resize(static_cast<std::size_t>(m.num_elements()) * nq);
    for (int e = 0; e < m.num_elements(); ++e)
      for (int k = 0; k < nq; ++k) out[e * nq + k] = f.value_at_quad(e, k);
  };
  if (spec_.anchor_u) sample(*spec_.anchor_u, anchor_u_q_);
  if (spec_.anchor_v) sample(*spec_.anchor_v, anchor_v_q_);
}

double EnergyEvaluator::reaction_value(double x, int qi) const {
  const ProblemSpec& pb = spec_.problem;
  switch (spec_.kind) {
    case FunctionalKind::PhiPlus:
      return x > 0.0 ? free_primitive(pb, x) : 0.0;
    case FunctionalKind::PhiMinus:
      return x < 0.0 ? free_primitive(pb, x) : 0.0;
    case FunctionalKind::PhiFree:
      return free_primitive(pb, x);
    case FunctionalKind::PsiAuxPlus:
      return aux_primitive(pb, spec_.eps, spec_.c7, x);
    case FunctionalKind::BetaPlus:
      return truncation_k_plus_primitive(pb, spec_.eps, spec_.c7, anchor_u_q_[qi], x);
    case FunctionalKind::PsiHat:
      return truncation_mu_primitive(pb, anchor_u_q_[qi], anchor_v_q_[qi], x);
    case FunctionalKind::PsiHatPlus:
      return x > 0.0 ? truncation_mu_primitive(pb, anchor_u_q_[qi], anchor_v_q_[qi], x) : 0.0;
    case FunctionalKind::PsiHatMinus:
      return x < 0.0 ? truncation_mu_primitive(pb, anchor_u_q_[qi], anchor_v_q_[qi], x) : 0.0;
    case FunctionalKind::RayleighNumerator:
      return 0.0;
  }
  return 0.0;
}

double EnergyEvaluator::reaction_deriv(double x, int qi) const {
  const ProblemSpec& pb = spec_.problem;
  switch (spec_.kind) {
    case FunctionalKind::PhiPlus:
      return x > 0.0 ? free_reaction(pb, x) : 0.0;
    case FunctionalKind::PhiMinus:
      return x < 0.0 ? free_reaction(pb, x) : 0.0;
    case FunctionalKind::PhiFree:
      return free_reaction(pb, x);
    case FunctionalKind::PsiAuxPlus:
      return aux_reaction(pb, spec_.eps, spec_.c7, x);
    case FunctionalKind::BetaPlus:
      return truncation_k_plus(pb, spec_.eps, spec_.c7, anchor_u_q_[qi], x);
    case FunctionalKind::PsiHat:
      return truncation_mu(pb, anchor_u_q_[qi], anchor_v_q_[qi], x);
    case FunctionalKind::PsiHatPlus:
      return x > 0.0 ? truncation_mu(pb, anchor_u_q_[qi], anchor_v_q_[qi], x) : 0.0;
    case FunctionalKind::PsiHatMinus:
      return x < 0.0 ? truncation_mu(pb, anchor_u_q_[qi], anchor_v_q_[qi], x) : 0.0;
    case FunctionalKind::RayleighNumerator:
      return 0.0;
  }
  return 0.0;
}

EnergyGradient EnergyEvaluator::eval(const DiscreteFunction& u) const {
  if (u.mesh.get() != mesh_.get())
    throw std::invalid_argument("EnergyEvaluator: function on a foreign mesh");
  const Mesh& m = *mesh_;
  const int nq = m.quad_per_element();
  const int nv = m.verts_per_element();
  const bool rayleigh = spec_.kind == FunctionalKind::RayleighNumerator;
  const double p = rayleigh ? spec_.ray_r : spec_.problem.p;
  const double q = spec_.problem.q;

  EnergyGradient out;
  out.gradient.assign(m.num_nodes(), 0.0);

  for (int e = 0; e < m.num_elements(); ++e) {
    const auto& el = m.elements[e];
    double gx = 0.0, gy = 0.0;
    for (int v = 0; v < nv; ++v) {
      gx += u.values[el[v]] * m.grads[e][v][0];
      gy += u.values[el[v]] * m.grads[e][v][1];
    }
    const double gn = m.dim == 1 ? std::abs(gx) : std::sqrt(gx * gx + gy * gy);

    double coef_p = 0.0, coef_q = 0.0;  // scalar factors of (g . grad phi_i)
    if (rayleigh) {
      out.value += a1_elem_[e] * apow(gn, p);
      coef_p = gn > 0.0 ? p * a1_elem_[e] * std::pow(gn, p - 2.0) : 0.0;
    } else {
      out.value += a1_elem_[e] / p * apow(gn, p) + a2_elem_[e] / q * apow(gn, q);
      if (gn > 0.0) {
        coef_p = a1_elem_[e] * std::pow(gn, p - 2.0);
        coef_q = a2_elem_[e] * std::pow(gn, q - 2.0);
      }
    }
    const double coef = coef_p + coef_q;
    if (coef != 0.0) {
      for (int v = 0; v < nv; ++v)
        out.gradient[el[v]] += coef * (gx * m.grads[e][v][0] + gy * m.grads[e][v][1]);
    }

    if (has_reaction_) {
      for (int k = 0; k < nq; ++k) {
        const int qi = e * nq + k;
        double x = 0.0;
        for (int v = 0; v < nv; ++v) x += m.quad_bary[k][v] * u.values[el[v]];
        const double w = m.quad_weight(e, k);
        out.value -= w * reaction_value(x, qi);
        const double g = reaction_deriv(x, qi);
        if (g != 0.0) {
          for (int v = 0; v < nv; ++v)
            out.gradient[el[v]] -= w * g * m.quad_bary[k][v];
        }
      }
    }
  }

  for (int i = 0; i < m.num_nodes(); ++i)
    if (m.boundary[i]) out.gradient[i] = 0.0;
  return out;
}

double EnergyEvaluator::value(const DiscreteFunction& u) const {
  if (u.mesh.get() != mesh_.get())
    throw std::invalid_argument("EnergyEvaluator: function on a foreign mesh");
  const Mesh& m = *mesh_;
  const int nq = m.quad_per_element();
  const int nv = m.verts_per_element();
  const bool rayleigh = spec_.kind == FunctionalKind::RayleighNumerator;
  const double p = rayleigh ? spec_.ray_r : spec_.problem.p;
  const double q = spec_.problem.q;

  double total = 0.0;
  for (int e = 0; e < m.num_elements(); ++e) {
    const auto& el = m.elements[e];
    double gx = 0.0, gy = 0.0;
    for (int v = 0; v < nv; ++v) {
      gx += u.values[el[v]] * m.grads[e][v][0];
      gy += u.values[el[v]] * m.grads[e][v][1];
    }
    const double gn = m.dim == 1 ? std::abs(gx) : std::sqrt(gx * gx + gy * gy);
    if (rayleigh)
      total += a1_elem_[e] * apow(gn, p);
    else
      total += a1_elem_[e] / p * apow(gn, p) + a2_elem_[e] / q * apow(gn, q);

    if (has_reaction_) {
      for (int k = 0; k < nq; ++k) {
        double x = 0.0;
        for (int v = 0; v < nv; ++v) x += m.quad_bary[k][v] * u.values[el[v]];
        total -= m.quad_weight(e, k) * reaction_value(x, e * nq + k);
      }
    }
  }
  return total;
}

EnergyGradient eval(const FunctionalSpec& spec, const DiscreteFunction& u) {
  return EnergyEvaluator(spec, u.mesh).eval(u);
}

double apply_operator(const DiscreteFunction& u, double r, const ScalarField& a,
                      const DiscreteFunction& h) {
  if (!(r > 1.0)) throw std::invalid_argument("apply_operator: need r > 1");
  if (u.mesh != h.mesh) throw std::invalid_argument("apply_operator: mesh mismatch");
  const Mesh& m = *u.mesh;
  const int nv = m.verts_per_element();
  double total = 0.0;
  for (int e = 0; e < m.num_elements(); ++e) {
    const auto& el = m.elements[e];
    double ux = 0.0, uy = 0.0, hx = 0.0, hy = 0.0;
    for (int v = 0; v < nv; ++v) {
      ux += u.values[el[v]] * m.grads[e][v][0];
      uy += u.values[el[v]] * m.grads[e][v][1];
      hx += h.values[el[v]] * m.grads[e][v][0];
      hy += h.values[el[v]] * m.grads[e][v][1];
    }
    const double gn = m.dim == 1 ? std::abs(ux) : std::sqrt(ux * ux + uy * uy);
    if (gn == 0.0) continue;
    double wa = 0.0;
    for (int k = 0; k < m.quad_per_element(); ++k)
      wa += m.quad_weight(e, k) * a.eval(m, e, k);
    total += wa * std::pow(gn, r - 2.0) * (ux * hx + uy * hy);
  }
  return total;
}

}  // namespace pqvar
