#pragma once

#include <memory>
#include <vector>

#include "pqvar/discrete_function.hpp"
#include "pqvar/mesh.hpp"
#include "pqvar/problem.hpp"
#include "pqvar/scalar_field.hpp"

namespace pqvar {

/// The energy functionals of the problem and their truncated variants.
///
/// PhiPlus / PhiMinus   constant-sign energies (reaction sees u+ / u-)
/// PhiFree              untruncated energy; critical points are solutions of
///                      the equation regardless of sign
/// PsiAuxPlus           auxiliary-problem energy (positive branch)
/// BetaPlus             auxiliary reaction truncated above a positive anchor
/// PsiHat               reaction frozen outside the order interval [v*, u*]
/// PsiHatPlus/Minus     one-sided variants (reaction sees +-x^+-)
/// RayleighNumerator    integral of a |grad u|^r (eigenvalue machinery)
enum class FunctionalKind {
  PhiPlus,
  PhiMinus,
  PsiAuxPlus,
  BetaPlus,
  PsiHat,
  PsiHatPlus,
  PsiHatMinus,
  RayleighNumerator,
  PhiFree,
};

/// A functional plus everything it needs: the problem data, truncation
/// anchors, and the auxiliary constants. Build through the factories; they
/// validate the construction preconditions (eps range, anchor ordering,
/// anchor sign).
struct FunctionalSpec {
  FunctionalKind kind = FunctionalKind::PhiFree;
  ProblemSpec problem;
  std::shared_ptr<const DiscreteFunction> anchor_u;  // BetaPlus, PsiHat*: u* side
  std::shared_ptr<const DiscreteFunction> anchor_v;  // PsiHat*: v* side
  double eps = 0.0;  // PsiAuxPlus, BetaPlus
  double c7 = 0.0;   // PsiAuxPlus, BetaPlus
  double ray_r = 0.0;
  ScalarField ray_a = ScalarField::constant(1.0);

  static FunctionalSpec phi_plus(ProblemSpec problem);
  static FunctionalSpec phi_minus(ProblemSpec problem);
  static FunctionalSpec phi_free(ProblemSpec problem);

  /// Requires lambda > lambda1_q_a2, eps in (0, lambda - lambda1_q_a2), c7 > 0.
  static FunctionalSpec psi_aux_plus(ProblemSpec problem, double lambda1_q_a2,
                                     double eps, double c7);

  /// Same constants as psi_aux_plus plus a nonnegative anchor.
  static FunctionalSpec beta_plus(ProblemSpec problem, double lambda1_q_a2, double eps,
                                  double c7, std::shared_ptr<const DiscreteFunction> anchor);

  /// Requires v_star <= 0 <= u_star nodewise.
  static FunctionalSpec psihat(ProblemSpec problem,
                               std::shared_ptr<const DiscreteFunction> u_star,
                               std::shared_ptr<const DiscreteFunction> v_star);
  static FunctionalSpec psihat_plus(ProblemSpec problem,
                                    std::shared_ptr<const DiscreteFunction> u_star,
                                    std::shared_ptr<const DiscreteFunction> v_star);
  static FunctionalSpec psihat_minus(ProblemSpec problem,
                                     std::shared_ptr<const DiscreteFunction> u_star,
                                     std::shared_ptr<const DiscreteFunction> v_star);

  static FunctionalSpec rayleigh_numerator(double r, ScalarField a);
};

/// Discrete energy value together with the nodal weak-form residual
/// (the exact gradient of the discrete value; identically 0 at boundary
/// nodes).
struct EnergyGradient {
  double value = 0.0;
  std::vector<double> gradient;
};

/// Functional compiled against a mesh: weights and anchors are sampled at
/// the quadrature points once, so repeated evaluations inside solver loops
/// touch flat arrays only. Stateless per call; safe to share const.
class EnergyEvaluator {
public:
  EnergyEvaluator(FunctionalSpec spec, std::shared_ptr<const Mesh> mesh);

  EnergyGradient eval(const DiscreteFunction& u) const;
  double value(const DiscreteFunction& u) const;

  const FunctionalSpec& spec() const { return spec_; }
  const std::shared_ptr<const Mesh>& mesh() const { return mesh_; }

private:
  double reaction_value(double x, int q_index) const;
  double reaction_deriv(double x, int q_index) const;

  FunctionalSpec spec_;
  std::shared_ptr<const Mesh> mesh_;
  std::vector<double> a1_elem_;  // per-element integral of a1 (or ray_a)
  std::vector<double> a2_elem_;  // per-element integral of a2
  std::vector<double> anchor_u_q_, anchor_v_q_;  // anchors at quadrature points
  bool has_reaction_ = true;
};

/// Convenience one-shot evaluation.
EnergyGradient eval(const FunctionalSpec& spec, const DiscreteFunction& u);

/// Duality pairing <A_r^a(u), h> of the weighted r-Laplacian.
double apply_operator(const DiscreteFunction& u, double r, const ScalarField& a,
                      const DiscreteFunction& h);

/// Pointwise truncation formulas and their exact primitives (value at x = 0
/// is 0). anchor_u / anchor_v are the anchor values at the evaluation point.
double truncation_k_plus(const ProblemSpec& pb, double eps, double c7, double anchor_u,
                         double x);
double truncation_k_plus_primitive(const ProblemSpec& pb, double eps, double c7,
                                   double anchor_u, double x);
double truncation_mu(const ProblemSpec& pb, double anchor_u, double anchor_v, double x);
double truncation_mu_primitive(const ProblemSpec& pb, double anchor_u, double anchor_v,
                               double x);
double truncation_mu_plus(const ProblemSpec& pb, double anchor_u, double anchor_v, double x);
double truncation_mu_minus(const ProblemSpec& pb, double anchor_u, double anchor_v, double x);

}  // namespace pqvar
