#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "pqvar/mesh.hpp"
#include "pqvar/scalar_field.hpp"

namespace pqvar {

/// Registry of reaction families. All builtin families are uniform in z;
/// spatial variation enters the equation only through the weights a1, a2.
enum class Family { Zero, ResonantPower, SubcriticalPower };

/// Named hypothesis clauses tracked by the checker.
enum class Hypothesis { H0, H1, H1Prime, H1DoublePrime };

/// f(x) = mu |x|^(p-2) x - c |x|^(tau-2) x with exact primitive
/// F(x) = mu |x|^p / p - c |x|^tau / tau. The resonant family is meant to be
/// used with mu equal to the principal eigenvalue of the p-operator, the
/// subcritical one with mu strictly below it; the formulas coincide.
///
/// Verified by algebraic expansion (frozen in the model tests):
///   f(x)x - pF(x)      = c (p/tau - 1) |x|^tau  -> +inf   (growth clause)
///   f(x)/(|x|^(p-2)x)  = mu - c |x|^(tau-p)     -> mu     (limit slope)
///   f(x)/(|x|^(q-2)x)  = mu |x|^(p-q) - c |x|^(tau-q) -> 0 at 0
///   f(x)x              = mu |x|^p - c |x|^tau   <= mu |x|^p (sign bound)
struct NonlinearitySpec {
  Family family = Family::Zero;
  double mu = 0.0;
  double c = 0.0;
  double tau = 0.0;
  double p = 0.0;  // exponent of the leading power term
  std::vector<Hypothesis> declared;

  double f(double x) const;
  double F(double x) const;
  bool declares(Hypothesis h) const;
};

/// Throws on tau outside (q, p) or c <= 0 for the power families.
/// Names: "zero", "resonant_power", "subcritical_power".
NonlinearitySpec builtin_nonlinearity(const std::string& name, double mu, double c,
                                      double tau, double q, double p);

/// Problem data bundle for the parametric equation driven by the weighted
/// p- and q-operators with reaction lambda |x|^(q-2) x + f(z, x).
struct ProblemSpec {
  double p = 3.0;
  double q = 2.0;
  ScalarField a1 = ScalarField::constant(1.0);
  ScalarField a2 = ScalarField::constant(1.0);
  double lambda = 1.0;
  NonlinearitySpec f;
  /// Declared uniform lower bound for both weights; 0 means "just positive".
  double declared_c1 = 0.0;

  /// Validates 1 < q < p, lambda > 0, weight positivity on the mesh
  /// quadrature points, and the family parameter ranges.
  void validate(const Mesh& mesh) const;
};

enum class Verdict { Pass, Fail, Inconclusive };

struct HypothesisItem {
  std::string name;     // e.g. "H0", "H1(iv)", "H1''(vi)"
  Verdict verdict = Verdict::Inconclusive;
  double margin = 0.0;  // signed distance to the threshold; < 0 on failure
  double worst_x = 0.0;
  std::array<double, 2> worst_z = {0.0, 0.0};
  std::string note;
};

struct HypothesisReport {
  std::vector<HypothesisItem> items;
  const HypothesisItem* find(const std::string& name) const;
  bool any_failure() const;
};

/// Mesh-dependent spectral thresholds used by the asymptotic clauses.
/// NaN entries downgrade the affected verdicts to Inconclusive.
struct SpectralContext {
  double lambda1_p_a1 = std::nan("");
  double lambda1_q_a2 = std::nan("");
};

struct HypothesisCheckOptions {
  double x_max = 100.0;   // sampling box |x| <= x_max, log-spaced
  int x_samples = 61;     // per sign
  double small_x = 1e-3;  // smallest sampled |x|
};

/// Sampling-based, advisory check of H0 and the declared H1 clauses at the
/// mesh quadrature points. Asymptotic clauses that sampling cannot certify
/// come back Inconclusive rather than Pass.
HypothesisReport check_hypotheses(const ProblemSpec& spec, const Mesh& mesh,
                                  const SpectralContext& ctx = {},
                                  const HypothesisCheckOptions& opts = {});

}  // namespace pqvar
