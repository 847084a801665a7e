#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <utility>
#include <vector>

#include "pqvar/discrete_function.hpp"
#include "pqvar/energy.hpp"
#include "pqvar/problem.hpp"
#include "pqvar/spectrum.hpp"
#include "pqvar/stiffness.hpp"

namespace pqvar {

/// Absolute sup-norm below which a function counts as the trivial solution.
inline constexpr double kTrivialTol = 1e-6;
/// Sign tolerance relative to the sup-norm, used by the classifier.
inline constexpr double kSignRelTol = 1e-6;

/// Descent direction scaling: the weighted-stiffness solve (Sobolev
/// gradient) keeps the iteration conditioning mesh-independent; the diagonal
/// inverse lumped mass is the cheap fallback.
enum class Preconditioner { Stiffness, LumpedMass };

struct SolverParams {
  double armijo_c = 1e-4;   // sufficient-decrease factor, in (0,1)
  double backtrack = 0.5;   // step shrink factor, in (0,1)
  double grad_tol = 1e-8;   // sup-norm of the nodal weak-form residual
  int max_iters = 50000;
  std::uint64_t seed = 1;
  Preconditioner preconditioner = Preconditioner::Stiffness;

  /// grad_tol 1e-8 in 1D, 1e-6 in 2D.
  static SolverParams defaults_for(int dim);
};

enum class Classification { Trivial, Positive, Negative, Nodal };
const char* to_string(Classification c);

/// Nodal-value classification: trivial below kTrivialTol; positive/negative
/// when all interior values are strictly one-signed; nodal when both signs
/// exceed the relative sign tolerance.
Classification classify(const DiscreteFunction& u, double trivial_tol = kTrivialTol,
                        double sign_rel_tol = kSignRelTol);

struct SolverReport {
  DiscreteFunction solution;
  double energy = 0.0;
  double grad_norm = 0.0;
  Classification classification = Classification::Trivial;
  int iterations = 0;
  bool converged = false;
  std::vector<std::pair<double, double>> trace;  // (energy, grad_norm) per iteration
};

/// Callable objective the solvers drive; obtained from an EnergyEvaluator or
/// by mirroring (J(u) = inner(-u)), which is how the odd-reflected problems
/// are solved with bitwise sign symmetry.
struct Objective {
  std::function<EnergyGradient(const DiscreteFunction&)> eval;
  std::function<double(const DiscreteFunction&)> value;
  std::shared_ptr<const Mesh> mesh;
  /// Builds the Sobolev-gradient preconditioner from the linearized
  /// operator coefficients at the given iterate; may be empty.
  std::function<std::shared_ptr<const StiffnessPreconditioner>(const DiscreteFunction&)>
      precond_factory;
};

Objective make_objective(std::shared_ptr<const EnergyEvaluator> evaluator);
Objective mirrored(Objective inner);

/// Descent with Armijo backtracking (Barzilai-Borwein trial steps,
/// inverse-lumped-mass preconditioning). The energy trace is monotone
/// nonincreasing; non-convergence is flagged, never silent.
SolverReport minimize(const Objective& objective, const DiscreteFunction& start,
                      const SolverParams& params);
SolverReport minimize(const FunctionalSpec& spec, const DiscreteFunction& start,
                      const SolverParams& params);

/// Sup-norm of the untruncated weak-form residual of the equation at u.
double free_residual_norm(const ProblemSpec& problem, const DiscreteFunction& u);

struct AuxiliaryResult {
  SolverReport report;  // lowest-energy converged run
  bool unique = false;  // all runs agree within 1e-6 relative sup-norm
  double worst_rel_diff = 0.0;
  int n_starts = 0;
  std::vector<SolverReport> runs;
};

/// Multi-start minimization of the auxiliary energy from seeded positive
/// random starts (sign = -1 solves the odd-reflected problem from mirrored
/// starts). Throws when lambda <= lambda1_q_a2 or eps is out of range.
AuxiliaryResult solve_auxiliary(const ProblemSpec& problem,
                                std::shared_ptr<const Mesh> mesh, double lambda1_q_a2,
                                double eps, double c7, const SolverParams& params,
                                int n_starts, int sign = +1);

struct ExtremalResult {
  DiscreteFunction extremal;
  bool fixed_point = false;
  int outer_iterations = 0;
  bool ordering_ok = false;        // u_bar <= u* <= u_seed nodewise (mirrored for <0)
  double worst_ordering_violation = 0.0;
  SolverReport last_solve;
};

/// Iterates the one-sided truncation anchored at the current solution until
/// a fixed point: each pass minimizes the energy whose critical points are
/// the solutions inside [0, anchor], producing a nonincreasing chain of
/// solutions and the smallest-positive-solution candidate.
ExtremalResult extremal_positive(const ProblemSpec& problem,
                                 std::shared_ptr<const Mesh> mesh,
                                 const DiscreteFunction& u_seed,
                                 const DiscreteFunction& u_bar,
                                 const DiscreteFunction& principal_q,
                                 const SolverParams& params,
                                 double fixed_point_tol = 1e-8, int max_outer = 20);

/// Mirror: biggest-negative-solution candidate via the minus-side truncation.
ExtremalResult extremal_negative(const ProblemSpec& problem,
                                 std::shared_ptr<const Mesh> mesh,
                                 const DiscreteFunction& v_seed,
                                 const DiscreteFunction& v_bar,
                                 const DiscreteFunction& principal_q,
                                 const SolverParams& params,
                                 double fixed_point_tol = 1e-8, int max_outer = 20);

struct MountainPassResult {
  SolverReport report;  // solution is the converged max-energy knot
  bool found_nodal = false;
  bool ring_ok = false;  // endpoint energies below the sampled ring infimum
  double ring_infimum = 0.0;
  double energy_u_star = 0.0;
  double energy_v_star = 0.0;
  double path_scale = 0.0;  // accepted scale of the sphere segment
  int clip_events = 0;      // nodes clipped back into [v*, u*]
  double max_excursion = 0.0;
  std::vector<double> knot_energies;
};

/// Discrete mountain pass on the interval-truncated energy: path
/// v* -> scaled sphere path -> u*, repeated descent on the max-energy knot
/// with arclength re-spacing; iterates clipped to [v*, u*] with excursions
/// logged. Flags (rather than fabricates) a missing nodal outcome.
MountainPassResult mountain_pass_nodal(const ProblemSpec& problem,
                                       std::shared_ptr<const Mesh> mesh,
                                       const DiscreteFunction& u_star,
                                       const DiscreteFunction& v_star,
                                       const Path& sphere_path,
                                       const SolverParams& params, int path_knots = 17);

struct NonexistenceResult {
  bool all_trivial = false;
  double worst_sup_norm = 0.0;
  int n_starts = 0;
  std::vector<double> sup_norms;
  std::vector<SolverReport> runs;
};

/// Multi-start minimization of the untruncated energy from structured and
/// random starts of both signs; verdict holds when every converged point is
/// trivial. A nontrivial point is reported, not treated as an error.
NonexistenceResult nonexistence_scan(const ProblemSpec& problem,
                                     std::shared_ptr<const Mesh> mesh,
                                     const DiscreteFunction& principal_q,
                                     const SolverParams& params, int n_starts);

}  // namespace pqvar
