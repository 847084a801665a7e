#include "pqvar/solve.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "pqvar/rng.hpp"

namespace pqvar {

SolverParams SolverParams::defaults_for(int dim) {
  SolverParams p;
  p.grad_tol = dim == 1 ? 1e-8 : 1e-6;
  return p;
}

const char* to_string(Classification c) {
  switch (c) {
    case Classification::Trivial:
      return "trivial";
    case Classification::Positive:
      return "positive";
    case Classification::Negative:
      return "negative";
    case Classification::Nodal:
      return "nodal";
  }
  return "?";
}

Classification classify(const DiscreteFunction& u, double trivial_tol,
                        double sign_rel_tol) {
  const double sup = u.sup_norm();
  if (sup <= trivial_tol) return Classification::Trivial;
  const double mn = u.interior_min();
  const double mx = u.interior_max();
  if (mn > 0.0) return Classification::Positive;
  if (mx < 0.0) return Classification::Negative;
  const double sign_tol = sign_rel_tol * sup;
  if (mx > sign_tol && -mn > sign_tol) return Classification::Nodal;
  // One-signed up to numerical dirt on the small side.
  if (-mn <= sign_tol && mx > sign_tol) return Classification::Positive;
  if (mx <= sign_tol && -mn > sign_tol) return Classification::Negative;
  return Classification::Nodal;
}

Objective make_objective(std::shared_ptr<const EnergyEvaluator> evaluator) {
  Objective obj;
  obj.mesh = evaluator->mesh();
  obj.eval = [evaluator](const DiscreteFunction& u) { return evaluator->eval(u); };
  obj.value = [evaluator](const DiscreteFunction& u) { return evaluator->value(u); };

  // Linearized second-order coefficients of the p/q gradient terms at u,
  // integrated per element: a1 (p-1) |grad u|^(p-2) + a2 (q-1) |grad u|^(q-2),
  // floored away from the p-degeneracy at flat spots.
  const auto& spec = evaluator->spec();
  const bool rayleigh = spec.kind == FunctionalKind::RayleighNumerator;
  const double p = rayleigh ? spec.ray_r : spec.problem.p;
  const double q = rayleigh ? 0.0 : spec.problem.q;
  const ScalarField a1 = rayleigh ? spec.ray_a : spec.problem.a1;
  const ScalarField a2 = rayleigh ? ScalarField::constant(0.0) : spec.problem.a2;
  auto mesh = obj.mesh;
  obj.precond_factory = [mesh, p, q, a1,
                         a2](const DiscreteFunction& u) -> std::shared_ptr<const StiffnessPreconditioner> {
    const Mesh& m = *mesh;
    std::vector<double> gnorm(m.num_elements());
    double gmax = 0.0;
    for (int e = 0; e < m.num_elements(); ++e) {
      const auto& el = m.elements[e];
      double gx = 0.0, gy = 0.0;
      for (int v = 0; v < m.verts_per_element(); ++v) {
        gx += u.values[el[v]] * m.grads[e][v][0];
        gy += u.values[el[v]] * m.grads[e][v][1];
      }
      gnorm[e] = m.dim == 1 ? std::abs(gx) : std::sqrt(gx * gx + gy * gy);
      gmax = std::max(gmax, gnorm[e]);
    }
    const double floor = std::max(1e-3 * gmax, 1e-12);
    std::vector<double> coef(m.num_elements(), 0.0);
    for (int e = 0; e < m.num_elements(); ++e) {
      double w1 = 0.0, w2 = 0.0;
      for (int k = 0; k < m.quad_per_element(); ++k) {
        w1 += m.quad_weight(e, k) * a1.eval(m, e, k);
        w2 += m.quad_weight(e, k) * a2.eval(m, e, k);
      }
      const double g = std::max(gnorm[e], floor);
      coef[e] = w1 * (p - 1.0) * std::pow(g, p - 2.0);
      if (q > 1.0) coef[e] += w2 * (q - 1.0) * std::pow(g, q - 2.0);
    }
    return std::make_shared<StiffnessPreconditioner>(mesh, coef);
  };
  return obj;
}

Objective mirrored(Objective inner) {
  Objective obj;
  obj.mesh = inner.mesh;
  auto inner_factory = inner.precond_factory;
  if (inner_factory) {
    // |grad(-u)| == |grad u|, so the mirrored factory builds the same matrix.
    obj.precond_factory = [inner_factory](const DiscreteFunction& u) {
      DiscreteFunction w = u;
      for (double& v : w.values) v = -v;
      return inner_factory(w);
    };
  }
  auto inner_eval = inner.eval;
  auto inner_value = inner.value;
  obj.eval = [inner_eval](const DiscreteFunction& u) {
    DiscreteFunction w = u;
    for (double& v : w.values) v = -v;
    EnergyGradient eg = inner_eval(w);
    for (double& g : eg.gradient) g = -g;
    return eg;
  };
  obj.value = [inner_value](const DiscreteFunction& u) {
    DiscreteFunction w = u;
    for (double& v : w.values) v = -v;
    return inner_value(w);
  };
  return obj;
}

namespace {

double interior_sup(const Mesh& m, const std::vector<double>& g) {
  double s = 0.0;
  for (int i = 0; i < m.num_nodes(); ++i)
    if (!m.boundary[i]) s = std::max(s, std::abs(g[i]));
  return s;
}

}  // namespace

SolverReport minimize(const Objective& objective, const DiscreteFunction& start,
                      const SolverParams& params) {
  const Mesh& m = *objective.mesh;
  if (start.mesh.get() != &m) throw std::invalid_argument("minimize: start on a foreign mesh");

  SolverReport rep;
  DiscreteFunction u = start;
  u.clamp_boundary();

  EnergyGradient eg = objective.eval(u);
  double gnorm = interior_sup(m, eg.gradient);
  double step = 1.0;
  std::vector<double> prev_u, prev_g;

  // The Armijo test certifies descent only while the required decrease stays
  // above the rounding floor of the energy evaluation; past that, steps are
  // accepted by a nonmonotone residual watchdog (first trial may regress to
  // the worst of the last 10 residuals, deeper backtracks must improve), and
  // the lowest-residual iterate is remembered.
  std::array<double, 10> hist = {};
  std::size_t hist_pos = 0;
  bool have_best = false;
  DiscreteFunction best = u;
  double best_g = gnorm, best_e = eg.value;
  int since_improved = 0;
  std::shared_ptr<const StiffnessPreconditioner> precond;
  int accepts_since_rebuild = 0;

  int it = 0;
  for (; it < params.max_iters; ++it) {
    rep.trace.emplace_back(eg.value, gnorm);
    if (have_best && gnorm < best_g) {
      best = u;
      best_g = gnorm;
      best_e = eg.value;
      since_improved = 0;
    }
    // Convergence is judged against the energy scale: the attainable
    // residual floor grows with the solution amplitude.
    const double tol_eff =
        params.grad_tol * (1.0 + std::abs(have_best ? best_e : eg.value));
    if ((have_best ? best_g : gnorm) <= tol_eff) {
      rep.converged = true;
      break;
    }
    if (have_best && ++since_improved > 1000) break;  // residual floor

    std::vector<double> dir;
    if (params.preconditioner == Preconditioner::Stiffness && objective.precond_factory) {
      if (!precond || accepts_since_rebuild >= 25) {
        precond = objective.precond_factory(u);
        accepts_since_rebuild = 0;
      }
      precond->apply(eg.gradient, dir);
    } else {
      dir.assign(m.num_nodes(), 0.0);
      for (int i = 0; i < m.num_nodes(); ++i)
        if (!m.boundary[i]) dir[i] = eg.gradient[i] / m.lumped_mass[i];
    }
    double decrease = 0.0;
    for (int i = 0; i < m.num_nodes(); ++i)
      if (!m.boundary[i]) decrease += eg.gradient[i] * dir[i];
    if (!(decrease > 0.0)) break;

    // Barzilai-Borwein trial step in the lumped-mass metric.
    double trial = std::min(step * 2.0, 1e8);
    if (!prev_u.empty()) {
      double ss = 0.0, sy = 0.0;
      for (int i = 0; i < m.num_nodes(); ++i) {
        if (m.boundary[i]) continue;
        const double du = u.values[i] - prev_u[i];
        ss += m.lumped_mass[i] * du * du;
        sy += du * (eg.gradient[i] - prev_g[i]);
      }
      if (sy > 0.0) {
        const double bb = ss / sy;
        if (bb > 1e-13 && bb < 1e8) trial = bb;
      }
    }

    const double value_noise = 1e-14 * (1.0 + std::abs(eg.value));
    double watchdog = gnorm;
    for (double h : hist) watchdog = std::max(watchdog, h);

    auto try_step = [&](double s) {
      DiscreteFunction w = u;
      for (int i = 0; i < m.num_nodes(); ++i)
        if (!m.boundary[i]) w.values[i] -= s * dir[i];
      return w;
    };
    auto commit = [&](DiscreteFunction&& w, EnergyGradient&& weg, double wg, double s) {
      prev_u = u.values;
      prev_g = eg.gradient;
      u = std::move(w);
      eg = std::move(weg);
      gnorm = wg;
      hist[hist_pos++ % hist.size()] = gnorm;
      step = s;
      ++accepts_since_rebuild;
    };

    bool accepted = false;
    double s = trial;
    for (int bt = 0; bt < 70 && !accepted; ++bt, s *= params.backtrack) {
      if (params.armijo_c * s * decrease < value_noise) break;  // not certifiable
      DiscreteFunction w = try_step(s);
      const double wv = objective.value(w);
      if (std::isfinite(wv) && wv <= eg.value - params.armijo_c * s * decrease) {
        EnergyGradient weg = objective.eval(w);
        const double wg = interior_sup(m, weg.gradient);
        commit(std::move(w), std::move(weg), wg, s);
        accepted = true;
      }
    }
    if (!accepted) {
      // value comparison floored out: residual-watchdog acceptance
      s = trial;
      for (int bt = 0; bt < 70 && !accepted; ++bt, s *= params.backtrack) {
        DiscreteFunction w = try_step(s);
        EnergyGradient weg = objective.eval(w);
        const double wg = interior_sup(m, weg.gradient);
        const bool no_blowup = weg.value <= eg.value + value_noise;
        if (no_blowup && (bt == 0 ? wg < watchdog : wg < gnorm)) {
          commit(std::move(w), std::move(weg), wg, s);
          accepted = true;
          if (!have_best) {
            have_best = true;
            best = u;
            best_g = gnorm;
            best_e = eg.value;
            since_improved = 0;
          }
        }
      }
    }
    if (!accepted) break;  // line search floor: flagged unless tol already met
  }
  rep.iterations = it;

  if (have_best && best_g < gnorm && best_e <= eg.value + 1e-13 * (1.0 + std::abs(eg.value))) {
    u = std::move(best);
    gnorm = best_g;
    eg.value = best_e;
  }
  rep.converged =
      rep.converged || gnorm <= params.grad_tol * (1.0 + std::abs(eg.value));
  rep.solution = std::move(u);
  rep.energy = eg.value;
  rep.grad_norm = gnorm;
  rep.classification = classify(rep.solution);
  return rep;
}

SolverReport minimize(const FunctionalSpec& spec, const DiscreteFunction& start,
                      const SolverParams& params) {
  auto ev = std::make_shared<EnergyEvaluator>(spec, start.mesh);
  return minimize(make_objective(ev), start, params);
}

double free_residual_norm(const ProblemSpec& problem, const DiscreteFunction& u) {
  EnergyEvaluator ev(FunctionalSpec::phi_free(problem), u.mesh);
  return interior_sup(*u.mesh, ev.eval(u).gradient);
}

AuxiliaryResult solve_auxiliary(const ProblemSpec& problem,
                                std::shared_ptr<const Mesh> mesh, double lambda1_q_a2,
                                double eps, double c7, const SolverParams& params,
                                int n_starts, int sign) {
  if (n_starts < 1) throw std::invalid_argument("solve_auxiliary: need n_starts >= 1");
  auto spec = FunctionalSpec::psi_aux_plus(problem, lambda1_q_a2, eps, c7);
  auto ev = std::make_shared<EnergyEvaluator>(spec, mesh);
  const Objective plus = make_objective(ev);
  const Objective obj = sign < 0 ? mirrored(plus) : plus;

  // Seeded positive starts: a smooth bump with randomized amplitude and
  // low-frequency modulation, scaled down until the energy is negative.
  // Monotone descent from a negative level cannot end at the zero critical
  // point, so every start commits to the nontrivial basin.
  const Extent& ex = mesh->extent;
  const double lx = ex.x1 - ex.x0, ly = ex.y1 - ex.y0;
  const DiscreteFunction bump = DiscreteFunction::interpolate(mesh, [&](double x, double y) {
    double v = std::sin(M_PI * (x - ex.x0) / lx);
    if (mesh->dim == 2) v *= std::sin(M_PI * (y - ex.y0) / ly);
    return v;
  });

  // The uniqueness verdict compares solutions at 1e-6 relative sup-norm; the
  // residual tolerance must sit well below that (but above the ~1e-11
  // attainable floor at desk-scale meshes).
  SolverParams tight = params;
  tight.grad_tol = std::min(params.grad_tol, 1e-10);

  AuxiliaryResult out;
  out.n_starts = n_starts;
  Rng root(params.seed);
  for (int k = 0; k < n_starts; ++k) {
    Rng rng = root.fork(k);
    double t = rng.uniform(0.25, 2.5);
    const double m2 = rng.uniform(-1.0, 1.0), m3 = rng.uniform(-1.0, 1.0);
    DiscreteFunction shape = DiscreteFunction::zeros(mesh);
    for (int i = 0; i < mesh->num_nodes(); ++i) {
      if (mesh->boundary[i]) continue;
      const double xi = (mesh->nodes[i][0] - ex.x0) / lx;
      shape.values[i] = bump.values[i] * (1.0 + 0.2 * m2 * std::sin(2.0 * M_PI * xi) +
                                          0.2 * m3 * std::sin(3.0 * M_PI * xi));
    }
    DiscreteFunction start = shape;
    for (int half = 0; half < 60; ++half) {
      for (std::size_t i = 0; i < start.values.size(); ++i)
        start.values[i] = t * shape.values[i];
      if (plus.value(start) < 0.0) break;
      t *= 0.5;
    }
    if (sign < 0)
      for (double& v : start.values) v = -v;
    out.runs.push_back(minimize(obj, start, tight));
  }

  int best = 0;
  for (int k = 1; k < n_starts; ++k)
    if (out.runs[k].energy < out.runs[best].energy) best = k;
  out.report = out.runs[best];

  out.unique = true;
  for (int i = 0; i < n_starts; ++i) {
    for (int j = i + 1; j < n_starts; ++j) {
      double diff = 0.0;
      for (std::size_t t = 0; t < out.runs[i].solution.values.size(); ++t)
        diff = std::max(diff, std::abs(out.runs[i].solution.values[t] -
                                       out.runs[j].solution.values[t]));
      const double scale =
          std::max(out.runs[i].solution.sup_norm(), out.runs[j].solution.sup_norm());
      const double rel = scale > 0.0 ? diff / scale : diff;
      out.worst_rel_diff = std::max(out.worst_rel_diff, rel);
    }
    if (!out.runs[i].converged) out.unique = false;
    const auto expected = sign > 0 ? Classification::Positive : Classification::Negative;
    if (out.runs[i].classification != expected) out.unique = false;
  }
  if (out.worst_rel_diff > 1e-6) out.unique = false;
  return out;
}

namespace {

// Start for the truncated one-sided solves: t * principal_q scaled down until
// the energy is negative, which keeps descent away from the trivial critical
// point. sign selects the cone.
DiscreteFunction negative_energy_start(const Objective& obj,
                                       const DiscreteFunction& principal_q, int sign) {
  double t = 0.5;
  DiscreteFunction start = principal_q;
  for (int i = 0; i < 60; ++i) {
    for (std::size_t k = 0; k < start.values.size(); ++k)
      start.values[k] = sign * t * principal_q.values[k];
    if (obj.value(start) < 0.0) return start;
    t *= 0.5;
  }
  return start;  // caller copes with a nonnegative-energy start
}

ExtremalResult extremal_impl(const ProblemSpec& problem, std::shared_ptr<const Mesh> mesh,
                             const DiscreteFunction& seed, const DiscreteFunction& bar,
                             const DiscreteFunction& principal_q,
                             const SolverParams& params, double fixed_point_tol,
                             int max_outer, int sign) {
  ExtremalResult out;
  auto anchor = std::make_shared<DiscreteFunction>(seed);
  auto zeros = std::make_shared<DiscreteFunction>(DiscreteFunction::zeros(mesh));

  // The fixed-point test compares solutions nodewise at fixed_point_tol;
  // solve the inner problems well below that accuracy.
  SolverParams tight = params;
  tight.grad_tol = std::min(params.grad_tol, 1e-10);

  for (int outer = 0; outer < max_outer; ++outer) {
    out.outer_iterations = outer + 1;
    FunctionalSpec spec =
        sign > 0 ? FunctionalSpec::psihat_plus(problem, anchor, zeros)
                 : FunctionalSpec::psihat_minus(problem, zeros, anchor);
    auto ev = std::make_shared<EnergyEvaluator>(spec, mesh);
    Objective obj = make_objective(ev);
    out.last_solve = minimize(obj, negative_energy_start(obj, principal_q, sign), tight);

    double diff = 0.0;
    for (std::size_t i = 0; i < anchor->values.size(); ++i)
      diff = std::max(diff, std::abs(out.last_solve.solution.values[i] - anchor->values[i]));
    anchor = std::make_shared<DiscreteFunction>(out.last_solve.solution);
    if (diff <= fixed_point_tol) {
      out.fixed_point = true;
      break;
    }
  }
  out.extremal = *anchor;

  // Ordering chain: bar <= u* <= seed for the plus side, mirrored otherwise.
  double viol = 0.0;
  for (std::size_t i = 0; i < out.extremal.values.size(); ++i) {
    const double lo = sign > 0 ? bar.values[i] : seed.values[i];
    const double hi = sign > 0 ? seed.values[i] : bar.values[i];
    viol = std::max(viol, lo - out.extremal.values[i]);
    viol = std::max(viol, out.extremal.values[i] - hi);
  }
  out.worst_ordering_violation = viol;
  out.ordering_ok = viol <= 1e-8;
  return out;
}

}  // namespace

ExtremalResult extremal_positive(const ProblemSpec& problem,
                                 std::shared_ptr<const Mesh> mesh,
                                 const DiscreteFunction& u_seed,
                                 const DiscreteFunction& u_bar,
                                 const DiscreteFunction& principal_q,
                                 const SolverParams& params, double fixed_point_tol,
                                 int max_outer) {
  if (u_seed.interior_min() < 0.0)
    throw std::invalid_argument("extremal_positive: seed must be a nonnegative solution");
  return extremal_impl(problem, mesh, u_seed, u_bar, principal_q, params, fixed_point_tol,
                       max_outer, +1);
}

ExtremalResult extremal_negative(const ProblemSpec& problem,
                                 std::shared_ptr<const Mesh> mesh,
                                 const DiscreteFunction& v_seed,
                                 const DiscreteFunction& v_bar,
                                 const DiscreteFunction& principal_q,
                                 const SolverParams& params, double fixed_point_tol,
                                 int max_outer) {
  if (v_seed.interior_max() > 0.0)
    throw std::invalid_argument("extremal_negative: seed must be a nonpositive solution");
  return extremal_impl(problem, mesh, v_seed, v_bar, principal_q, params, fixed_point_tol,
                       max_outer, -1);
}

namespace {

int clip_to_interval(DiscreteFunction& u, const DiscreteFunction& lo,
                     const DiscreteFunction& hi, double& max_excursion) {
  int events = 0;
  for (std::size_t i = 0; i < u.values.size(); ++i) {
    if (u.values[i] < lo.values[i]) {
      max_excursion = std::max(max_excursion, lo.values[i] - u.values[i]);
      u.values[i] = lo.values[i];
      ++events;
    } else if (u.values[i] > hi.values[i]) {
      max_excursion = std::max(max_excursion, u.values[i] - hi.values[i]);
      u.values[i] = hi.values[i];
      ++events;
    }
  }
  return events;
}

double mass_l2_distance(const Mesh& m, const DiscreteFunction& a, const DiscreteFunction& b) {
  double d2 = 0.0;
  for (int i = 0; i < m.num_nodes(); ++i) {
    const double d = a.values[i] - b.values[i];
    d2 += m.lumped_mass[i] * d * d;
  }
  return std::sqrt(d2);
}

}  // namespace

MountainPassResult mountain_pass_nodal(const ProblemSpec& problem,
                                       std::shared_ptr<const Mesh> mesh,
                                       const DiscreteFunction& u_star,
                                       const DiscreteFunction& v_star,
                                       const Path& sphere_path,
                                       const SolverParams& params, int path_knots) {
  if (path_knots < 5) throw std::invalid_argument("mountain_pass_nodal: need >= 5 knots");
  if (u_star.sup_norm() <= kTrivialTol && v_star.sup_norm() <= kTrivialTol)
    throw std::invalid_argument("mountain_pass_nodal: degenerate order interval");
  if (sphere_path.knots.size() < 2)
    throw std::invalid_argument("mountain_pass_nodal: sphere path too short");

  auto u_star_p = std::make_shared<DiscreteFunction>(u_star);
  auto v_star_p = std::make_shared<DiscreteFunction>(v_star);
  auto ev = std::make_shared<EnergyEvaluator>(
      FunctionalSpec::psihat(problem, u_star_p, v_star_p), mesh);
  const Mesh& m = *mesh;

  MountainPassResult out;
  out.energy_u_star = ev->value(u_star);
  out.energy_v_star = ev->value(v_star);

  {  // Sampled ring check around u*: endpoints must sit below the ring.
    const DiscreteFunction* higher = out.energy_u_star >= out.energy_v_star ? &u_star : &v_star;
    DiscreteFunction gap = u_star;
    for (std::size_t i = 0; i < gap.values.size(); ++i) gap.values[i] -= v_star.values[i];
    const double w_gap = std::pow(sobolev_gradient_norm(gap, problem.p, ScalarField::constant(1.0)),
                                  1.0 / problem.p);
    const double rho = std::min(0.5, 0.1 * w_gap);
    Rng rng = Rng(params.seed).fork(0x5234);
    double ring_min = std::numeric_limits<double>::infinity();
    for (int s = 0; s < 50; ++s) {
      Rng sub = rng.fork(s);
      DiscreteFunction w = random_interior(mesh, sub, -1.0, 1.0);
      const double wn =
          std::pow(sobolev_gradient_norm(w, problem.p, ScalarField::constant(1.0)),
                   1.0 / problem.p);
      if (wn <= 0.0) continue;
      for (std::size_t i = 0; i < w.values.size(); ++i)
        w.values[i] = higher->values[i] + w.values[i] * rho / wn;
      ring_min = std::min(ring_min, ev->value(w));
    }
    out.ring_infimum = ring_min;
    out.ring_ok = std::max(out.energy_u_star, out.energy_v_star) < ring_min;
  }

  // Scale of the sphere segment: fit inside [v*, u*], then shrink until the
  // truncated energy is negative along it.
  double xi = 1.0;
  for (const auto& g : sphere_path.knots) {
    for (int i = 0; i < m.num_nodes(); ++i) {
      if (m.boundary[i] || std::abs(g.values[i]) < 1e-14) continue;
      const double bound =
          g.values[i] > 0.0 ? u_star.values[i] / g.values[i] : v_star.values[i] / g.values[i];
      if (bound > 0.0) xi = std::min(xi, 0.9 * bound);
    }
  }
  xi = std::max(xi, 1e-12);
  bool sphere_negative = false;
  for (int half = 0; half < 60 && !sphere_negative; ++half) {
    sphere_negative = true;
    for (const auto& g : sphere_path.knots) {
      DiscreteFunction w = g;
      for (double& v : w.values) v *= xi;
      if (ev->value(w) >= 0.0) {
        sphere_negative = false;
        break;
      }
    }
    if (!sphere_negative) xi *= 0.5;
  }
  out.path_scale = xi;

  // Assemble the path: v* -> xi*sphere -> u*.
  const int interior = path_knots - 2;
  const int side = std::max(1, interior / 4);
  const int nsphere = std::max(1, interior - 2 * side);
  std::vector<DiscreteFunction> knots;
  knots.reserve(path_knots);
  knots.push_back(v_star);
  auto scaled_sphere = [&](std::size_t j) {
    DiscreteFunction w = sphere_path.knots[j];
    for (double& v : w.values) v *= xi;
    return w;
  };
  const DiscreteFunction first_sphere = scaled_sphere(0);
  for (int k = 1; k <= side; ++k) {
    const double s = static_cast<double>(k) / (side + 1);
    DiscreteFunction w = DiscreteFunction::zeros(mesh);
    for (int i = 0; i < m.num_nodes(); ++i)
      w.values[i] = (1.0 - s) * v_star.values[i] + s * first_sphere.values[i];
    knots.push_back(std::move(w));
  }
  for (int k = 0; k < nsphere; ++k) {
    const std::size_t j =
        nsphere == 1 ? sphere_path.knots.size() / 2
                     : static_cast<std::size_t>(std::llround(
                           static_cast<double>(k) * (sphere_path.knots.size() - 1) /
                           (nsphere - 1)));
    knots.push_back(scaled_sphere(j));
  }
  const DiscreteFunction last_sphere = knots.back();
  for (int k = 1; k <= side; ++k) {
    const double s = static_cast<double>(k) / (side + 1);
    DiscreteFunction w = DiscreteFunction::zeros(mesh);
    for (int i = 0; i < m.num_nodes(); ++i)
      w.values[i] = (1.0 - s) * last_sphere.values[i] + s * u_star.values[i];
    knots.push_back(std::move(w));
  }
  knots.push_back(u_star);
  const int K = static_cast<int>(knots.size());
  for (auto& g : knots) out.clip_events += clip_to_interval(g, v_star, u_star, out.max_excursion);

  std::vector<double> energy(K);
  for (int k = 0; k < K; ++k) energy[k] = ev->value(knots[k]);

  auto respace = [&]() {
    std::vector<double> len(K, 0.0);
    for (int k = 1; k < K; ++k)
      len[k] = len[k - 1] + mass_l2_distance(m, knots[k], knots[k - 1]);
    if (len.back() <= 0.0) return;
    std::vector<DiscreteFunction> fresh(knots.size());
    fresh.front() = knots.front();
    fresh.back() = knots.back();
    int seg = 1;
    for (int k = 1; k + 1 < K; ++k) {
      const double target = len.back() * static_cast<double>(k) / (K - 1);
      while (seg < K - 1 && len[seg] < target) ++seg;
      const double t0 = len[seg - 1], t1 = len[seg];
      const double w = t1 > t0 ? (target - t0) / (t1 - t0) : 0.0;
      DiscreteFunction g = DiscreteFunction::zeros(mesh);
      for (int i = 0; i < m.num_nodes(); ++i)
        g.values[i] = (1.0 - w) * knots[seg - 1].values[i] + w * knots[seg].values[i];
      fresh[k] = std::move(g);
    }
    knots = std::move(fresh);
    for (int k = 0; k < K; ++k) energy[k] = ev->value(knots[k]);
  };

  SolverReport rep;
  double step = 1.0;
  int it = 0;
  bool converged = false;
  for (; it < params.max_iters; ++it) {
    int mx = 1;
    for (int k = 2; k + 1 < K; ++k)
      if (energy[k] > energy[mx]) mx = k;

    EnergyGradient eg = ev->eval(knots[mx]);
    const double gnorm = interior_sup(m, eg.gradient);
    rep.trace.emplace_back(energy[mx], gnorm);
    if (gnorm <= params.grad_tol) {
      converged = true;
      break;
    }

    // Projected (clipped) Armijo step on the max knot.
    bool accepted = false;
    double s = std::min(step * 2.0, 1e6);
    for (int bt = 0; bt < 60; ++bt) {
      DiscreteFunction w = knots[mx];
      for (int i = 0; i < m.num_nodes(); ++i)
        if (!m.boundary[i]) w.values[i] -= s * eg.gradient[i] / m.lumped_mass[i];
      out.clip_events += clip_to_interval(w, v_star, u_star, out.max_excursion);
      double pred = 0.0;  // <g, w - u>; negative along the projected direction
      for (int i = 0; i < m.num_nodes(); ++i)
        pred += eg.gradient[i] * (w.values[i] - knots[mx].values[i]);
      const double wv = ev->value(w);
      if (pred < 0.0 && wv <= energy[mx] + params.armijo_c * pred) {
        knots[mx] = std::move(w);
        energy[mx] = wv;
        step = s;
        accepted = true;
        break;
      }
      s *= params.backtrack;
    }
    if (!accepted) break;
    respace();
  }

  int mx = 1;
  for (int k = 2; k + 1 < K; ++k)
    if (energy[k] > energy[mx]) mx = k;
  rep.solution = knots[mx];
  rep.energy = energy[mx];
  rep.grad_norm = interior_sup(m, ev->eval(knots[mx]).gradient);
  rep.converged = converged || rep.grad_norm <= params.grad_tol;
  rep.iterations = it;
  rep.classification = classify(rep.solution);
  out.knot_energies = energy;
  out.report = std::move(rep);

  const double sup = out.report.solution.sup_norm();
  auto near = [&](const DiscreteFunction& ref) {
    double d = 0.0;
    for (std::size_t i = 0; i < ref.values.size(); ++i)
      d = std::max(d, std::abs(out.report.solution.values[i] - ref.values[i]));
    return d <= 1e-6 * std::max(1.0, ref.sup_norm());
  };
  out.found_nodal = sup > kTrivialTol && !near(u_star) && !near(v_star) &&
                    out.report.classification == Classification::Nodal;
  return out;
}

NonexistenceResult nonexistence_scan(const ProblemSpec& problem,
                                     std::shared_ptr<const Mesh> mesh,
                                     const DiscreteFunction& principal_q,
                                     const SolverParams& params, int n_starts) {
  if (n_starts < 1) throw std::invalid_argument("nonexistence_scan: need n_starts >= 1");
  auto ev = std::make_shared<EnergyEvaluator>(FunctionalSpec::phi_free(problem), mesh);
  Objective obj = make_objective(ev);

  // The verdict compares sup-norms against the 1e-6 triviality cut; descent
  // toward the trivial point parks at amplitude ~grad_tol/(h gap), so the
  // scan needs a much tighter residual target than the solve default.
  SolverParams tight = params;
  tight.grad_tol = std::min(params.grad_tol, 1e-10);

  NonexistenceResult out;
  out.n_starts = n_starts;
  Rng root(params.seed);
  for (int k = 0; k < n_starts; ++k) {
    DiscreteFunction start = DiscreteFunction::zeros(mesh);
    switch (k) {
      case 0:  // structured one-signed starts along the principal direction
      case 1: {
        const double t = k == 0 ? 0.5 : -0.5;
        for (int i = 0; i < mesh->num_nodes(); ++i)
          start.values[i] = t * principal_q.values[i];
        break;
      }
      case 2:
      case 3: {  // structured sign-changing start
        const Extent& ex = mesh->extent;
        const double t = k == 2 ? 0.5 : -0.5;
        start = DiscreteFunction::interpolate(mesh, [&](double x, double y) {
          double v = std::sin(2.0 * M_PI * (x - ex.x0) / (ex.x1 - ex.x0));
          if (mesh->dim == 2) v *= std::sin(M_PI * (y - ex.y0) / (ex.y1 - ex.y0));
          return t * v;
        });
        break;
      }
      default: {
        Rng rng = root.fork(k);
        start = random_interior(mesh, rng, -1.0, 1.0);
        break;
      }
    }
    SolverReport rep = minimize(obj, start, tight);
    out.sup_norms.push_back(rep.solution.sup_norm());
    out.worst_sup_norm = std::max(out.worst_sup_norm, out.sup_norms.back());
    out.runs.push_back(std::move(rep));
  }
  out.all_trivial = out.worst_sup_norm <= kTrivialTol;
  return out;
}

}  // namespace pqvar
