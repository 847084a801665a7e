#include "pqvar/spectrum.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "pqvar/energy.hpp"
#include "pqvar/powers.hpp"
#include "pqvar/stiffness.hpp"

namespace pqvar {

namespace {

// Numerator N(u) = int a |grad u|^r and its nodal gradient (via the
// RayleighNumerator evaluator: dN_i = r <A_r^a(u), phi_i>).
struct SphereWork {
  std::shared_ptr<const Mesh> mesh;
  double r;
  ScalarField a;
  EnergyEvaluator numerator;

  SphereWork(std::shared_ptr<const Mesh> m, double rr, const ScalarField& aa)
      : mesh(m), r(rr), a(aa), numerator(FunctionalSpec::rayleigh_numerator(rr, aa), m) {}

  // Per-element coefficients of the linearized operator a |grad u|^(r-2),
  // floored away from the degeneracy at flat spots.
  std::vector<double> linearized_coefficients(const DiscreteFunction& u) const {
    const Mesh& m = *mesh;
    std::vector<double> coef(m.num_elements());
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
    for (int e = 0; e < m.num_elements(); ++e) {
      double wa = 0.0;
      for (int k = 0; k < m.quad_per_element(); ++k)
        wa += m.quad_weight(e, k) * a.eval(m, e, k);
      coef[e] = wa * std::pow(std::max(gnorm[e], floor), r - 2.0);
    }
    return coef;
  }

  // d/du_i of int |u|^r, zeroed on the boundary.
  std::vector<double> denominator_gradient(const DiscreteFunction& u) const {
    const Mesh& m = *mesh;
    std::vector<double> g(m.num_nodes(), 0.0);
    for (int e = 0; e < m.num_elements(); ++e) {
      const auto& el = m.elements[e];
      for (int k = 0; k < m.quad_per_element(); ++k) {
        double x = 0.0;
        for (int v = 0; v < m.verts_per_element(); ++v)
          x += m.quad_bary[k][v] * u.values[el[v]];
        const double w = m.quad_weight(e, k) * r * spow(x, r - 1.0);
        if (w != 0.0)
          for (int v = 0; v < m.verts_per_element(); ++v)
            g[el[v]] += w * m.quad_bary[k][v];
      }
    }
    for (int i = 0; i < m.num_nodes(); ++i)
      if (m.boundary[i]) g[i] = 0.0;
    return g;
  }

  // Weak-form eigen-residual at (u, lambda), u assumed L^r-normalized.
  std::vector<double> residual(const DiscreteFunction& u, double lambda) const {
    auto eg = numerator.eval(u);
    auto dd = denominator_gradient(u);
    std::vector<double> res(eg.gradient.size());
    for (std::size_t i = 0; i < res.size(); ++i)
      res[i] = (eg.gradient[i] - lambda * dd[i]) / r;
    return res;
  }
};

double sup_norm(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

void normalize_lr(DiscreteFunction& u, double r) {
  const double nrm = lr_norm(u, r);
  if (nrm <= 0.0) throw std::runtime_error("normalize_lr: zero function");
  for (double& v : u.values) v /= nrm;
}

// Sign-changing interpolant used only to nudge degenerate path knots.
DiscreteFunction second_mode_nudge(const std::shared_ptr<const Mesh>& mesh) {
  const Extent& ex = mesh->extent;
  const double lx = ex.x1 - ex.x0, ly = ex.y1 - ex.y0;
  return DiscreteFunction::interpolate(mesh, [&](double x, double y) {
    double v = std::sin(2.0 * M_PI * (x - ex.x0) / lx);
    if (mesh->dim == 2) v *= std::sin(M_PI * (y - ex.y0) / ly);
    return v;
  });
}

// Projected descent driver on the L^r sphere: preconditioned residual
// direction, Barzilai-Borwein trial steps, Armijo acceptance on the
// numerator while its decrease is measurable, and a nonmonotone
// residual-sup watchdog once the value comparison hits the rounding floor
// (near a critical point the first-order decrease of the quotient falls
// below eps * N, while the residual stays well conditioned to ~1e-12).
class SphereIteration {
public:
  SphereIteration(const SphereWork& work, const SpectrumParams& params)
      : work_(work), params_(params) {}

  double residual_sup(const DiscreteFunction& u, double num) {
    if (!resid_valid_) {
      resid_ = work_.residual(u, num);
      rsup_ = sup_norm(resid_);
      resid_valid_ = true;
    }
    return rsup_;
  }

  // One accepted step; u and num are updated in place. False on hard stall.
  bool advance(DiscreteFunction& u, double& num) {
    const Mesh& m = *work_.mesh;
    residual_sup(u, num);

    if (!precond_ || accepts_since_rebuild_ >= 25) {
      precond_ = std::make_unique<StiffnessPreconditioner>(
          work_.mesh, work_.linearized_coefficients(u));
      accepts_since_rebuild_ = 0;
    }
    std::vector<double> dir;
    precond_->apply(resid_, dir);
    double decrease = 0.0;
    for (int i = 0; i < m.num_nodes(); ++i)
      if (!m.boundary[i]) decrease += resid_[i] * dir[i];
    if (decrease <= 0.0) return false;

    double trial = std::min(step_ * 2.0, 1e8);
    if (!prev_u_.empty()) {
      double ss = 0.0, sy = 0.0;
      for (int i = 0; i < m.num_nodes(); ++i) {
        if (m.boundary[i]) continue;
        const double du = u.values[i] - prev_u_[i];
        ss += m.lumped_mass[i] * du * du;
        sy += du * (resid_[i] - prev_resid_[i]);
      }
      if (sy > 0.0) {
        const double bb = ss / sy;
        if (bb > 1e-13 && bb < 1e8) trial = bb;
      }
    }

    // Two-pass acceptance per iteration: Armijo on the numerator while the
    // required decrease is measurable against the evaluation rounding floor,
    // otherwise a nonmonotone residual watchdog (first trial may regress to
    // the worst of the recent window, deeper backtracks must improve).
    const double value_noise = 1e-14 * (1.0 + std::abs(num));
    const double watchdog = worst_recent();

    auto propose = [&](double s, DiscreteFunction& w, double& nv) {
      w = u;
      for (int i = 0; i < m.num_nodes(); ++i)
        if (!m.boundary[i]) w.values[i] -= s * dir[i];
      const double nrm = lr_norm(w, work_.r);
      if (nrm <= 1e-14) return false;
      for (double& v : w.values) v /= nrm;
      nv = work_.numerator.value(w);
      return true;
    };
    auto commit = [&](DiscreteFunction&& w, double nv, std::vector<double>&& rw,
                      double rws, double s) {
      prev_u_ = u.values;
      prev_resid_ = resid_;
      u = std::move(w);
      num = nv;
      resid_ = std::move(rw);
      rsup_ = rws;
      push_history(rsup_);
      step_ = s;
      ++accepts_since_rebuild_;
    };

    double s = trial;
    for (int bt = 0; bt < 70; ++bt, s *= params_.backtrack) {
      if (params_.armijo_c * s * decrease < value_noise) break;  // not certifiable
      DiscreteFunction w;
      double nv;
      if (!propose(s, w, nv)) continue;
      if (nv <= num - params_.armijo_c * s * decrease) {
        auto rw = work_.residual(w, nv);
        const double rws = sup_norm(rw);
        commit(std::move(w), nv, std::move(rw), rws, s);
        return true;
      }
    }
    s = trial;
    for (int bt = 0; bt < 70; ++bt, s *= params_.backtrack) {
      DiscreteFunction w;
      double nv;
      if (!propose(s, w, nv)) continue;
      if (nv > num + value_noise && bt > 0) continue;  // energy blow-up
      auto rw = work_.residual(w, nv);
      const double rws = sup_norm(rw);
      if (bt == 0 ? rws < watchdog : rws < rsup_) {
        commit(std::move(w), nv, std::move(rw), rws, s);
        return true;
      }
    }
    return false;
  }

private:
  double worst_recent() const {
    double w = rsup_;
    for (double h : history_) w = std::max(w, h);
    return w;
  }
  void push_history(double rs) {
    history_[hist_pos_++ % history_.size()] = rs;
  }

  const SphereWork& work_;
  const SpectrumParams& params_;
  std::unique_ptr<StiffnessPreconditioner> precond_;
  int accepts_since_rebuild_ = 0;
  std::vector<double> resid_, prev_u_, prev_resid_;
  std::array<double, 10> history_ = {};
  std::size_t hist_pos_ = 0;
  double rsup_ = 0.0;
  double step_ = 1.0;
  bool resid_valid_ = false;

public:
  // Latest residual bookkeeping for callers updating u externally.
  void invalidate() { resid_valid_ = false; }
};

}  // namespace

EigenPair principal_eigenpair(std::shared_ptr<const Mesh> mesh, double r,
                              const ScalarField& a, const SpectrumParams& params) {
  if (!(r > 1.0)) throw std::invalid_argument("principal_eigenpair: need r > 1");
  if (!(a.min_on_quadrature(*mesh) > 0.0))
    throw std::invalid_argument("principal_eigenpair: weight must be positive");

  SphereWork work(mesh, r, a);

  DiscreteFunction u = DiscreteFunction::interpolate(mesh, [](double, double) { return 1.0; });
  normalize_lr(u, r);

  EigenPair pair;
  pair.r = r;
  pair.a = a;

  double num = work.numerator.value(u);
  SphereIteration iteration(work, params);
  // The BB steps are nonmonotone; remember the lowest-residual iterate.
  DiscreteFunction best = u;
  double best_num = num, best_rs = std::numeric_limits<double>::infinity();
  int it = 0;
  int since_improved = 0;
  for (; it < params.max_iters; ++it) {
    const double rs = iteration.residual_sup(u, num);
    if (rs < best_rs) {
      best_rs = rs;
      best = u;
      best_num = num;
      since_improved = 0;
    } else if (++since_improved > 300) {
      break;  // plateau; the polish phase below restarts from the best point
    }
    if (best_rs <= params.tol) {
      pair.converged = true;
      break;
    }
    if (!iteration.advance(u, num)) break;  // hard stall
  }
  pair.iterations = it;
  u = std::move(best);
  num = best_num;
  pair.residual_norm = best_rs;

  // The principal eigenfunction is one-signed; normalize the sign and polish
  // (nodal |u| can differ from the limit by sign flips only).
  for (double& v : u.values) v = std::abs(v);
  normalize_lr(u, r);
  num = work.numerator.value(u);
  SphereIteration polish(work, params);
  best_rs = polish.residual_sup(u, num);
  best = u;
  best_num = num;
  for (int k = 0; k < 1000 && best_rs > params.tol; ++k) {
    if (!polish.advance(u, num)) break;
    const double rs = polish.residual_sup(u, num);
    if (rs < best_rs) {
      best_rs = rs;
      best = u;
      best_num = num;
    }
  }
  pair.residual_norm = best_rs;
  pair.converged = best_rs <= params.tol;

  pair.lambda_hat = best_num;
  pair.eigenfunction = std::move(best);
  return pair;
}

double eigen_residual(const EigenPair& pair) {
  SphereWork work(pair.eigenfunction.mesh, pair.r, pair.a);
  return sup_norm(work.residual(pair.eigenfunction, pair.lambda_hat));
}

LinearEigenSolution linear_eigenpairs(std::shared_ptr<const Mesh> mesh,
                                      const ScalarField& a, int count) {
  const Mesh& m = *mesh;
  std::vector<int> interior;
  interior.reserve(m.num_nodes());
  std::vector<int> slot(m.num_nodes(), -1);
  for (int i = 0; i < m.num_nodes(); ++i)
    if (!m.boundary[i]) {
      slot[i] = static_cast<int>(interior.size());
      interior.push_back(i);
    }
  const int nd = static_cast<int>(interior.size());

  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(nd, nd);
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(nd, nd);
  for (int e = 0; e < m.num_elements(); ++e) {
    const auto& el = m.elements[e];
    double wa = 0.0;
    for (int k = 0; k < m.quad_per_element(); ++k)
      wa += m.quad_weight(e, k) * a.eval(m, e, k);
    for (int vi = 0; vi < m.verts_per_element(); ++vi) {
      const int i = slot[el[vi]];
      if (i < 0) continue;
      for (int vj = 0; vj < m.verts_per_element(); ++vj) {
        const int j = slot[el[vj]];
        if (j < 0) continue;
        K(i, j) += wa * (m.grads[e][vi][0] * m.grads[e][vj][0] +
                         m.grads[e][vi][1] * m.grads[e][vj][1]);
        double mm = 0.0;
        for (int k = 0; k < m.quad_per_element(); ++k)
          mm += m.quad_weight(e, k) * m.quad_bary[k][vi] * m.quad_bary[k][vj];
        M(i, j) += mm;
      }
    }
  }

  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> solver(K, M);
  if (solver.info() != Eigen::Success)
    throw std::runtime_error("linear_eigenpairs: dense eigensolve failed");

  LinearEigenSolution out;
  count = std::min(count, nd);
  for (int k = 0; k < count; ++k) {
    out.values.push_back(solver.eigenvalues()(k));
    DiscreteFunction v = DiscreteFunction::zeros(mesh);
    for (int i = 0; i < nd; ++i) v.values[interior[i]] = solver.eigenvectors()(i, k);
    normalize_lr(v, 2.0);
    out.vectors.push_back(std::move(v));
  }
  return out;
}

SecondEigenResult second_eigenvalue(std::shared_ptr<const Mesh> mesh, double r,
                                    const ScalarField& a, int path_knots,
                                    const SpectrumParams& params,
                                    const EigenPair* principal) {
  if (path_knots < 3) throw std::invalid_argument("second_eigenvalue: need >= 3 path knots");

  EigenPair local_principal;
  if (!principal) {
    local_principal = principal_eigenpair(mesh, r, a, params);
    principal = &local_principal;
  }
  const DiscreteFunction& u1 = principal->eigenfunction;

  SphereWork work(mesh, r, a);
  const DiscreteFunction nudge = second_mode_nudge(mesh);

  SecondEigenResult out;
  out.linear_oracle = std::numeric_limits<double>::quiet_NaN();
  if (r == 2.0) out.linear_oracle = linear_eigenpairs(mesh, a, 2).values.back();

  // Normalized linear interpolation between -u1 and +u1; near-zero knots are
  // nudged toward the second mode before normalizing.
  const int K = path_knots;
  out.path.knots.resize(K);
  for (int k = 0; k < K; ++k) {
    const double s = static_cast<double>(k) / (K - 1);
    DiscreteFunction g = DiscreteFunction::zeros(mesh);
    for (std::size_t i = 0; i < g.values.size(); ++i)
      g.values[i] = (1.0 - s) * (-u1.values[i]) + s * u1.values[i];
    if (lr_norm(g, r) < 1e-8)
      for (std::size_t i = 0; i < g.values.size(); ++i) g.values[i] += 1e-6 * nudge.values[i];
    normalize_lr(g, r);
    out.path.knots[k] = std::move(g);
  }
  out.path.knots.front() = u1;
  for (double& v : out.path.knots.front().values) v = -v;
  out.path.knots.back() = u1;

  auto respace = [&](std::vector<DiscreteFunction>& knots) {
    // Cumulative lumped-mass L2 arclength of the polyline.
    const Mesh& m = *mesh;
    std::vector<double> len(knots.size(), 0.0);
    for (std::size_t k = 1; k < knots.size(); ++k) {
      double d2 = 0.0;
      for (int i = 0; i < m.num_nodes(); ++i) {
        const double d = knots[k].values[i] - knots[k - 1].values[i];
        d2 += m.lumped_mass[i] * d * d;
      }
      len[k] = len[k - 1] + std::sqrt(d2);
    }
    if (len.back() <= 0.0) return;
    std::vector<DiscreteFunction> fresh(knots.size());
    fresh.front() = knots.front();
    fresh.back() = knots.back();
    std::size_t seg = 1;
    for (std::size_t k = 1; k + 1 < knots.size(); ++k) {
      const double target = len.back() * static_cast<double>(k) / (knots.size() - 1);
      while (seg < knots.size() - 1 && len[seg] < target) ++seg;
      const double t0 = len[seg - 1], t1 = len[seg];
      const double w = t1 > t0 ? (target - t0) / (t1 - t0) : 0.0;
      DiscreteFunction g = DiscreteFunction::zeros(mesh);
      for (int i = 0; i < m.num_nodes(); ++i)
        g.values[i] = (1.0 - w) * knots[seg - 1].values[i] + w * knots[seg].values[i];
      if (lr_norm(g, r) < 1e-8)
        for (int i = 0; i < m.num_nodes(); ++i) g.values[i] += 1e-6 * nudge.values[i];
      normalize_lr(g, r);
      fresh[k] = std::move(g);
    }
    knots = std::move(fresh);
  };

  std::vector<double> energy(K);
  auto recompute = [&]() {
    for (int k = 0; k < K; ++k) energy[k] = work.numerator.value(out.path.knots[k]);
  };
  recompute();

  double prev_max = std::numeric_limits<double>::infinity();
  int stall = 0;
  int it = 0;
  for (; it < params.max_iters; ++it) {
    int m = 1;
    for (int k = 2; k + 1 < K; ++k)
      if (energy[k] > energy[m]) m = k;

    // Fresh iteration state per step: re-spacing moves the knots, so BB
    // memory across steps would pair points of different knots.
    SphereIteration knot_it(work, params);
    const double rs = knot_it.residual_sup(out.path.knots[m], energy[m]);
    if (rs <= params.tol) {
      out.converged = true;
      break;
    }
    knot_it.advance(out.path.knots[m], energy[m]);

    respace(out.path.knots);
    recompute();

    const double cur_max = *std::max_element(energy.begin() + 1, energy.end() - 1);
    if (std::abs(cur_max - prev_max) <= 1e-12 * std::max(1.0, std::abs(cur_max))) {
      if (++stall > 100) {
        out.converged = true;  // max stabilized; knot residual may lag behind
        break;
      }
    } else {
      stall = 0;
    }
    prev_max = cur_max;
  }
  out.iterations = it;

  int m = 1;
  for (int k = 2; k + 1 < K; ++k)
    if (energy[k] > energy[m]) m = k;
  out.max_knot = m;
  out.lambda_hat_2 = energy[m];
  return out;
}

}  // namespace pqvar
