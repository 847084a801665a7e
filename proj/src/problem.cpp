#include "pqvar/problem.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "pqvar/powers.hpp"

namespace pqvar {

double NonlinearitySpec::f(double x) const {
  switch (family) {
    case Family::Zero:
      return 0.0;
    case Family::ResonantPower:
    case Family::SubcriticalPower:
      return mu * spow(x, p - 1.0) - c * spow(x, tau - 1.0);
  }
  return 0.0;
}

double NonlinearitySpec::F(double x) const {
  switch (family) {
    case Family::Zero:
      return 0.0;
    case Family::ResonantPower:
    case Family::SubcriticalPower:
      return mu * apow(x, p) / p - c * apow(x, tau) / tau;
  }
  return 0.0;
}

bool NonlinearitySpec::declares(Hypothesis h) const {
  return std::find(declared.begin(), declared.end(), h) != declared.end();
}

NonlinearitySpec builtin_nonlinearity(const std::string& name, double mu, double c,
                                      double tau, double q, double p) {
  NonlinearitySpec spec;
  if (name == "zero") {
    spec.family = Family::Zero;
    return spec;
  }
  if (name == "resonant_power")
    spec.family = Family::ResonantPower;
  else if (name == "subcritical_power")
    spec.family = Family::SubcriticalPower;
  else
    throw std::invalid_argument("builtin_nonlinearity: unknown family '" + name + "'");

  if (!(c > 0.0)) throw std::invalid_argument("builtin_nonlinearity: need c > 0");
  if (!(tau > q && tau < p))
    throw std::invalid_argument("builtin_nonlinearity: need tau in (q, p)");
  if (!(mu >= 0.0)) throw std::invalid_argument("builtin_nonlinearity: need mu >= 0");
  spec.mu = mu;
  spec.c = c;
  spec.tau = tau;
  spec.p = p;
  spec.declared = {Hypothesis::H1, Hypothesis::H1DoublePrime};
  if (q == 2.0) spec.declared.push_back(Hypothesis::H1Prime);
  return spec;
}

void ProblemSpec::validate(const Mesh& mesh) const {
  if (!(q > 1.0)) throw std::invalid_argument("ProblemSpec: q must exceed 1");
  if (!(q < p)) throw std::invalid_argument("ProblemSpec: q must be strictly below p");
  if (!(lambda > 0.0)) throw std::invalid_argument("ProblemSpec: lambda must be positive");
  const double floor = std::max(declared_c1, 0.0);
  const double m1 = a1.min_on_quadrature(mesh);
  const double m2 = a2.min_on_quadrature(mesh);
  if (!(m1 > 0.0) || m1 < floor)
    throw std::invalid_argument("ProblemSpec: a1 violates the H0 lower bound");
  if (!(m2 > 0.0) || m2 < floor)
    throw std::invalid_argument("ProblemSpec: a2 violates the H0 lower bound");
  if (f.family != Family::Zero) {
    if (f.p != p) throw std::invalid_argument("ProblemSpec: f was built for a different p");
    if (!(f.tau > q && f.tau < p))
      throw std::invalid_argument("ProblemSpec: f.tau outside (q, p)");
  }
}

const HypothesisItem* HypothesisReport::find(const std::string& name) const {
  for (const auto& it : items)
    if (it.name == name) return &it;
  return nullptr;
}

bool HypothesisReport::any_failure() const {
  for (const auto& it : items)
    if (it.verdict == Verdict::Fail) return true;
  return false;
}

namespace {

std::vector<double> log_spaced(double lo, double hi, int count) {
  std::vector<double> xs(count);
  const double llo = std::log(lo), lhi = std::log(hi);
  for (int i = 0; i < count; ++i)
    xs[i] = std::exp(llo + (lhi - llo) * i / (count - 1));
  return xs;
}

HypothesisItem check_h0(const ProblemSpec& spec, const Mesh& mesh) {
  HypothesisItem item;
  item.name = "H0";
  double worst = std::numeric_limits<double>::infinity();
  for (int e = 0; e < mesh.num_elements(); ++e) {
    for (int k = 0; k < mesh.quad_per_element(); ++k) {
      const double v = std::min(spec.a1.eval(mesh, e, k), spec.a2.eval(mesh, e, k));
      if (v < worst) {
        worst = v;
        item.worst_z = mesh.quad_point(e, k);
      }
    }
  }
  const double floor = std::max(spec.declared_c1, 0.0);
  item.margin = worst - floor;
  item.verdict = (worst > 0.0 && worst >= floor) ? Verdict::Pass : Verdict::Fail;
  item.note = "min weight over quadrature points vs declared c1";
  return item;
}

}  // namespace

HypothesisReport check_hypotheses(const ProblemSpec& spec, const Mesh& mesh,
                                  const SpectralContext& ctx,
                                  const HypothesisCheckOptions& opts) {
  HypothesisReport report;
  report.items.push_back(check_h0(spec, mesh));

  const auto& nl = spec.f;
  const std::vector<double> mags = log_spaced(opts.small_x, opts.x_max, opts.x_samples);

  {  // Caratheodory preamble: f(., 0) = 0
    HypothesisItem item;
    item.name = "H1(f0)";
    const double v = std::abs(nl.f(0.0));
    item.margin = -v;
    item.verdict = v == 0.0 ? Verdict::Pass : Verdict::Fail;
    item.note = "f(z, 0) = 0";
    report.items.push_back(item);
  }

  {  // H1(i): boundedness on bounded x-ranges
    HypothesisItem item;
    item.name = "H1(i)";
    item.verdict = Verdict::Pass;
    double worst = 0.0;
    for (double m : mags)
      for (double s : {-1.0, 1.0}) {
        const double v = std::abs(nl.f(s * m));
        if (!std::isfinite(v)) {
          item.verdict = Verdict::Fail;
          item.worst_x = s * m;
        } else if (v > worst) {
          worst = v;
          item.worst_x = s * m;
        }
      }
    item.margin = worst;
    item.note = "finite on the sampling box";
    report.items.push_back(item);
  }

  {  // H1(ii): limsup f(x) / (|x|^(p-2) x) <= lambda1(p, a1)
    HypothesisItem item;
    item.name = "H1(ii)";
    const double xl = mags[mags.size() - 1], xp = mags[mags.size() - 2];
    double last = -std::numeric_limits<double>::infinity(), prev = last;
    for (double s : {-1.0, 1.0}) {
      last = std::max(last, nl.f(s * xl) / (std::pow(xl, spec.p - 2.0) * (s * xl)));
      prev = std::max(prev, nl.f(s * xp) / (std::pow(xp, spec.p - 2.0) * (s * xp)));
    }
    if (std::isnan(ctx.lambda1_p_a1)) {
      item.verdict = Verdict::Inconclusive;
      item.note = "no spectral context for lambda1(p, a1)";
    } else {
      item.margin = ctx.lambda1_p_a1 - last;
      item.worst_x = xl;
      if (last <= ctx.lambda1_p_a1 + 1e-9)
        item.verdict = Verdict::Pass;
      else if (last > prev + 1e-12)
        item.verdict = Verdict::Fail;  // above the bound and still growing
      else
        item.verdict = Verdict::Inconclusive;
      item.note = "limit slope sampled at the largest |x|";
    }
    report.items.push_back(item);
  }

  {  // H1(iii): (f x - p F) / |x|^tau -> +inf (sampled: nondecreasing and positive)
    HypothesisItem item;
    item.name = "H1(iii)";
    const double tau =
        nl.family == Family::Zero ? 0.5 * (spec.q + spec.p) : nl.tau;
    const int tail = 5;
    bool monotone = true;
    double lastv = std::numeric_limits<double>::infinity();
    for (double s : {-1.0, 1.0}) {
      double prevv = -std::numeric_limits<double>::infinity();
      for (int i = static_cast<int>(mags.size()) - tail; i < static_cast<int>(mags.size()); ++i) {
        const double x = s * mags[i];
        const double v = (nl.f(x) * x - spec.p * nl.F(x)) / std::pow(std::abs(x), tau);
        if (v < prevv - 1e-9 * std::max(1.0, std::abs(prevv))) monotone = false;
        prevv = v;
      }
      lastv = std::min(lastv, prevv);
    }
    item.margin = lastv;
    item.worst_x = mags.back();
    if (lastv > 0.0 && monotone)
      item.verdict = Verdict::Pass;
    else if (lastv <= 0.0)
      item.verdict = Verdict::Fail;
    else
      item.verdict = Verdict::Inconclusive;
    item.note = "tail trend of (f x - p F)/|x|^tau";
    report.items.push_back(item);
  }

  {  // H1(iv): f(x) / (|x|^(q-2) x) -> 0 as x -> 0
    HypothesisItem item;
    item.name = "H1(iv)";
    auto ratio = [&](double x) {
      return std::abs(nl.f(x)) / std::pow(std::abs(x), spec.q - 1.0);
    };
    const double r_small = std::max(ratio(mags[0]), ratio(-mags[0]));
    const int decade = std::min<int>(10, static_cast<int>(mags.size()) - 1);
    const double r_big = std::max(ratio(mags[decade]), ratio(-mags[decade]));
    item.margin = -r_small;
    item.worst_x = mags[0];
    if (r_small <= 1e-12 || r_small <= 0.5 * r_big)
      item.verdict = Verdict::Pass;
    else if (r_small > r_big * (1.0 + 1e-9) + 1e-12)
      item.verdict = Verdict::Fail;  // ratio grows as x -> 0
    else
      item.verdict = Verdict::Inconclusive;
    item.note = "|f| / |x|^(q-1) trend toward 0";
    report.items.push_back(item);
  }

  {  // H1(v): inf of f(x) x over |x| >= 1 must be positive
    HypothesisItem item;
    item.name = "H1(v)";
    double worst = std::numeric_limits<double>::infinity(), at = 1.0;
    for (double m : mags) {
      if (m < 1.0) continue;
      for (double s : {-1.0, 1.0}) {
        const double v = nl.f(s * m) * (s * m);
        if (v < worst) {
          worst = v;
          at = s * m;
        }
      }
    }
    {
      // s = 1 itself is always sampled so the witness lands on it in ties.
      const double v = std::min(nl.f(1.0) * 1.0, nl.f(-1.0) * -1.0);
      if (v <= worst) {
        worst = v;
        at = 1.0;
      }
    }
    item.margin = worst;
    item.worst_x = at;
    item.verdict = worst > 0.0 ? Verdict::Pass : Verdict::Fail;
    item.note = "inf f(x) x over sampled |x| >= 1 (s = 1)";
    report.items.push_back(item);
  }

  if (spec.q == 2.0) {  // H1'(vi): f + xi |x|^(p-2) x nondecreasing on compacts
    HypothesisItem item;
    item.name = "H1'(vi)";
    const double rho = 10.0;
    double xi_needed = 0.0;
    bool feasible = true;
    const int m = 400;
    for (int i = 0; i < m; ++i) {
      const double x = -rho + 2.0 * rho * (i + 0.5) / m;
      if (std::abs(x) < 1e-6) continue;
      const double h = 1e-5 * std::max(1.0, std::abs(x));
      const double slope = (nl.f(x + h) - nl.f(x - h)) / (2.0 * h);
      if (slope < 0.0) {
        const double comp = (spec.p - 1.0) * std::pow(std::abs(x), spec.p - 2.0);
        if (comp <= 0.0) {
          feasible = false;
          item.worst_x = x;
          break;
        }
        xi_needed = std::max(xi_needed, -slope / comp);
      }
    }
    item.margin = -xi_needed;
    item.verdict = feasible && xi_needed < 1e12 ? Verdict::Pass : Verdict::Fail;
    item.note = "estimated compensator xi on [-10, 10]";
    report.items.push_back(item);
  }

  {  // H1''(vi): f(x) x <= lambda1(p, a1) |x|^p pointwise
    HypothesisItem item;
    item.name = "H1''(vi)";
    if (std::isnan(ctx.lambda1_p_a1)) {
      item.verdict = Verdict::Inconclusive;
      item.note = "no spectral context for lambda1(p, a1)";
    } else {
      double worst = std::numeric_limits<double>::infinity(), at = 0.0;
      for (double m : mags)
        for (double s : {-1.0, 1.0}) {
          const double x = s * m;
          const double gap = ctx.lambda1_p_a1 * std::pow(m, spec.p) - nl.f(x) * x;
          if (gap < worst) {
            worst = gap;
            at = x;
          }
        }
      item.margin = worst;
      item.worst_x = at;
      item.verdict = worst >= -1e-10 ? Verdict::Pass : Verdict::Fail;
      item.note = "pointwise sign bound on the sampling grid";
    }
    report.items.push_back(item);
  }

  return report;
}

}  // namespace pqvar
