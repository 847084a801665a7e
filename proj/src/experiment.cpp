#include "pqvar/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <sstream>
#include <stdexcept>

namespace pqvar {

using nlohmann::json;

namespace {

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw std::invalid_argument("config." + path + ": " + what);
}

const json& require_key(const json& j, const std::string& key, const std::string& path) {
  if (!j.is_object() || !j.contains(key)) fail(path.empty() ? key : path + "." + key, "missing");
  return j.at(key);
}

double require_number(const json& j, const std::string& path) {
  if (!j.is_number()) fail(path, "expected a number");
  return j.get<double>();
}

double number_or(const json& j, const std::string& key, const std::string& path, double dflt) {
  if (!j.contains(key)) return dflt;
  return require_number(j.at(key), path + "." + key);
}

int int_or(const json& j, const std::string& key, const std::string& path, int dflt) {
  if (!j.contains(key)) return dflt;
  if (!j.at(key).is_number_integer()) fail(path + "." + key, "expected an integer");
  return j.at(key).get<int>();
}

ScalarField parse_field(const json& j, const std::string& path,
                        const std::shared_ptr<const Mesh>& mesh) {
  if (j.is_number()) return ScalarField::constant(j.get<double>());
  if (!j.is_object()) fail(path, "expected a weight object");
  const std::string kind = require_key(j, "kind", path).get<std::string>();
  if (kind == "constant")
    return ScalarField::constant(require_number(require_key(j, "value", path), path + ".value"));
  if (kind == "affine")
    return ScalarField::affine(number_or(j, "c0", path, 0.0), number_or(j, "cx", path, 0.0),
                               number_or(j, "cy", path, 0.0));
  if (kind == "tabulated") {
    const std::string file = require_key(j, "path", path).get<std::string>();
    return ScalarField::tabulated(mesh, read_nodal_csv(file, mesh->num_nodes()));
  }
  fail(path + ".kind", "unknown weight kind '" + kind + "'");
}

// Geometry, weights, spectral data, and solver knobs shared across lambdas.
struct BaseData {
  std::shared_ptr<const Mesh> mesh;
  double p = 3.0, q = 2.0;
  ScalarField a1, a2;
  double declared_c1 = 0.0;
  // family config; mu resolved against the thresholds
  std::string family = "zero";
  double mu = 0.0, c = 0.0, tau = 0.0;
  EigenPair eig_q1, eig_p1;
  std::optional<SecondEigenResult> eig_q2;
  double eps_fraction = 0.5;
  std::optional<double> eps_explicit;
  double c7 = 1.0;
  int n_starts = 8;
  int nonexistence_starts = 16;
  int path_knots = 17;
  int eigen_path_knots = 31;
  double grad_tol = 0.0;  // 0: use dimension default
  int max_iters = 0;      // 0: use default
  std::vector<std::string> tasks;
};

double resolve_reference(const BaseData& base, const std::string& name,
                         const std::string& path) {
  if (name == "lambda1_q_a2") return base.eig_q1.lambda_hat;
  if (name == "lambda1_p_a1") return base.eig_p1.lambda_hat;
  if (name == "lambda2_q_a2") {
    if (!base.eig_q2) fail(path, "lambda2_q_a2 requested but not computed");
    return base.eig_q2->lambda_hat_2;
  }
  fail(path, "unknown threshold reference '" + name + "'");
}

double resolve_value(const BaseData& base, const json& j, const std::string& path) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) return resolve_reference(base, j.get<std::string>(), path);
  if (j.is_object()) {
    const std::string ref =
        require_key(j, "relative_to", path).get<std::string>();
    const double base_value = resolve_reference(base, ref, path + ".relative_to");
    const double scale = number_or(j, "scale", path, 1.0);
    const double offset = number_or(j, "offset", path, 0.0);
    return scale * base_value + offset;
  }
  fail(path, "expected number, threshold name, or {relative_to, scale, offset}");
}

bool value_needs_second(const json& j) {
  if (j.is_string()) return j.get<std::string>() == "lambda2_q_a2";
  if (j.is_object() && j.contains("relative_to"))
    return j.at("relative_to") == "lambda2_q_a2";
  return false;
}

BaseData load_base(const json& config, bool need_second) {
  BaseData base;

  const int dim = int_or(config, "dim", "", 1);
  if (dim != 1 && dim != 2) fail("dim", "must be 1 or 2");
  const json& ext = require_key(config, "extent", "");
  Extent extent;
  if (dim == 1) {
    if (!ext.is_array() || ext.size() != 2) fail("extent", "expected [x0, x1]");
    extent.x0 = require_number(ext[0], "extent[0]");
    extent.x1 = require_number(ext[1], "extent[1]");
  } else {
    if (!ext.is_array() || ext.size() != 2 || !ext[0].is_array() || !ext[1].is_array())
      fail("extent", "expected [[x0, x1], [y0, y1]]");
    extent.x0 = require_number(ext[0][0], "extent[0][0]");
    extent.x1 = require_number(ext[0][1], "extent[0][1]");
    extent.y0 = require_number(ext[1][0], "extent[1][0]");
    extent.y1 = require_number(ext[1][1], "extent[1][1]");
  }
  const int n = int_or(config, "n", "", 0);
  base.mesh = build_mesh(dim, extent, n);

  base.p = require_number(require_key(config, "p", ""), "p");
  base.q = require_number(require_key(config, "q", ""), "q");
  if (!(base.q > 1.0)) fail("q", "must exceed 1");
  if (!(base.q < base.p)) fail("q", "must be strictly below p");
  base.a1 = parse_field(require_key(config, "a1", ""), "a1", base.mesh);
  base.a2 = parse_field(require_key(config, "a2", ""), "a2", base.mesh);
  base.declared_c1 = number_or(config, "c1", "", 0.0);

  const json& f = require_key(config, "f", "");
  base.family = require_key(f, "family", "f").get<std::string>();
  if (base.family != "zero" && base.family != "resonant_power" &&
      base.family != "subcritical_power")
    fail("f.family", "unknown family '" + base.family + "'");

  base.eps_fraction = number_or(config, "eps_fraction", "", 0.5);
  if (config.contains("eps"))
    base.eps_explicit = require_number(config.at("eps"), "eps");
  base.c7 = number_or(config, "c7", "", 1.0);
  base.n_starts = int_or(config, "n_starts", "", 8);
  base.nonexistence_starts = int_or(config, "nonexistence_starts", "", 16);
  base.path_knots = int_or(config, "path_knots", "", 17);
  base.eigen_path_knots = int_or(config, "eigen_path_knots", "", 31);
  base.grad_tol = number_or(config, "grad_tol", "", 0.0);
  base.max_iters = int_or(config, "max_iters", "", 0);

  if (config.contains("tasks")) {
    for (const auto& t : config.at("tasks")) base.tasks.push_back(t.get<std::string>());
  } else {
    base.tasks = {"positive", "negative", "auxiliary", "extremal", "nodal"};
  }
  for (const auto& t : base.tasks)
    if (t != "positive" && t != "negative" && t != "auxiliary" && t != "extremal" &&
        t != "nodal" && t != "nonexistence")
      fail("tasks", "unknown task '" + t + "'");

  // Spectral data. The second eigenvalue is computed only when required.
  SpectrumParams sp;
  base.eig_q1 = principal_eigenpair(base.mesh, base.q, base.a2, sp);
  base.eig_p1 = principal_eigenpair(base.mesh, base.p, base.a1, sp);
  const bool nodal_requested =
      std::find(base.tasks.begin(), base.tasks.end(), "nodal") != base.tasks.end();
  if (need_second || nodal_requested ||
      (config.contains("lambda") && value_needs_second(config.at("lambda"))))
    base.eig_q2 = second_eigenvalue(base.mesh, base.q, base.a2, base.eigen_path_knots, sp,
                                    &base.eig_q1);

  if (base.family != "zero") {
    const json& params = require_key(f, "params", "f");
    base.mu = resolve_value(base, require_key(params, "mu", "f.params"), "f.params.mu");
    base.c = number_or(params, "c", "f.params", 1.0);
    base.tau = require_number(require_key(params, "tau", "f.params"), "f.params.tau");
  }
  return base;
}

ProblemSpec instantiate(const BaseData& base, double lambda) {
  ProblemSpec spec;
  spec.p = base.p;
  spec.q = base.q;
  spec.a1 = base.a1;
  spec.a2 = base.a2;
  spec.lambda = lambda;
  spec.declared_c1 = base.declared_c1;
  spec.f = base.family == "zero"
               ? builtin_nonlinearity("zero", 0, 0, 0, base.q, base.p)
               : builtin_nonlinearity(base.family, base.mu, base.c, base.tau, base.q, base.p);
  spec.validate(*base.mesh);
  return spec;
}

SolverParams solver_params(const BaseData& base, std::uint64_t seed) {
  SolverParams sp = SolverParams::defaults_for(base.mesh->dim);
  if (base.grad_tol > 0.0) sp.grad_tol = base.grad_tol;
  if (base.max_iters > 0) sp.max_iters = base.max_iters;
  sp.seed = seed;
  return sp;
}

struct TaskExecution {
  std::vector<TaskOutcome> outcomes;
  std::map<std::string, DiscreteFunction> solutions;
  bool aux_unique = false;
  bool ordering_ok = false;
  bool nodal_in_interval = false;
};

bool wants(const std::vector<std::string>& tasks, const std::string& name) {
  return std::find(tasks.begin(), tasks.end(), name) != tasks.end();
}

// Small start along the principal eigenfunction with negative energy when
// one exists (halving t), otherwise the smallest attempted scale.
DiscreteFunction small_start(const Objective& obj, const DiscreteFunction& u1, int sign) {
  DiscreteFunction start = u1;
  double t = 0.5;
  for (int i = 0; i < 60; ++i) {
    for (std::size_t k = 0; k < start.values.size(); ++k)
      start.values[k] = sign * t * u1.values[k];
    if (obj.value(start) < 0.0) break;
    t *= 0.5;
  }
  return start;
}

TaskExecution execute_tasks(const BaseData& base, const ProblemSpec& spec,
                            const std::vector<std::string>& tasks, std::uint64_t seed) {
  TaskExecution ex;
  const auto& mesh = base.mesh;
  const SolverParams sp = solver_params(base, seed);
  const double lam1 = base.eig_q1.lambda_hat;
  const DiscreteFunction& u1q = base.eig_q1.eigenfunction;

  // Dependency closure, kept in dependency order.
  std::vector<std::string> order;
  auto add = [&](const std::string& t) {
    if (std::find(order.begin(), order.end(), t) == order.end()) order.push_back(t);
  };
  if (wants(tasks, "positive") || wants(tasks, "extremal") || wants(tasks, "nodal"))
    add("positive");
  if (wants(tasks, "negative") || wants(tasks, "extremal") || wants(tasks, "nodal"))
    add("negative");
  if (wants(tasks, "auxiliary") || wants(tasks, "extremal") || wants(tasks, "nodal"))
    add("auxiliary");
  if (wants(tasks, "extremal") || wants(tasks, "nodal")) add("extremal");
  if (wants(tasks, "nodal")) add("nodal");
  if (wants(tasks, "nonexistence")) add("nonexistence");

  std::optional<SolverReport> pos, neg;
  std::optional<AuxiliaryResult> aux_pos, aux_neg;
  std::optional<ExtremalResult> ext_pos, ext_neg;

  for (const auto& task : order) {
    TaskOutcome oc;
    oc.task = task;
    try {
      if (task == "positive" || task == "negative") {
        const int sign = task == "positive" ? +1 : -1;
        auto ev = std::make_shared<EnergyEvaluator>(
            sign > 0 ? FunctionalSpec::phi_plus(spec) : FunctionalSpec::phi_minus(spec),
            mesh);
        Objective obj = make_objective(ev);
        // Found/not-found is decided against the 1e-6 triviality cut; solve
        // two orders below the default so solver slack cannot masquerade as
        // a nontrivial solution near the threshold.
        SolverParams sharp = sp;
        sharp.grad_tol = 0.01 * sp.grad_tol;
        SolverReport rep = minimize(obj, small_start(obj, u1q, sign), sharp);
        oc.ran = true;
        oc.classification = rep.classification;
        oc.energy = rep.energy;
        oc.sup_norm = rep.solution.sup_norm();
        oc.residual = free_residual_norm(spec, rep.solution);
        oc.iterations = rep.iterations;
        const auto expected =
            sign > 0 ? Classification::Positive : Classification::Negative;
        oc.found = rep.converged && oc.sup_norm > kTrivialTol &&
                   rep.classification == expected;
        if (!rep.converged) oc.flag = "not converged";
        if (oc.found) ex.solutions.emplace(task, rep.solution);
        (sign > 0 ? pos : neg) = std::move(rep);
      } else if (task == "auxiliary") {
        if (!(spec.lambda > lam1)) {
          oc.flag = "skipped: lambda <= lambda1(q,a2)";
        } else {
          const double eps = base.eps_explicit
                                 ? *base.eps_explicit
                                 : base.eps_fraction * (spec.lambda - lam1);
          aux_pos = solve_auxiliary(spec, mesh, lam1, eps, base.c7, sp, base.n_starts, +1);
          aux_neg = solve_auxiliary(spec, mesh, lam1, eps, base.c7, sp, base.n_starts, -1);
          oc.ran = true;
          ex.aux_unique = aux_pos->unique && aux_neg->unique;
          oc.found = ex.aux_unique &&
                     aux_pos->report.solution.sup_norm() > kTrivialTol;
          oc.classification = aux_pos->report.classification;
          oc.energy = aux_pos->report.energy;
          oc.sup_norm = aux_pos->report.solution.sup_norm();
          oc.residual = aux_pos->report.grad_norm;
          oc.iterations = aux_pos->report.iterations;
          if (!ex.aux_unique) oc.flag = "starts disagree";
          if (oc.found) {
            ex.solutions.emplace("aux_positive", aux_pos->report.solution);
            ex.solutions.emplace("aux_negative", aux_neg->report.solution);
          }
        }
      } else if (task == "extremal") {
        if (!pos || !pos->converged || !neg || !neg->converged || !aux_pos || !aux_neg ||
            !ex.aux_unique) {
          oc.flag = "skipped: missing constant-sign or auxiliary inputs";
        } else {
          ext_pos = extremal_positive(spec, mesh, pos->solution, aux_pos->report.solution,
                                      u1q, sp);
          ext_neg = extremal_negative(spec, mesh, neg->solution, aux_neg->report.solution,
                                      u1q, sp);
          oc.ran = true;
          ex.ordering_ok = ext_pos->ordering_ok && ext_neg->ordering_ok;
          oc.found = ext_pos->fixed_point && ext_neg->fixed_point && ex.ordering_ok;
          oc.classification = classify(ext_pos->extremal);
          oc.energy = ext_pos->last_solve.energy;
          oc.sup_norm = ext_pos->extremal.sup_norm();
          oc.residual = free_residual_norm(spec, ext_pos->extremal);
          oc.iterations = ext_pos->outer_iterations;
          if (!oc.found) oc.flag = "no fixed point or ordering violated";
          ex.solutions.emplace("extremal_positive", ext_pos->extremal);
          ex.solutions.emplace("extremal_negative", ext_neg->extremal);
        }
      } else if (task == "nodal") {
        if (!base.eig_q2) {
          oc.flag = "skipped: second eigenvalue unavailable";
        } else if (!(spec.lambda > base.eig_q2->lambda_hat_2)) {
          oc.flag = "skipped: lambda <= lambda2(q,a2)";
        } else if (!ext_pos || !ext_neg) {
          oc.flag = "skipped: extremal solutions unavailable";
        } else {
          MountainPassResult mp =
              mountain_pass_nodal(spec, mesh, ext_pos->extremal, ext_neg->extremal,
                                  base.eig_q2->path, sp, base.path_knots);
          oc.ran = true;
          oc.found = mp.found_nodal;
          oc.classification = mp.report.classification;
          oc.energy = mp.report.energy;
          oc.sup_norm = mp.report.solution.sup_norm();
          oc.residual = free_residual_norm(spec, mp.report.solution);
          oc.iterations = mp.report.iterations;
          if (!mp.found_nodal) oc.flag = "no nodal found";
          double viol = 0.0;
          for (std::size_t i = 0; i < mp.report.solution.values.size(); ++i) {
            viol = std::max(viol, ext_neg->extremal.values[i] -
                                      mp.report.solution.values[i]);
            viol = std::max(viol, mp.report.solution.values[i] -
                                      ext_pos->extremal.values[i]);
          }
          ex.nodal_in_interval = viol <= 1e-8;
          if (oc.found) ex.solutions.emplace("nodal", mp.report.solution);
        }
      } else if (task == "nonexistence") {
        NonexistenceResult nr =
            nonexistence_scan(spec, mesh, u1q, sp, base.nonexistence_starts);
        oc.ran = true;
        oc.found = !nr.all_trivial;  // found = a nontrivial point surfaced
        oc.sup_norm = nr.worst_sup_norm;
        oc.flag = nr.all_trivial ? "all starts trivial" : "nontrivial point found";
        oc.iterations = nr.n_starts;
      }
    } catch (const std::exception& err) {
      oc.ran = false;
      oc.found = false;
      oc.flag = std::string("error: ") + err.what();
    }
    ex.outcomes.push_back(std::move(oc));
  }
  return ex;
}

json outcome_to_json(const TaskOutcome& oc) {
  json j;
  j["task"] = oc.task;
  j["ran"] = oc.ran;
  j["found"] = oc.found;
  j["classification"] = to_string(oc.classification);
  j["energy"] = oc.energy;
  j["sup_norm"] = oc.sup_norm;
  j["residual"] = oc.residual;
  j["iterations"] = oc.iterations;
  j["flag"] = oc.flag;
  return j;
}

void write_text(const std::string& path, const std::string& text,
                std::vector<std::string>& written) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
  written.push_back(path);
}

}  // namespace

json hypothesis_report_to_json(const HypothesisReport& report) {
  json arr = json::array();
  for (const auto& item : report.items) {
    json j;
    j["name"] = item.name;
    j["verdict"] = item.verdict == Verdict::Pass
                       ? "pass"
                       : item.verdict == Verdict::Fail ? "fail" : "inconclusive";
    j["margin"] = item.margin;
    j["worst_x"] = item.worst_x;
    j["note"] = item.note;
    arr.push_back(j);
  }
  return arr;
}

void write_eigenpair(const EigenPair& pair, const std::string& csv_path,
                     const std::string& json_path) {
  write_csv(pair.eigenfunction, csv_path);
  json j;
  j["r"] = pair.r;
  j["lambda_hat"] = pair.lambda_hat;
  j["residual"] = pair.residual_norm;
  std::ofstream out(json_path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + json_path);
  out << j.dump(2) << "\n";
}

LoadedProblem load_problem(const json& config, bool need_second) {
  BaseData base = load_base(config, need_second);
  const double lambda =
      resolve_value(base, require_key(config, "lambda", ""), "lambda");
  LoadedProblem lp;
  lp.spec = instantiate(base, lambda);
  lp.mesh = base.mesh;
  lp.eig_q1 = base.eig_q1;
  lp.eig_p1 = base.eig_p1;
  lp.eig_q2 = base.eig_q2;
  SpectralContext ctx;
  ctx.lambda1_p_a1 = base.eig_p1.lambda_hat;
  ctx.lambda1_q_a2 = base.eig_q1.lambda_hat;
  lp.hypotheses = check_hypotheses(lp.spec, *lp.mesh, ctx);
  lp.eps = base.eps_explicit ? *base.eps_explicit
                             : base.eps_fraction *
                                   std::max(0.0, lambda - base.eig_q1.lambda_hat);
  lp.c7 = base.c7;
  lp.n_starts = base.n_starts;
  lp.path_knots = base.path_knots;
  lp.tasks = base.tasks;
  return lp;
}

RunResult run_problem(const json& config, const RunOptions& opts) {
  BaseData base = load_base(config, false);
  const double lambda =
      resolve_value(base, require_key(config, "lambda", ""), "lambda");
  const ProblemSpec spec = instantiate(base, lambda);

  RunResult out;
  out.problem.mesh = base.mesh;
  out.problem.spec = spec;
  out.problem.eig_q1 = base.eig_q1;
  out.problem.eig_p1 = base.eig_p1;
  out.problem.eig_q2 = base.eig_q2;
  SpectralContext ctx;
  ctx.lambda1_p_a1 = base.eig_p1.lambda_hat;
  ctx.lambda1_q_a2 = base.eig_q1.lambda_hat;
  out.problem.hypotheses = check_hypotheses(spec, *base.mesh, ctx);

  TaskExecution ex = execute_tasks(base, spec, base.tasks, opts.seed);
  out.outcomes = ex.outcomes;
  out.solutions = ex.solutions;
  out.aux_unique = ex.aux_unique;
  out.ordering_ok = ex.ordering_ok;
  out.nodal_in_interval = ex.nodal_in_interval;

  json summary;
  summary["seed"] = opts.seed;
  summary["lambda"] = spec.lambda;
  if (base.family != "zero") summary["mu"] = base.mu;
  summary["thresholds"]["lambda1_q_a2"] = base.eig_q1.lambda_hat;
  summary["thresholds"]["lambda1_p_a1"] = base.eig_p1.lambda_hat;
  if (base.eig_q2) {
    summary["thresholds"]["lambda2_q_a2"] = base.eig_q2->lambda_hat_2;
    if (std::isfinite(base.eig_q2->linear_oracle))
      summary["thresholds"]["lambda2_q_a2_linear_oracle"] = base.eig_q2->linear_oracle;
  }
  summary["hypotheses"] = hypothesis_report_to_json(out.problem.hypotheses);
  json tasks = json::array();
  for (const auto& oc : out.outcomes) tasks.push_back(outcome_to_json(oc));
  summary["tasks"] = tasks;
  summary["flags"]["aux_unique"] = ex.aux_unique;
  summary["flags"]["ordering_ok"] = ex.ordering_ok;
  summary["flags"]["nodal_in_interval"] = ex.nodal_in_interval;
  out.summary = summary;

  if (!opts.out_dir.empty()) {
    std::filesystem::create_directories(opts.out_dir);
    const std::string dir = opts.out_dir + "/";
    write_eigenpair(base.eig_q1, dir + "eigen_q1.csv", dir + "eigen_q1.json");
    out.files_written.push_back(dir + "eigen_q1.csv");
    out.files_written.push_back(dir + "eigen_q1.json");
    write_eigenpair(base.eig_p1, dir + "eigen_p1.csv", dir + "eigen_p1.json");
    out.files_written.push_back(dir + "eigen_p1.csv");
    out.files_written.push_back(dir + "eigen_p1.json");
    for (const auto& [name, fn] : out.solutions) {
      const std::string path = dir + "solution_" + name + ".csv";
      write_csv(fn, path);
      out.files_written.push_back(path);
    }
    write_text(dir + "summary.json", summary.dump(2) + "\n", out.files_written);
  }
  return out;
}

RunResult run_problem_file(const std::string& config_path, const RunOptions& opts) {
  std::ifstream in(config_path);
  if (!in) throw std::runtime_error("cannot open config " + config_path);
  json config = json::parse(in);
  return run_problem(config, opts);
}

namespace {

std::vector<double> parse_lambda_grid(const json& grid, double lam1,
                                      const std::string& path) {
  std::vector<double> values;
  if (grid.contains("values")) {
    for (const auto& v : grid.at("values"))
      values.push_back(require_number(v, path + ".values[]"));
  } else {
    const int count = int_or(grid, "count", path, 0);
    if (count < 1) fail(path + ".count", "must be >= 1");
    double lo, hi;
    if (grid.contains("min_scale") || grid.contains("max_scale")) {
      lo = number_or(grid, "min_scale", path, 0.0) * lam1;
      hi = number_or(grid, "max_scale", path, 0.0) * lam1;
    } else {
      lo = require_number(require_key(grid, "min", path), path + ".min");
      hi = require_number(require_key(grid, "max", path), path + ".max");
    }
    for (int i = 0; i < count; ++i)
      values.push_back(count == 1 ? lo : lo + (hi - lo) * i / (count - 1));
  }
  if (values.empty()) fail(path, "empty lambda grid");
  for (std::size_t i = 1; i < values.size(); ++i)
    if (!(values[i] > values[i - 1])) fail(path, "lambda grid must be strictly increasing");
  return values;
}

const TaskOutcome* find_outcome(const SweepRow& row, const std::string& task) {
  auto it = row.outcomes.find(task);
  return it == row.outcomes.end() ? nullptr : &it->second;
}

bool row_nontrivial(const SweepRow& row) {
  const TaskOutcome* p = find_outcome(row, "positive");
  const TaskOutcome* n = find_outcome(row, "negative");
  const TaskOutcome* x = find_outcome(row, "nonexistence");
  if (p && p->found) return true;
  if (n && n->found) return true;
  if (x && x->ran && x->found) return true;
  return false;
}

}  // namespace

SweepResult run_sweep(const json& sweep_config, const RunOptions& opts) {
  const json& problem = require_key(sweep_config, "problem", "");
  std::vector<std::string> tasks = {"positive", "negative", "nonexistence"};
  if (sweep_config.contains("tasks")) {
    tasks.clear();
    for (const auto& t : sweep_config.at("tasks")) tasks.push_back(t.get<std::string>());
  }
  if (tasks.empty()) fail("tasks", "must be nonempty");

  // The nodal task (and the lam2_q column) need the second eigenvalue.
  json base_config = problem;
  base_config["tasks"] = tasks;
  if (!base_config.contains("lambda")) base_config["lambda"] = 1.0;  // placeholder
  BaseData base = load_base(base_config, /*need_second=*/true);

  SweepResult out;
  out.lambda1_q_a2 = base.eig_q1.lambda_hat;
  out.lambda2_q_a2 = base.eig_q2 ? base.eig_q2->lambda_hat_2 : 0.0;

  const std::vector<double> lambdas = parse_lambda_grid(
      require_key(sweep_config, "lambda_grid", ""), base.eig_q1.lambda_hat, "lambda_grid");

  out.rows.resize(lambdas.size());
  auto run_row = [&](std::size_t i) {
    SweepRow row;
    row.lambda = lambdas[i];
    std::vector<std::string> row_tasks = tasks;
    TaskExecution ex;
    try {
      const ProblemSpec spec = instantiate(base, lambdas[i]);
      ex = execute_tasks(base, spec, row_tasks, opts.seed);
    } catch (const std::exception& err) {
      TaskOutcome oc;
      oc.task = "row";
      oc.flag = std::string("error: ") + err.what();
      ex.outcomes.push_back(oc);
    }
    for (auto& oc : ex.outcomes) row.outcomes[oc.task] = oc;
    out.rows[i] = std::move(row);
  };

  const int threads = std::max(1, opts.threads);
  if (threads == 1 || lambdas.size() < 2) {
    for (std::size_t i = 0; i < lambdas.size(); ++i) run_row(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::future<void>> workers;
    for (int t = 0; t < threads; ++t)
      workers.push_back(std::async(std::launch::async, [&]() {
        for (std::size_t i = next++; i < lambdas.size(); i = next++) run_row(i);
      }));
    for (auto& w : workers) w.get();
  }

  // Empirical threshold: midpoint between the largest lambda of the leading
  // all-trivial block and the smallest nontrivial lambda.
  std::optional<double> lo, hi;
  for (const auto& row : out.rows) {
    if (row_nontrivial(row)) {
      hi = row.lambda;
      break;
    }
    lo = row.lambda;
  }
  if (lo && hi) out.lambda_c = 0.5 * (*lo + *hi);

  // CSV table, lambda-ordered.
  std::ostringstream csv;
  csv << "lambda,lam1_q,lam2_q,pos_found,neg_found,nodal_found,pos_energy,neg_energy,"
         "nodal_energy,pos_supnorm,neg_supnorm,nodal_supnorm,pos_residual,neg_residual,"
         "nodal_residual,pos_iters,neg_iters,nodal_iters,aux_unique,nonexist_all_trivial\n";
  for (const auto& row : out.rows) {
    auto found_cell = [&](const char* name) -> std::string {
      const TaskOutcome* oc = find_outcome(row, name);
      if (!oc) return "";
      if (!oc->ran) return "skipped";
      return oc->found ? "1" : "0";
    };
    auto num_cell = [&](const char* name, auto getter) -> std::string {
      const TaskOutcome* oc = find_outcome(row, name);
      if (!oc || !oc->ran) return "";
      return getter(*oc);
    };
    auto energy = [](const TaskOutcome& oc) { return fmt17(oc.energy); };
    auto supn = [](const TaskOutcome& oc) { return fmt17(oc.sup_norm); };
    auto resid = [](const TaskOutcome& oc) { return fmt17(oc.residual); };
    auto iters = [](const TaskOutcome& oc) { return std::to_string(oc.iterations); };

    csv << fmt17(row.lambda) << ',' << fmt17(out.lambda1_q_a2) << ','
        << fmt17(out.lambda2_q_a2) << ',' << found_cell("positive") << ','
        << found_cell("negative") << ',' << found_cell("nodal") << ','
        << num_cell("positive", energy) << ',' << num_cell("negative", energy) << ','
        << num_cell("nodal", energy) << ',' << num_cell("positive", supn) << ','
        << num_cell("negative", supn) << ',' << num_cell("nodal", supn) << ','
        << num_cell("positive", resid) << ',' << num_cell("negative", resid) << ','
        << num_cell("nodal", resid) << ',' << num_cell("positive", iters) << ','
        << num_cell("negative", iters) << ',' << num_cell("nodal", iters) << ',';
    const TaskOutcome* aux = find_outcome(row, "auxiliary");
    csv << (aux && aux->ran ? (aux->found ? "1" : "0") : "") << ',';
    const TaskOutcome* nx = find_outcome(row, "nonexistence");
    csv << (nx && nx->ran ? (nx->found ? "0" : "1") : "") << '\n';
  }
  out.csv = csv.str();

  json summary;
  summary["seed"] = opts.seed;
  summary["lambda1_q_a2"] = out.lambda1_q_a2;
  summary["lambda2_q_a2"] = out.lambda2_q_a2;
  if (out.lambda_c)
    summary["lambda_c"] = *out.lambda_c;
  else
    summary["lambda_c"] = nullptr;
  json rows = json::array();
  for (const auto& row : out.rows) {
    json r;
    r["lambda"] = row.lambda;
    json ocs = json::array();
    for (const auto& [name, oc] : row.outcomes) ocs.push_back(outcome_to_json(oc));
    r["tasks"] = ocs;
    rows.push_back(r);
  }
  summary["rows"] = rows;
  out.summary = summary;

  if (!opts.out_dir.empty()) {
    std::filesystem::create_directories(opts.out_dir);
    const std::string dir = opts.out_dir + "/";
    write_text(dir + "sweep.csv", out.csv, out.files_written);
    write_text(dir + "summary.json", summary.dump(2) + "\n", out.files_written);
  }
  return out;
}

SweepResult run_sweep_file(const std::string& sweep_path, const RunOptions& opts) {
  std::ifstream in(sweep_path);
  if (!in) throw std::runtime_error("cannot open sweep config " + sweep_path);
  json config = json::parse(in);
  return run_sweep(config, opts);
}

}  // namespace pqvar
