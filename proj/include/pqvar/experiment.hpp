#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "pqvar/problem.hpp"
#include "pqvar/solve.hpp"
#include "pqvar/spectrum.hpp"

namespace pqvar {

/// Options shared by the CLI subcommands.
struct RunOptions {
  std::string out_dir;
  std::uint64_t seed = 1;
  int threads = 1;
};

/// Problem loaded from JSON: mesh, resolved ProblemSpec (lambda and the
/// family's mu may be declared relative to the computed thresholds), the
/// spectral data, and the hypothesis report.
struct LoadedProblem {
  std::shared_ptr<const Mesh> mesh;
  ProblemSpec spec;
  EigenPair eig_q1;  // principal pair of (q, a2)
  EigenPair eig_p1;  // principal pair of (p, a1)
  std::optional<SecondEigenResult> eig_q2;
  HypothesisReport hypotheses;
  // solver knobs from the config
  double eps = 0.0;
  double c7 = 1.0;
  int n_starts = 8;
  int path_knots = 17;
  std::vector<std::string> tasks;
};

/// Parses and validates the problem block; throws std::invalid_argument with
/// the offending field named. When need_second is set (or a nodal task is
/// requested) the second-eigenvalue path of (q, a2) is computed as well.
LoadedProblem load_problem(const nlohmann::json& config, bool need_second = false);

struct TaskOutcome {
  std::string task;
  bool ran = false;
  bool found = false;
  std::string flag;  // skip reason or solver flag
  Classification classification = Classification::Trivial;
  double energy = 0.0;
  double sup_norm = 0.0;
  double residual = 0.0;
  int iterations = 0;
};

struct RunResult {
  LoadedProblem problem;
  std::vector<TaskOutcome> outcomes;
  std::map<std::string, DiscreteFunction> solutions;  // per found task
  bool aux_unique = false;
  bool ordering_ok = false;    // aux <= extremal <= seed chains, both signs
  bool nodal_in_interval = false;
  nlohmann::json summary;
  std::vector<std::string> files_written;
};

/// Runs the requested tasks in dependency order and, when out_dir is set,
/// writes the nodal CSVs plus summary.json. Solver failures become flagged
/// outcomes, not exceptions.
RunResult run_problem(const nlohmann::json& config, const RunOptions& opts);
RunResult run_problem_file(const std::string& config_path, const RunOptions& opts);

struct SweepRow {
  double lambda = 0.0;
  std::map<std::string, TaskOutcome> outcomes;
};

struct SweepResult {
  double lambda1_q_a2 = 0.0;
  double lambda2_q_a2 = 0.0;
  std::vector<SweepRow> rows;
  std::optional<double> lambda_c;  // empirical threshold (midpoint), if detected
  std::string csv;                 // the emitted table, lambda-ordered
  nlohmann::json summary;
  std::vector<std::string> files_written;
};

/// Lambda sweep: thresholds are computed once per mesh, rows may run
/// concurrently (opts.threads) and are emitted in lambda order regardless.
SweepResult run_sweep(const nlohmann::json& sweep_config, const RunOptions& opts);
SweepResult run_sweep_file(const std::string& sweep_path, const RunOptions& opts);

/// Eigenpair export helpers (CSV nodal values + JSON with r, lambda_hat,
/// residual).
void write_eigenpair(const EigenPair& pair, const std::string& csv_path,
                     const std::string& json_path);

nlohmann::json hypothesis_report_to_json(const HypothesisReport& report);

}  // namespace pqvar
