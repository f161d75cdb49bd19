#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "tiltnewton/diagnostics.hpp"
#include "tiltnewton/newton.hpp"
#include "tiltnewton/problems.hpp"

namespace tiltnewton {

struct ProbeSpec {
  std::string type;  // "tilt" | "semismooth_star" | "constants"
  double kappa_hyp = 1.0;
  double radius = 0.01;
  int samples = 1000;
  std::vector<double> radii;  // semismooth_star
};

struct ExperimentConfig {
  ProblemInstance problem;
  std::vector<Vector> start_points;
  std::vector<NewtonOptions> variants;
  std::vector<ProbeSpec> probes;
  std::string outdir = "out";
  std::uint64_t seed = 1234;

  static ExperimentConfig from_json(const nlohmann::json& j);
  static ExperimentConfig from_file(const std::string& path);
};

struct RunEntry {
  std::string variant;
  int start_index = 0;
  std::string status;  // terminal status, or "error: ..." when unclassifiable
  int iterations = 0;
  double final_grad_norm = kInf;
  Vector final_x;
  std::optional<RateReport> rate;
  bool classifiable = false;
  double wall_ms = 0.0;  // written to the timing sidecar, not report.json
};

struct ProbeEntry {
  std::string type;
  std::string error;  // empty on success
  ProbeReport report;
  double wall_ms = 0.0;
};

struct RunReport {
  std::vector<RunEntry> runs;
  std::vector<ProbeEntry> probes;
  std::vector<IterateTrace> traces;  // parallel to runs
  bool all_classifiable = true;
};

/// Executes every variant from every start point plus the configured probes.
/// Writes trace_<variant>_s<i>.csv, rates.csv, report.json, and timings.json
/// into the output directory. Individual run failures are recorded, never
/// aborting sibling runs.
RunReport run_experiment(const ExperimentConfig& config);

/// Probes only (no variant runs); same outputs minus traces.
RunReport run_probes(const ExperimentConfig& config);

nlohmann::json report_to_json(const ExperimentConfig& config, const RunReport& report);

/// Side-by-side data of the prox-reduced Newton subproblem and the classic
/// SQP subproblem at (x, lambda); explanatory output only.
nlohmann::json compare_sqp_subproblems(const ProblemInstance& nlp_instance, const Vector& x,
                                       const Vector& lambda, double r);

/// Trace CSV rows: k, x components, grad_norm, alpha, step_norm, status
/// (17 significant digits).
void write_trace_csv(const std::string& path, const IterateTrace& trace);

}  // namespace tiltnewton
