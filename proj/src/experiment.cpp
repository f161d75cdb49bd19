#include "tiltnewton/experiment.hpp"

#include <chrono>
#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include <nlohmann/json.hpp>

#include "tiltnewton/envelope.hpp"
#include "tiltnewton/qp.hpp"

namespace tiltnewton {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

json vec_json(const Vector& v) {
  json a = json::array();
  for (int i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

json mat_json(const Matrix& M) {
  json rows = json::array();
  for (int i = 0; i < M.rows(); ++i) {
    json row = json::array();
    for (int j = 0; j < M.cols(); ++j) row.push_back(M(i, j));
    rows.push_back(row);
  }
  return rows;
}

Vector vec_from_json(const json& j) {
  Vector v(j.size());
  for (size_t i = 0; i < j.size(); ++i) v(static_cast<int>(i)) = j.at(i).get<double>();
  return v;
}

NewtonOptions options_from_json(const json& j) {
  NewtonOptions o;
  o.variant = newton_variant_from_string(j.at("variant").get<std::string>());
  if (j.contains("grad_tol")) o.grad_tol = j.at("grad_tol").get<double>();
  if (j.contains("max_iters")) o.max_iters = j.at("max_iters").get<int>();
  if (j.contains("r")) o.r = j.at("r").get<double>();
  if (j.contains("inner_tol")) o.prox_params.inner_tol = j.at("inner_tol").get<double>();
  if (j.contains("inner_max_iters"))
    o.prox_params.inner_max_iters = j.at("inner_max_iters").get<int>();
  if (j.contains("line_search")) {
    const json& ls = j.at("line_search");
    LineSearchParams p;
    if (ls.contains("mu")) p.mu = ls.at("mu").get<double>();
    if (ls.contains("shrink")) p.shrink = ls.at("shrink").get<double>();
    if (ls.contains("alpha_min")) p.alpha_min = ls.at("alpha_min").get<double>();
    o.line_search = p;
  }
  return o;
}

json rate_json(const RateReport& r) {
  json j;
  j["ratios"] = r.ratios;
  j["superlinear_verdict"] = r.superlinear_verdict;
  j["final_ratio"] = r.final_ratio;
  return j;
}

json probe_report_json(const ProbeReport& r) {
  json j;
  j["samples"] = r.samples;
  j["violations"] = r.violations;
  j["worst_ratio"] = r.worst_ratio;
  if (r.estimated_kappa) j["estimated_kappa"] = *r.estimated_kappa;
  if (r.estimated_ell) j["estimated_ell"] = *r.estimated_ell;
  if (r.estimated_rho) j["estimated_rho"] = *r.estimated_rho;
  if (!r.radii.empty()) {
    j["radii"] = r.radii;
    j["worst_ratio_per_radius"] = r.worst_ratio_per_radius;
    j["decay_verdict"] = r.decay_verdict;
  }
  return j;
}

double ms_since(const std::chrono::steady_clock::time_point& t0) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
}

RunReport run_impl(const ExperimentConfig& config, bool with_runs) {
  RunReport report;
  fs::create_directories(config.outdir);

  if (with_runs) {
    for (size_t vi = 0; vi < config.variants.size(); ++vi) {
      const NewtonOptions& opts = config.variants[vi];
      for (size_t si = 0; si < config.start_points.size(); ++si) {
        RunEntry entry;
        entry.variant = to_string(opts.variant);
        entry.start_index = static_cast<int>(si);
        IterateTrace trace;
        const auto t0 = std::chrono::steady_clock::now();
        try {
          trace = run_newton(config.problem, config.start_points[si], opts);
          entry.status = to_string(trace.terminal_status);
          entry.classifiable = true;
          entry.iterations = static_cast<int>(trace.records.size()) - 1;
          entry.final_grad_norm = trace.records.back().grad_norm;
          entry.final_x = trace.final_x;
          if (config.problem.known_solution())
            entry.rate = superlinear_ratios(trace, *config.problem.known_solution());
        } catch (const std::exception& e) {
          entry.status = std::string("error: ") + e.what();
          entry.classifiable = false;
          report.all_classifiable = false;
        }
        entry.wall_ms = ms_since(t0);
        const std::string suffix =
            config.start_points.size() == 1 ? "" : "_s" + std::to_string(si);
        write_trace_csv(config.outdir + "/trace_" + entry.variant + suffix + ".csv", trace);
        report.traces.push_back(std::move(trace));
        report.runs.push_back(std::move(entry));
      }
    }
  }

  for (const ProbeSpec& spec : config.probes) {
    ProbeEntry entry;
    entry.type = spec.type;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      if (!config.problem.known_solution())
        throw ConfigInvalidError("probe requires a known_solution on the problem");
      const Vector xbar = *config.problem.known_solution();
      if (spec.type == "tilt") {
        entry.report =
            tilt_probe(config.problem, xbar, spec.kappa_hyp, spec.radius, spec.samples, config.seed);
      } else if (spec.type == "semismooth_star") {
        entry.report =
            semismoothstar_probe(config.problem, xbar, spec.radii, spec.samples, config.seed);
      } else if (spec.type == "constants") {
        entry.report =
            estimate_constants(config.problem, xbar, spec.radius, spec.samples, config.seed);
      } else {
        throw ConfigInvalidError("unknown probe type: " + spec.type);
      }
    } catch (const std::exception& e) {
      entry.error = e.what();
      report.all_classifiable = false;
    }
    entry.wall_ms = ms_since(t0);
    report.probes.push_back(std::move(entry));
  }

  // rates.csv: k vs log10 error, per run
  {
    std::FILE* f = std::fopen((config.outdir + "/rates.csv").c_str(), "w");
    if (f) {
      std::fprintf(f, "variant,start_index,k,log10_error\n");
      if (config.problem.known_solution()) {
        const Vector xbar = *config.problem.known_solution();
        for (size_t i = 0; i < report.traces.size(); ++i) {
          const auto& entry = report.runs[i];
          for (const auto& rec : report.traces[i].records) {
            const double err = (rec.x - xbar).norm();
            std::fprintf(f, "%s,%d,%d,%.17g\n", entry.variant.c_str(), entry.start_index, rec.k,
                         err > 0 ? std::log10(err) : -17.0);
          }
        }
      }
      std::fclose(f);
    }
  }

  const json report_json = report_to_json(config, report);
  {
    std::ofstream out(config.outdir + "/report.json");
    out << report_json.dump(2) << "\n";
  }
  {
    json timings;
    timings["runs"] = json::array();
    for (const auto& r : report.runs)
      timings["runs"].push_back({{"variant", r.variant}, {"wall_ms", r.wall_ms}});
    timings["probes"] = json::array();
    for (const auto& p : report.probes)
      timings["probes"].push_back({{"type", p.type}, {"wall_ms", p.wall_ms}});
    std::ofstream out(config.outdir + "/timings.json");
    out << timings.dump(2) << "\n";
  }
  return report;
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json(const json& j) {
  try {
    ProblemInstance problem = j.contains("problem_file")
                                  ? ProblemInstance::from_json(
                                        json::parse(std::ifstream(j.at("problem_file").get<std::string>())))
                                  : ProblemInstance::from_json(j.at("problem"));
    ExperimentConfig cfg{std::move(problem)};
    if (j.contains("start_points"))
      for (const auto& p : j.at("start_points")) cfg.start_points.push_back(vec_from_json(p));
    if (j.contains("x0")) cfg.start_points.push_back(vec_from_json(j.at("x0")));
    if (j.contains("variants"))
      for (const auto& v : j.at("variants")) cfg.variants.push_back(options_from_json(v));
    if (j.contains("probes")) {
      for (const auto& p : j.at("probes")) {
        ProbeSpec spec;
        spec.type = p.at("type").get<std::string>();
        if (p.contains("kappa_hyp")) spec.kappa_hyp = p.at("kappa_hyp").get<double>();
        if (p.contains("radius")) spec.radius = p.at("radius").get<double>();
        if (p.contains("samples")) spec.samples = p.at("samples").get<int>();
        if (p.contains("radii"))
          for (const auto& r : p.at("radii")) spec.radii.push_back(r.get<double>());
        cfg.probes.push_back(std::move(spec));
      }
    }
    if (j.contains("outdir")) cfg.outdir = j.at("outdir").get<std::string>();
    if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
    if (cfg.variants.empty() && cfg.probes.empty())
      throw ConfigInvalidError("config needs at least one variant or probe");
    if (!cfg.variants.empty() && cfg.start_points.empty())
      throw ConfigInvalidError("config with variants needs start points (x0 or start_points)");
    return cfg;
  } catch (const json::exception& e) {
    throw ConfigInvalidError(std::string("config parse error: ") + e.what());
  }
}

ExperimentConfig ExperimentConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigInvalidError("cannot open config file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigInvalidError(std::string("config is not valid JSON: ") + e.what() + " in " + path);
  }
  return from_json(j);
}

void write_trace_csv(const std::string& path, const IterateTrace& trace) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) return;
  const int n = trace.records.empty() ? 0 : static_cast<int>(trace.records.front().x.size());
  std::fprintf(f, "k");
  for (int i = 0; i < n; ++i) std::fprintf(f, ",x%d", i);
  std::fprintf(f, ",grad_norm,alpha,step_norm,status\n");
  for (const auto& rec : trace.records) {
    std::fprintf(f, "%d", rec.k);
    for (int i = 0; i < n; ++i) std::fprintf(f, ",%.17g", rec.x(i));
    std::fprintf(f, ",%.17g,%.17g,%.17g,%s\n", rec.grad_norm, rec.alpha, rec.step_norm,
                 rec.subproblem_status.c_str());
  }
  std::fclose(f);
}

json report_to_json(const ExperimentConfig& config, const RunReport& report) {
  json j;
  j["problem"] = config.problem.to_json();
  j["seed"] = config.seed;
  j["runs"] = json::array();
  for (const auto& r : report.runs) {
    json rj;
    rj["variant"] = r.variant;
    rj["start_index"] = r.start_index;
    rj["status"] = r.status;
    rj["iterations"] = r.iterations;
    if (std::isfinite(r.final_grad_norm)) rj["final_grad_norm"] = r.final_grad_norm;
    rj["final_x"] = vec_json(r.final_x);
    if (r.rate) rj["rate"] = rate_json(*r.rate);
    j["runs"].push_back(std::move(rj));
  }
  j["probes"] = json::array();
  for (const auto& p : report.probes) {
    json pj;
    pj["type"] = p.type;
    if (!p.error.empty())
      pj["error"] = p.error;
    else
      pj["report"] = probe_report_json(p.report);
    j["probes"].push_back(std::move(pj));
  }
  return j;
}

RunReport run_experiment(const ExperimentConfig& config) { return run_impl(config, true); }

RunReport run_probes(const ExperimentConfig& config) { return run_impl(config, false); }

json compare_sqp_subproblems(const ProblemInstance& inst, const Vector& x, const Vector& lambda,
                             double r) {
  if (inst.kind() != ProblemKind::NLP)
    throw ConfigInvalidError("compare_sqp_subproblems expects an NLP instance");
  const auto& d = *inst.nlp();
  json out;

  // prox-reduced side: base point and multipliers from the envelope step
  MoreauParams mp;
  mp.r = r;
  mp.inner_tol = 1e-12;
  const ProxResult px = prox(inst, mp, x);
  const Vector v = (x - px.point) / r;
  const Vector y = px.point;
  const Matrix Jy = d.f.jacobian(y);
  const Vector zy = d.f.value(y);
  MultiplierResult mult = lagrange_multipliers(d, y, v - d.psi.gradient(y), 1e-7);
  IndexSets idx = index_sets(zy, mult.lambda, d.s);
  const Matrix Hred = d.psi.hessian(y) + d.f.weighted_hessian(y, mult.lambda);

  json reduced;
  reduced["base_point"] = vec_json(y);
  reduced["envelope_gradient"] = vec_json(v);
  reduced["multiplier"] = vec_json(mult.lambda);
  reduced["multiplier_unique"] = mult.unique;
  reduced["objective_linear"] = vec_json(v);
  reduced["objective_quadratic"] = mat_json(Hred);
  json eq_rows = json::array(), in_rows = json::array();
  std::vector<int> eqs, ins;
  for (int i = 0; i < d.s; ++i) eqs.push_back(i);
  for (int i : idx.strongly_active) eqs.push_back(i);
  for (int i : idx.active)
    if (std::find(idx.strongly_active.begin(), idx.strongly_active.end(), i) ==
        idx.strongly_active.end())
      ins.push_back(i);
  for (int i : eqs) eq_rows.push_back(vec_json(Vector(Jy.row(i).transpose())));
  for (int i : ins) in_rows.push_back(vec_json(Vector(Jy.row(i).transpose())));
  reduced["equality_rows"] = eq_rows;
  reduced["inequality_rows"] = in_rows;
  {
    const SecondOrderModel model = second_order_model_nlp(d, y, v);
    const ModelMinimizer mm = minimize_second_model(v, model);
    reduced["solution"] = vec_json(mm.w);
    reduced["step"] = vec_json(Vector(mm.w - r * v));
  }
  out["reduced_subproblem"] = reduced;

  // classic SQP side at (x, lambda)
  json sqp;
  const Matrix Jx = d.f.jacobian(x);
  const Vector fx = d.f.value(x);
  const Matrix Hsqp = d.psi.hessian(x) + d.f.weighted_hessian(x, lambda);
  sqp["objective_linear"] = vec_json(d.psi.gradient(x));
  sqp["objective_quadratic"] = mat_json(Hsqp);
  json rows = json::array();
  for (int i = 0; i < d.m; ++i) {
    rows.push_back({{"offset", fx(i)},
                    {"row", vec_json(Vector(Jx.row(i).transpose()))},
                    {"relation", i < d.s ? "eq" : "le"}});
  }
  sqp["linearized_constraints"] = rows;
  try {
    AffineQP qp;
    qp.H = Hsqp;
    qp.g = d.psi.gradient(x);
    qp.Aeq = Jx.topRows(d.s);
    qp.beq = -fx.head(d.s);
    qp.Ain = Jx.bottomRows(d.m - d.s);
    qp.bin = -fx.tail(d.m - d.s);
    PolyhedralSet lin;
    lin.G = qp.Ain;
    lin.h = qp.bin;
    lin.E = qp.Aeq;
    lin.d = qp.beq;
    lin.feasible_point = Vector::Zero(inst.dimension());
    const Vector w0 = project_polyhedral(lin, Vector::Zero(inst.dimension()));
    const QPSolution s = solve_affine_qp(qp, w0, 1e-12);
    sqp["solution"] = vec_json(s.w);
    sqp["status"] = s.status == QPStatus::Optimal ? "optimal" : "not_optimal";
  } catch (const std::exception& e) {
    sqp["status"] = std::string("error: ") + e.what();
  }
  out["sqp_subproblem"] = sqp;
  return out;
}

}  // namespace tiltnewton
