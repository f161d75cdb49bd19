#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <nlohmann/json.hpp>

#include "tiltnewton/diagnostics.hpp"
#include "tiltnewton/envelope.hpp"
#include "tiltnewton/experiment.hpp"
#include "tiltnewton/newton.hpp"
#include "tiltnewton/problems.hpp"
#include "tiltnewton/qp.hpp"
#include "tiltnewton/secondorder.hpp"

namespace py = pybind11;
using namespace tiltnewton;
using nlohmann::json;

namespace {

ProblemInstance instance_from_json_str(const std::string& s) {
  return ProblemInstance::from_json(json::parse(s));
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Generalized Newton methods for tilt-stable minimizers";

  py::register_exception<InfeasibleError>(m, "InfeasibleError");
  py::register_exception<InnerSolveFailed>(m, "InnerSolveFailedError");
  py::register_exception<ConfigInvalidError>(m, "ConfigInvalidError");

  py::enum_<ProblemKind>(m, "ProblemKind")
      .value("SmoothC2", ProblemKind::SmoothC2)
      .value("PiecewiseC11", ProblemKind::PiecewiseC11)
      .value("ELQP", ProblemKind::ELQP)
      .value("NLP", ProblemKind::NLP)
      .value("AugLag", ProblemKind::AugLag)
      .value("Oscillation", ProblemKind::Oscillation);

  py::enum_<NewtonVariant>(m, "NewtonVariant")
      .value("Coderivative", NewtonVariant::Coderivative)
      .value("Graphical", NewtonVariant::Graphical)
      .value("ProxGraphical", NewtonVariant::ProxGraphical)
      .value("SemismoothBaseline", NewtonVariant::SemismoothBaseline)
      .value("BDiffBaseline", NewtonVariant::BDiffBaseline);

  py::enum_<TerminalStatus>(m, "TerminalStatus")
      .value("Stationary", TerminalStatus::Stationary)
      .value("MaxIter", TerminalStatus::MaxIter)
      .value("SubproblemFailed", TerminalStatus::SubproblemFailed)
      .value("Diverged", TerminalStatus::Diverged);

  py::class_<ProblemInstance>(m, "ProblemInstance")
      .def_property_readonly("kind", &ProblemInstance::kind)
      .def_property_readonly("dimension", &ProblemInstance::dimension)
      .def("value", &ProblemInstance::value)
      .def("gradient", &ProblemInstance::gradient)
      .def("subgradient_residual", &ProblemInstance::subgradient_residual)
      .def("with_solution", &ProblemInstance::with_solution, py::arg("xbar"),
           py::arg("kappa") = std::nullopt)
      .def_property_readonly("known_solution",
                             [](const ProblemInstance& p) { return p.known_solution(); })
      .def("to_json", [](const ProblemInstance& p) { return p.to_json().dump(2); })
      .def_static("from_json", &instance_from_json_str);

  m.def(
      "make_smooth",
      [](const Matrix& Q, const Vector& b, const Vector& quartic) {
        return make_smooth({QuadQuartic{Q, b, quartic}});
      },
      py::arg("Q"), py::arg("b"), py::arg("quartic"));
  m.def(
      "make_piecewise_l1",
      [](const Matrix& Q, const Vector& b, const Vector& l1) {
        return make_piecewise_l1({Q, b, l1});
      },
      py::arg("Q"), py::arg("b"), py::arg("l1"));
  m.def(
      "make_elqp",
      [](const Matrix& Q, const Vector& q, const Matrix& A, const Vector& b, const Matrix& G,
         const Vector& h, const Matrix& E, const Vector& d, const Matrix& B) {
        ELQPData data{Q, q, A, b, make_polyhedral(G, h, E, d), B};
        return make_elqp(std::move(data));
      },
      py::arg("Q"), py::arg("q"), py::arg("A"), py::arg("b"), py::arg("G"), py::arg("h"),
      py::arg("E"), py::arg("d"), py::arg("B"));
  m.def(
      "make_nlp",
      [](const Matrix& psi_Q, const Vector& psi_b, const Vector& psi_quartic, const Matrix& J,
         const Vector& c, int s) {
        NLPData d;
        d.psi = SmoothObjective::from_quad_quartic({psi_Q, psi_b, psi_quartic});
        d.f = ConstraintMap::from_affine({J, c});
        d.s = s;
        d.m = static_cast<int>(J.rows());
        return make_nlp(std::move(d));
      },
      py::arg("psi_Q"), py::arg("psi_b"), py::arg("psi_quartic"), py::arg("J"), py::arg("c"),
      py::arg("s"));
  m.def(
      "make_auglag_soc",
      [](const Matrix& psi_Q, const Vector& psi_b, const Vector& psi_quartic, const Matrix& J,
         const Vector& c, const Vector& lambda, double rho) {
        AugLagData d;
        d.psi = SmoothObjective::from_quad_quartic({psi_Q, psi_b, psi_quartic});
        d.f = ConstraintMap::from_affine({J, c});
        d.theta.kind = ThetaSet::Kind::Soc;
        d.theta.soc_dim = static_cast<int>(J.rows());
        d.lambda = lambda;
        d.rho = rho;
        return make_auglag(std::move(d));
      },
      py::arg("psi_Q"), py::arg("psi_b"), py::arg("psi_quartic"), py::arg("J"), py::arg("c"),
      py::arg("lambda_"), py::arg("rho"));
  m.def("make_oscillation", &make_oscillation, py::arg("alpha") = 1.0);

  py::class_<MoreauParams>(m, "MoreauParams")
      .def(py::init<>())
      .def_readwrite("r", &MoreauParams::r)
      .def_readwrite("inner_tol", &MoreauParams::inner_tol)
      .def_readwrite("inner_max_iters", &MoreauParams::inner_max_iters);

  py::class_<ProxResult>(m, "ProxResult")
      .def_readonly("point", &ProxResult::point)
      .def_readonly("inner_residual", &ProxResult::inner_residual)
      .def_readonly("iterations", &ProxResult::iterations)
      .def_readonly("exact", &ProxResult::exact)
      .def_readonly("converged", &ProxResult::converged);

  m.def("prox", &prox, py::arg("instance"), py::arg("params"), py::arg("x"));
  m.def("envelope_value", &envelope_value);
  m.def("envelope_gradient", &envelope_gradient);

  py::class_<LineSearchParams>(m, "LineSearchParams")
      .def(py::init<>())
      .def_readwrite("mu", &LineSearchParams::mu)
      .def_readwrite("shrink", &LineSearchParams::shrink)
      .def_readwrite("alpha_min", &LineSearchParams::alpha_min);

  py::class_<NewtonOptions>(m, "NewtonOptions")
      .def(py::init<>())
      .def_readwrite("variant", &NewtonOptions::variant)
      .def_readwrite("r", &NewtonOptions::r)
      .def_readwrite("grad_tol", &NewtonOptions::grad_tol)
      .def_readwrite("max_iters", &NewtonOptions::max_iters)
      .def_readwrite("line_search", &NewtonOptions::line_search)
      .def_readwrite("prox_params", &NewtonOptions::prox_params);

  py::class_<IterateRecord>(m, "IterateRecord")
      .def_readonly("k", &IterateRecord::k)
      .def_readonly("x", &IterateRecord::x)
      .def_readonly("v", &IterateRecord::v)
      .def_readonly("alpha", &IterateRecord::alpha)
      .def_readonly("grad_norm", &IterateRecord::grad_norm)
      .def_readonly("step_norm", &IterateRecord::step_norm)
      .def_readonly("subproblem_status", &IterateRecord::subproblem_status);

  py::class_<IterateTrace>(m, "IterateTrace")
      .def_readonly("records", &IterateTrace::records)
      .def_readonly("terminal_status", &IterateTrace::terminal_status)
      .def_readonly("final_x", &IterateTrace::final_x);

  m.def("run_newton", &run_newton, py::arg("instance"), py::arg("x0"), py::arg("options"));
  m.def("direction_coderivative",
        [](const ProblemInstance& inst, const Vector& x) {
          return direction_coderivative(inst, x, nullptr);
        });
  m.def("direction_graphical", &direction_graphical);
  m.def(
      "armijo_step",
      [](const ProblemInstance& inst, const Vector& x, const Vector& d,
         const LineSearchParams& p) {
        bool fail = false;
        const double a = armijo_step(inst, x, d, p, &fail);
        return py::make_tuple(a, fail);
      },
      py::arg("instance"), py::arg("x"), py::arg("d"), py::arg("params"));

  py::class_<ProbeReport>(m, "ProbeReport")
      .def_readonly("samples", &ProbeReport::samples)
      .def_readonly("violations", &ProbeReport::violations)
      .def_readonly("worst_ratio", &ProbeReport::worst_ratio)
      .def_readonly("estimated_kappa", &ProbeReport::estimated_kappa)
      .def_readonly("estimated_ell", &ProbeReport::estimated_ell)
      .def_readonly("estimated_rho", &ProbeReport::estimated_rho)
      .def_readonly("radii", &ProbeReport::radii)
      .def_readonly("worst_ratio_per_radius", &ProbeReport::worst_ratio_per_radius)
      .def_readonly("decay_verdict", &ProbeReport::decay_verdict);

  py::class_<RateReport>(m, "RateReport")
      .def_readonly("ratios", &RateReport::ratios)
      .def_readonly("superlinear_verdict", &RateReport::superlinear_verdict)
      .def_readonly("final_ratio", &RateReport::final_ratio);

  m.def("tilt_probe", &tilt_probe, py::arg("instance"), py::arg("xbar"), py::arg("kappa_hyp"),
        py::arg("radius"), py::arg("samples"), py::arg("seed") = 1234);
  m.def("semismoothstar_probe", &semismoothstar_probe, py::arg("instance"), py::arg("xbar"),
        py::arg("radii"), py::arg("samples_per_radius") = 64, py::arg("seed") = 1234);
  m.def("superlinear_ratios", &superlinear_ratios);
  m.def("estimate_constants", &estimate_constants, py::arg("instance"), py::arg("xbar"),
        py::arg("radius"), py::arg("samples"), py::arg("seed") = 1234);

  m.def("fd_second_quotient", &fd_second_quotient);
  m.def("second_subderivative_elqp",
        [](const ProblemInstance& inst, const Vector& x, const Vector& w) {
          if (!inst.elqp()) throw ConfigInvalidError("expected an elqp instance");
          return second_subderivative_elqp(*inst.elqp(), x, w);
        });
  m.def("second_subderivative_constrained",
        [](const ProblemInstance& inst, const Vector& x, const Vector& v, const Vector& w) {
          if (!inst.nlp()) throw ConfigInvalidError("expected an nlp instance");
          return second_subderivative_constrained(*inst.nlp(), x, v, w);
        });

  m.def(
      "solve_cone_qp",
      [](const Matrix& H, const Vector& g, const Matrix& eq, const Matrix& ineq) {
        ConeQP qp;
        qp.H = H;
        qp.g = g;
        qp.cone.eq = eq;
        qp.cone.ineq = ineq;
        const QPSolution s = solve_cone_qp(qp);
        return py::make_tuple(s.w, static_cast<int>(s.status), s.kkt_residual);
      },
      py::arg("H"), py::arg("g"), py::arg("eq"), py::arg("ineq"));
  m.def("project_soc", &project_soc);

  m.def(
      "run_experiment_file",
      [](const std::string& config_path, const std::string& outdir) {
        ExperimentConfig cfg = ExperimentConfig::from_file(config_path);
        if (!outdir.empty()) cfg.outdir = outdir;
        const RunReport rep = run_experiment(cfg);
        return report_to_json(cfg, rep).dump(2);
      },
      py::arg("config_path"), py::arg("outdir") = std::string());
}
