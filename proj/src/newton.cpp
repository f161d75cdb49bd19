#include "tiltnewton/newton.hpp"

#include <Eigen/LU>
#include <cmath>

namespace tiltnewton {

std::string to_string(NewtonVariant v) {
  switch (v) {
    case NewtonVariant::Coderivative: return "coderivative";
    case NewtonVariant::Graphical: return "graphical";
    case NewtonVariant::ProxGraphical: return "prox_graphical";
    case NewtonVariant::SemismoothBaseline: return "semismooth_baseline";
    case NewtonVariant::BDiffBaseline: return "bdiff_baseline";
  }
  return "unknown";
}

NewtonVariant newton_variant_from_string(const std::string& s) {
  if (s == "coderivative") return NewtonVariant::Coderivative;
  if (s == "graphical") return NewtonVariant::Graphical;
  if (s == "prox_graphical") return NewtonVariant::ProxGraphical;
  if (s == "semismooth_baseline") return NewtonVariant::SemismoothBaseline;
  if (s == "bdiff_baseline") return NewtonVariant::BDiffBaseline;
  throw ConfigInvalidError("unknown newton variant: " + s);
}

std::string to_string(TerminalStatus s) {
  switch (s) {
    case TerminalStatus::Stationary: return "stationary";
    case TerminalStatus::MaxIter: return "max_iter";
    case TerminalStatus::SubproblemFailed: return "subproblem_failed";
    case TerminalStatus::Diverged: return "diverged";
  }
  return "unknown";
}

namespace {

// solve H d = g for one selection; nullopt when the selection is singular
std::optional<Vector> try_selection_solve(const Matrix& H, const Vector& g) {
  Eigen::FullPivLU<Matrix> lu(H);
  lu.setThreshold(1e-12);
  if (!lu.isInvertible()) return std::nullopt;
  return lu.solve(g);
}

Vector selection_direction(const ProblemInstance& inst, const Vector& x, int* selection_used) {
  const Vector g = inst.gradient(x);
  const auto selections = hessian_selections(inst, x);
  for (size_t i = 0; i < selections.size(); ++i) {
    if (auto d = try_selection_solve(selections[i].H, g)) {
      if (selection_used) *selection_used = static_cast<int>(i);
      return *d;
    }
  }
  throw SingularSelectionError("all limiting-Hessian selections are singular at this point");
}

bool grad_norm_nondecreasing_tail(const std::vector<IterateRecord>& records, int window) {
  if (static_cast<int>(records.size()) < window + 1) return false;
  const size_t n = records.size();
  for (size_t i = n - window; i < n; ++i) {
    if (records[i].grad_norm < records[i - 1].grad_norm - 1e-15) return false;
  }
  return true;
}

}  // namespace

Vector direction_coderivative(const ProblemInstance& inst, const Vector& x, int* selection_used) {
  return selection_direction(inst, x, selection_used);
}

Vector semismooth_baseline_direction(const ProblemInstance& inst, const Vector& x,
                                     int* selection_used) {
  return selection_direction(inst, x, selection_used);
}

Vector direction_graphical(const ProblemInstance& inst, const Vector& x, const Vector& v) {
  const SecondOrderModel model = make_second_order_model(inst, x, v);
  const ModelMinimizer mm = minimize_second_model(v, model);
  if (mm.status == QPStatus::Unbounded)
    throw SubproblemUnboundedError("second-order subproblem unbounded below");
  if (mm.status != QPStatus::Optimal)
    throw SubproblemUnboundedError("second-order subproblem did not converge");
  return mm.w;
}

double armijo_step(const ProblemInstance& inst, const Vector& x, const Vector& d,
                   const LineSearchParams& params, bool* descent_failure) {
  if (descent_failure) *descent_failure = false;
  const double slope = inst.gradient(x).dot(d);
  if (slope >= 0) {
    if (descent_failure) *descent_failure = true;
    return params.alpha_min;
  }
  const double f0 = inst.value(x);
  double alpha = 1.0;
  while (alpha >= params.alpha_min) {
    if (inst.value(x + alpha * d) <= f0 + params.mu * alpha * slope) return alpha;
    alpha *= params.shrink;
  }
  if (descent_failure) *descent_failure = true;
  return params.alpha_min;
}

IterateTrace run_newton(const ProblemInstance& inst, const Vector& x0, const NewtonOptions& opts) {
  if (opts.variant == NewtonVariant::ProxGraphical) return run_newton_prox(inst, x0, opts);

  IterateTrace trace;
  Vector x = x0;
  for (int k = 0; k <= opts.max_iters; ++k) {
    IterateRecord rec;
    rec.k = k;
    rec.x = x;
    rec.v = inst.gradient(x);
    rec.grad_norm = rec.v.norm();

    if (rec.grad_norm <= opts.grad_tol) {
      trace.records.push_back(std::move(rec));
      trace.terminal_status = TerminalStatus::Stationary;
      trace.final_x = x;
      return trace;
    }
    if (x.norm() > 1e6) {
      trace.records.push_back(std::move(rec));
      trace.terminal_status = TerminalStatus::Diverged;
      trace.final_x = x;
      return trace;
    }
    if (k == opts.max_iters) {
      trace.records.push_back(std::move(rec));
      break;
    }

    Vector dir;
    try {
      switch (opts.variant) {
        case NewtonVariant::Coderivative:
        case NewtonVariant::SemismoothBaseline:
        case NewtonVariant::BDiffBaseline: {
          int sel = -1;
          dir = -selection_direction(inst, x, &sel);
          rec.subproblem_status = "selection_" + std::to_string(sel);
          break;
        }
        case NewtonVariant::Graphical: {
          dir = direction_graphical(inst, x, rec.v);
          rec.subproblem_status = "qp_optimal";
          break;
        }
        default:
          break;
      }
    } catch (const std::runtime_error& e) {
      rec.subproblem_status = std::string("failed: ") + e.what();
      trace.records.push_back(std::move(rec));
      trace.terminal_status = TerminalStatus::SubproblemFailed;
      trace.final_x = x;
      return trace;
    }

    double alpha = 1.0;
    if (opts.line_search) {
      bool fail = false;
      alpha = armijo_step(inst, x, dir, *opts.line_search, &fail);
      if (fail) rec.subproblem_status += "|descent_failure";
    }
    rec.direction = dir;
    rec.alpha = alpha;
    rec.step_norm = alpha * dir.norm();
    x += alpha * dir;
    trace.records.push_back(std::move(rec));
  }

  trace.final_x = x;
  trace.terminal_status = (x.norm() > 1e6 || grad_norm_nondecreasing_tail(trace.records, 10))
                              ? TerminalStatus::Diverged
                              : TerminalStatus::MaxIter;
  return trace;
}

IterateTrace run_newton_prox(const ProblemInstance& inst, const Vector& x0,
                             const NewtonOptions& opts) {
  IterateTrace trace;
  Vector x = x0;
  double r = opts.r;
  MoreauParams mp = opts.prox_params;
  int halvings = 0;

  for (int k = 0; k <= opts.max_iters; ++k) {
    mp.r = r;
    IterateRecord rec;
    rec.k = k;
    rec.x = x;

    ProxResult px;
    try {
      px = prox(inst, mp, x);
    } catch (const std::runtime_error& e) {
      rec.subproblem_status = std::string("prox_failed: ") + e.what();
      rec.v = Vector::Zero(inst.dimension());
      rec.grad_norm = kInf;
      trace.records.push_back(std::move(rec));
      trace.terminal_status = TerminalStatus::SubproblemFailed;
      trace.final_x = x;
      return trace;
    }
    rec.v = (x - px.point) / r;
    rec.grad_norm = rec.v.norm();

    if (rec.grad_norm <= opts.grad_tol) {
      trace.records.push_back(std::move(rec));
      trace.terminal_status = TerminalStatus::Stationary;
      trace.final_x = x;
      return trace;
    }
    if (x.norm() > 1e6) {
      trace.records.push_back(std::move(rec));
      trace.terminal_status = TerminalStatus::Diverged;
      trace.final_x = x;
      return trace;
    }
    if (k == opts.max_iters) {
      trace.records.push_back(std::move(rec));
      break;
    }

    Vector w;
    bool solved = false;
    while (!solved) {
      try {
        const SecondOrderModel model = make_second_order_model(inst, px.point, rec.v, opts.tol_act);
        const ModelMinimizer mm = minimize_second_model(rec.v, model);
        if (mm.status == QPStatus::Unbounded)
          throw SubproblemUnboundedError("subproblem unbounded");
        if (mm.status != QPStatus::Optimal)
          throw SubproblemUnboundedError("subproblem did not converge");
        w = mm.w;
        solved = true;
      } catch (const SubproblemUnboundedError&) {
        if (halvings >= 6) {
          rec.subproblem_status = "failed: subproblem unbounded after r halvings";
          trace.records.push_back(std::move(rec));
          trace.terminal_status = TerminalStatus::SubproblemFailed;
          trace.final_x = x;
          return trace;
        }
        r *= 0.5;
        mp.r = r;
        ++halvings;
        px = prox(inst, mp, x);
        rec.v = (x - px.point) / r;
        rec.grad_norm = rec.v.norm();
      } catch (const std::runtime_error& e) {
        rec.subproblem_status = std::string("failed: ") + e.what();
        trace.records.push_back(std::move(rec));
        trace.terminal_status = TerminalStatus::SubproblemFailed;
        trace.final_x = x;
        return trace;
      }
    }
    rec.subproblem_status = "qp_optimal";

    Vector dir = w - r * rec.v;
    double alpha = 1.0;
    if (opts.line_search) {
      // Armijo on the envelope, whose gradient is v
      const double slope = rec.v.dot(dir);
      if (slope < 0) {
        const double e0 = inst.value(px.point) + (0.5 / r) * (px.point - x).squaredNorm();
        alpha = 1.0;
        while (alpha >= opts.line_search->alpha_min) {
          MoreauParams emp = mp;
          const Vector xa = x + alpha * dir;
          const ProxResult pa = prox(inst, emp, xa);
          const double ea = inst.value(pa.point) + (0.5 / r) * (pa.point - xa).squaredNorm();
          if (ea <= e0 + opts.line_search->mu * alpha * slope) break;
          alpha *= opts.line_search->shrink;
        }
        alpha = std::max(alpha, opts.line_search->alpha_min);
      } else {
        rec.subproblem_status += "|descent_failure";
        alpha = opts.line_search->alpha_min;
      }
    }
    rec.direction = dir;
    rec.alpha = alpha;
    rec.step_norm = alpha * dir.norm();
    x += alpha * dir;
    trace.records.push_back(std::move(rec));
  }

  trace.final_x = x;
  trace.terminal_status = (x.norm() > 1e6 || grad_norm_nondecreasing_tail(trace.records, 10))
                              ? TerminalStatus::Diverged
                              : TerminalStatus::MaxIter;
  return trace;
}

}  // namespace tiltnewton
