#pragma once

#include <optional>
#include <string>
#include <vector>

#include "tiltnewton/envelope.hpp"
#include "tiltnewton/problems.hpp"
#include "tiltnewton/secondorder.hpp"

namespace tiltnewton {

enum class NewtonVariant { Coderivative, Graphical, ProxGraphical, SemismoothBaseline, BDiffBaseline };

std::string to_string(NewtonVariant v);
NewtonVariant newton_variant_from_string(const std::string& s);

struct LineSearchParams {
  double mu = 0.1;        // sufficient-decrease factor in (0,1)
  double shrink = 0.5;    // backtracking factor in (0,1)
  double alpha_min = 1e-8;
};

struct NewtonOptions {
  NewtonVariant variant = NewtonVariant::Graphical;
  double r = 0.1;  // Moreau parameter (ProxGraphical)
  double grad_tol = 1e-10;
  int max_iters = 100;
  std::optional<LineSearchParams> line_search;
  MoreauParams prox_params;  // inner solve controls for the prox variant
  double tol_act = 1e-8;
};

enum class TerminalStatus { Stationary, MaxIter, SubproblemFailed, Diverged };

std::string to_string(TerminalStatus s);

struct IterateRecord {
  int k = 0;
  Vector x;
  Vector v;          // gradient (or envelope gradient) at x
  Vector direction;  // additive step direction; empty on the terminal record
  double alpha = 0.0;
  double grad_norm = 0.0;
  double step_norm = 0.0;
  std::string subproblem_status;
};

struct IterateTrace {
  std::vector<IterateRecord> records;
  TerminalStatus terminal_status = TerminalStatus::MaxIter;
  Vector final_x;
};

/// Direction solving H d = grad for a limiting-Hessian selection H; singular
/// selections are skipped per the retry policy. Throws SingularSelectionError
/// when every selection is singular.
Vector direction_coderivative(const ProblemInstance& inst, const Vector& x,
                              int* selection_used = nullptr);

/// Baseline with the identical selection mechanics (the enumerated selections
/// realize the limiting Hessian set for all implemented classes).
Vector semismooth_baseline_direction(const ProblemInstance& inst, const Vector& x,
                                     int* selection_used = nullptr);

/// Unique minimizer of <v,w> + 1/2 d2 phi(x,v)(w).
/// Throws SubproblemUnboundedError when the model is unbounded below.
Vector direction_graphical(const ProblemInstance& inst, const Vector& x, const Vector& v);

/// Largest alpha in {1, shrink, shrink^2, ...} >= alpha_min with sufficient
/// decrease; alpha_min with the failure flag when d is not a descent direction.
double armijo_step(const ProblemInstance& inst, const Vector& x, const Vector& d,
                   const LineSearchParams& params, bool* descent_failure = nullptr);

IterateTrace run_newton(const ProblemInstance& inst, const Vector& x0, const NewtonOptions& opts);
IterateTrace run_newton_prox(const ProblemInstance& inst, const Vector& x0,
                             const NewtonOptions& opts);

}  // namespace tiltnewton
