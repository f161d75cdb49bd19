#pragma once

#include "tiltnewton/problems.hpp"

namespace tiltnewton {

struct MoreauParams {
  double r = 0.1;
  double inner_tol = 1e-10;
  int inner_max_iters = 10000;
};

struct ProxResult {
  Vector point;
  double inner_residual = kInf;
  int iterations = 0;
  bool exact = false;  // closed-form / direct solve vs inner iteration
  bool converged = false;
};

/// Proximal point argmin_w phi(w) + 1/(2r)||w - x||^2. Closed forms where the
/// class admits them, a proximal-gradient inner loop otherwise. Throws
/// InnerSolveFailed when the loop exhausts inner_max_iters.
ProxResult prox(const ProblemInstance& inst, const MoreauParams& params, const Vector& x);

/// phi(P) + 1/(2r)||P - x||^2 with P the proximal point; always <= phi(x).
double envelope_value(const ProblemInstance& inst, const MoreauParams& params, const Vector& x);

/// (x - P)/r; satisfies v in subdifferential(phi)(x - r v) within tolerance.
Vector envelope_gradient(const ProblemInstance& inst, const MoreauParams& params, const Vector& x);

/// Default regularization 0.1 * (1 / rho_hat) for a known or probed
/// lower-quadratic constant; 0.1 when the hint is zero (convex case).
inline double suggested_moreau_r(double rho_hint = 0.0) {
  return rho_hint > 0.0 ? 0.1 / rho_hint : 0.1;
}

}  // namespace tiltnewton
