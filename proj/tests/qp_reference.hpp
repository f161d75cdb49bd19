#pragma once

// Test-only reference for cone QPs, independent of the active-set solver:
// projected gradient on the dual (projection = clamping the inequality
// multipliers). Valid for H positive definite.

#include "tiltnewton/qp.hpp"

namespace tiltnewton::testing {

inline double dual_projected_gradient_reference(const ConeQP& qp, int max_iter = 1000000) {
  const int me = static_cast<int>(qp.cone.eq.rows());
  const int mi = static_cast<int>(qp.cone.ineq.rows());
  const int n = static_cast<int>(qp.H.rows());
  Matrix A(me + mi, n);
  if (me > 0) A.topRows(me) = qp.cone.eq;
  if (mi > 0) A.bottomRows(mi) = qp.cone.ineq;
  const Matrix Hinv = qp.H.llt().solve(Matrix::Identity(n, n));
  if (me + mi == 0) {
    const Vector w0 = -Hinv * qp.g;
    return 0.5 * w0.dot(qp.H * w0) + qp.g.dot(w0);
  }
  const Matrix K = A * Hinv * A.transpose();
  const double L = std::max(K.operatorNorm(), 1e-12);

  Vector lam = Vector::Zero(me + mi);
  Vector w;
  double prev = kInf;
  for (int k = 0; k < max_iter; ++k) {
    w = -Hinv * (qp.g + A.transpose() * lam);
    const Vector grad = -A * w;  // gradient of the negated dual
    lam -= grad / L;
    for (int i = me; i < me + mi; ++i) lam(i) = std::max(lam(i), 0.0);
    if (k % 256 == 0) {
      const double val = 0.5 * w.dot(qp.H * w) + qp.g.dot(w);
      if (std::abs(val - prev) < 1e-15 * (1.0 + std::abs(val)) && k > 1000) break;
      prev = val;
    }
  }
  w = -Hinv * (qp.g + A.transpose() * lam);
  return 0.5 * w.dot(qp.H * w) + qp.g.dot(w);
}

}  // namespace tiltnewton::testing
