#include "tiltnewton/qp.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <algorithm>
#include <cmath>

namespace tiltnewton {

namespace {

constexpr double kActTol = 1e-11;
constexpr double kStepTol = 1e-13;

// Orthonormal basis of null(A), rank-revealing. A may have zero rows.
Matrix nullspace_basis(const Matrix& A, int n) {
  if (A.rows() == 0) return Matrix::Identity(n, n);
  Eigen::ColPivHouseholderQR<Matrix> qr(A.transpose());
  qr.setThreshold(1e-12);
  const int rank = static_cast<int>(qr.rank());
  Matrix Q = qr.householderQ();
  return Q.rightCols(n - rank);
}

struct ReducedStep {
  enum class Kind { Newton, Ray, Zero } kind = Kind::Zero;
  Vector p;  // full-space step or ray direction
};

// Minimize 1/2 p_z' M p_z + r' p_z in the reduced space spanned by Z.
// Cholesky first, pivoted LDL next, eigendecomposition as the last resort
// (detects rays of unbounded descent on semidefinite or indefinite M).
ReducedStep reduced_step(const Matrix& M, const Vector& r, const Matrix& Z) {
  ReducedStep out;
  const int nz = static_cast<int>(M.rows());
  if (nz == 0) {
    out.kind = ReducedStep::Kind::Zero;
    return out;
  }
  {
    Eigen::LLT<Matrix> llt(M);
    if (llt.info() == Eigen::Success) {
      Vector pz = -llt.solve(r);
      out.kind = ReducedStep::Kind::Newton;
      out.p = Z * pz;
      return out;
    }
  }
  const double scale = std::max(M.cwiseAbs().maxCoeff(), 1e-300);
  {
    Eigen::LDLT<Matrix> ldlt(M);
    if (ldlt.info() == Eigen::Success && ldlt.isPositive() &&
        ldlt.vectorD().minCoeff() > 1e-12 * scale) {
      Vector pz = -ldlt.solve(r);
      out.kind = ReducedStep::Kind::Newton;
      out.p = Z * pz;
      return out;
    }
  }
  Eigen::SelfAdjointEigenSolver<Matrix> es(M);
  const Vector ev = es.eigenvalues();
  const Matrix V = es.eigenvectors();
  const double emax = std::max(ev.cwiseAbs().maxCoeff(), 1e-300);
  const double pd_tol = 1e-11 * emax;
  // negative curvature ray
  for (int i = 0; i < nz; ++i) {
    if (ev(i) < -pd_tol) {
      Vector dz = V.col(i);
      if (r.dot(dz) > 0) dz = -dz;
      out.kind = ReducedStep::Kind::Ray;
      out.p = Z * dz;
      return out;
    }
  }
  // zero curvature with nonzero slope: linear descent ray
  for (int i = 0; i < nz; ++i) {
    if (std::abs(ev(i)) <= pd_tol) {
      const double slope = r.dot(V.col(i));
      if (std::abs(slope) > 1e-10 * (1.0 + r.norm())) {
        Vector dz = slope > 0 ? Vector(-V.col(i)) : Vector(V.col(i));
        out.kind = ReducedStep::Kind::Ray;
        out.p = Z * dz;
        return out;
      }
    }
  }
  // positive semidefinite with consistent gradient: minimum-norm Newton step
  Vector pz = Vector::Zero(nz);
  for (int i = 0; i < nz; ++i) {
    if (ev(i) > pd_tol) pz -= (r.dot(V.col(i)) / ev(i)) * V.col(i);
  }
  out.kind = ReducedStep::Kind::Newton;
  out.p = Z * pz;
  return out;
}

Matrix stack_active(const Matrix& Aeq, const Matrix& Ain, const std::vector<int>& work) {
  const int n = static_cast<int>(Aeq.cols() > 0 ? Aeq.cols() : Ain.cols());
  Matrix A(Aeq.rows() + static_cast<int>(work.size()), n);
  if (Aeq.rows() > 0) A.topRows(Aeq.rows()) = Aeq;
  for (size_t i = 0; i < work.size(); ++i)
    A.row(Aeq.rows() + static_cast<int>(i)) = Ain.row(work[i]);
  return A;
}

void polish_on_active_set(const AffineQP& qp, const Matrix& A_act, const std::vector<int>& work,
                          QPSolution& sol);

double kkt_residual(const AffineQP& qp, const Vector& w, const Vector& mult) {
  const int me = static_cast<int>(qp.Aeq.rows());
  const int mi = static_cast<int>(qp.Ain.rows());
  Vector stat = qp.H * w + qp.g;
  if (me > 0) stat += qp.Aeq.transpose() * mult.head(me);
  if (mi > 0) stat += qp.Ain.transpose() * mult.tail(mi);
  double res = stat.cwiseAbs().maxCoeff();
  if (me > 0) res = std::max(res, (qp.Aeq * w - qp.beq).cwiseAbs().maxCoeff());
  for (int i = 0; i < mi; ++i) {
    const double ci = qp.Ain.row(i).dot(w) - qp.bin(i);
    res = std::max(res, std::max(ci, 0.0));
    res = std::max(res, std::abs(mult(me + i) * ci));
    res = std::max(res, std::max(-mult(me + i), 0.0));
  }
  return res;
}

// Direct solve of the KKT system on the converged active set, kept only when
// it tightens the residual without violating inactive rows.
void polish_on_active_set(const AffineQP& qp, const Matrix& A_act, const std::vector<int>& work,
                          QPSolution& sol) {
  const int n = static_cast<int>(qp.H.rows());
  const int me = static_cast<int>(qp.Aeq.rows());
  const int mi = static_cast<int>(qp.Ain.rows());
  const int na = static_cast<int>(A_act.rows());
  Matrix K = Matrix::Zero(n + na, n + na);
  K.topLeftCorner(n, n) = qp.H;
  K.topRightCorner(n, na) = A_act.transpose();
  K.bottomLeftCorner(na, n) = A_act;
  Vector rhs(n + na);
  rhs.head(n) = -qp.g;
  if (me > 0) rhs.segment(n, me) = qp.beq;
  for (size_t i = 0; i < work.size(); ++i) rhs(n + me + static_cast<int>(i)) = qp.bin(work[i]);
  Eigen::CompleteOrthogonalDecomposition<Matrix> cod(K);
  const Vector sol_kkt = cod.solve(rhs);
  const Vector w = sol_kkt.head(n);
  Vector mult = Vector::Zero(me + mi);
  if (me > 0) mult.head(me) = sol_kkt.segment(n, me);
  for (size_t i = 0; i < work.size(); ++i)
    mult(me + work[i]) = std::max(sol_kkt(n + me + static_cast<int>(i)), 0.0);
  const double res = kkt_residual(qp, w, mult);
  if (res < sol.kkt_residual) {
    sol.w = w;
    sol.multipliers = mult;
    sol.kkt_residual = res;
  }
}

}  // namespace

QPSolution solve_affine_qp(const AffineQP& qp, const Vector& w0, double tol, int max_iter) {
  const int n = static_cast<int>(qp.H.rows());
  const int me = static_cast<int>(qp.Aeq.rows());
  const int mi = static_cast<int>(qp.Ain.rows());
  if (max_iter <= 0) max_iter = 100 + 30 * (n + mi);

  Vector w = w0;
  std::vector<int> work;
  for (int i = 0; i < mi; ++i)
    if (std::abs(qp.Ain.row(i).dot(w) - qp.bin(i)) <= kActTol * (1.0 + std::abs(qp.bin(i))))
      work.push_back(i);

  QPSolution sol;
  sol.multipliers = Vector::Zero(me + mi);
  int degenerate_run = 0;
  const int bland_limit = 3 * std::max(n, 1);

  for (int iter = 0; iter < max_iter; ++iter) {
    sol.iterations = iter + 1;
    const Matrix A_act = stack_active(qp.Aeq, qp.Ain, work);
    const Matrix Z = nullspace_basis(A_act, n);
    const Vector grad = qp.H * w + qp.g;
    ReducedStep step;
    if (Z.cols() == 0) {
      step.kind = ReducedStep::Kind::Zero;
    } else {
      const Matrix M = Z.transpose() * qp.H * Z;
      const Vector r = Z.transpose() * grad;
      step = reduced_step(M, r, Z);
    }

    Vector p = step.kind == ReducedStep::Kind::Zero ? Vector(Vector::Zero(n)) : step.p;
    const bool ray = step.kind == ReducedStep::Kind::Ray;

    if (!ray && p.norm() <= kStepTol * (1.0 + w.norm())) {
      // candidate optimum on the working set: check multipliers
      Vector lam;
      if (A_act.rows() > 0) {
        Eigen::CompleteOrthogonalDecomposition<Matrix> cod(A_act.transpose());
        lam = cod.solve(-grad);
      } else {
        lam = Vector::Zero(0);
      }
      const double mult_tol = 1e-9 * (1.0 + grad.norm());
      int drop = -1;
      double most_negative = -mult_tol;
      if (degenerate_run > bland_limit) {
        for (size_t i = 0; i < work.size(); ++i) {
          if (lam(me + static_cast<int>(i)) < -mult_tol) {
            drop = static_cast<int>(i);
            break;  // Bland: lowest working-set position
          }
        }
      } else {
        for (size_t i = 0; i < work.size(); ++i) {
          const double li = lam(me + static_cast<int>(i));
          if (li < most_negative) {
            most_negative = li;
            drop = static_cast<int>(i);
          }
        }
      }
      if (drop < 0) {
        sol.w = w;
        sol.active = work;
        sol.multipliers = Vector::Zero(me + mi);
        if (me > 0) sol.multipliers.head(me) = lam.head(me);
        for (size_t i = 0; i < work.size(); ++i)
          sol.multipliers(me + work[i]) = std::max(lam(me + static_cast<int>(i)), 0.0);
        sol.status = QPStatus::Optimal;
        sol.kkt_residual = kkt_residual(qp, w, sol.multipliers);
        if (sol.kkt_residual > tol) {
          polish_on_active_set(qp, A_act, work, sol);
          if (sol.kkt_residual > tol) sol.status = QPStatus::MaxIter;
        }
        return sol;
      }
      work.erase(work.begin() + drop);
      ++degenerate_run;
      continue;
    }

    // step (or ray) from w along p: ratio test against inactive rows
    double alpha = ray ? kInf : 1.0;
    int blocking = -1;
    for (int i = 0; i < mi; ++i) {
      if (std::find(work.begin(), work.end(), i) != work.end()) continue;
      const double s = qp.Ain.row(i).dot(p);
      if (s > 1e-14) {
        const double cap = (qp.bin(i) - qp.Ain.row(i).dot(w)) / s;
        if (cap < alpha - 1e-15) {
          alpha = cap;
          blocking = i;
        }
      }
    }
    if (ray && blocking < 0) {
      sol.w = w;
      sol.active = work;
      sol.status = QPStatus::Unbounded;
      sol.kkt_residual = kInf;
      return sol;
    }
    alpha = std::max(alpha, 0.0);
    w += alpha * p;
    if (blocking >= 0) {
      work.push_back(blocking);
      std::sort(work.begin(), work.end());
    }
    if (alpha <= 1e-13)
      ++degenerate_run;
    else
      degenerate_run = 0;
  }

  sol.w = w;
  sol.active = work;
  sol.status = QPStatus::MaxIter;
  sol.kkt_residual = kInf;
  return sol;
}

QPSolution solve_cone_qp(const ConeQP& qp, double tol, int max_iter) {
  const int n = static_cast<int>(qp.H.rows());
  require_dim(qp.g.size() == n, "cone QP gradient");
  AffineQP aqp;
  aqp.H = qp.H;
  aqp.g = qp.g;
  aqp.Aeq = qp.cone.eq.rows() > 0 ? qp.cone.eq : Matrix::Zero(0, n);
  aqp.beq = Vector::Zero(aqp.Aeq.rows());
  aqp.Ain = qp.cone.ineq.rows() > 0 ? qp.cone.ineq : Matrix::Zero(0, n);
  aqp.bin = Vector::Zero(aqp.Ain.rows());
  return solve_affine_qp(aqp, Vector::Zero(n), tol, max_iter);
}

Vector project_polyhedral(const PolyhedralSet& set, const Vector& z) {
  const int m = set.dim();
  require_dim(z.size() == m, "projection point");
  if (set.contains(z, 1e-13)) return z;
  const int e = static_cast<int>(set.E.rows());
  const int p = static_cast<int>(set.G.rows());
  Matrix S(e + p, m);
  if (e > 0) S.topRows(e) = set.E;
  if (p > 0) S.bottomRows(p) = set.G;
  Vector rhs(e + p);
  if (e > 0) rhs.head(e) = set.d;
  if (p > 0) rhs.tail(p) = set.h;

  ConeQP dual;
  dual.H = S * S.transpose();
  dual.g = -(S * z - rhs);
  dual.cone.eq = Matrix::Zero(0, e + p);
  dual.cone.ineq = Matrix::Zero(p, e + p);
  for (int i = 0; i < p; ++i) dual.cone.ineq(i, e + i) = -1.0;  // mu >= 0

  QPSolution ds = solve_cone_qp(dual, 1e-12);
  if (ds.status == QPStatus::Unbounded)
    throw InfeasibleError("project_polyhedral: the polyhedron is empty");
  if (ds.status != QPStatus::Optimal)
    throw InfeasibleError("project_polyhedral: dual solve failed");
  return z - S.transpose() * ds.w;
}

Vector project_soc(const Vector& z) {
  const int m = static_cast<int>(z.size());
  require_dim(m >= 2, "second-order cone dimension");
  const double t = z(m - 1);
  const double s = z.head(m - 1).norm();
  if (s <= t) return z;
  if (s <= -t) return Vector::Zero(m);
  Vector out(m);
  const double c = 0.5 * (s + t);
  out.head(m - 1) = (c / s) * z.head(m - 1);
  out(m - 1) = c;
  return out;
}

NormalDecomposition normal_cone_decomposition(const PolyhedralSet& set, const Vector& u,
                                              const Vector& v, double tol_act) {
  if (!set.contains(u, std::max(tol_act, 1e-9)))
    throw NotMemberError("normal_cone_decomposition: base point outside the set");
  const auto act = set.active_rows(u, tol_act);
  const int e = static_cast<int>(set.E.rows());
  const int p = static_cast<int>(act.size());
  const int m = set.dim();
  NormalDecomposition out;
  out.active_rows = act;
  out.eq_mult = Vector::Zero(e);
  out.ineq_mult = Vector::Zero(set.G.rows());
  if (e + p == 0) {
    out.residual = v.norm();
    return out;
  }
  Matrix S(e + p, m);
  if (e > 0) S.topRows(e) = set.E;
  for (int i = 0; i < p; ++i) S.row(e + i) = set.G.row(act[i]);

  ConeQP nnls;
  nnls.H = S * S.transpose();
  nnls.g = -S * v;
  nnls.cone.eq = Matrix::Zero(0, e + p);
  nnls.cone.ineq = Matrix::Zero(p, e + p);
  for (int i = 0; i < p; ++i) nnls.cone.ineq(i, e + i) = -1.0;
  QPSolution s = solve_cone_qp(nnls, 1e-12);
  if (e > 0) out.eq_mult = s.w.head(e);
  for (int i = 0; i < p; ++i) out.ineq_mult(act[i]) = s.w(e + i);
  out.residual = (S.transpose() * s.w - v).norm();
  return out;
}

double normal_cone_residual(const PolyhedralSet& set, const Vector& u, const Vector& v,
                            double tol_act) {
  return normal_cone_decomposition(set, u, v, tol_act).residual;
}

Vector cone_project(const ConeRep& cone, const Vector& y) {
  const int n = static_cast<int>(y.size());
  if (cone.contains(y, 1e-13)) return y;
  ConeQP qp;
  qp.H = Matrix::Identity(n, n);
  qp.g = -y;
  qp.cone = cone;
  QPSolution s = solve_cone_qp(qp, 1e-12);
  return s.w;
}

double cone_sqdist(const ConeRep& cone, const Vector& y) {
  return (cone_project(cone, y) - y).squaredNorm();
}

}  // namespace tiltnewton
