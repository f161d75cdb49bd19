#include "tiltnewton/secondorder.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <algorithm>
#include <cmath>

namespace tiltnewton {

bool ConeLike::contains(const Vector& y, double tol) const {
  if (kind == Kind::Polyhedral) return rep.contains(y, tol);
  return y.head(y.size() - 1).norm() <= y(y.size() - 1) + tol;
}

Vector ConeLike::project(const Vector& y) const {
  return kind == Kind::Polyhedral ? cone_project(rep, y) : project_soc(y);
}

double ConeLike::sqdist(const Vector& y) const { return (project(y) - y).squaredNorm(); }

ConeLike soc_critical_cone(const Vector& z, const Vector& mu, double tol) {
  const int m = static_cast<int>(z.size());
  require_dim(mu.size() == m && m >= 2, "soc_critical_cone arguments");
  const double zs = z.head(m - 1).norm(), zt = z(m - 1);
  const double ms = mu.head(m - 1).norm(), mt = mu(m - 1);
  const double scale = 1.0 + z.norm() + mu.norm();

  if (zs > zt + tol * scale) throw NotInGraphError("soc_critical_cone: z outside the cone");

  if (z.norm() <= tol * scale) {
    // vertex: mu must lie in the polar cone -Q
    if (mu.norm() <= tol * scale) return ConeLike::soc(m);
    if (ms > -mt + tol * scale)
      throw NotInGraphError("soc_critical_cone: mu outside the polar cone at the vertex");
    // interior polar normal: the cone meets the orthogonal complement only at
    // the origin (Cauchy-Schwarz is strict), so the critical cone degenerates
    if (ms < -mt - tol * scale) return ConeLike::polyhedral(ConeRep::zero(m));
    // boundary of -Q, mu != 0: the critical cone is a ray
    Vector dir(m);
    dir.head(m - 1) = mu.head(m - 1);
    dir(m - 1) = -mt;
    return ConeLike::polyhedral(ConeRep::ray(dir));
  }

  if (zs < zt - tol * scale) {
    // interior point: only the zero normal is admissible
    if (mu.norm() > tol * scale)
      throw NotInGraphError("soc_critical_cone: nonzero normal at an interior point");
    return ConeLike::polyhedral(ConeRep::full(m));
  }

  // z on the boundary, z != 0
  if (mu.norm() <= tol * scale) {
    Vector outward(m);
    outward.head(m - 1) = z.head(m - 1) / zs;
    outward(m - 1) = -1.0;
    return ConeLike::polyhedral(ConeRep::halfspace(outward));
  }
  // normals at boundary points are nonnegative multiples of (z'/||z'||, -1)
  Vector expected(m);
  expected.head(m - 1) = (-mt) * z.head(m - 1) / zs;
  expected(m - 1) = mt;
  if (mt > tol * scale || (mu - expected).norm() > 10 * tol * scale)
    throw NotInGraphError("soc_critical_cone: mu not normal at the boundary point");
  return ConeLike::polyhedral(ConeRep::hyperplane(mu));
}

namespace {

// rows of the jacobian that can carry a multiplier at x: equalities plus
// active inequalities; signed_row marks the sign-constrained ones.
struct MultiplierRows {
  std::vector<int> rows;
  std::vector<bool> signed_row;
  Matrix S;  // stacked rows
};

MultiplierRows multiplier_rows(const NLPData& nlp, const Vector& x, double tol_act) {
  MultiplierRows mr;
  const Vector fx = nlp.f.value(x);
  const Matrix Jf = nlp.f.jacobian(x);
  for (int i = 0; i < nlp.s; ++i) {
    mr.rows.push_back(i);
    mr.signed_row.push_back(false);
  }
  for (int i = nlp.s; i < nlp.m; ++i) {
    if (std::abs(fx(i)) <= tol_act) {
      mr.rows.push_back(i);
      mr.signed_row.push_back(true);
    }
  }
  mr.S = Matrix::Zero(static_cast<int>(mr.rows.size()), nlp.f.n);
  for (size_t i = 0; i < mr.rows.size(); ++i) mr.S.row(static_cast<int>(i)) = Jf.row(mr.rows[i]);
  return mr;
}

int matrix_rank(const Matrix& A) {
  if (A.rows() == 0) return 0;
  Eigen::ColPivHouseholderQR<Matrix> qr(A);
  qr.setThreshold(1e-10);
  return static_cast<int>(qr.rank());
}

}  // namespace

MultiplierResult lagrange_multipliers(const NLPData& nlp, const Vector& x, const Vector& v,
                                      double tol) {
  const Vector fx = nlp.f.value(x);
  for (int i = 0; i < nlp.s; ++i)
    if (std::abs(fx(i)) > 1e-7) throw NotMemberError("lagrange_multipliers: x infeasible");
  for (int i = nlp.s; i < nlp.m; ++i)
    if (fx(i) > 1e-7) throw NotMemberError("lagrange_multipliers: x infeasible");

  MultiplierRows mr = multiplier_rows(nlp, x, 1e-8);
  const int p = static_cast<int>(mr.rows.size());
  MultiplierResult out;
  out.lambda = Vector::Zero(nlp.m);
  if (p == 0) {
    out.residual = v.norm();
    out.unique = true;
    if (out.residual > tol) throw InfeasibleError("lagrange_multipliers: empty multiplier set");
    return out;
  }

  // phase 1: minimize the match residual over the sign cone
  ConeQP ph1;
  ph1.H = mr.S * mr.S.transpose();
  ph1.g = -mr.S * v;
  ph1.cone.eq = Matrix::Zero(0, p);
  int nsigned = 0;
  for (bool sr : mr.signed_row) nsigned += sr ? 1 : 0;
  ph1.cone.ineq = Matrix::Zero(nsigned, p);
  {
    int k = 0;
    for (int i = 0; i < p; ++i)
      if (mr.signed_row[i]) ph1.cone.ineq(k++, i) = -1.0;
  }
  QPSolution s1 = solve_cone_qp(ph1, 1e-12);
  Vector lam = s1.w;
  out.residual = (mr.S.transpose() * lam - v).norm();
  if (out.residual > tol) throw InfeasibleError("lagrange_multipliers: no multiplier within tolerance");

  out.unique = matrix_rank(mr.S) == p;
  if (!out.unique) {
    // least-norm element subject to staying a solution of the matched system
    AffineQP ph2;
    ph2.H = Matrix::Identity(p, p);
    ph2.g = Vector::Zero(p);
    ph2.Aeq = mr.S.transpose();  // n x p, constraint S' lam = S' lam0
    ph2.beq = ph2.Aeq * lam;
    ph2.Ain = Matrix::Zero(nsigned, p);
    ph2.bin = Vector::Zero(nsigned);
    int k = 0;
    for (int i = 0; i < p; ++i)
      if (mr.signed_row[i]) ph2.Ain(k++, i) = -1.0;
    QPSolution s2 = solve_affine_qp(ph2, lam, 1e-12);
    if (s2.status == QPStatus::Optimal) lam = s2.w;
    out.residual = (mr.S.transpose() * lam - v).norm();
  }
  for (int i = 0; i < p; ++i) out.lambda(mr.rows[i]) = lam(i);
  return out;
}

std::vector<Vector> multiplier_vertices(const NLPData& nlp, const Vector& x, const Vector& v,
                                        double tol) {
  MultiplierRows mr = multiplier_rows(nlp, x, 1e-8);
  const int p = static_cast<int>(mr.rows.size());
  std::vector<Vector> verts;
  if (p == 0) return verts;
  if (p > 16) throw UnsupportedSetError("multiplier_vertices: too many active rows to enumerate");

  for (unsigned mask = 0; mask < (1u << p); ++mask) {
    std::vector<int> sub;
    bool keeps_equalities = true;
    for (int i = 0; i < p; ++i) {
      if (mask & (1u << i))
        sub.push_back(i);
      else if (!mr.signed_row[i])
        keeps_equalities = false;  // equality rows must stay in every vertex basis
    }
    if (!keeps_equalities || sub.empty()) continue;
    Matrix Ssub(static_cast<int>(sub.size()), nlp.f.n);
    for (size_t i = 0; i < sub.size(); ++i) Ssub.row(static_cast<int>(i)) = mr.S.row(sub[i]);
    if (matrix_rank(Ssub) != static_cast<int>(sub.size())) continue;
    Eigen::CompleteOrthogonalDecomposition<Matrix> cod(Ssub.transpose());
    Vector lsub = cod.solve(v);
    if ((Ssub.transpose() * lsub - v).norm() > tol) continue;
    bool sign_ok = true;
    for (size_t i = 0; i < sub.size(); ++i)
      if (mr.signed_row[sub[i]] && lsub(static_cast<int>(i)) < -tol) sign_ok = false;
    if (!sign_ok) continue;
    Vector lam = Vector::Zero(nlp.m);
    for (size_t i = 0; i < sub.size(); ++i) {
      const double li = lsub(static_cast<int>(i));
      lam(mr.rows[sub[i]]) = mr.signed_row[sub[i]] ? std::max(li, 0.0) : li;
    }
    bool dup = false;
    for (const auto& w : verts)
      if ((w - lam).norm() <= 1e-9 * (1.0 + lam.norm())) dup = true;
    if (!dup) verts.push_back(lam);
  }
  return verts;
}

double evaluate_second_model(const SecondOrderModel& model, const Vector& w) {
  const double quad = w.dot(model.H * w);
  switch (model.term) {
    case SecondOrderModel::Term::None:
      return quad;
    case SecondOrderModel::Term::ConeIndicator: {
      const Vector y = model.J * w;
      return model.cone.contains(y, 1e-12) ? quad : kInf;
    }
    case SecondOrderModel::Term::SquaredDistance: {
      const Vector y = model.J * w;
      const bool curved = model.curvature.size() > 0 && model.curvature.cwiseAbs().maxCoeff() > 0;
      if (!curved) return quad + model.weight * model.cone.sqdist(y);
      // envelope of the curved indicator: min over the cone of
      // u'Cu + weight ||u - y||^2
      const int p = static_cast<int>(y.size());
      ConeQP qp;
      qp.H = 2.0 * model.curvature + 2.0 * model.weight * Matrix::Identity(p, p);
      qp.g = -2.0 * model.weight * y;
      qp.cone = model.cone.rep;
      QPSolution s = solve_cone_qp(qp, 1e-12);
      const Vector u = s.w;
      return quad + u.dot(model.curvature * u) + model.weight * (u - y).squaredNorm();
    }
    case SecondOrderModel::Term::ConjugateQuadratic: {
      if (model.cone.kind != ConeLike::Kind::Polyhedral)
        throw UnsupportedSetError("conjugate term over a non-polyhedral cone");
      const Vector y = model.J * w;
      return quad + 2.0 * conjugate_quadratic_sup_cone(model.cone.rep, model.B, y).value;
    }
  }
  return kInf;
}

namespace {

// first-order fallback for the rare non-QP-reducible subproblems
ModelMinimizer minimize_first_order(const Vector& v, const SecondOrderModel& model, double tol) {
  const int n = static_cast<int>(model.H.rows());
  auto grad = [&](const Vector& w) -> Vector {
    Vector g = v + model.H * w;
    if (model.term == SecondOrderModel::Term::SquaredDistance) {
      const Vector y = model.J * w;
      g += model.weight * model.J.transpose() * (y - model.cone.project(y));
    } else if (model.term == SecondOrderModel::Term::ConjugateQuadratic) {
      const Vector y = model.J * w;
      g += model.J.transpose() * conjugate_quadratic_sup_cone(model.cone.rep, model.B, y).maximizer;
    }
    return g;
  };
  double L = model.H.operatorNorm();
  if (model.term == SecondOrderModel::Term::SquaredDistance)
    L += model.weight * std::pow(model.J.operatorNorm(), 2);
  else if (model.term == SecondOrderModel::Term::ConjugateQuadratic)
    L += std::pow(model.J.operatorNorm(), 2) * Matrix(model.B.inverse()).operatorNorm();
  L = std::max(L, 1e-8);

  Vector w = Vector::Zero(n), y = w;
  double tprev = 1.0;
  ModelMinimizer out;
  for (int k = 0; k < 200000; ++k) {
    const Vector g = grad(y);
    Vector wn = y - g / L;
    const double tn = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * tprev * tprev));
    y = wn + ((tprev - 1.0) / tn) * (wn - w);
    w = wn;
    tprev = tn;
    const double res = grad(w).norm();
    if (res <= tol) {
      out.w = w;
      out.status = QPStatus::Optimal;
      out.kkt_residual = res;
      return out;
    }
  }
  out.w = w;
  out.status = QPStatus::MaxIter;
  out.kkt_residual = grad(w).norm();
  return out;
}

}  // namespace

ModelMinimizer minimize_second_model(const Vector& v, const SecondOrderModel& model, double tol) {
  const int n = static_cast<int>(model.H.rows());
  ModelMinimizer out;
  switch (model.term) {
    case SecondOrderModel::Term::None: {
      ConeQP qp{model.H, v, ConeRep::full(n)};
      QPSolution s = solve_cone_qp(qp, tol);
      out.w = s.w;
      out.status = s.status;
      out.kkt_residual = s.kkt_residual;
      return out;
    }
    case SecondOrderModel::Term::ConeIndicator: {
      if (model.cone.kind != ConeLike::Kind::Polyhedral)
        throw UnsupportedSetError("indicator subproblem over a non-polyhedral cone");
      ConeQP qp;
      qp.H = model.H;
      qp.g = v;
      qp.cone.eq = model.cone.rep.eq.rows() > 0 ? Matrix(model.cone.rep.eq * model.J)
                                                : Matrix::Zero(0, n);
      qp.cone.ineq = model.cone.rep.ineq.rows() > 0 ? Matrix(model.cone.rep.ineq * model.J)
                                                    : Matrix::Zero(0, n);
      QPSolution s = solve_cone_qp(qp, tol);
      out.w = s.w;
      out.status = s.status;
      out.kkt_residual = s.kkt_residual;
      return out;
    }
    case SecondOrderModel::Term::SquaredDistance: {
      if (model.cone.kind != ConeLike::Kind::Polyhedral)
        return minimize_first_order(v, model, tol);
      const int p = static_cast<int>(model.J.rows());
      Matrix Hs(n + p, n + p);
      Hs.topLeftCorner(n, n) = model.H + model.weight * model.J.transpose() * model.J;
      Hs.topRightCorner(n, p) = -model.weight * model.J.transpose();
      Hs.bottomLeftCorner(p, n) = -model.weight * model.J;
      Hs.bottomRightCorner(p, p) = model.weight * Matrix::Identity(p, p);
      if (model.curvature.size() > 0) Hs.bottomRightCorner(p, p) += model.curvature;
      Vector gs = Vector::Zero(n + p);
      gs.head(n) = v;
      ConeQP qp;
      qp.H = Hs;
      qp.g = gs;
      const auto& K = model.cone.rep;
      qp.cone.eq = Matrix::Zero(K.eq.rows(), n + p);
      if (K.eq.rows() > 0) qp.cone.eq.rightCols(p) = K.eq;
      qp.cone.ineq = Matrix::Zero(K.ineq.rows(), n + p);
      if (K.ineq.rows() > 0) qp.cone.ineq.rightCols(p) = K.ineq;
      QPSolution s = solve_cone_qp(qp, tol);
      out.w = s.w.head(n);
      out.status = s.status;
      out.kkt_residual = s.kkt_residual;
      return out;
    }
    case SecondOrderModel::Term::ConjugateQuadratic: {
      if (model.cone.kind != ConeLike::Kind::Polyhedral)
        throw UnsupportedSetError("conjugate subproblem over a non-polyhedral cone");
      Eigen::LLT<Matrix> llt(model.H);
      if (llt.info() != Eigen::Success) return minimize_first_order(v, model, tol);
      const Matrix HiJt = llt.solve(model.J.transpose());  // H^-1 J'
      ConeQP qp;
      qp.H = model.J * HiJt + model.B;
      qp.g = model.J * llt.solve(v);
      qp.cone = model.cone.rep;
      QPSolution s = solve_cone_qp(qp, tol);
      out.status = s.status;
      out.kkt_residual = s.kkt_residual;
      if (s.status == QPStatus::Optimal)
        out.w = -llt.solve(v + model.J.transpose() * s.w);
      else
        out.w = Vector::Zero(n);
      return out;
    }
  }
  return out;
}

SecondOrderModel second_order_model_smooth(const SmoothC2Data& d, const Vector& x) {
  SecondOrderModel m;
  m.H = d.f.hessian(x);
  m.term = SecondOrderModel::Term::None;
  return m;
}

SecondOrderModel second_order_model_elqp(const ELQPData& d, const Vector& x, double tol_act) {
  SecondOrderModel m;
  const Vector z = d.b - d.A * x;
  const Vector u = conjugate_quadratic_sup(d.C, d.B, z).maximizer;
  m.H = d.Q;
  m.J = -d.A;
  m.term = SecondOrderModel::Term::ConjugateQuadratic;
  m.B = d.B;
  m.cone = ConeLike::polyhedral(critical_cone_polyhedral(d.C, u, z - d.B * u, tol_act));
  return m;
}

SecondOrderModel second_order_model_auglag(const AugLagData& d, const Vector& x, double tol_act) {
  SecondOrderModel m;
  const Vector z = d.f.value(x) + d.lambda / d.rho;
  const Vector proj = d.theta.project(z);
  const Vector mu = d.rho * (z - proj);
  m.H = d.psi.hessian(x) + d.f.weighted_hessian(x, mu);
  m.J = d.f.jacobian(x);
  m.term = SecondOrderModel::Term::SquaredDistance;
  m.weight = d.rho;
  if (d.theta.kind == ThetaSet::Kind::Polyhedral) {
    m.cone = ConeLike::polyhedral(critical_cone_polyhedral(d.theta.poly, proj, mu, tol_act));
  } else {
    m.cone = soc_critical_cone(proj, mu, tol_act);
    // boundary points of the cone contribute the curvature of the second
    // subderivative of its indicator: (-mu_m / ||z'||) * (I - zhat zhat') on
    // the first block; zero at the vertex and at interior points
    const int p = d.theta.soc_dim;
    const double zs = proj.head(p - 1).norm();
    const double scale = 1.0 + proj.norm() + mu.norm();
    if (zs > tol_act * scale && mu.norm() > tol_act * scale) {
      const Vector zhat = proj.head(p - 1) / zs;
      Matrix C = Matrix::Zero(p, p);
      C.topLeftCorner(p - 1, p - 1) =
          (-mu(p - 1) / zs) * (Matrix::Identity(p - 1, p - 1) - zhat * zhat.transpose());
      m.curvature = C;
    }
  }
  return m;
}

SecondOrderModel second_order_model_nlp(const NLPData& d, const Vector& x, const Vector& v,
                                        double tol_act) {
  SecondOrderModel m;
  const Vector rhs = v - d.psi.gradient(x);
  MultiplierResult mult = lagrange_multipliers(d, x, rhs, std::max(tol_act, 1e-7));
  m.H = d.psi.hessian(x) + d.f.weighted_hessian(x, mult.lambda);
  m.J = d.f.jacobian(x);
  m.term = SecondOrderModel::Term::ConeIndicator;
  m.degenerate_multipliers = !mult.unique;
  if (!mult.unique) m.multiplier_set = multiplier_vertices(d, x, rhs, std::max(tol_act, 1e-7));

  const Vector z = d.f.value(x);
  IndexSets idx = index_sets(z, mult.lambda, d.s, tol_act);
  std::vector<int> eq_rows, in_rows;
  for (int i = 0; i < d.s; ++i) eq_rows.push_back(i);
  for (int i : idx.strongly_active) eq_rows.push_back(i);
  for (int i : idx.active)
    if (std::find(idx.strongly_active.begin(), idx.strongly_active.end(), i) ==
        idx.strongly_active.end())
      in_rows.push_back(i);
  ConeRep K;
  K.eq = Matrix::Zero(static_cast<int>(eq_rows.size()), d.m);
  for (size_t i = 0; i < eq_rows.size(); ++i) K.eq(static_cast<int>(i), eq_rows[i]) = 1.0;
  K.ineq = Matrix::Zero(static_cast<int>(in_rows.size()), d.m);
  for (size_t i = 0; i < in_rows.size(); ++i) K.ineq(static_cast<int>(i), in_rows[i]) = 1.0;
  m.cone = ConeLike::polyhedral(K);
  return m;
}

SecondOrderModel second_order_model_l1(const PiecewiseC11Data& d, const Vector& x,
                                       const Vector& v) {
  const int n = static_cast<int>(x.size());
  SecondOrderModel m;
  m.H = d.Q;
  m.J = Matrix::Identity(n, n);
  m.term = SecondOrderModel::Term::ConeIndicator;
  const Vector smooth = d.Q * x - d.b;
  std::vector<Vector> eq_rows, in_rows;
  for (int i = 0; i < n; ++i) {
    const double tau = d.l1(i);
    if (tau == 0.0 || std::abs(x(i)) > 1e-12) continue;
    const double res = v(i) - smooth(i);
    Vector e = Vector::Zero(n);
    e(i) = 1.0;
    if (std::abs(res - tau) <= 1e-9)
      in_rows.push_back(-e);  // w_i >= 0
    else if (std::abs(res + tau) <= 1e-9)
      in_rows.push_back(e);  // w_i <= 0
    else
      eq_rows.push_back(e);  // interior subgradient pins the coordinate
  }
  ConeRep K;
  K.eq = Matrix::Zero(static_cast<int>(eq_rows.size()), n);
  for (size_t i = 0; i < eq_rows.size(); ++i) K.eq.row(static_cast<int>(i)) = eq_rows[i];
  K.ineq = Matrix::Zero(static_cast<int>(in_rows.size()), n);
  for (size_t i = 0; i < in_rows.size(); ++i) K.ineq.row(static_cast<int>(i)) = in_rows[i];
  m.cone = ConeLike::polyhedral(K);
  return m;
}

SecondOrderModel second_order_model_oscillation(const OscillationData&, const Vector& x) {
  SecondOrderModel m;
  m.H = Matrix::Constant(1, 1, x(0) == 0.0 ? 2.0 : OscillationData::slope_derivative(x(0)));
  m.term = SecondOrderModel::Term::None;
  return m;
}

SecondOrderModel make_second_order_model(const ProblemInstance& inst, const Vector& x,
                                         const Vector& v, double tol_act) {
  switch (inst.kind()) {
    case ProblemKind::SmoothC2:
      return second_order_model_smooth(*inst.smooth(), x);
    case ProblemKind::ELQP:
      return second_order_model_elqp(*inst.elqp(), x, tol_act);
    case ProblemKind::AugLag:
      return second_order_model_auglag(*inst.auglag(), x, tol_act);
    case ProblemKind::NLP: {
      const auto& d = *inst.nlp();
      if (d.m == 0) {
        SecondOrderModel m;
        m.H = d.psi.hessian(x);
        m.term = SecondOrderModel::Term::None;
        return m;
      }
      return second_order_model_nlp(d, x, v, tol_act);
    }
    case ProblemKind::PiecewiseC11:
      return second_order_model_l1(*inst.piecewise(), x, v);
    case ProblemKind::Oscillation:
      return second_order_model_oscillation(*inst.oscillation(), x);
  }
  throw UnsupportedSetError("make_second_order_model: unhandled kind");
}

double second_subderivative_elqp(const ELQPData& d, const Vector& x, const Vector& w) {
  return evaluate_second_model(second_order_model_elqp(d, x), w);
}

double second_subderivative_constrained(const NLPData& d, const Vector& x, const Vector& v,
                                        const Vector& w, double tol) {
  const Vector rhs = v - d.psi.gradient(x);
  MultiplierResult mult = lagrange_multipliers(d, x, rhs, tol);
  std::vector<Vector> lambdas;
  if (mult.unique)
    lambdas.push_back(mult.lambda);
  else {
    lambdas = multiplier_vertices(d, x, rhs, tol);
    if (lambdas.empty()) lambdas.push_back(mult.lambda);
  }
  const Vector z = d.f.value(x);
  const Vector y = d.f.jacobian(x) * w;
  double best = -kInf;
  for (const auto& lam : lambdas) {
    IndexSets idx = index_sets(z, lam, d.s, 1e-8);
    bool in_cone = true;
    for (int i = 0; i < d.s; ++i)
      if (std::abs(y(i)) > 1e-12) in_cone = false;
    for (int i : idx.active) {
      const bool strong = std::find(idx.strongly_active.begin(), idx.strongly_active.end(), i) !=
                          idx.strongly_active.end();
      if (strong && std::abs(y(i)) > 1e-12) in_cone = false;
      if (!strong && y(i) > 1e-12) in_cone = false;
    }
    if (!in_cone) return kInf;
    const Matrix H = d.psi.hessian(x) + d.f.weighted_hessian(x, lam);
    best = std::max(best, w.dot(H * w));
  }
  return best;
}

double fd_second_quotient(const ProblemInstance& inst, const Vector& x, const Vector& v,
                          const Vector& w, double t) {
  const double f0 = inst.value(x);
  if (!std::isfinite(f0))
    throw NotMemberError("fd_second_quotient: base point outside the domain");
  const double f1 = inst.value(x + t * w);
  if (!std::isfinite(f1)) return kInf;
  return (f1 - f0 - t * v.dot(w)) / (0.5 * t * t);
}

namespace {

// derivative of the B-weighted maximizer on the face with working rows W:
// p'(z') solves min 1/2 p'Bp - z'.p over {rows W active as equalities}
Matrix face_solution_operator(const Matrix& B, const Matrix& active_rows) {
  const int m = static_cast<int>(B.rows());
  Matrix Z;
  if (active_rows.rows() == 0) {
    Z = Matrix::Identity(m, m);
  } else {
    Eigen::ColPivHouseholderQR<Matrix> qr(active_rows.transpose());
    qr.setThreshold(1e-12);
    const int rank = static_cast<int>(qr.rank());
    Matrix Q = qr.householderQ();
    Z = Q.rightCols(m - rank);
  }
  if (Z.cols() == 0) return Matrix::Zero(m, m);
  const Matrix M = Z.transpose() * B * Z;
  return Z * M.ldlt().solve(Matrix(Z.transpose()));
}

// orthogonal projector onto null(active_rows): piecewise derivative of a
// Euclidean projection onto a polyhedron
Matrix face_projector(int m, const Matrix& active_rows) {
  if (active_rows.rows() == 0) return Matrix::Identity(m, m);
  Eigen::ColPivHouseholderQR<Matrix> qr(active_rows.transpose());
  qr.setThreshold(1e-12);
  const int rank = static_cast<int>(qr.rank());
  Matrix Q = qr.householderQ();
  Matrix Z = Q.rightCols(m - rank);
  return Z * Z.transpose();
}

// all row stacks E + G_W for J_plus <= W <= J_0 (enumeration of kink pieces)
std::vector<Matrix> face_row_stacks(const PolyhedralSet& set, const std::vector<int>& weak,
                                    const std::vector<int>& strong) {
  std::vector<Matrix> stacks;
  const int k = static_cast<int>(weak.size());
  if (k > 12) throw UnsupportedSetError("too many degenerate active rows to enumerate");
  for (unsigned mask = 0; mask < (1u << k); ++mask) {
    std::vector<int> rows = strong;
    for (int i = 0; i < k; ++i)
      if (mask & (1u << i)) rows.push_back(weak[i]);
    std::sort(rows.begin(), rows.end());
    Matrix A(static_cast<int>(set.E.rows()) + static_cast<int>(rows.size()), set.dim());
    if (set.E.rows() > 0) A.topRows(set.E.rows()) = set.E;
    for (size_t i = 0; i < rows.size(); ++i)
      A.row(set.E.rows() + static_cast<int>(i)) = set.G.row(rows[i]);
    stacks.push_back(A);
  }
  return stacks;
}

// Jacobian of the projection onto the second-order cone in the region where
// the projection blends the boundary, plus limiting selections at kinks.
Matrix soc_projection_jacobian_blend(const Vector& z) {
  const int m = static_cast<int>(z.size());
  const double s = z.head(m - 1).norm();
  const double t = z(m - 1);
  const Vector w = z.head(m - 1) / s;
  Matrix D(m, m);
  const double c = (s + t) / (2.0 * s);
  D.topLeftCorner(m - 1, m - 1) =
      0.5 * w * w.transpose() + c * (Matrix::Identity(m - 1, m - 1) - w * w.transpose());
  D.topRightCorner(m - 1, 1) = 0.5 * w;
  D.bottomLeftCorner(1, m - 1) = 0.5 * w.transpose();
  D(m - 1, m - 1) = 0.5;
  return D;
}

std::vector<Matrix> soc_projection_selections(const Vector& z, double tol) {
  const int m = static_cast<int>(z.size());
  const double s = z.head(m - 1).norm();
  const double t = z(m - 1);
  const double scale = 1.0 + z.norm();
  std::vector<Matrix> out;
  if (z.norm() <= tol * scale) {
    out.push_back(Matrix::Identity(m, m));
    out.push_back(Matrix::Zero(m, m));
    return out;
  }
  if (s < t - tol * scale) {
    out.push_back(Matrix::Identity(m, m));
    return out;
  }
  if (s < -t - tol * scale) {
    out.push_back(Matrix::Zero(m, m));
    return out;
  }
  if (std::abs(s - t) <= tol * scale) {  // on the cone boundary
    out.push_back(Matrix::Identity(m, m));
    out.push_back(soc_projection_jacobian_blend(z));
    return out;
  }
  if (std::abs(s + t) <= tol * scale) {  // on the polar boundary
    out.push_back(Matrix::Zero(m, m));
    out.push_back(soc_projection_jacobian_blend(z));
    return out;
  }
  out.push_back(soc_projection_jacobian_blend(z));
  return out;
}

}  // namespace

std::vector<HessianSelection> hessian_selections(const ProblemInstance& inst, const Vector& x,
                                                 double tol_act) {
  std::vector<HessianSelection> out;
  switch (inst.kind()) {
    case ProblemKind::SmoothC2:
      out.push_back({inst.smooth()->f.hessian(x), "classical"});
      return out;
    case ProblemKind::Oscillation: {
      const double xv = x(0);
      if (xv == 0.0) {
        out.push_back({Matrix::Constant(1, 1, 1.0), "kink-low"});
        out.push_back({Matrix::Constant(1, 1, 3.0), "kink-high"});
      } else {
        out.push_back({Matrix::Constant(1, 1, OscillationData::slope_derivative(xv)), "classical"});
      }
      return out;
    }
    case ProblemKind::ELQP: {
      const auto& d = *inst.elqp();
      const Vector z = d.b - d.A * x;
      const Vector u = conjugate_quadratic_sup(d.C, d.B, z).maximizer;
      NormalDecomposition nd = normal_cone_decomposition(d.C, u, z - d.B * u, tol_act);
      std::vector<int> strong, weak;
      for (int i : nd.active_rows) {
        if (nd.ineq_mult(i) > tol_act)
          strong.push_back(i);
        else
          weak.push_back(i);
      }
      for (const Matrix& A : face_row_stacks(d.C, weak, strong)) {
        const Matrix S = face_solution_operator(d.B, A);
        out.push_back({d.Q + d.A.transpose() * S * d.A, "piece"});
      }
      return out;
    }
    case ProblemKind::AugLag: {
      const auto& d = *inst.auglag();
      const Vector z = d.f.value(x) + d.lambda / d.rho;
      const Vector mu = auglag_multiplier_estimate(d, x);
      const Matrix Jf = d.f.jacobian(x);
      const Matrix H0 = d.psi.hessian(x) + d.f.weighted_hessian(x, mu);
      const int mdim = d.theta.dim();
      std::vector<Matrix> projs;
      if (d.theta.kind == ThetaSet::Kind::Soc) {
        projs = soc_projection_selections(z, tol_act);
      } else {
        const Vector proj = d.theta.project(z);
        NormalDecomposition nd = normal_cone_decomposition(d.theta.poly, proj, z - proj, tol_act);
        std::vector<int> strong, weak;
        for (int i : nd.active_rows) {
          if (nd.ineq_mult(i) > tol_act)
            strong.push_back(i);
          else
            weak.push_back(i);
        }
        for (const Matrix& A : face_row_stacks(d.theta.poly, weak, strong))
          projs.push_back(face_projector(mdim, A));
      }
      for (const Matrix& S : projs) {
        out.push_back(
            {H0 + d.rho * Jf.transpose() * (Matrix::Identity(mdim, mdim) - S) * Jf, "piece"});
      }
      return out;
    }
    case ProblemKind::NLP:
      if (inst.nlp()->m == 0) {
        out.push_back({inst.nlp()->psi.hessian(x), "classical"});
        return out;
      }
      throw UnsupportedSetError("hessian_selections: constrained NLP objectives are not C^{1,1}");
    case ProblemKind::PiecewiseC11:
      throw UnsupportedSetError("hessian_selections: l1 objectives are not C^{1,1}");
  }
  throw UnsupportedSetError("hessian_selections: unhandled kind");
}

}  // namespace tiltnewton
