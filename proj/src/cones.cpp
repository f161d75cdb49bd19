#include "tiltnewton/cones.hpp"

#include <Eigen/QR>
#include <algorithm>

#include "tiltnewton/qp.hpp"

namespace tiltnewton {

bool ConeRep::contains(const Vector& w, double tol) const {
  if (eq.rows() > 0 && (eq * w).cwiseAbs().maxCoeff() > tol) return false;
  if (ineq.rows() > 0 && (ineq * w).maxCoeff() > tol) return false;
  return true;
}

ConeRep ConeRep::ray(const Vector& dir) {
  const int n = static_cast<int>(dir.size());
  const double nrm = dir.norm();
  if (nrm == 0.0) return ConeRep::zero(n);
  Vector u = dir / nrm;
  Eigen::HouseholderQR<Matrix> qr(u);
  Matrix Q = qr.householderQ();
  ConeRep c;
  c.eq = Q.rightCols(n - 1).transpose();
  c.ineq = -u.transpose();
  return c;
}

ConeRep ConeRep::hyperplane(const Vector& normal) {
  ConeRep c;
  c.eq = normal.transpose();
  c.ineq = Matrix::Zero(0, normal.size());
  return c;
}

ConeRep ConeRep::halfspace(const Vector& outward) {
  ConeRep c;
  c.eq = Matrix::Zero(0, outward.size());
  c.ineq = outward.transpose();
  return c;
}

ConeRep ConeRep::with_equality(const Vector& row) const {
  ConeRep c = *this;
  c.eq.conservativeResize(c.eq.rows() + 1, Eigen::NoChange);
  c.eq.row(c.eq.rows() - 1) = row.transpose();
  return c;
}

bool PolyhedralSet::contains(const Vector& z, double tol) const {
  if (G.rows() > 0 && ((G * z) - h).maxCoeff() > tol) return false;
  if (E.rows() > 0 && ((E * z) - d).cwiseAbs().maxCoeff() > tol) return false;
  return true;
}

std::vector<int> PolyhedralSet::active_rows(const Vector& z, double tol_act) const {
  std::vector<int> act;
  for (int i = 0; i < G.rows(); ++i) {
    if (std::abs(G.row(i).dot(z) - h(i)) <= tol_act) act.push_back(i);
  }
  return act;
}

PolyhedralSet PolyhedralSet::box(const Vector& lo, const Vector& hi) {
  const int m = static_cast<int>(lo.size());
  require_dim(hi.size() == m, "box bounds");
  PolyhedralSet s;
  s.G = Matrix::Zero(2 * m, m);
  s.h = Vector::Zero(2 * m);
  s.G.topRows(m) = Matrix::Identity(m, m);
  s.h.head(m) = hi;
  s.G.bottomRows(m) = -Matrix::Identity(m, m);
  s.h.tail(m) = -lo;
  s.E = Matrix::Zero(0, m);
  s.d = Vector::Zero(0);
  s.feasible_point = 0.5 * (lo + hi);
  return s;
}

PolyhedralSet PolyhedralSet::nonnegative_orthant(int m) {
  PolyhedralSet s;
  s.G = -Matrix::Identity(m, m);
  s.h = Vector::Zero(m);
  s.E = Matrix::Zero(0, m);
  s.d = Vector::Zero(0);
  s.feasible_point = Vector::Zero(m);
  return s;
}

PolyhedralSet PolyhedralSet::nonpositive_orthant(int m) {
  PolyhedralSet s;
  s.G = Matrix::Identity(m, m);
  s.h = Vector::Zero(m);
  s.E = Matrix::Zero(0, m);
  s.d = Vector::Zero(0);
  s.feasible_point = Vector::Zero(m);
  return s;
}

PolyhedralSet PolyhedralSet::singleton(const Vector& z) {
  const int m = static_cast<int>(z.size());
  PolyhedralSet s;
  s.G = Matrix::Zero(0, m);
  s.h = Vector::Zero(0);
  s.E = Matrix::Identity(m, m);
  s.d = z;
  s.feasible_point = z;
  return s;
}

PolyhedralSet PolyhedralSet::halfspace(const Vector& a, double b) {
  const int m = static_cast<int>(a.size());
  PolyhedralSet s;
  s.G = a.transpose();
  s.h = Vector::Constant(1, b);
  s.E = Matrix::Zero(0, m);
  s.d = Vector::Zero(0);
  const double aa = a.squaredNorm();
  s.feasible_point = aa > 0 ? Vector(a * (b / aa)) : Vector(Vector::Zero(m));
  return s;
}

PolyhedralSet PolyhedralSet::zero_cross_nonpositive(int s, int m) {
  require_dim(0 <= s && s <= m, "zero_cross_nonpositive counts");
  PolyhedralSet set;
  set.E = Matrix::Zero(s, m);
  set.E.leftCols(s) = Matrix::Identity(s, s);
  set.d = Vector::Zero(s);
  set.G = Matrix::Zero(m - s, m);
  set.G.rightCols(m - s) = Matrix::Identity(m - s, m - s);
  set.h = Vector::Zero(m - s);
  set.feasible_point = Vector::Zero(m);
  return set;
}

PolyhedralSet make_polyhedral(const Matrix& G, const Vector& h, const Matrix& E, const Vector& d) {
  require_dim(G.rows() == h.size() && E.rows() == d.size(), "polyhedron rows");
  PolyhedralSet s;
  s.G = G;
  s.h = h;
  s.E = E;
  s.d = d;
  s.feasible_point = Vector::Zero(s.dim());
  // certify nonemptiness
  s.feasible_point = project_polyhedral(s, Vector::Zero(s.dim()));
  return s;
}

ConeRep tangent_cone(const PolyhedralSet& set, const Vector& u, double tol_act) {
  if (!set.contains(u, tol_act)) throw NotMemberError("tangent_cone: point outside the set");
  const auto act = set.active_rows(u, tol_act);
  ConeRep c;
  c.eq = set.E;
  c.ineq = Matrix::Zero(static_cast<int>(act.size()), set.dim());
  for (size_t i = 0; i < act.size(); ++i) c.ineq.row(static_cast<int>(i)) = set.G.row(act[i]);
  if (c.eq.rows() == 0) c.eq = Matrix::Zero(0, set.dim());
  return c;
}

ConeRep critical_cone_polyhedral(const PolyhedralSet& set, const Vector& u, const Vector& y,
                                 double tol_act) {
  ConeRep t = tangent_cone(set, u, tol_act);
  const double scale = 1.0 + y.norm();
  if (normal_cone_residual(set, u, y, tol_act) > 1e-7 * scale)
    throw NotNormalError("critical_cone_polyhedral: y not in the normal cone at u");
  return t.with_equality(y);
}

IndexSets index_sets(const Vector& z, const Vector& lambda, int s, double tol_act) {
  require_dim(z.size() == lambda.size(), "index_sets");
  IndexSets out;
  out.equality_count = s;
  for (int i = s; i < z.size(); ++i) {
    if (std::abs(z(i)) <= tol_act) {
      out.active.push_back(i);
      if (lambda(i) > tol_act) out.strongly_active.push_back(i);
    }
  }
  return out;
}

}  // namespace tiltnewton
