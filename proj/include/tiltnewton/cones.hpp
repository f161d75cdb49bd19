#pragma once

#include <vector>

#include "tiltnewton/types.hpp"

namespace tiltnewton {

/// Polyhedral cone {w : Eq w = 0, Ineq w <= 0}. Either block may have zero rows.
/// Used for critical cones, tangent cones, and as the constraint set of ConeQP.
struct ConeRep {
  Matrix eq;    // each row e_i: e_i' w = 0
  Matrix ineq;  // each row g_i: g_i' w <= 0

  int dim() const { return eq.rows() > 0 ? static_cast<int>(eq.cols()) : static_cast<int>(ineq.cols()); }
  int eq_rows() const { return static_cast<int>(eq.rows()); }
  int ineq_rows() const { return static_cast<int>(ineq.rows()); }

  bool contains(const Vector& w, double tol = 1e-12) const;

  static ConeRep full(int n) {
    ConeRep c;
    c.eq = Matrix::Zero(0, n);
    c.ineq = Matrix::Zero(0, n);
    return c;
  }
  static ConeRep zero(int n) {
    ConeRep c;
    c.eq = Matrix::Identity(n, n);
    c.ineq = Matrix::Zero(0, n);
    return c;
  }
  /// {t*dir : t >= 0}, encoded with dim-1 equality rows spanning dir-perp
  /// plus the single inequality row -dir' w <= 0.
  static ConeRep ray(const Vector& dir);
  /// {w : normal' w = 0}
  static ConeRep hyperplane(const Vector& normal);
  /// {w : outward' w <= 0}
  static ConeRep halfspace(const Vector& outward);
  /// Appends an equality row (used for T cap {y}-perp constructions).
  ConeRep with_equality(const Vector& row) const;
};

/// Convex polyhedron {z : G z <= h, E z = d}. A feasible point is certified at
/// construction; make_polyhedral throws InfeasibleError for empty data.
struct PolyhedralSet {
  Matrix G;
  Vector h;
  Matrix E;
  Vector d;
  Vector feasible_point;

  int dim() const { return G.rows() > 0 ? static_cast<int>(G.cols()) : static_cast<int>(E.cols()); }
  bool contains(const Vector& z, double tol = 1e-9) const;
  std::vector<int> active_rows(const Vector& z, double tol_act) const;

  static PolyhedralSet box(const Vector& lo, const Vector& hi);
  static PolyhedralSet nonnegative_orthant(int m);
  static PolyhedralSet nonpositive_orthant(int m);
  static PolyhedralSet singleton(const Vector& z);
  static PolyhedralSet halfspace(const Vector& a, double b);  // {z : a'z <= b}
  /// {0}^s x R_-^(m-s), the constraint set of nonlinear programs.
  static PolyhedralSet zero_cross_nonpositive(int s, int m);
};

/// Builds a PolyhedralSet from raw data, certifying nonemptiness with a
/// feasibility solve.
PolyhedralSet make_polyhedral(const Matrix& G, const Vector& h, const Matrix& E, const Vector& d);

/// Tangent cone T_set(u): equality rows kept, inequality rows active at u.
/// Throws NotMemberError when u is infeasible beyond tol_act.
ConeRep tangent_cone(const PolyhedralSet& set, const Vector& u, double tol_act = 1e-8);

/// Critical cone T_set(u) cap {y}-perp. Throws NotNormalError when y is not a
/// normal vector to the set at u within tolerance.
ConeRep critical_cone_polyhedral(const PolyhedralSet& set, const Vector& u, const Vector& y,
                                 double tol_act = 1e-8);

/// Active / strongly active inequality indices of z in {0}^s x R_-^(m-s).
/// Indices are 0-based positions in {s,...,m-1}.
struct IndexSets {
  std::vector<int> active;           // I(z)
  std::vector<int> strongly_active;  // I_+(z, lambda)
  int equality_count = 0;
};

IndexSets index_sets(const Vector& z, const Vector& lambda, int s, double tol_act = 1e-8);

}  // namespace tiltnewton
