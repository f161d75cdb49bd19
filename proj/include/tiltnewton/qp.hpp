#pragma once

#include <vector>

#include "tiltnewton/cones.hpp"
#include "tiltnewton/types.hpp"

namespace tiltnewton {

enum class QPStatus { Optimal, Unbounded, MaxIter };

/// min <g,w> + 1/2 <Hw,w>  s.t.  w in cone.
struct ConeQP {
  Matrix H;
  Vector g;
  ConeRep cone;
};

struct QPSolution {
  Vector w;
  std::vector<int> active;  // active inequality rows at the solution
  Vector multipliers;       // equality multipliers first, then one per inequality row
  QPStatus status = QPStatus::MaxIter;
  double kkt_residual = kInf;
  int iterations = 0;
};

/// Dense primal active-set solve. Deterministic: ties broken by lowest row
/// index, Bland-style selection after 3n consecutive degenerate exchanges.
QPSolution solve_cone_qp(const ConeQP& qp, double tol = 1e-10, int max_iter = 0);

/// General affine variant used internally: min <g,w> + 1/2 <Hw,w>
/// s.t. Aeq w = beq, Ain w <= bin, started from a feasible w0.
struct AffineQP {
  Matrix H;
  Vector g;
  Matrix Aeq;
  Vector beq;
  Matrix Ain;
  Vector bin;
};

QPSolution solve_affine_qp(const AffineQP& qp, const Vector& w0, double tol = 1e-10,
                           int max_iter = 0);

/// Euclidean projection onto a polyhedron, via the dual of the projection
/// problem (a cone QP in the multipliers). Throws InfeasibleError if empty.
Vector project_polyhedral(const PolyhedralSet& set, const Vector& z);

/// Closed-form projection onto the second-order cone {(y,t) : ||y|| <= t}.
Vector project_soc(const Vector& z);

/// dist(v ; N_set(u)) where N_set(u) is the normal cone at a feasible u:
/// the least-squares residual of expressing v by active-row normals with
/// nonnegative inequality weights.
double normal_cone_residual(const PolyhedralSet& set, const Vector& u, const Vector& v,
                            double tol_act = 1e-8);

/// Same computation, keeping the weights: v ~ E' eq_mult + sum G_i' ineq_mult_i
/// over rows active at u (ineq_mult supported on active_rows, >= 0).
struct NormalDecomposition {
  Vector eq_mult;
  Vector ineq_mult;  // one entry per G row, zero off the active set
  std::vector<int> active_rows;
  double residual = kInf;
};
NormalDecomposition normal_cone_decomposition(const PolyhedralSet& set, const Vector& u,
                                              const Vector& v, double tol_act = 1e-8);

/// Squared distance to a polyhedral cone (projection via cone QP).
double cone_sqdist(const ConeRep& cone, const Vector& y);
Vector cone_project(const ConeRep& cone, const Vector& y);

}  // namespace tiltnewton
