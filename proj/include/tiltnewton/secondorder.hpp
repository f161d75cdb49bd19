#pragma once

#include <optional>
#include <string>
#include <vector>

#include "tiltnewton/problems.hpp"
#include "tiltnewton/qp.hpp"

namespace tiltnewton {

/// Critical cone that may be polyhedral or the second-order cone itself
/// (the latter arises only at the vertex case of the SOC analysis).
struct ConeLike {
  enum class Kind { Polyhedral, Soc };
  Kind kind = Kind::Polyhedral;
  ConeRep rep;      // valid when Polyhedral
  int soc_dim = 0;  // valid when Soc

  bool contains(const Vector& y, double tol = 1e-12) const;
  Vector project(const Vector& y) const;
  double sqdist(const Vector& y) const;

  static ConeLike polyhedral(ConeRep r) { return ConeLike{Kind::Polyhedral, std::move(r), 0}; }
  static ConeLike soc(int m) { return ConeLike{Kind::Soc, ConeRep{}, m}; }
};

/// Critical cone of the second-order cone at z for mu, per the graph-point
/// case analysis (vertex / boundary / interior). Throws NotInGraphError when
/// (z, mu) fails the normal-cone membership test.
ConeLike soc_critical_cone(const Vector& z, const Vector& mu, double tol = 1e-8);

struct MultiplierResult {
  Vector lambda;
  bool unique = false;
  double residual = kInf;
};

/// Multipliers lambda with grad f(x)' lambda = v, lambda in N_Theta(f(x)),
/// Theta = {0}^s x R_-^(m-s). Least-norm element when degenerate.
/// Throws InfeasibleError when no multiplier matches within tol.
MultiplierResult lagrange_multipliers(const NLPData& nlp, const Vector& x, const Vector& v,
                                      double tol = 1e-8);

/// Enumerates multiplier vertices (maximal linearly independent active row
/// subsets); used for the max in degenerate second-subderivative evaluations.
std::vector<Vector> multiplier_vertices(const NLPData& nlp, const Vector& x, const Vector& v,
                                        double tol = 1e-8);

/// Quadratic model of a second subderivative: the evaluation
///   w -> <Hw,w> + theta-term(J w)
/// where the theta term is nothing, a cone indicator, a weighted squared
/// distance to a cone (envelope of an indicator), or a conjugate-type
/// quadratic over a cone.
struct SecondOrderModel {
  enum class Term { None, ConeIndicator, SquaredDistance, ConjugateQuadratic };
  Matrix H;
  Matrix J;
  Term term = Term::None;
  ConeLike cone;
  // SquaredDistance: adds min_{u in cone} (u'Cu + weight*||u - Jw||^2), the
  // envelope of the cone indicator plus the set's boundary curvature C
  // (zero for polyhedra).
  double weight = 0.0;
  Matrix curvature;
  Matrix B;  // ConjugateQuadratic: adds 2 * sup_{p in cone} <Jw,p> - 1/2 <p,Bp>
  bool degenerate_multipliers = false;
  std::vector<Vector> multiplier_set;  // vertices used when degenerate
};

/// d2 phi(x,v)(w); may be +inf (cone indicator term).
double evaluate_second_model(const SecondOrderModel& model, const Vector& w);

struct ModelMinimizer {
  Vector w;
  QPStatus status = QPStatus::MaxIter;
  double kkt_residual = kInf;
};

/// Unique minimizer of <v,w> + 1/2 d2(w) in the tilt-stable regime.
ModelMinimizer minimize_second_model(const Vector& v, const SecondOrderModel& model,
                                     double tol = 1e-10);

/// Analytic second-subderivative model builders per problem class.
SecondOrderModel second_order_model_smooth(const SmoothC2Data& d, const Vector& x);
SecondOrderModel second_order_model_elqp(const ELQPData& d, const Vector& x,
                                         double tol_act = 1e-8);
SecondOrderModel second_order_model_auglag(const AugLagData& d, const Vector& x,
                                           double tol_act = 1e-8);
SecondOrderModel second_order_model_nlp(const NLPData& d, const Vector& x, const Vector& v,
                                        double tol_act = 1e-8);
SecondOrderModel second_order_model_l1(const PiecewiseC11Data& d, const Vector& x,
                                       const Vector& v);
SecondOrderModel second_order_model_oscillation(const OscillationData& d, const Vector& x);

/// Dispatch on the instance kind; v must be a subgradient at x.
SecondOrderModel make_second_order_model(const ProblemInstance& inst, const Vector& x,
                                         const Vector& v, double tol_act = 1e-8);

/// d2 phi(x,v)(w) evaluated analytically.
double second_subderivative_elqp(const ELQPData& d, const Vector& x, const Vector& w);
double second_subderivative_constrained(const NLPData& d, const Vector& x, const Vector& v,
                                        const Vector& w, double tol = 1e-8);

/// Finite second-order difference quotient
///   (phi(x + t w) - phi(x) - t <v,w>) / (t^2 / 2),
/// the brute-force oracle for the analytic forms; +-inf allowed.
double fd_second_quotient(const ProblemInstance& inst, const Vector& x, const Vector& v,
                          const Vector& w, double t);

/// One member of the limiting-Hessian set of the gradient map at x.
struct HessianSelection {
  Matrix H;
  std::string tag;
};

/// Enumerated limiting-Hessian selections (piece Hessians; hull extremes at
/// kink points). Defined for the C^{1,1} kinds.
std::vector<HessianSelection> hessian_selections(const ProblemInstance& inst, const Vector& x,
                                                 double tol_act = 1e-8);

}  // namespace tiltnewton
