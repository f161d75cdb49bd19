#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <variant>

#include <nlohmann/json_fwd.hpp>

#include "tiltnewton/cones.hpp"
#include "tiltnewton/types.hpp"

namespace tiltnewton {

enum class ProblemKind { SmoothC2, PiecewiseC11, ELQP, NLP, AugLag, Oscillation };

std::string to_string(ProblemKind k);
ProblemKind problem_kind_from_string(const std::string& s);

/// 1/2 x'Qx - b'x + sum_i quartic_i * x_i^4
struct QuadQuartic {
  Matrix Q;
  Vector b;
  Vector quartic;

  double value(const Vector& x) const;
  Vector gradient(const Vector& x) const;
  Matrix hessian(const Vector& x) const;
};

/// Twice differentiable objective given by oracles; carries the parametric
/// form when it was built from one (needed for serialization).
struct SmoothObjective {
  std::function<double(const Vector&)> value;
  std::function<Vector(const Vector&)> gradient;
  std::function<Matrix(const Vector&)> hessian;
  std::optional<QuadQuartic> parametric;

  static SmoothObjective from_quad_quartic(QuadQuartic qq);
};

struct AffineMap {
  Matrix J;
  Vector c;
};

/// Constraint map f : R^n -> R^m with first and second derivative oracles.
struct ConstraintMap {
  int m = 0;
  int n = 0;
  std::function<Vector(const Vector&)> value;
  std::function<Matrix(const Vector&)> jacobian;  // m x n
  // sum_i lambda_i * hess(f_i)(x)
  std::function<Matrix(const Vector&, const Vector&)> weighted_hessian;
  std::optional<AffineMap> affine;

  static ConstraintMap from_affine(AffineMap a);
};

/// Constraint target set: a polyhedron or the second-order cone.
struct ThetaSet {
  enum class Kind { Polyhedral, Soc };
  Kind kind = Kind::Polyhedral;
  PolyhedralSet poly;
  int soc_dim = 0;

  int dim() const { return kind == Kind::Polyhedral ? poly.dim() : soc_dim; }
  Vector project(const Vector& z) const;
  double sqdist(const Vector& z) const;
  bool contains(const Vector& z, double tol = 1e-9) const;
};

struct SmoothC2Data {
  QuadQuartic f;
};

/// 1/2 x'Qx - b'x + sum_i l1_i |x_i|, l1 >= 0.
struct PiecewiseC11Data {
  Matrix Q;
  Vector b;
  Vector l1;
};

struct ELQPData {
  Matrix Q;  // n x n symmetric
  Vector q;
  Matrix A;  // m x n, conjugate term applied to b - A x
  Vector b;
  PolyhedralSet C;
  Matrix B;  // m x m symmetric positive definite
};

struct NLPData {
  SmoothObjective psi;
  ConstraintMap f;
  int s = 0;  // equality components; target set is {0}^s x R_-^(m-s)
  int m = 0;
};

struct AugLagData {
  SmoothObjective psi;
  ConstraintMap f;
  ThetaSet theta;
  Vector lambda;
  double rho = 1.0;
};

struct OscillationData {
  double alpha = 1.0;  // canonical start point is 1/(2*alpha*pi)
  double start_point() const;
  static double slope(double x);             // x^2 sin(1/x) + 2x, 0 at x=0
  static double slope_derivative(double x);  // for x != 0
};

/// Immutable problem description with value / gradient / subgradient-residual
/// oracles. All oracles are pure; instances are safe to share across threads.
class ProblemInstance {
 public:
  ProblemKind kind() const { return kind_; }
  int dimension() const { return n_; }

  double value(const Vector& x) const;
  /// Defined on the C^{1,1} kinds (and unconstrained NLP); throws otherwise.
  Vector gradient(const Vector& x) const;
  /// dist(v ; subdifferential of the objective at x); +inf off the domain.
  double subgradient_residual(const Vector& x, const Vector& v) const;

  bool is_c11() const;
  bool has_prox_oracle() const;

  const std::optional<Vector>& known_solution() const { return known_solution_; }
  const std::optional<double>& known_tilt_modulus() const { return known_tilt_modulus_; }
  ProblemInstance with_solution(Vector xbar, std::optional<double> kappa = std::nullopt) const;

  const SmoothC2Data* smooth() const { return std::get_if<SmoothC2Data>(&data_); }
  const PiecewiseC11Data* piecewise() const { return std::get_if<PiecewiseC11Data>(&data_); }
  const ELQPData* elqp() const { return std::get_if<ELQPData>(&data_); }
  const NLPData* nlp() const { return std::get_if<NLPData>(&data_); }
  const AugLagData* auglag() const { return std::get_if<AugLagData>(&data_); }
  const OscillationData* oscillation() const { return std::get_if<OscillationData>(&data_); }

  nlohmann::json to_json() const;
  static ProblemInstance from_json(const nlohmann::json& j);

  using Payload =
      std::variant<SmoothC2Data, PiecewiseC11Data, ELQPData, NLPData, AugLagData, OscillationData>;

  ProblemInstance(ProblemKind kind, int n, Payload data)
      : kind_(kind), n_(n), data_(std::move(data)) {}

  /// Feasibility tolerance separating the +inf branch of constrained values.
  static constexpr double kFeasTol = 1e-9;

 private:
  ProblemKind kind_;
  int n_;
  Payload data_;
  std::optional<Vector> known_solution_;
  std::optional<double> known_tilt_modulus_;
};

ProblemInstance make_smooth(SmoothC2Data data);
ProblemInstance make_piecewise_l1(PiecewiseC11Data data);
ProblemInstance make_elqp(ELQPData data);
ProblemInstance make_nlp(NLPData data);
ProblemInstance make_auglag(AugLagData data);
ProblemInstance make_oscillation(double alpha);

/// Maximizer and value of the conjugate-type term sup_{p in C} <z,p> - 1/2 <p,Bp>.
struct ConjugateResult {
  double value;
  Vector maximizer;
  double kkt_residual;
};
ConjugateResult conjugate_quadratic_sup(const PolyhedralSet& C, const Matrix& B, const Vector& z);

/// Same on a ConeRep cone (homogeneous constraints).
ConjugateResult conjugate_quadratic_sup_cone(const ConeRep& K, const Matrix& B, const Vector& z);

/// Multiplier vector of the augmented-objective envelope term at x:
/// rho * (z - proj(z)) with z = f(x) + lambda / rho.
Vector auglag_multiplier_estimate(const AugLagData& d, const Vector& x);

}  // namespace tiltnewton
