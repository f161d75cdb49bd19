#include "tiltnewton/problems.hpp"

#include <cmath>

#include <nlohmann/json.hpp>

#include "tiltnewton/qp.hpp"

namespace tiltnewton {

using nlohmann::json;

std::string to_string(ProblemKind k) {
  switch (k) {
    case ProblemKind::SmoothC2: return "smooth_c2";
    case ProblemKind::PiecewiseC11: return "piecewise_l1";
    case ProblemKind::ELQP: return "elqp";
    case ProblemKind::NLP: return "nlp";
    case ProblemKind::AugLag: return "auglag";
    case ProblemKind::Oscillation: return "oscillation";
  }
  return "unknown";
}

ProblemKind problem_kind_from_string(const std::string& s) {
  if (s == "smooth_c2") return ProblemKind::SmoothC2;
  if (s == "piecewise_l1") return ProblemKind::PiecewiseC11;
  if (s == "elqp") return ProblemKind::ELQP;
  if (s == "nlp") return ProblemKind::NLP;
  if (s == "auglag") return ProblemKind::AugLag;
  if (s == "oscillation") return ProblemKind::Oscillation;
  throw ConfigInvalidError("unknown problem kind: " + s);
}

double QuadQuartic::value(const Vector& x) const {
  double v = 0.5 * x.dot(Q * x) - b.dot(x);
  for (int i = 0; i < quartic.size(); ++i) v += quartic(i) * std::pow(x(i), 4);
  return v;
}

Vector QuadQuartic::gradient(const Vector& x) const {
  Vector g = Q * x - b;
  for (int i = 0; i < quartic.size(); ++i) g(i) += 4.0 * quartic(i) * std::pow(x(i), 3);
  return g;
}

Matrix QuadQuartic::hessian(const Vector& x) const {
  Matrix H = Q;
  for (int i = 0; i < quartic.size(); ++i) H(i, i) += 12.0 * quartic(i) * x(i) * x(i);
  return H;
}

SmoothObjective SmoothObjective::from_quad_quartic(QuadQuartic qq) {
  auto shared = std::make_shared<QuadQuartic>(std::move(qq));
  SmoothObjective s;
  s.value = [shared](const Vector& x) { return shared->value(x); };
  s.gradient = [shared](const Vector& x) { return shared->gradient(x); };
  s.hessian = [shared](const Vector& x) { return shared->hessian(x); };
  s.parametric = *shared;
  return s;
}

ConstraintMap ConstraintMap::from_affine(AffineMap a) {
  auto shared = std::make_shared<AffineMap>(std::move(a));
  ConstraintMap f;
  f.m = static_cast<int>(shared->J.rows());
  f.n = static_cast<int>(shared->J.cols());
  f.value = [shared](const Vector& x) { return Vector(shared->J * x + shared->c); };
  f.jacobian = [shared](const Vector&) { return shared->J; };
  const int n = f.n;
  f.weighted_hessian = [n](const Vector&, const Vector&) { return Matrix::Zero(n, n); };
  f.affine = *shared;
  return f;
}

Vector ThetaSet::project(const Vector& z) const {
  return kind == Kind::Polyhedral ? project_polyhedral(poly, z) : project_soc(z);
}

double ThetaSet::sqdist(const Vector& z) const { return (project(z) - z).squaredNorm(); }

bool ThetaSet::contains(const Vector& z, double tol) const {
  if (kind == Kind::Polyhedral) return poly.contains(z, tol);
  return z.head(z.size() - 1).norm() <= z(z.size() - 1) + tol;
}

double OscillationData::start_point() const { return 1.0 / (2.0 * alpha * M_PI); }

double OscillationData::slope(double x) {
  if (x == 0.0) return 0.0;
  return x * x * std::sin(1.0 / x) + 2.0 * x;
}

double OscillationData::slope_derivative(double x) {
  return 2.0 * x * std::sin(1.0 / x) - std::cos(1.0 / x) + 2.0;
}

namespace {

// Adaptive Simpson quadrature of the oscillation slope on [0, x].
double simpson(double (*f)(double), double a, double b, double fa, double fm, double fb,
               double whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
  return simpson(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         simpson(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

double oscillation_value(double x) {
  if (x == 0.0) return 0.0;
  const double a = 0.0, b = x;
  const double fa = OscillationData::slope(a);
  const double fb = OscillationData::slope(b);
  const double m = 0.5 * (a + b);
  const double fm = OscillationData::slope(m);
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return simpson(&OscillationData::slope, a, b, fa, fm, fb, whole, 1e-12, 48);
}

double l1_residual_sq(const PiecewiseC11Data& d, const Vector& x, const Vector& v) {
  Vector smooth = d.Q * x - d.b;
  double r2 = 0.0;
  for (int i = 0; i < x.size(); ++i) {
    const double res = v(i) - smooth(i);
    const double tau = d.l1(i);
    double dist;
    if (std::abs(x(i)) <= 1e-12) {
      dist = std::max(std::abs(res) - tau, 0.0);  // distance to tau*[-1,1]
    } else {
      dist = std::abs(res - tau * (x(i) > 0 ? 1.0 : -1.0));
    }
    r2 += dist * dist;
  }
  return r2;
}

bool nlp_feasible(const NLPData& d, const Vector& x) {
  const Vector fx = d.f.value(x);
  for (int i = 0; i < d.s; ++i)
    if (std::abs(fx(i)) > ProblemInstance::kFeasTol) return false;
  for (int i = d.s; i < d.m; ++i)
    if (fx(i) > ProblemInstance::kFeasTol) return false;
  return true;
}

// dist(g ; {J' lambda : lambda_i free for i<s, lambda_i >= 0 on active rows,
// lambda_i = 0 on inactive rows}) -- the normal-cone part of the NLP
// subdifferential.
double nlp_normal_residual(const NLPData& d, const Vector& x, const Vector& g) {
  const Vector fx = d.f.value(x);
  const Matrix Jf = d.f.jacobian(x);
  std::vector<int> rows;
  std::vector<bool> signed_row;
  for (int i = 0; i < d.s; ++i) {
    rows.push_back(i);
    signed_row.push_back(false);
  }
  for (int i = d.s; i < d.m; ++i) {
    if (fx(i) >= -1e-8) {
      rows.push_back(i);
      signed_row.push_back(true);
    }
  }
  if (rows.empty()) return g.norm();
  const int p = static_cast<int>(rows.size());
  Matrix S(p, d.f.n);
  for (int i = 0; i < p; ++i) S.row(i) = Jf.row(rows[i]);
  ConeQP nnls;
  nnls.H = S * S.transpose();
  nnls.g = -S * g;
  nnls.cone.eq = Matrix::Zero(0, p);
  int nsigned = 0;
  for (bool sr : signed_row) nsigned += sr ? 1 : 0;
  nnls.cone.ineq = Matrix::Zero(nsigned, p);
  int k = 0;
  for (int i = 0; i < p; ++i)
    if (signed_row[i]) nnls.cone.ineq(k++, i) = -1.0;
  QPSolution sol = solve_cone_qp(nnls, 1e-12);
  return (S.transpose() * sol.w - g).norm();
}

}  // namespace

ConjugateResult conjugate_quadratic_sup(const PolyhedralSet& C, const Matrix& B, const Vector& z) {
  AffineQP qp;
  qp.H = B;
  qp.g = -z;
  qp.Aeq = C.E;
  qp.beq = C.d;
  qp.Ain = C.G;
  qp.bin = C.h;
  QPSolution s = solve_affine_qp(qp, C.feasible_point, 1e-12);
  if (s.status == QPStatus::Unbounded)
    throw InfeasibleError("conjugate term is +inf: unbounded maximization");
  if (s.status != QPStatus::Optimal)
    throw InfeasibleError("conjugate term solve failed to converge");
  ConjugateResult out;
  out.maximizer = s.w;
  out.value = z.dot(s.w) - 0.5 * s.w.dot(B * s.w);
  out.kkt_residual = s.kkt_residual;
  return out;
}

ConjugateResult conjugate_quadratic_sup_cone(const ConeRep& K, const Matrix& B, const Vector& z) {
  ConeQP qp;
  qp.H = B;
  qp.g = -z;
  qp.cone = K;
  QPSolution s = solve_cone_qp(qp, 1e-12);
  if (s.status == QPStatus::Unbounded)
    throw InfeasibleError("conjugate term is +inf: unbounded maximization");
  if (s.status != QPStatus::Optimal)
    throw InfeasibleError("conjugate term solve failed to converge");
  ConjugateResult out;
  out.maximizer = s.w;
  out.value = z.dot(s.w) - 0.5 * s.w.dot(B * s.w);
  out.kkt_residual = s.kkt_residual;
  return out;
}

Vector auglag_multiplier_estimate(const AugLagData& d, const Vector& x) {
  const Vector z = d.f.value(x) + d.lambda / d.rho;
  return d.rho * (z - d.theta.project(z));
}

double ProblemInstance::value(const Vector& x) const {
  require_dim(x.size() == n_, "value argument");
  switch (kind_) {
    case ProblemKind::SmoothC2:
      return smooth()->f.value(x);
    case ProblemKind::PiecewiseC11: {
      const auto& d = *piecewise();
      return 0.5 * x.dot(d.Q * x) - d.b.dot(x) + d.l1.dot(x.cwiseAbs());
    }
    case ProblemKind::ELQP: {
      const auto& d = *elqp();
      return d.q.dot(x) + 0.5 * x.dot(d.Q * x) +
             conjugate_quadratic_sup(d.C, d.B, d.b - d.A * x).value;
    }
    case ProblemKind::NLP: {
      const auto& d = *nlp();
      return nlp_feasible(d, x) ? d.psi.value(x) : kInf;
    }
    case ProblemKind::AugLag: {
      const auto& d = *auglag();
      const Vector z = d.f.value(x) + d.lambda / d.rho;
      return d.psi.value(x) + 0.5 * d.rho * d.theta.sqdist(z) -
             0.5 * d.lambda.squaredNorm() / d.rho;
    }
    case ProblemKind::Oscillation:
      return oscillation_value(x(0));
  }
  return kInf;
}

Vector ProblemInstance::gradient(const Vector& x) const {
  require_dim(x.size() == n_, "gradient argument");
  switch (kind_) {
    case ProblemKind::SmoothC2:
      return smooth()->f.gradient(x);
    case ProblemKind::ELQP: {
      const auto& d = *elqp();
      const Vector p = conjugate_quadratic_sup(d.C, d.B, d.b - d.A * x).maximizer;
      return d.q + d.Q * x - d.A.transpose() * p;
    }
    case ProblemKind::AugLag: {
      const auto& d = *auglag();
      return d.psi.gradient(x) + d.f.jacobian(x).transpose() * auglag_multiplier_estimate(d, x);
    }
    case ProblemKind::Oscillation:
      return Vector::Constant(1, OscillationData::slope(x(0)));
    case ProblemKind::NLP: {
      const auto& d = *nlp();
      if (d.m == 0) return d.psi.gradient(x);
      throw UnsupportedSetError("gradient undefined for constrained NLP objectives");
    }
    case ProblemKind::PiecewiseC11:
      throw UnsupportedSetError("gradient undefined for l1-regularized objectives");
  }
  throw UnsupportedSetError("gradient: unhandled kind");
}

double ProblemInstance::subgradient_residual(const Vector& x, const Vector& v) const {
  require_dim(x.size() == n_ && v.size() == n_, "subgradient_residual arguments");
  switch (kind_) {
    case ProblemKind::SmoothC2:
    case ProblemKind::ELQP:
    case ProblemKind::AugLag:
    case ProblemKind::Oscillation:
      return (v - gradient(x)).norm();
    case ProblemKind::PiecewiseC11:
      return std::sqrt(l1_residual_sq(*piecewise(), x, v));
    case ProblemKind::NLP: {
      const auto& d = *nlp();
      if (d.m == 0) return (v - d.psi.gradient(x)).norm();
      if (!nlp_feasible(d, x)) return kInf;
      return nlp_normal_residual(d, x, v - d.psi.gradient(x));
    }
  }
  return kInf;
}

bool ProblemInstance::is_c11() const {
  switch (kind_) {
    case ProblemKind::SmoothC2:
    case ProblemKind::ELQP:
    case ProblemKind::AugLag:
    case ProblemKind::Oscillation:
      return true;
    case ProblemKind::NLP:
      return nlp()->m == 0;
    case ProblemKind::PiecewiseC11:
      return piecewise()->l1.lpNorm<Eigen::Infinity>() == 0.0;
  }
  return false;
}

bool ProblemInstance::has_prox_oracle() const {
  if (kind_ == ProblemKind::NLP)
    return nlp()->m == 0 || nlp()->f.affine.has_value();
  return true;
}

ProblemInstance ProblemInstance::with_solution(Vector xbar, std::optional<double> kappa) const {
  ProblemInstance out = *this;
  out.known_solution_ = std::move(xbar);
  out.known_tilt_modulus_ = kappa;
  return out;
}

ProblemInstance make_smooth(SmoothC2Data data) {
  const int n = static_cast<int>(data.f.Q.rows());
  require_dim(data.f.b.size() == n && data.f.quartic.size() == n, "smooth data");
  return ProblemInstance(ProblemKind::SmoothC2, n, std::move(data));
}

ProblemInstance make_piecewise_l1(PiecewiseC11Data data) {
  const int n = static_cast<int>(data.Q.rows());
  require_dim(data.b.size() == n && data.l1.size() == n, "piecewise data");
  if (data.l1.minCoeff() < 0) throw ConfigInvalidError("l1 weights must be nonnegative");
  return ProblemInstance(ProblemKind::PiecewiseC11, n, std::move(data));
}

ProblemInstance make_elqp(ELQPData data) {
  const int n = static_cast<int>(data.Q.rows());
  const int m = static_cast<int>(data.A.rows());
  require_dim(data.q.size() == n && data.A.cols() == n && data.b.size() == m &&
                  data.B.rows() == m && data.C.dim() == m,
              "elqp data");
  Eigen::LLT<Matrix> llt(data.B);
  if (llt.info() != Eigen::Success)
    throw ConfigInvalidError("elqp: B must be symmetric positive definite");
  return ProblemInstance(ProblemKind::ELQP, n, std::move(data));
}

ProblemInstance make_nlp(NLPData data) {
  require_dim(0 <= data.s && data.s <= data.m, "nlp counts");
  require_dim(data.f.m == data.m, "nlp constraint rows");
  return ProblemInstance(ProblemKind::NLP, data.f.n, std::move(data));
}

ProblemInstance make_auglag(AugLagData data) {
  if (data.rho <= 0) throw ConfigInvalidError("auglag: rho must be positive");
  require_dim(data.lambda.size() == data.f.m && data.theta.dim() == data.f.m, "auglag data");
  return ProblemInstance(ProblemKind::AugLag, data.f.n, std::move(data));
}

ProblemInstance make_oscillation(double alpha) {
  if (alpha <= 0) throw ConfigInvalidError("oscillation: alpha must be positive");
  OscillationData d;
  d.alpha = alpha;
  ProblemInstance inst(ProblemKind::Oscillation, 1, d);
  return inst.with_solution(Vector::Zero(1));
}

// ---------------------------------------------------------------------------
// JSON serialization

namespace {

json matrix_to_json(const Matrix& M) {
  json rows = json::array();
  for (int i = 0; i < M.rows(); ++i) {
    json row = json::array();
    for (int j = 0; j < M.cols(); ++j) row.push_back(M(i, j));
    rows.push_back(row);
  }
  return rows;
}

json vector_to_json(const Vector& v) {
  json out = json::array();
  for (int i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

Matrix matrix_from_json(const json& j) {
  const int r = static_cast<int>(j.size());
  if (r == 0) return Matrix::Zero(0, 0);
  const int c = static_cast<int>(j.at(0).size());
  Matrix M(r, c);
  for (int i = 0; i < r; ++i)
    for (int k = 0; k < c; ++k) M(i, k) = j.at(i).at(k).get<double>();
  return M;
}

Vector vector_from_json(const json& j) {
  Vector v(j.size());
  for (size_t i = 0; i < j.size(); ++i) v(static_cast<int>(i)) = j.at(i).get<double>();
  return v;
}

json polyhedral_to_json(const PolyhedralSet& s) {
  return json{{"G", matrix_to_json(s.G)},
              {"h", vector_to_json(s.h)},
              {"E", matrix_to_json(s.E)},
              {"d", vector_to_json(s.d)}};
}

PolyhedralSet polyhedral_from_json(const json& j, int m) {
  Matrix G = matrix_from_json(j.at("G"));
  Matrix E = matrix_from_json(j.at("E"));
  if (G.rows() == 0) G = Matrix::Zero(0, m);
  if (E.rows() == 0) E = Matrix::Zero(0, m);
  return make_polyhedral(G, vector_from_json(j.at("h")), E, vector_from_json(j.at("d")));
}

json quad_quartic_to_json(const QuadQuartic& q) {
  return json{{"Q", matrix_to_json(q.Q)},
              {"b", vector_to_json(q.b)},
              {"quartic", vector_to_json(q.quartic)}};
}

QuadQuartic quad_quartic_from_json(const json& j) {
  QuadQuartic q;
  q.Q = matrix_from_json(j.at("Q"));
  q.b = vector_from_json(j.at("b"));
  q.quartic = j.contains("quartic") ? vector_from_json(j.at("quartic"))
                                    : Vector(Vector::Zero(q.b.size()));
  return q;
}

json theta_to_json(const ThetaSet& t) {
  if (t.kind == ThetaSet::Kind::Soc) return json{{"soc", t.soc_dim}};
  return polyhedral_to_json(t.poly);
}

ThetaSet theta_from_json(const json& j, int m) {
  ThetaSet t;
  if (j.contains("soc")) {
    t.kind = ThetaSet::Kind::Soc;
    t.soc_dim = j.at("soc").get<int>();
  } else {
    t.kind = ThetaSet::Kind::Polyhedral;
    t.poly = polyhedral_from_json(j, m);
  }
  return t;
}

}  // namespace

json ProblemInstance::to_json() const {
  json j;
  j["kind"] = tiltnewton::to_string(kind_);
  switch (kind_) {
    case ProblemKind::SmoothC2:
      j["objective"] = quad_quartic_to_json(smooth()->f);
      break;
    case ProblemKind::PiecewiseC11: {
      const auto& d = *piecewise();
      j["Q"] = matrix_to_json(d.Q);
      j["b"] = vector_to_json(d.b);
      j["l1"] = vector_to_json(d.l1);
      break;
    }
    case ProblemKind::ELQP: {
      const auto& d = *elqp();
      j["Q"] = matrix_to_json(d.Q);
      j["q"] = vector_to_json(d.q);
      j["A"] = matrix_to_json(d.A);
      j["b"] = vector_to_json(d.b);
      j["B"] = matrix_to_json(d.B);
      j["C"] = polyhedral_to_json(d.C);
      break;
    }
    case ProblemKind::NLP: {
      const auto& d = *nlp();
      if (!d.psi.parametric || !d.f.affine)
        throw UnsupportedSetError("only parametric NLP instances are serializable");
      j["psi"] = quad_quartic_to_json(*d.psi.parametric);
      j["f"] = json{{"J", matrix_to_json(d.f.affine->J)}, {"c", vector_to_json(d.f.affine->c)}};
      j["s"] = d.s;
      j["m"] = d.m;
      break;
    }
    case ProblemKind::AugLag: {
      const auto& d = *auglag();
      if (!d.psi.parametric || !d.f.affine)
        throw UnsupportedSetError("only parametric augmented-Lagrangian instances are serializable");
      j["psi"] = quad_quartic_to_json(*d.psi.parametric);
      j["f"] = json{{"J", matrix_to_json(d.f.affine->J)}, {"c", vector_to_json(d.f.affine->c)}};
      j["theta"] = theta_to_json(d.theta);
      j["lambda"] = vector_to_json(d.lambda);
      j["rho"] = d.rho;
      break;
    }
    case ProblemKind::Oscillation:
      j["alpha"] = oscillation()->alpha;
      break;
  }
  if (known_solution_) j["known_solution"] = vector_to_json(*known_solution_);
  if (known_tilt_modulus_) j["known_tilt_modulus"] = *known_tilt_modulus_;
  return j;
}

ProblemInstance ProblemInstance::from_json(const json& j) {
  const ProblemKind kind = problem_kind_from_string(j.at("kind").get<std::string>());
  std::optional<ProblemInstance> inst;
  switch (kind) {
    case ProblemKind::SmoothC2:
      inst = make_smooth({quad_quartic_from_json(j.at("objective"))});
      break;
    case ProblemKind::PiecewiseC11: {
      PiecewiseC11Data d;
      d.Q = matrix_from_json(j.at("Q"));
      d.b = vector_from_json(j.at("b"));
      d.l1 = vector_from_json(j.at("l1"));
      inst = make_piecewise_l1(std::move(d));
      break;
    }
    case ProblemKind::ELQP: {
      ELQPData d;
      d.Q = matrix_from_json(j.at("Q"));
      d.q = vector_from_json(j.at("q"));
      d.A = matrix_from_json(j.at("A"));
      d.b = vector_from_json(j.at("b"));
      d.B = matrix_from_json(j.at("B"));
      d.C = polyhedral_from_json(j.at("C"), static_cast<int>(d.B.rows()));
      inst = make_elqp(std::move(d));
      break;
    }
    case ProblemKind::NLP: {
      NLPData d;
      d.psi = SmoothObjective::from_quad_quartic(quad_quartic_from_json(j.at("psi")));
      AffineMap a;
      a.J = matrix_from_json(j.at("f").at("J"));
      a.c = vector_from_json(j.at("f").at("c"));
      if (a.J.rows() == 0) a.J = Matrix::Zero(0, d.psi.parametric->Q.rows());
      d.f = ConstraintMap::from_affine(std::move(a));
      d.s = j.at("s").get<int>();
      d.m = j.at("m").get<int>();
      inst = make_nlp(std::move(d));
      break;
    }
    case ProblemKind::AugLag: {
      AugLagData d;
      d.psi = SmoothObjective::from_quad_quartic(quad_quartic_from_json(j.at("psi")));
      AffineMap a;
      a.J = matrix_from_json(j.at("f").at("J"));
      a.c = vector_from_json(j.at("f").at("c"));
      if (a.J.rows() == 0) a.J = Matrix::Zero(0, d.psi.parametric->Q.rows());
      d.f = ConstraintMap::from_affine(std::move(a));
      d.theta = theta_from_json(j.at("theta"), d.f.m);
      d.lambda = vector_from_json(j.at("lambda"));
      d.rho = j.at("rho").get<double>();
      inst = make_auglag(std::move(d));
      break;
    }
    case ProblemKind::Oscillation:
      inst = make_oscillation(j.at("alpha").get<double>());
      break;
  }
  if (j.contains("known_solution")) {
    std::optional<double> kappa;
    if (j.contains("known_tilt_modulus")) kappa = j.at("known_tilt_modulus").get<double>();
    inst = inst->with_solution(vector_from_json(j.at("known_solution")), kappa);
  }
  return *inst;
}

}  // namespace tiltnewton
