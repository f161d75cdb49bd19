#include <doctest.h>

#include <cmath>
#include <random>

#include <nlohmann/json.hpp>

#include "tiltnewton/problems.hpp"

using namespace tiltnewton;

namespace {

ProblemInstance elqp_1d() {
  ELQPData d;
  d.Q = Matrix::Constant(1, 1, 2.0);
  d.q = Vector::Zero(1);
  d.A = Matrix::Identity(1, 1);
  d.b = Vector::Zero(1);
  d.C = PolyhedralSet::nonnegative_orthant(1);
  d.B = Matrix::Identity(1, 1);
  return make_elqp(std::move(d)).with_solution(Vector::Zero(1), 0.5);
}

// brute-force maximization of the conjugate term over a fine grid p >= 0
double grid_conjugate_sup(double z, double B, double pmax = 8.0, double step = 1e-5) {
  double best = 0.0;  // p = 0 always feasible
  for (double p = 0.0; p <= pmax; p += step) best = std::max(best, z * p - 0.5 * B * p * p);
  return best;
}

ProblemInstance nlp_1d() {
  NLPData d;
  QuadQuartic psi;
  psi.Q = Matrix::Constant(1, 1, 2.0);
  psi.b = Vector::Constant(1, 2.0);
  psi.quartic = Vector::Zero(1);  // (x-1)^2 - 1
  d.psi = SmoothObjective::from_quad_quartic(psi);
  d.f = ConstraintMap::from_affine({Matrix::Identity(1, 1), Vector::Zero(1)});
  d.s = 0;
  d.m = 1;
  return make_nlp(std::move(d)).with_solution(Vector::Zero(1));
}

}  // namespace

TEST_CASE("elqp worked values against the grid oracle") {
  ProblemInstance inst = elqp_1d();
  // phi(-1) = 1 + sup_{p>=0}{p - p^2/2}
  CHECK(inst.value(Vector::Constant(1, -1.0)) ==
        doctest::Approx(1.0 + grid_conjugate_sup(1.0, 1.0)).epsilon(1e-8));
  CHECK(inst.value(Vector::Constant(1, -1.0)) == doctest::Approx(1.5).epsilon(1e-12));
  CHECK(inst.gradient(Vector::Constant(1, -1.0))(0) == doctest::Approx(-3.0).epsilon(1e-12));
  CHECK(inst.value(Vector::Constant(1, 1.0)) ==
        doctest::Approx(1.0 + grid_conjugate_sup(-1.0, 1.0)).epsilon(1e-8));
  CHECK(inst.gradient(Vector::Constant(1, 1.0))(0) == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("elqp with singleton C reduces to the pure quadratic") {
  ELQPData d;
  d.Q = Matrix::Constant(1, 1, 2.0);
  d.q = Vector::Constant(1, 0.5);
  d.A = Matrix::Identity(1, 1);
  d.b = Vector::Zero(1);
  d.C = PolyhedralSet::singleton(Vector::Zero(1));
  d.B = Matrix::Identity(1, 1);
  ProblemInstance inst = make_elqp(std::move(d));
  for (double x = -2.0; x <= 2.0; x += 0.25) {
    CHECK(inst.value(Vector::Constant(1, x)) == doctest::Approx(0.5 * x + x * x));
  }
}

TEST_CASE("elqp maximizer satisfies its optimality condition") {
  ProblemInstance inst = elqp_1d();
  const auto& d = *inst.elqp();
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int i = 0; i < 50; ++i) {
    const Vector x = Vector::Constant(1, u(rng));
    ConjugateResult res = conjugate_quadratic_sup(d.C, d.B, d.b - d.A * x);
    CHECK(res.kkt_residual <= 1e-10);
  }
}

TEST_CASE("nlp value and the +inf branch") {
  ProblemInstance inst = nlp_1d();
  // psi(x) = (x-1)^2 - 1 in the parametric form; spec example uses (x-1)^2
  CHECK(inst.value(Vector::Constant(1, -1.0)) == doctest::Approx(3.0));  // 4 - 1
  CHECK(inst.value(Vector::Constant(1, 0.5)) == kInf);
  CHECK(inst.value(Vector::Constant(1, 1e-10)) < kInf);  // inside the feasibility tolerance
  CHECK(inst.value(Vector::Constant(1, 1e-8)) == kInf);
}

TEST_CASE("nlp without constraints is the smooth objective") {
  NLPData d;
  QuadQuartic psi;
  psi.Q = Matrix::Constant(1, 1, 2.0);
  psi.b = Vector::Zero(1);
  psi.quartic = Vector::Zero(1);
  d.psi = SmoothObjective::from_quad_quartic(psi);
  d.f = ConstraintMap::from_affine({Matrix::Zero(0, 1), Vector::Zero(0)});
  d.s = 0;
  d.m = 0;
  ProblemInstance inst = make_nlp(std::move(d));
  CHECK(inst.is_c11());
  CHECK(inst.value(Vector::Constant(1, 2.0)) == doctest::Approx(4.0));
  CHECK(inst.gradient(Vector::Constant(1, 2.0))(0) == doctest::Approx(4.0));
}

TEST_CASE("augmented objective worked values") {
  AugLagData d;
  QuadQuartic psi;
  psi.Q = Matrix::Constant(1, 1, 2.0);
  psi.b = Vector::Zero(1);
  psi.quartic = Vector::Zero(1);  // x^2
  d.psi = SmoothObjective::from_quad_quartic(psi);
  d.f = ConstraintMap::from_affine({Matrix::Identity(1, 1), Vector::Zero(1)});
  d.theta.kind = ThetaSet::Kind::Polyhedral;
  d.theta.poly = PolyhedralSet::nonpositive_orthant(1);
  d.lambda = Vector::Zero(1);
  d.rho = 1.0;
  ProblemInstance inst = make_auglag(std::move(d));
  CHECK(inst.value(Vector::Constant(1, 3.0)) == doctest::Approx(13.5));
  CHECK(inst.gradient(Vector::Constant(1, 3.0))(0) == doctest::Approx(9.0));
  CHECK(inst.value(Vector::Constant(1, -1.0)) == doctest::Approx(1.0));
  CHECK(inst.gradient(Vector::Constant(1, -1.0))(0) == doctest::Approx(-2.0));
}

TEST_CASE("augmented objective envelope term with the second-order cone") {
  AugLagData d;
  QuadQuartic psi;
  psi.Q = Matrix::Zero(1, 1);
  psi.b = Vector::Zero(1);
  psi.quartic = Vector::Zero(1);
  d.psi = SmoothObjective::from_quad_quartic(psi);
  Vector c(3);
  c << 0.0, 0.0, -1.0;
  d.f = ConstraintMap::from_affine({Matrix::Zero(3, 1), c});
  d.theta.kind = ThetaSet::Kind::Soc;
  d.theta.soc_dim = 3;
  d.lambda = Vector::Zero(3);
  d.rho = 1.0;
  ProblemInstance inst = make_auglag(std::move(d));
  // z = (0,0,-1) projects to the origin; envelope term is rho/2
  CHECK(inst.value(Vector::Zero(1)) == doctest::Approx(0.5));
}

TEST_CASE("oscillation instance") {
  ProblemInstance inst = make_oscillation(1.0);
  const double x0 = 1.0 / (2.0 * M_PI);
  CHECK(inst.gradient(Vector::Constant(1, x0))(0) == doctest::Approx(1.0 / M_PI).epsilon(1e-14));
  CHECK(OscillationData::slope_derivative(x0) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(inst.gradient(Vector::Zero(1))(0) == 0.0);
  // value by quadrature against a trapezoid oracle
  double acc = 0.0;
  const int N = 200000;
  const double xe = 0.3;
  for (int i = 0; i < N; ++i) {
    const double a = xe * i / N, b = xe * (i + 1) / N;
    acc += 0.5 * (OscillationData::slope(a) + OscillationData::slope(b)) * (b - a);
  }
  CHECK(inst.value(Vector::Constant(1, xe)) == doctest::Approx(acc).epsilon(1e-8));
}

TEST_CASE("gradients agree with central differences at random points") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-1.5, 1.5);
  const double h = 1e-6;
  auto check_instance = [&](const ProblemInstance& inst, double lipschitz_scale) {
    for (int trial = 0; trial < 1000; ++trial) {
      Vector x(inst.dimension());
      for (int i = 0; i < x.size(); ++i) x(i) = u(rng);
      Vector fd(inst.dimension());
      for (int i = 0; i < x.size(); ++i) {
        Vector e = Vector::Zero(x.size());
        e(i) = h;
        fd(i) = (inst.value(x + e) - inst.value(x - e)) / (2.0 * h);
      }
      CHECK((inst.gradient(x) - fd).norm() <= lipschitz_scale * h);
    }
  };
  check_instance(elqp_1d(), 10.0);

  SmoothC2Data sm;
  sm.f.Q = Matrix::Constant(1, 1, 2.0);
  sm.f.b = Vector::Zero(1);
  sm.f.quartic = Vector::Constant(1, 1.0);
  check_instance(make_smooth(sm), 50.0);

  AugLagData al;
  QuadQuartic psi;
  psi.Q = Matrix::Constant(1, 1, 2.0);
  psi.b = Vector::Zero(1);
  psi.quartic = Vector::Zero(1);
  al.psi = SmoothObjective::from_quad_quartic(psi);
  al.f = ConstraintMap::from_affine({Matrix::Identity(1, 1), Vector::Zero(1)});
  al.theta.kind = ThetaSet::Kind::Polyhedral;
  al.theta.poly = PolyhedralSet::nonpositive_orthant(1);
  al.lambda = Vector::Constant(1, 0.5);
  al.rho = 2.0;
  check_instance(make_auglag(std::move(al)), 30.0);
}

TEST_CASE("augmented objective matches an independent clamp-based build") {
  // theta = nonpositive orthant in R^2: projection is a componentwise clamp
  AugLagData d;
  QuadQuartic psi;
  psi.Q = 2.0 * Matrix::Identity(2, 2);
  psi.b = Vector::Zero(2);
  psi.quartic = Vector::Zero(2);
  d.psi = SmoothObjective::from_quad_quartic(psi);
  Matrix J(2, 2);
  J << 1.0, 0.5, 0.0, 1.0;
  Vector c(2);
  c << 0.1, -0.2;
  d.f = ConstraintMap::from_affine({J, c});
  d.theta.kind = ThetaSet::Kind::Polyhedral;
  d.theta.poly = PolyhedralSet::nonpositive_orthant(2);
  d.lambda = Vector::Constant(2, 0.3);
  d.rho = 2.0;
  ProblemInstance inst = make_auglag(AugLagData(d));

  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int trial = 0; trial < 1000; ++trial) {
    Vector x(2);
    x << u(rng), u(rng);
    const Vector z = J * x + c + d.lambda / d.rho;
    const Vector proj = z.cwiseMin(0.0);
    const double envelope = 0.5 * d.rho * (z - proj).squaredNorm();
    const double value = x.dot(x) /* psi */ + envelope - 0.5 * d.lambda.squaredNorm() / d.rho;
    const Vector mu = d.rho * (z - proj);
    const Vector grad = 2.0 * x + J.transpose() * mu;
    CHECK(std::abs(inst.value(x) - value) <= 1e-10);
    CHECK((inst.gradient(x) - grad).norm() <= 1e-10);
  }
}

TEST_CASE("problem JSON round trip") {
  auto check_roundtrip = [](const ProblemInstance& inst) {
    const nlohmann::json j = inst.to_json();
    const ProblemInstance back = ProblemInstance::from_json(j);
    CHECK(back.to_json().dump() == j.dump());
  };
  check_roundtrip(elqp_1d());
  check_roundtrip(nlp_1d());
  check_roundtrip(make_oscillation(2.0));
  SmoothC2Data sm;
  sm.f.Q = Matrix::Identity(2, 2);
  sm.f.b = Vector::Ones(2);
  sm.f.quartic = Vector::Zero(2);
  check_roundtrip(make_smooth(sm));
}

TEST_CASE("constructor validation") {
  ELQPData d;
  d.Q = Matrix::Identity(1, 1);
  d.q = Vector::Zero(1);
  d.A = Matrix::Identity(1, 1);
  d.b = Vector::Zero(1);
  d.C = PolyhedralSet::nonnegative_orthant(1);
  d.B = -Matrix::Identity(1, 1);  // not positive definite
  CHECK_THROWS_AS(make_elqp(std::move(d)), ConfigInvalidError);

  AugLagData al;
  al.psi = SmoothObjective::from_quad_quartic({Matrix::Identity(1, 1), Vector::Zero(1), Vector::Zero(1)});
  al.f = ConstraintMap::from_affine({Matrix::Identity(1, 1), Vector::Zero(1)});
  al.theta.kind = ThetaSet::Kind::Polyhedral;
  al.theta.poly = PolyhedralSet::nonpositive_orthant(1);
  al.lambda = Vector::Zero(1);
  al.rho = -1.0;
  CHECK_THROWS_AS(make_auglag(std::move(al)), ConfigInvalidError);

  CHECK_THROWS_AS(make_oscillation(0.0), ConfigInvalidError);
}
