// Acceptance suite: end-to-end checks of the library's convergence,
// envelope, second-order, and reproducibility guarantees. One line per
// criterion; exit code 0 iff every criterion passes.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "qp_reference.hpp"
#include "tiltnewton/diagnostics.hpp"
#include "tiltnewton/envelope.hpp"
#include "tiltnewton/experiment.hpp"
#include "tiltnewton/newton.hpp"
#include "tiltnewton/problems.hpp"
#include "tiltnewton/secondorder.hpp"

using namespace tiltnewton;
using nlohmann::json;

namespace {

struct Check {
  bool pass = true;
  std::string detail;
  void fail(const std::string& why) {
    pass = false;
    if (!detail.empty()) detail += "; ";
    detail += why;
  }
  void require(bool ok, const std::string& why) {
    if (!ok) fail(why);
  }
};

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.3g", v);
  return buf;
}

// ---- instance suite ------------------------------------------------------

ProblemInstance quadratic_1d(double a) {
  SmoothC2Data d;
  d.f.Q = Matrix::Constant(1, 1, a);
  d.f.b = Vector::Zero(1);
  d.f.quartic = Vector::Zero(1);
  return make_smooth(std::move(d)).with_solution(Vector::Zero(1), 1.0 / a);
}

ProblemInstance smooth_quad_quartic_2d() {
  SmoothC2Data d;
  d.f.Q = Matrix::Zero(2, 2);
  d.f.Q.diagonal() << 2.0, 3.0;
  d.f.b = Vector::Zero(2);
  d.f.quartic = Vector::Zero(2);
  d.f.quartic << 1.0, 0.5;
  return make_smooth(std::move(d)).with_solution(Vector::Zero(2), 0.5);
}

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

ProblemInstance elqp_2d() {
  ELQPData d;
  d.Q = Matrix::Zero(2, 2);
  d.Q << 2.0, 0.5, 0.5, 3.0;
  d.q = Vector::Zero(2);
  d.A = Matrix::Identity(2, 2);
  d.b = Vector::Zero(2);
  d.b << 0.0, -1.0;  // the minimizer sits on the kink of the conjugate term
  d.C = PolyhedralSet::nonnegative_orthant(2);
  d.B = Matrix::Identity(2, 2);
  return make_elqp(std::move(d)).with_solution(Vector::Zero(2));
}

ProblemInstance nlp_halfline() {  // (x-1)^2 - 1 subject to x <= 0
  NLPData d;
  d.psi = SmoothObjective::from_quad_quartic(
      {Matrix::Constant(1, 1, 2.0), Vector::Constant(1, 2.0), Vector::Zero(1)});
  d.f = ConstraintMap::from_affine({Matrix::Identity(1, 1), Vector::Zero(1)});
  d.s = 0;
  d.m = 1;
  return make_nlp(std::move(d)).with_solution(Vector::Zero(1));
}

ProblemInstance auglag_soc() {
  AugLagData d;
  QuadQuartic psi;
  psi.Q = Matrix::Zero(3, 3);
  psi.Q.diagonal() << 2.0, 1.0, 2.0;
  psi.b = Vector::Zero(3);
  psi.b << 0.5, 0.0, -0.5;  // cancels the envelope multiplier at the origin
  psi.quartic = Vector::Zero(3);
  d.psi = SmoothObjective::from_quad_quartic(psi);
  Vector c(3);
  c << 0.8, 0.0, 0.3;  // constraint value at the solution: projection blend region
  d.f = ConstraintMap::from_affine({Matrix::Identity(3, 3), c});
  d.theta.kind = ThetaSet::Kind::Soc;
  d.theta.soc_dim = 3;
  d.lambda = Vector::Zero(3);
  d.rho = 2.0;
  return make_auglag(std::move(d)).with_solution(Vector::Zero(3));
}

ProblemInstance auglag_poly() {
  AugLagData d;
  d.psi = SmoothObjective::from_quad_quartic(
      {Matrix::Constant(1, 1, 2.0), Vector::Zero(1), Vector::Zero(1)});
  d.f = ConstraintMap::from_affine({Matrix::Identity(1, 1), Vector::Zero(1)});
  d.theta.kind = ThetaSet::Kind::Polyhedral;
  d.theta.poly = PolyhedralSet::nonpositive_orthant(1);
  d.lambda = Vector::Zero(1);
  d.rho = 1.0;
  return make_auglag(std::move(d)).with_solution(Vector::Zero(1));
}

ProblemInstance l1_quadratic() {
  PiecewiseC11Data d;
  d.Q = Matrix::Constant(1, 1, 2.0);
  d.b = Vector::Zero(1);
  d.l1 = Vector::Ones(1);
  return make_piecewise_l1(std::move(d)).with_solution(Vector::Zero(1));
}

const std::vector<NewtonVariant> kAllVariants = {
    NewtonVariant::Coderivative, NewtonVariant::Graphical, NewtonVariant::SemismoothBaseline,
    NewtonVariant::BDiffBaseline, NewtonVariant::ProxGraphical};

NewtonOptions default_options(NewtonVariant v) {
  NewtonOptions opts;
  opts.variant = v;
  opts.grad_tol = 1e-10;
  opts.max_iters = 15;
  opts.r = 0.1;
  opts.prox_params.inner_tol = 1e-13;
  opts.prox_params.inner_max_iters = 500000;
  return opts;
}

Vector ball_sample(std::mt19937_64& rng, int n, double radius) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Vector d(n);
  for (int i = 0; i < n; ++i) d(i) = gauss(rng);
  d.normalize();
  return radius * std::pow(unif(rng), 1.0 / n) * d;
}

// ---- criteria ------------------------------------------------------------

Check criterion_superlinear_suite() {
  Check c;
  const auto t0 = std::chrono::steady_clock::now();
  struct Case {
    ProblemInstance inst;
    std::vector<NewtonVariant> variants;
    std::string name;
  };
  std::vector<Case> cases;
  cases.push_back({smooth_quad_quartic_2d(), kAllVariants, "smooth"});
  cases.push_back({elqp_1d(), kAllVariants, "elqp1"});
  cases.push_back({elqp_2d(), kAllVariants, "elqp2"});
  cases.push_back({nlp_halfline(), {NewtonVariant::ProxGraphical}, "nlp"});
  cases.push_back({auglag_soc(), kAllVariants, "auglag_soc"});

  std::mt19937_64 rng(7001);
  for (auto& cs : cases) {
    const Vector xbar = *cs.inst.known_solution();
    for (NewtonVariant v : cs.variants) {
      for (int start = 0; start < 3; ++start) {
        const Vector x0 = xbar + ball_sample(rng, cs.inst.dimension(), 0.1);
        IterateTrace tr = run_newton(cs.inst, x0, default_options(v));
        const std::string tag = cs.name + "/" + to_string(v) + "#" + std::to_string(start);
        if (tr.terminal_status != TerminalStatus::Stationary) {
          c.fail(tag + " status " + to_string(tr.terminal_status));
          continue;
        }
        if (static_cast<int>(tr.records.size()) - 1 > 15) c.fail(tag + " too many iterations");
        if (tr.records.back().grad_norm > 1e-10) c.fail(tag + " grad_norm too large");
        RateReport rate = superlinear_ratios(tr, xbar);
        if (!rate.superlinear_verdict)
          c.fail(tag + " not superlinear (final ratio " + fmt(rate.final_ratio) + ")");
      }
    }
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  c.require(secs < 5.0, "runtime " + fmt(secs) + "s exceeds 5s");
  if (c.pass) c.detail = "5 instances, all applicable variants, runtime " + fmt(secs) + "s";
  return c;
}

Check criterion_oscillation() {
  Check c;
  ProblemInstance osc = make_oscillation(1.0);
  NewtonOptions opts = default_options(NewtonVariant::Coderivative);
  opts.max_iters = 50;
  const double x0 = 1.0 / (2.0 * M_PI);
  IterateTrace tr = run_newton(osc, Vector::Constant(1, x0), opts);
  c.require(tr.terminal_status == TerminalStatus::Diverged ||
                tr.terminal_status == TerminalStatus::MaxIter,
            "status " + to_string(tr.terminal_status));
  c.require(tr.records.size() == 51, "expected 50 iterations");
  double worst = 0.0;
  for (size_t k = 0; k + 1 < tr.records.size(); ++k)
    worst = std::max(worst, std::abs(tr.records[k + 1].x(0) + tr.records[k].x(0)));
  c.require(worst <= 1e-10, "oscillation deviation " + fmt(worst));

  std::vector<double> radii;
  for (int j = 1; j <= 10; ++j) {
    const double target = std::pow(10.0, -j);
    const double k = std::max(std::round(1.0 / (M_PI * target)), 1.0);
    radii.push_back(1.0 / (M_PI * k));
  }
  ProbeReport rep = semismoothstar_probe(osc, Vector::Zero(1), radii, 64, 4242);
  for (size_t j = 0; j < rep.worst_ratio_per_radius.size(); ++j) {
    if (rep.worst_ratio_per_radius[j] < 0.5)
      c.fail("ratio " + fmt(rep.worst_ratio_per_radius[j]) + " at radius " + fmt(radii[j]));
  }
  if (c.pass)
    c.detail = "exact sign flips for 50 iterations, worst deviation " + fmt(worst) +
               ", residual ratios stay >= 0.5";
  return c;
}

Check criterion_envelope_identity() {
  Check c;
  std::vector<std::pair<std::string, ProblemInstance>> insts;
  insts.emplace_back("quad", quadratic_1d(1.0));
  insts.emplace_back("smooth", smooth_quad_quartic_2d());
  insts.emplace_back("l1", l1_quadratic());
  insts.emplace_back("elqp1", elqp_1d());
  insts.emplace_back("elqp2", elqp_2d());
  insts.emplace_back("nlp", nlp_halfline());
  insts.emplace_back("auglag_poly", auglag_poly());
  insts.emplace_back("auglag_soc", auglag_soc());

  std::mt19937_64 rng(7003);
  for (const auto& [name, inst] : insts) {
    for (double r : {0.5, 0.1, 0.01}) {
      MoreauParams mp;
      mp.r = r;
      mp.inner_tol = 1e-10;
      mp.inner_max_iters = 300000;
      double worst = 0.0;
      for (int i = 0; i < 1000; ++i) {
        const Vector x = ball_sample(rng, inst.dimension(), 1.5);
        const ProxResult pr = prox(inst, mp, x);
        const Vector v = (x - pr.point) / r;
        worst = std::max(worst, inst.subgradient_residual(pr.point, v));
      }
      if (worst > 1e-8) c.fail(name + " r=" + fmt(r) + " residual " + fmt(worst));
    }
  }
  if (c.pass) c.detail = "8 instances x 3 radii x 1000 points, residuals <= 1e-8";
  return c;
}

Check criterion_modulus_propagation() {
  Check c;
  std::mt19937_64 rng(7004);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (double a : {0.5, 1.0, 4.0}) {
    ProblemInstance q = quadratic_1d(a);
    for (double r : {0.05, 0.2}) {
      MoreauParams mp;
      mp.r = r;
      double measured = 0.0;
      for (int i = 0; i < 400; ++i) {
        const double x1 = u(rng), x2 = u(rng);
        if (std::abs(x1 - x2) < 1e-8) continue;
        const double g1 = envelope_gradient(q, mp, Vector::Constant(1, x1))(0);
        const double g2 = envelope_gradient(q, mp, Vector::Constant(1, x2))(0);
        measured = std::max(measured, std::abs(x1 - x2) / std::abs(g1 - g2));
      }
      const double expected = 1.0 / a + r;
      if (std::abs(measured - expected) > 0.02 * expected)
        c.fail("a=" + fmt(a) + " r=" + fmt(r) + " measured " + fmt(measured) + " vs " +
               fmt(expected));
      const double kappa = *q.known_tilt_modulus();
      if (measured > kappa + 2.0 * r + 1e-9)
        c.fail("a=" + fmt(a) + " r=" + fmt(r) + " exceeds kappa + 2r");
    }
  }
  if (c.pass) c.detail = "inverse-gradient modulus = 1/a + r within 2%, bounded by kappa + 2r";
  return c;
}

Check criterion_fd_agreement() {
  Check c;
  std::mt19937_64 rng(7005);
  std::uniform_real_distribution<double> u(-1.5, 1.5);
  const double t = 1e-4;

  auto run_samples = [&](const std::string& name, const ProblemInstance& inst,
                         const std::function<bool(const Vector&)>& stable,
                         const std::function<double(const Vector&, const Vector&)>& analytic) {
    int accepted = 0;
    double worst = 0.0;
    int guard = 0;
    while (accepted < 500 && guard++ < 50000) {
      Vector x(inst.dimension()), w(inst.dimension());
      for (int i = 0; i < x.size(); ++i) x(i) = u(rng);
      for (int i = 0; i < w.size(); ++i) w(i) = u(rng);
      if (!stable(x) || w.norm() < 0.05) continue;
      const double a = analytic(x, w);
      const double quot = fd_second_quotient(inst, x, inst.gradient(x), w, t);
      const double err = std::abs(a - quot) / (1.0 + std::abs(a));
      worst = std::max(worst, err);
      ++accepted;
    }
    if (accepted < 500) c.fail(name + ": only " + std::to_string(accepted) + " stable samples");
    if (worst > 1e-3) c.fail(name + ": worst relative error " + fmt(worst));
  };

  {
    ProblemInstance e1 = elqp_1d();
    run_samples(
        "elqp1", e1, [&](const Vector& x) { return std::abs(x(0)) > 1e-3; },
        [&](const Vector& x, const Vector& w) {
          return second_subderivative_elqp(*e1.elqp(), x, w);
        });
  }
  {
    ProblemInstance e2 = elqp_2d();
    run_samples(
        "elqp2", e2,
        [&](const Vector& x) {
          const Vector z = e2.elqp()->b - e2.elqp()->A * x;
          return z.cwiseAbs().minCoeff() > 1e-3;
        },
        [&](const Vector& x, const Vector& w) {
          return second_subderivative_elqp(*e2.elqp(), x, w);
        });
  }
  {
    ProblemInstance ap = auglag_poly();
    run_samples(
        "auglag_poly", ap,
        [&](const Vector& x) {
          const auto& d = *ap.auglag();
          const Vector z = d.f.value(x) + d.lambda / d.rho;
          return z.cwiseAbs().minCoeff() > 1e-3;
        },
        [&](const Vector& x, const Vector& w) {
          return evaluate_second_model(second_order_model_auglag(*ap.auglag(), x), w);
        });
  }
  {
    ProblemInstance as = auglag_soc();
    run_samples(
        "auglag_soc", as,
        [&](const Vector& x) {
          const auto& d = *as.auglag();
          const Vector z = d.f.value(x) + d.lambda / d.rho;
          const double zs = z.head(2).norm();
          return zs > 1e-3 && std::abs(zs - std::abs(z(2))) > 1e-3;
        },
        [&](const Vector& x, const Vector& w) {
          return evaluate_second_model(second_order_model_auglag(*as.auglag(), x), w);
        });
  }

  // exact piecewise values of the 1-d instance
  ProblemInstance e1 = elqp_1d();
  for (double w : {0.3, 1.0, -1.7}) {
    const double neg = second_subderivative_elqp(*e1.elqp(), Vector::Constant(1, -1.0),
                                                 Vector::Constant(1, w));
    const double pos = second_subderivative_elqp(*e1.elqp(), Vector::Constant(1, 1.0),
                                                 Vector::Constant(1, w));
    if (std::abs(neg - 3.0 * w * w) > 1e-6) c.fail("branch value 3w^2 off by " + fmt(neg - 3 * w * w));
    if (std::abs(pos - 2.0 * w * w) > 1e-6) c.fail("branch value 2w^2 off by " + fmt(pos - 2 * w * w));
  }
  if (c.pass) c.detail = "4 instances x 500 stable samples, relative error <= 1e-3";
  return c;
}

Check criterion_direction_consistency() {
  Check c;
  std::mt19937_64 rng(7006);
  std::uniform_real_distribution<double> u(-1.0, 1.0);

  // quartic smooth instance: the four direct variants equal classical Newton
  ProblemInstance q = smooth_quad_quartic_2d();
  for (int i = 0; i < 100; ++i) {
    Vector x(2);
    x << u(rng), u(rng);
    if (x.norm() < 1e-3) continue;
    const Vector g = q.gradient(x);
    const Matrix H = q.smooth()->f.hessian(x);
    const Vector newton_next = x - H.ldlt().solve(g);
    for (NewtonVariant v :
         {NewtonVariant::Coderivative, NewtonVariant::Graphical, NewtonVariant::SemismoothBaseline,
          NewtonVariant::BDiffBaseline}) {
      NewtonOptions opts = default_options(v);
      opts.max_iters = 1;
      opts.grad_tol = 1e-300;
      IterateTrace tr = run_newton(q, x, opts);
      if ((tr.final_x - newton_next).norm() > 1e-12)
        c.fail(to_string(v) + " deviates " + fmt((tr.final_x - newton_next).norm()));
    }
  }

  // pure quadratic: every variant, including the prox-reduced one, lands on
  // the classical Newton point in one step
  SmoothC2Data qd;
  qd.f.Q = Matrix::Zero(2, 2);
  qd.f.Q << 2.0, 0.5, 0.5, 3.0;
  qd.f.b = Vector::Zero(2);
  qd.f.quartic = Vector::Zero(2);
  ProblemInstance pure = make_smooth(std::move(qd)).with_solution(Vector::Zero(2));
  for (int i = 0; i < 100; ++i) {
    Vector x(2);
    x << u(rng), u(rng);
    if (x.norm() < 1e-3) continue;
    const Vector newton_next =
        x - pure.smooth()->f.Q.ldlt().solve(pure.gradient(x));
    for (NewtonVariant v : kAllVariants) {
      NewtonOptions opts = default_options(v);
      opts.max_iters = 1;
      opts.grad_tol = 1e-300;
      IterateTrace tr = run_newton(pure, x, opts);
      if ((tr.final_x - newton_next).norm() > 1e-12)
        c.fail("quad/" + to_string(v) + " deviates " + fmt((tr.final_x - newton_next).norm()));
    }
  }
  if (c.pass) c.detail = "first steps match classical Newton to 1e-12 at 100 random points";
  return c;
}

Check criterion_qp_oracle() {
  Check c;
  std::mt19937_64 rng(7007);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_int_distribution<int> dim(1, 6), rows(0, 8);
  double worst_obj = 0.0, worst_kkt = 0.0;
  for (int trial = 0; trial < 500; ++trial) {
    const int n = dim(rng);
    Matrix M(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) M(i, j) = gauss(rng);
    ConeQP qp;
    qp.H = M.transpose() * M + Matrix::Identity(n, n);
    qp.g = Vector::NullaryExpr(n, [&](Eigen::Index) { return gauss(rng); });
    const int mi = rows(rng);
    qp.cone.eq = Matrix::Zero(0, n);
    qp.cone.ineq = Matrix::NullaryExpr(mi, n, [&](Eigen::Index, Eigen::Index) { return gauss(rng); });
    const QPSolution s = solve_cone_qp(qp);
    if (s.status != QPStatus::Optimal) {
      c.fail("trial " + std::to_string(trial) + " not optimal");
      continue;
    }
    worst_kkt = std::max(worst_kkt, s.kkt_residual);
    const double obj = 0.5 * s.w.dot(qp.H * s.w) + qp.g.dot(s.w);
    const double ref = tiltnewton::testing::dual_projected_gradient_reference(qp);
    worst_obj = std::max(worst_obj, std::abs(obj - ref));
  }
  c.require(worst_obj <= 1e-8, "objective gap " + fmt(worst_obj));
  c.require(worst_kkt <= 1e-10, "KKT residual " + fmt(worst_kkt));
  if (c.pass)
    c.detail = "500 QPs; max objective gap " + fmt(worst_obj) + ", max KKT residual " +
               fmt(worst_kkt);
  return c;
}

Check criterion_coderivative_estimate() {
  Check c;
  std::mt19937_64 rng(7008);
  for (auto& [name, inst] : std::vector<std::pair<std::string, ProblemInstance>>{
           {"elqp1", elqp_1d()}, {"elqp2", elqp_2d()}}) {
    const Vector xbar = *inst.known_solution();
    ProbeReport rep = tilt_probe(inst, xbar, 1.0, 0.5, 4000, 7008);
    if (!rep.estimated_kappa) {
      c.fail(name + ": no modulus estimate");
      continue;
    }
    const double kappa = *rep.estimated_kappa * 1.1;
    const Vector gbar = inst.gradient(xbar);
    for (int i = 0; i < 1000; ++i) {
      const Vector x = xbar + ball_sample(rng, inst.dimension(), 1e-2);
      if ((x - xbar).norm() < 1e-14) continue;
      int sel = -1;
      const Vector q = direction_coderivative(inst, x, &sel);
      const Matrix H = hessian_selections(inst, x)[sel].H;
      const double lhs = (x - xbar - q).norm();
      const double rhs = kappa * (inst.gradient(x) - gbar - H * (x - xbar)).norm();
      if (lhs > rhs + 1e-12) {
        c.fail(name + ": estimate violated by " + fmt(lhs - rhs));
        break;
      }
    }
  }
  if (c.pass) c.detail = "estimate holds at 1000 samples within 1e-2 (probe modulus + 10%)";
  return c;
}

Check criterion_unit_steps() {
  Check c;
  std::vector<std::pair<std::string, ProblemInstance>> insts;
  insts.emplace_back("smooth", smooth_quad_quartic_2d());
  insts.emplace_back("elqp1", elqp_1d());
  insts.emplace_back("elqp2", elqp_2d());
  insts.emplace_back("auglag_soc", auglag_soc());
  std::mt19937_64 rng(7009);
  for (auto& [name, inst] : insts) {
    const Vector xbar = *inst.known_solution();
    for (int start = 0; start < 3; ++start) {
      NewtonOptions opts = default_options(NewtonVariant::Graphical);
      LineSearchParams ls;
      ls.mu = 0.05;
      ls.shrink = 0.5;
      ls.alpha_min = 1e-8;
      opts.line_search = ls;
      opts.max_iters = 30;
      const Vector x0 = xbar + ball_sample(rng, inst.dimension(), 0.5);
      IterateTrace tr = run_newton(inst, x0, opts);
      if (tr.terminal_status != TerminalStatus::Stationary) {
        c.fail(name + " line-search run did not converge");
        continue;
      }
      bool below = false;
      for (const auto& rec : tr.records) {
        if (!below && (rec.x - xbar).norm() < 1e-3) below = true;
        if (below && rec.direction.size() > 0 && rec.alpha != 1.0)
          c.fail(name + " step " + fmt(rec.alpha) + " after reaching 1e-3");
      }
    }
  }
  if (c.pass) c.detail = "unit steps accepted past the 1e-3 error mark (mu = 0.05)";
  return c;
}

Check criterion_determinism() {
  Check c;
  const json cfg{
      {"problem",
       {{"kind", "elqp"},
        {"Q", {{2.0}}},
        {"q", {0.0}},
        {"A", {{1.0}}},
        {"b", {0.0}},
        {"B", {{1.0}}},
        {"C", {{"G", {{-1.0}}}, {"h", {0.0}}, {"E", json::array()}, {"d", json::array()}}},
        {"known_solution", {0.0}},
        {"known_tilt_modulus", 0.5}}},
      {"x0", {0.1}},
      {"variants",
       json::array({{{"variant", "coderivative"}},
                    {{"variant", "graphical"}},
                    {{"variant", "prox_graphical"}, {"r", 0.1}, {"inner_tol", 1e-13}}})},
      {"probes", json::array({{{"type", "tilt"}, {"kappa_hyp", 0.6}, {"radius", 0.3}, {"samples", 500}},
                              {{"type", "constants"}, {"radius", 0.5}, {"samples", 300}}})},
      {"seed", 20240817}};

  auto run_once = [&](const std::string& outdir) {
    json j = cfg;
    j["outdir"] = outdir;
    std::filesystem::create_directories(outdir);
#ifdef TILTNEWTON_CLI_PATH
    const std::string cfg_path = outdir + "_config.json";
    {
      std::ofstream f(cfg_path);
      f << j.dump(2) << "\n";
    }
    const std::string cmd =
        std::string(TILTNEWTON_CLI_PATH) + " run " + cfg_path + " > /dev/null 2>&1";
    if (std::system(cmd.c_str()) != 0) return std::string();
#else
    run_experiment(ExperimentConfig::from_json(j));
#endif
    std::ifstream in(outdir + "/report.json");
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  };

  const std::string a = run_once("acceptance_out/det_a");
  const std::string b = run_once("acceptance_out/det_b");
  c.require(!a.empty(), "first run produced no report");
  c.require(a == b, "reports differ between identical runs");
  if (c.pass) c.detail = "report.json byte-identical across repeated runs, " +
                         std::to_string(a.size()) + " bytes";
  return c;
}

}  // namespace

int main() {
  struct Entry {
    int id;
    std::string name;
    std::function<Check()> fn;
  };
  const std::vector<Entry> entries = {
      {1, "superlinear suite", criterion_superlinear_suite},
      {2, "oscillation reproduction", criterion_oscillation},
      {3, "envelope gradient identity", criterion_envelope_identity},
      {4, "modulus propagation", criterion_modulus_propagation},
      {5, "second-subderivative FD agreement", criterion_fd_agreement},
      {6, "direction-oracle consistency", criterion_direction_consistency},
      {7, "QP oracle equivalence", criterion_qp_oracle},
      {8, "coderivative direction estimate", criterion_coderivative_estimate},
      {9, "unit-step acceptance", criterion_unit_steps},
      {10, "determinism", criterion_determinism},
  };

  bool all = true;
  for (const auto& e : entries) {
    Check c;
    try {
      c = e.fn();
    } catch (const std::exception& ex) {
      c.pass = false;
      c.detail = std::string("exception: ") + ex.what();
    }
    all = all && c.pass;
    std::printf("[%s] criterion %2d: %s%s%s\n", c.pass ? "PASS" : "FAIL", e.id, e.name.c_str(),
                c.detail.empty() ? "" : " -- ", c.detail.c_str());
    std::fflush(stdout);
  }
  return all ? 0 : 1;
}
