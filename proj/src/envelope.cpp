#include "tiltnewton/envelope.hpp"

#include <cmath>

#include "tiltnewton/qp.hpp"
#include "tiltnewton/secondorder.hpp"

namespace tiltnewton {

namespace {

Vector soft_threshold(const Vector& z, const Vector& tau) {
  Vector out(z.size());
  for (int i = 0; i < z.size(); ++i) {
    const double t = tau(i);
    out(i) = z(i) > t ? z(i) - t : (z(i) < -t ? z(i) + t : 0.0);
  }
  return out;
}

double prox_objective_residual(const ProblemInstance& inst, const MoreauParams& p, const Vector& x,
                               const Vector& w) {
  return inst.subgradient_residual(w, (x - w) / p.r);
}

// proximal-gradient loop: smooth part = value/gradient oracles, nonsmooth
// part handled by prox_map (soft threshold or polyhedral projection; identity
// when the objective is smooth). The quadratic coupling to x is folded into
// the smooth part.
template <typename ValueFn, typename GradFn, typename ProxMap>
ProxResult prox_gradient_loop(const ProblemInstance& inst, const MoreauParams& p, const Vector& x,
                              ValueFn&& value, GradFn&& gradf, ProxMap&& prox_map) {
  const double r = p.r;
  auto g_val = [&](const Vector& w) { return value(w) + (0.5 / r) * (w - x).squaredNorm(); };
  auto g_grad = [&](const Vector& w) { return Vector(gradf(w) + (w - x) / r); };

  Vector w = x;
  Vector gw = g_grad(w);
  double t = r;
  ProxResult out;
  Vector best_w = w;
  double best_res = kInf;
  for (int k = 0; k < p.inner_max_iters; ++k) {
    out.iterations = k + 1;
    Vector wn, gn;
    for (int bt = 0; bt < 60; ++bt) {
      wn = prox_map(w - t * gw, t);
      const double step = (wn - w).norm();
      if (step <= 1e-15 * (1.0 + w.norm())) {
        gn = g_grad(wn);
        break;
      }
      gn = g_grad(wn);
      // secant estimate of the local Lipschitz constant of the smooth part;
      // cancellation-free, unlike a value-based sufficient-decrease test
      if ((gn - gw).norm() * t <= 0.9 * step) break;
      t *= 0.5;
    }
    w = wn;
    gw = gn;
    out.inner_residual = prox_objective_residual(inst, p, x, w);
    if (out.inner_residual < best_res) {
      best_res = out.inner_residual;
      best_w = w;
    }
    if (out.inner_residual <= p.inner_tol) {
      out.converged = true;
      break;
    }
    t = std::min(1.25 * t, r);
  }
  out.point = out.converged ? w : best_w;
  out.inner_residual = out.converged ? out.inner_residual : best_res;
  out.exact = false;
  if (!out.converged)
    throw InnerSolveFailed("prox: inner loop exhausted " + std::to_string(p.inner_max_iters) +
                           " iterations, residual " + std::to_string(out.inner_residual));
  return out;
}

// Guarded Newton polish of a converged prox point on C^{1,1} instances:
// kept only when it tightens the first-order residual.
void polish_prox_point(const ProblemInstance& inst, const MoreauParams& p, const Vector& x,
                       ProxResult& res) {
  if (!inst.is_c11()) return;
  const int n = inst.dimension();
  for (int step = 0; step < 3; ++step) {
    Matrix H;
    try {
      H = hessian_selections(inst, res.point)[0].H;
    } catch (const std::exception&) {
      return;
    }
    H += Matrix::Identity(n, n) / p.r;
    const Vector g = inst.gradient(res.point) + (res.point - x) / p.r;
    Eigen::LDLT<Matrix> ldlt(H);
    if (ldlt.info() != Eigen::Success) return;
    const Vector candidate = res.point - ldlt.solve(g);
    const double cand_res =
        inst.subgradient_residual(candidate, (x - candidate) / p.r);
    if (cand_res >= res.inner_residual) return;
    res.point = candidate;
    res.inner_residual = cand_res;
  }
}

ProxResult prox_smooth_quadratic(const QuadQuartic& f, const MoreauParams& p, const Vector& x) {
  const int n = static_cast<int>(x.size());
  Matrix H = f.Q + Matrix::Identity(n, n) / p.r;
  Eigen::LLT<Matrix> llt(H);
  if (llt.info() != Eigen::Success)
    throw InnerSolveFailed("prox: regularized quadratic is not positive definite; reduce r");
  ProxResult out;
  out.point = llt.solve(f.b + x / p.r);
  out.exact = true;
  out.converged = true;
  out.iterations = 0;
  out.inner_residual = (f.gradient(out.point) + (out.point - x) / p.r).norm();
  return out;
}

ProxResult prox_elqp(const ELQPData& d, const MoreauParams& p, const Vector& x) {
  const int n = static_cast<int>(x.size());
  const Matrix H = d.Q + Matrix::Identity(n, n) / p.r;
  const Vector c = d.q - x / p.r;
  Eigen::LLT<Matrix> llt(H);
  if (llt.info() != Eigen::Success)
    throw InnerSolveFailed("prox: regularized elqp quadratic is not positive definite; reduce r");
  // dual elimination of w: a quadratic over C in the conjugate variable
  AffineQP qp;
  qp.H = d.A * llt.solve(Matrix(d.A.transpose())) + d.B;
  qp.g = -(d.b + d.A * llt.solve(c));
  qp.Aeq = d.C.E;
  qp.beq = d.C.d;
  qp.Ain = d.C.G;
  qp.bin = d.C.h;
  QPSolution s = solve_affine_qp(qp, d.C.feasible_point, 1e-12);
  if (s.status != QPStatus::Optimal) throw InnerSolveFailed("prox: elqp dual solve failed");
  ProxResult out;
  out.point = llt.solve(d.A.transpose() * s.w - c);
  out.exact = true;
  out.converged = true;
  out.iterations = s.iterations;
  return out;
}

ProxResult prox_nlp_affine_quadratic(const NLPData& d, const MoreauParams& p, const Vector& x) {
  const auto& qq = *d.psi.parametric;
  const auto& aff = *d.f.affine;
  const int n = static_cast<int>(x.size());
  AffineQP qp;
  qp.H = qq.Q + Matrix::Identity(n, n) / p.r;
  qp.g = -(qq.b + x / p.r);
  qp.Aeq = aff.J.topRows(d.s);
  qp.beq = -aff.c.head(d.s);
  qp.Ain = aff.J.bottomRows(d.m - d.s);
  qp.bin = -aff.c.tail(d.m - d.s);
  // feasible start by projecting x onto the constraint polyhedron
  PolyhedralSet omega;
  omega.G = qp.Ain;
  omega.h = qp.bin;
  omega.E = qp.Aeq;
  omega.d = qp.beq;
  omega.feasible_point = Vector::Zero(n);
  Vector w0 = project_polyhedral(omega, x);
  QPSolution s = solve_affine_qp(qp, w0, 1e-12);
  if (s.status != QPStatus::Optimal) throw InnerSolveFailed("prox: constrained solve failed");
  ProxResult out;
  out.point = s.w;
  out.exact = true;
  out.converged = true;
  out.iterations = s.iterations;
  return out;
}

ProxResult prox_oscillation(const ProblemInstance& inst, const MoreauParams& p, const Vector& x) {
  const double xv = x(0);
  const double r = p.r;
  auto slope = [&](double w) { return OscillationData::slope(w) + (w - xv) / r; };
  double s = r * (1.0 + std::abs(OscillationData::slope(xv)));
  double lo = xv, hi = xv;
  int guard = 0;
  while (slope(lo) > 0 && guard++ < 200) lo -= s;
  guard = 0;
  while (slope(hi) < 0 && guard++ < 200) hi += s;
  if (slope(lo) > 0 || slope(hi) < 0)
    throw InnerSolveFailed("prox: failed to bracket the proximal point");
  for (int k = 0; k < 200; ++k) {
    const double mid = 0.5 * (lo + hi);
    if (slope(mid) <= 0)
      lo = mid;
    else
      hi = mid;
  }
  double w = 0.5 * (lo + hi);
  for (int k = 0; k < 4; ++k) {  // Newton polish
    const double der = (w == 0.0 ? 2.0 : OscillationData::slope_derivative(w)) + 1.0 / r;
    if (der <= 0) break;
    w -= slope(w) / der;
  }
  ProxResult out;
  out.point = Vector::Constant(1, w);
  out.exact = true;
  out.converged = true;
  out.inner_residual = std::abs(slope(w));
  return out;
}

}  // namespace

ProxResult prox(const ProblemInstance& inst, const MoreauParams& params, const Vector& x) {
  require_dim(x.size() == inst.dimension(), "prox argument");
  if (params.r <= 0) throw ConfigInvalidError("prox: r must be positive");
  ProxResult out;
  switch (inst.kind()) {
    case ProblemKind::SmoothC2: {
      const auto& f = inst.smooth()->f;
      if (f.quartic.lpNorm<Eigen::Infinity>() == 0.0) {
        out = prox_smooth_quadratic(f, params, x);
      } else {
        auto identity = [](const Vector& z, double) { return z; };
        out = prox_gradient_loop(
            inst, params, x, [&](const Vector& w) { return f.value(w); },
            [&](const Vector& w) { return f.gradient(w); }, identity);
      }
      break;
    }
    case ProblemKind::PiecewiseC11: {
      const auto& d = *inst.piecewise();
      if (d.Q.cwiseAbs().maxCoeff() == 0.0) {
        out.point = soft_threshold(x + params.r * d.b, params.r * d.l1);
        out.exact = true;
        out.converged = true;
      } else {
        out = prox_gradient_loop(
            inst, params, x,
            [&](const Vector& w) { return 0.5 * w.dot(d.Q * w) - d.b.dot(w); },
            [&](const Vector& w) { return Vector(d.Q * w - d.b); },
            [&](const Vector& z, double t) { return soft_threshold(z, t * d.l1); });
      }
      break;
    }
    case ProblemKind::ELQP:
      out = prox_elqp(*inst.elqp(), params, x);
      break;
    case ProblemKind::NLP: {
      const auto& d = *inst.nlp();
      if (d.m == 0) {
        if (d.psi.parametric && d.psi.parametric->quartic.lpNorm<Eigen::Infinity>() == 0.0) {
          out = prox_smooth_quadratic(*d.psi.parametric, params, x);
        } else {
          auto identity = [](const Vector& z, double) { return z; };
          out = prox_gradient_loop(inst, params, x, d.psi.value, d.psi.gradient, identity);
        }
        break;
      }
      if (!d.f.affine)
        throw UnsupportedSetError("prox: nonlinear constraint maps have no projection oracle");
      if (d.psi.parametric && d.psi.parametric->quartic.lpNorm<Eigen::Infinity>() == 0.0) {
        out = prox_nlp_affine_quadratic(d, params, x);
      } else {
        const auto& aff = *d.f.affine;
        PolyhedralSet omega;
        omega.G = aff.J.bottomRows(d.m - d.s);
        omega.h = -aff.c.tail(d.m - d.s);
        omega.E = aff.J.topRows(d.s);
        omega.d = -aff.c.head(d.s);
        omega.feasible_point = Vector::Zero(inst.dimension());
        out = prox_gradient_loop(
            inst, params, x, d.psi.value, d.psi.gradient,
            [&](const Vector& z, double) { return project_polyhedral(omega, z); });
      }
      break;
    }
    case ProblemKind::AugLag: {
      auto identity = [](const Vector& z, double) { return z; };
      out = prox_gradient_loop(
          inst, params, x, [&](const Vector& w) { return inst.value(w); },
          [&](const Vector& w) { return inst.gradient(w); }, identity);
      break;
    }
    case ProblemKind::Oscillation:
      out = prox_oscillation(inst, params, x);
      break;
  }
  if (out.exact && out.inner_residual == kInf)
    out.inner_residual = prox_objective_residual(inst, params, x, out.point);
  if (!out.exact) polish_prox_point(inst, params, x, out);
  return out;
}

double envelope_value(const ProblemInstance& inst, const MoreauParams& params, const Vector& x) {
  const ProxResult p = prox(inst, params, x);
  return inst.value(p.point) + (0.5 / params.r) * (p.point - x).squaredNorm();
}

Vector envelope_gradient(const ProblemInstance& inst, const MoreauParams& params, const Vector& x) {
  const ProxResult p = prox(inst, params, x);
  return (x - p.point) / params.r;
}

}  // namespace tiltnewton
