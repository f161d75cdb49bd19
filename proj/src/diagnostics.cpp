#include "tiltnewton/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "tiltnewton/envelope.hpp"
#include "tiltnewton/qp.hpp"

namespace tiltnewton {

namespace {

Vector sphere_direction(std::mt19937_64& rng, int n) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Vector d(n);
  double nrm = 0.0;
  do {
    for (int i = 0; i < n; ++i) d(i) = gauss(rng);
    nrm = d.norm();
  } while (nrm < 1e-12);
  return d / nrm;
}

Vector ball_point(std::mt19937_64& rng, const Vector& center, double radius) {
  const int n = static_cast<int>(center.size());
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const Vector dir = sphere_direction(rng, n);
  const double t = std::pow(unif(rng), 1.0 / n);
  return center + radius * t * dir;
}

// pull a sampled point into the effective domain where the instance needs it
Vector domain_point(const ProblemInstance& inst, const Vector& z) {
  if (inst.kind() == ProblemKind::NLP && inst.nlp()->m > 0) {
    const auto& d = *inst.nlp();
    if (!d.f.affine) return z;
    PolyhedralSet omega;
    omega.G = d.f.affine->J.bottomRows(d.m - d.s);
    omega.h = -d.f.affine->c.tail(d.m - d.s);
    omega.E = d.f.affine->J.topRows(d.s);
    omega.d = -d.f.affine->c.head(d.s);
    omega.feasible_point = Vector::Zero(inst.dimension());
    return project_polyhedral(omega, z);
  }
  return z;
}

}  // namespace

std::vector<std::pair<Vector, Vector>> sample_subgradient_graph(const ProblemInstance& inst,
                                                                const Vector& center,
                                                                double radius, int count,
                                                                std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<std::pair<Vector, Vector>> out;
  out.reserve(count);
  const bool direct = inst.is_c11();
  MoreauParams mp;
  mp.r = std::max(0.05 * radius, 1e-6);
  mp.inner_tol = 1e-12;
  mp.inner_max_iters = 200000;
  for (int i = 0; i < count; ++i) {
    const Vector z = ball_point(rng, center, radius);
    if (direct) {
      out.emplace_back(z, inst.gradient(z));
    } else {
      const ProxResult p = prox(inst, mp, z);
      out.emplace_back(p.point, (z - p.point) / mp.r);
    }
  }
  return out;
}

ProbeReport tilt_probe(const ProblemInstance& inst, const Vector& xbar, double kappa_hyp,
                       double radius, int samples, std::uint64_t seed) {
  if (inst.subgradient_residual(xbar, Vector::Zero(inst.dimension())) > 1e-8)
    throw NotStationaryError("tilt_probe: xbar is not a stationary point");

  auto graph = sample_subgradient_graph(inst, xbar, radius, samples, seed);
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ull);
  ProbeReport rep;
  rep.samples = samples;

  struct PairSample {
    double gap;     // phi(x) - phi(u) - <v, x-u>
    double sqdist;  // ||x-u||^2
  };
  std::vector<PairSample> pairs;
  pairs.reserve(samples);
  for (int i = 0; i < samples; ++i) {
    const auto& [u, v] = graph[i];
    Vector x = domain_point(inst, ball_point(rng, xbar, radius));
    const double fx = inst.value(x);
    const double fu = inst.value(u);
    const double sq = (x - u).squaredNorm();
    if (!std::isfinite(fx) || sq < 1e-28) continue;
    pairs.push_back({fx - fu - v.dot(x - u), sq});
  }

  auto passes = [&pairs](double kappa) {
    for (const auto& p : pairs) {
      const double slack = 1e-12 * (1.0 + std::abs(p.gap)) + 1e-14 * p.sqdist;
      if (p.gap + slack < p.sqdist / (2.0 * kappa)) return false;
    }
    return true;
  };

  for (const auto& p : pairs) {
    const double slack = 1e-12 * (1.0 + std::abs(p.gap));
    if (p.gap + slack < p.sqdist / (2.0 * kappa_hyp)) ++rep.violations;
    const double required = p.gap > 0 ? p.sqdist / (2.0 * p.gap) : kInf;
    rep.worst_ratio = std::max(rep.worst_ratio, required / kappa_hyp);
  }

  // smallest modulus passing every sample, by bisection in log space
  double lo = 1e-8, hi = 1e8;
  if (!passes(hi)) {
    rep.estimated_kappa = std::nullopt;  // growth fails outright at some pair
  } else {
    for (int it = 0; it < 80; ++it) {
      const double mid = std::sqrt(lo * hi);
      if (passes(mid))
        hi = mid;
      else
        lo = mid;
    }
    rep.estimated_kappa = hi;
  }
  return rep;
}

ProbeReport semismoothstar_probe(const ProblemInstance& inst, const Vector& xbar,
                                 const std::vector<double>& radii, int samples_per_radius,
                                 std::uint64_t seed) {
  ProbeReport rep;
  const Vector gbar = inst.gradient(xbar);
  std::mt19937_64 rng(seed);
  for (double radius : radii) {
    // keep activity detection well below the probed scale so kink pieces are
    // classified as they are at x, not as they are at the center
    const double tol_act = std::max(1e-13, 1e-4 * radius);
    double worst = 0.0;
    for (int i = 0; i < samples_per_radius; ++i) {
      const Vector x = xbar + radius * sphere_direction(rng, inst.dimension());
      const Vector g = inst.gradient(x);
      for (const auto& sel : hessian_selections(inst, x, tol_act)) {
        const double ratio = (g - gbar - sel.H * (x - xbar)).norm() / (x - xbar).norm();
        worst = std::max(worst, ratio);
      }
      ++rep.samples;
    }
    rep.radii.push_back(radius);
    rep.worst_ratio_per_radius.push_back(worst);
    rep.worst_ratio = std::max(rep.worst_ratio, worst);
  }
  // decay check across decade-separated radii
  rep.decay_verdict = true;
  for (size_t j = 0; j + 1 < rep.radii.size(); ++j) {
    if (rep.worst_ratio_per_radius[j + 1] >
        std::max(0.5 * rep.worst_ratio_per_radius[j], 1e-14)) {
      rep.decay_verdict = false;
      ++rep.violations;
    }
  }
  return rep;
}

RateReport superlinear_ratios(const IterateTrace& trace, const Vector& xbar) {
  RateReport rep;
  std::vector<double> errs;
  errs.reserve(trace.records.size());
  for (const auto& r : trace.records) errs.push_back((r.x - xbar).norm());
  for (size_t k = 0; k + 1 < errs.size(); ++k) {
    // both iterates must sit above the noise floor for the quotient to
    // measure convergence rather than solver precision
    if (errs[k] <= 1e-14 || errs[k + 1] <= 1e-14) break;
    rep.ratios.push_back(errs[k + 1] / errs[k]);
  }
  if (rep.ratios.empty()) {
    rep.superlinear_verdict = true;
    rep.final_ratio = 0.0;
    return rep;
  }
  rep.final_ratio = rep.ratios.back();
  if (rep.ratios.size() == 1) {
    rep.superlinear_verdict = rep.final_ratio < 0.1;
    return rep;
  }
  const size_t window = std::min<size_t>(3, rep.ratios.size());
  bool decreasing = true;
  for (size_t i = rep.ratios.size() - window; i + 1 < rep.ratios.size(); ++i) {
    if (!(rep.ratios[i + 1] < rep.ratios[i])) decreasing = false;
  }
  rep.superlinear_verdict = decreasing && rep.final_ratio < 0.1;
  return rep;
}

ProbeReport estimate_constants(const ProblemInstance& inst, const Vector& xbar, double radius,
                               int samples, std::uint64_t seed) {
  auto graph = sample_subgradient_graph(inst, xbar, radius, samples, seed);
  std::mt19937_64 rng(seed ^ 0xda3e39cb94b95bdbull);
  ProbeReport rep;
  rep.samples = samples;

  double ell = 0.0;
  for (size_t i = 0; i + 1 < graph.size(); ++i) {
    const auto& [u1, v1] = graph[i];
    const auto& [u2, v2] = graph[i + 1];
    const double du = (u1 - u2).norm();
    if (du > 1e-12) ell = std::max(ell, (v1 - v2).norm() / du);
  }
  rep.estimated_ell = ell;

  double rho = 0.0;
  for (const auto& [u, v] : graph) {
    const Vector x = domain_point(inst, ball_point(rng, xbar, radius));
    const double fx = inst.value(x);
    if (!std::isfinite(fx)) continue;
    const double sq = (x - u).squaredNorm();
    if (sq < 1e-28) continue;
    rho = std::max(rho, 2.0 * (inst.value(u) + v.dot(x - u) - fx) / sq);
  }
  rep.estimated_rho = rho;
  return rep;
}

}  // namespace tiltnewton
