#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "tiltnewton/newton.hpp"
#include "tiltnewton/problems.hpp"

namespace tiltnewton {

struct ProbeReport {
  int samples = 0;
  int violations = 0;
  double worst_ratio = 0.0;
  std::optional<double> estimated_kappa;
  std::optional<double> estimated_ell;
  std::optional<double> estimated_rho;
  // per-radius detail (semismooth* probe)
  std::vector<double> radii;
  std::vector<double> worst_ratio_per_radius;
  bool decay_verdict = false;
};

struct RateReport {
  std::vector<double> ratios;
  bool superlinear_verdict = false;
  double final_ratio = 0.0;
};

/// Samples subgradient-graph pairs near xbar and random points in the ball,
/// counts violations of the second-order growth inequality with modulus
/// kappa_hyp, and estimates the smallest passing modulus by bisection.
/// Throws NotStationaryError unless dist(0; subdifferential(xbar)) <= 1e-8.
ProbeReport tilt_probe(const ProblemInstance& inst, const Vector& xbar, double kappa_hyp,
                       double radius, int samples, std::uint64_t seed = 1234);

/// Worst Newton-residual ratio ||grad(x) - grad(xbar) - A (x - xbar)|| / ||x - xbar||
/// over sphere samples and all Hessian selections A, per radius.
ProbeReport semismoothstar_probe(const ProblemInstance& inst, const Vector& xbar,
                                 const std::vector<double>& radii, int samples_per_radius = 64,
                                 std::uint64_t seed = 1234);

/// Per-iteration error ratios of a trace against a known solution.
RateReport superlinear_ratios(const IterateTrace& trace, const Vector& xbar);

/// Sampled gradient Lipschitz constant and lower-quadratic (prox-regularity)
/// constant around xbar.
ProbeReport estimate_constants(const ProblemInstance& inst, const Vector& xbar, double radius,
                               int samples, std::uint64_t seed = 1234);

/// Subgradient-graph sampling used by the probes: pairs (u, v) with
/// v in subdifferential(u), via gradient evaluation on C^{1,1} instances and
/// the proximal construction otherwise.
std::vector<std::pair<Vector, Vector>> sample_subgradient_graph(const ProblemInstance& inst,
                                                                const Vector& center,
                                                                double radius, int count,
                                                                std::uint64_t seed);

}  // namespace tiltnewton
