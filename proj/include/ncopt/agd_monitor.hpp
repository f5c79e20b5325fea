#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "ncopt/core.hpp"

namespace ncopt {

// ---------------------------------------------------------------------------
// Nesterov AGD for a conjectured strongly convex function, with per-iteration
// certification. A run either terminates at a point with small gradient norm
// or stops with a witness pair (u, v) proving the conjecture false:
//
//   f(u) < f(v) + grad f(v)' (u - v) + (sigma/2) |u - v|^2.
//
// The momentum schedule is the strongly convex one: with kappa = L / sigma,
// omega = (sqrt(kappa) - 1) / (sqrt(kappa) + 1), and steps
//
//   y_t = x_{t-1} - (1/L) grad f(x_{t-1}),   x_t = y_t + omega (y_t - y_{t-1}).
//
// Certification tests whether the gradient norm decays at the exp(-t/sqrt(kappa))
// rate that strong convexity would force; a stall yields the candidate point
// w_t from which the witness scan recovers a violating pair.
// ---------------------------------------------------------------------------

struct ExtraCertifyResult {
  std::optional<Vector> w;
  // Side products handed back for reuse by the next iteration's step.
  std::optional<double> f_xt;
  std::optional<Vector> grad_xt;
};

/// Optional additional detection hook, consulted only when the standard
/// certification passes. Receives the current x_t, y_t and the cached f(y_t).
using ExtraCertify = std::function<ExtraCertifyResult(
    const Oracle&, const Vector& x_t, const Vector& y_t, double f_yt,
    EvalCounters&)>;

struct AgdParams {
  double smoothness = 0;        // L: gradient-step size is 1/L
  double strong_convexity = 0;  // sigma: the conjectured modulus, sigma <= L
  double target_eps = 0;        // stop once |grad f(y_t)| <= target_eps
  std::int64_t max_iters = 1'000'000;  // safety cap; exceeding it is an error
  std::int64_t check_interval = 1;     // certify every this many iterations

  // Practical-variant knobs. Defaults give the plain method, for which the
  // iteration-bound and envelope guarantees are asserted at runtime.
  bool semi_adaptive = false;      // grow L on failed descent tests, then stop
  bool strict_witness_scan = true; // false: an exhausted scan yields no
                                   // witness instead of a hard error
  std::int64_t soft_iteration_cap = 0;  // >0: stop quietly after this many steps
  ExtraCertify extra_certify;

  void validate() const;
  double kappa() const { return smoothness / strong_convexity; }
  double momentum() const;
};

struct WitnessPair {
  Vector u;
  Vector v;
  // f(v) + grad f(v)'(u - v) + (sigma/2)|u - v|^2 - f(u), strictly positive.
  double violation_margin = 0;
};

struct AgdOutcome {
  std::vector<Vector> xs;  // x_0 .. x_t
  std::vector<Vector> ys;  // y_0 .. y_t
  std::optional<WitnessPair> witness;
  bool terminated_stationary = false;
  std::int64_t iters = 0;  // t

  // Run caches, exposed so selection steps can reuse values instead of
  // re-evaluating: f(y_s) where certification computed it, and the step
  // gradients grad f(x_s) for s = 0..t-1.
  std::vector<std::optional<double>> f_ys;
  std::vector<Vector> grad_xs;

  std::optional<Vector> stall_point;  // w_t when certification fired
  std::optional<double> f_stall_point;
  double psi_prev = std::numeric_limits<double>::quiet_NaN();  // psi(z_{t-1})
  double psi_last = std::numeric_limits<double>::quiet_NaN();  // psi(z_t)
  double final_grad_norm = std::numeric_limits<double>::quiet_NaN();

  // Semi-adaptive bookkeeping.
  double smoothness_growth = 1.0;
  std::int64_t smoothness_doublings = 0;
  bool stopped_by_doubling = false;
  bool stopped_by_cap = false;
};

/// Thrown when max_iters is exceeded; carries whatever trace was recorded.
class IterationLimit : public std::runtime_error {
 public:
  IterationLimit(const std::string& msg, RunTrace trace)
      : std::runtime_error(msg), trace(std::move(trace)) {}
  RunTrace trace;
};

struct AgdStep {
  Vector y_next;
  Vector x_next;
  Vector grad_x;  // the single gradient evaluated, at x_prev
};

/// One accelerated step: y = x_prev - (1/L) grad f(x_prev),
/// x = y + omega (y - y_prev). Exactly one gradient evaluation.
AgdStep agd_step(const Oracle& f, const Vector& x_prev, const Vector& y_prev,
                 const AgdParams& params, EvalCounters& counters);

struct CertifyCache {
  std::optional<double> f_y0;
  std::optional<double> f_yt;
  std::optional<Vector> grad_yt;
};

struct CertifyOutcome {
  std::optional<Vector> w;       // absent: progress certified
  std::optional<double> f_w;     // value at w, when w is present
  std::optional<double> f_yt;    // always set
  std::optional<Vector> grad_yt; // set unless the f(y_t) > f(y_0) branch fired
  std::optional<double> psi;     // psi(z_t), when the z step was reached
  std::optional<double> f_zt;
  bool doubled = false;          // semi-adaptive: the z step grew L
  double grown_smoothness = 0;
};

/// Progress certification. Returns w = y_0 if f(y_t) > f(y_0). Otherwise
/// forms z_t = y_t - (1/L) grad f(y_t) and
/// psi(z_t) = f(y_0) - f(z_t) + (sigma/2)|z_t - y_0|^2, and returns w = z_t
/// when |grad f(y_t)|^2 > 2 L psi(z_t) exp(-t / sqrt(kappa)); absent w means
/// progress is consistent with the conjecture. Costs at most one gradient and
/// two function evaluations beyond what the cache provides.
CertifyOutcome certify_progress(const Oracle& f, const Vector& y0,
                                const Vector& yt, std::int64_t t,
                                const AgdParams& params, EvalCounters& counters,
                                const CertifyCache& cache = {});

struct WitnessScanCache {
  const std::vector<std::optional<double>>* f_ys = nullptr;
  const std::vector<Vector>* grad_xs = nullptr;
  std::optional<double> f_w;
};

/// Scans j = 0..t-1 with u in {y_j, w} (y_j tried first) and returns the
/// first pair violating sigma-strong convexity. Exhausting the scan is a
/// certificate contradiction: the certification guarantee proves a violation
/// exists, so a miss means an inconsistent oracle or wrong constants.
WitnessPair find_witness_pair(const Oracle& f, std::span<const Vector> xs,
                              std::span<const Vector> ys, const Vector& w,
                              double sigma, EvalCounters& counters,
                              const WitnessScanCache& cache = {});

/// Same scan, but an exhausted scan returns nullopt. Used by the practical
/// variant, whose adaptive estimates and extra convexity check can certify
/// non-convexity without a sigma-violating pair among the scanned candidates.
std::optional<WitnessPair> try_find_witness_pair(
    const Oracle& f, std::span<const Vector> xs, std::span<const Vector> ys,
    const Vector& w, double sigma, EvalCounters& counters,
    const WitnessScanCache& cache = {});

/// Full monitored run from y0. Terminates stationary (|grad| <= target_eps),
/// with a witness, by a semi-adaptive smoothness doubling, or by the soft
/// iteration cap; exceeding max_iters throws IterationLimit. With
/// check_interval = 1 the iteration bound
///   t <= 1 + max(0, sqrt(kappa) log(2 L psi(z_{t-1}) / eps'^2))
/// and the envelope max{f(y_1..y_{t-1}), f(u)} <= f(y_0) are asserted on
/// every run before returning.
AgdOutcome run_monitored_agd(const Oracle& f, const Vector& y0,
                             AgdParams params, EvalCounters& counters,
                             RunTrace* trace = nullptr,
                             std::int64_t outer_step = 0);

}  // namespace ncopt
