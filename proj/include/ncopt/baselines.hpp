#pragma once

#include <cstdint>
#include <optional>

#include "ncopt/core.hpp"

namespace ncopt {

/// Monotone smoothness estimate: starts at 1 and doubles whenever a gradient
/// step fails the sufficient-decrease test
///   f(x - (1/L) g) <= f(x) - |g|^2 / (2L).
/// It never decreases, so the step-size schedule stays fixed between
/// doublings.
struct SemiAdaptiveL {
  double current_l = 1.0;
  std::int64_t doublings = 0;
};

/// One gradient step with the doubling rule; returns the accepted point
/// x - (1/L) grad f(x) for the final L. fx_cache, when supplied, provides
/// f(x) on entry and receives f of the accepted point on exit, which is what
/// keeps steady-state gradient descent at one function evaluation per step.
Vector semi_adaptive_gradient_step(const Oracle& f, const Vector& x,
                                   SemiAdaptiveL& state, EvalCounters& counters,
                                   std::optional<double>* fx_cache = nullptr,
                                   Vector* grad_out = nullptr);

struct BaselineResult {
  Vector x_final;
  double f_final = std::numeric_limits<double>::quiet_NaN();
  double grad_norm_final = std::numeric_limits<double>::quiet_NaN();
  std::int64_t steps = 0;
  bool converged = false;
  EvalCounters counters;
  std::int64_t restarts = 0;     // RAGD only
  std::int64_t l_doublings = 0;  // GD / RAGD
};

/// Gradient descent with semi-adaptive steps until |grad f| <= eps.
BaselineResult run_gd(const Oracle& f, const Vector& x0, double eps,
                      std::int64_t max_steps, RunTrace* trace = nullptr);

/// Momentum weight of restarted AGD, k steps after the last restart.
inline double ragd_momentum(std::int64_t k) {
  return static_cast<double>(k) / static_cast<double>(k + 3);
}

/// AGD with omega_k = k/(k+3) momentum and function-value adaptive restart:
/// restart from y_t when f(y_t) > f(y_{t-1}), and also whenever the
/// semi-adaptive L estimate changes (traced with a distinct detail tag).
BaselineResult run_ragd(const Oracle& f, const Vector& x0, double eps,
                        std::int64_t max_steps, RunTrace* trace = nullptr);

/// Polak-Ribiere+ coefficient max{g'(g - g_prev)/|g_prev|^2, 0}.
double ncg_beta(const Vector& g, const Vector& g_prev);

/// Nonlinear conjugate gradient (PR+) with backtracking line search. The
/// search direction resets to steepest descent whenever it fails to be a
/// descent direction; the step starts from twice the previously accepted one
/// (initially 1) and halves until
///   f(x + eta d) <= f(x) + eta d'grad f(x) / 2.
BaselineResult run_ncg(const Oracle& f, const Vector& x0, double eps,
                       std::int64_t max_steps, RunTrace* trace = nullptr);

}  // namespace ncopt
