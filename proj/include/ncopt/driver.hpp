#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "ncopt/agd_monitor.hpp"
#include "ncopt/baselines.hpp"
#include "ncopt/core.hpp"

namespace ncopt {

// ---------------------------------------------------------------------------
// Outer guarded method: proximally regularize f around the current iterate,
//
//   fhat(x) = f(x) + alpha |x - p_{k-1}|^2,
//
// run monitored AGD on fhat with conjectured strong convexity alpha, and on a
// witness take the better of best-iterate selection and a negative-curvature
// step, both evaluated on the original f. A witness for fhat with modulus
// alpha implies a curvature margin of alpha/2 for f between the pair.
// ---------------------------------------------------------------------------

enum class GuardedMode { second_order, third_order, practical };

const char* guarded_mode_name(GuardedMode m);

/// Proximal surrogate oracle; every evaluation forwards exactly one call to
/// the base oracle.
class ProximalOracle final : public Oracle {
 public:
  ProximalOracle(const Oracle& base, Vector center, double alpha);

  Eigen::Index dimension() const override { return base_->dimension(); }
  double value(const Vector& x) const override;
  Vector gradient(const Vector& x) const override;
  void value_and_gradient(const Vector& x, double& v, Vector& g) const override;
  KnownConstants constants() const override;

  const Vector& center() const { return center_; }
  double alpha() const { return alpha_; }

 private:
  const Oracle* base_;
  Vector center_;
  double alpha_;
};

ProximalOracle proximal_wrap(const Oracle& f, Vector center, double alpha);

/// Everything an observer needs to re-derive one inner run from scratch.
struct InnerRunView {
  std::int64_t outer_index = 0;
  const Vector& center;
  double alpha = 0;
  double sigma = 0;
  double inner_eps = 0;
  double inner_smoothness = 0;
  const AgdOutcome& outcome;
};

using InnerRunObserver = std::function<void(const InnerRunView&)>;

struct GuardedConfig {
  GuardedMode mode = GuardedMode::practical;
  double eps = 1e-4;
  // l1 is the exact gradient-Lipschitz bound in the theoretical modes and the
  // initial semi-adaptive estimate in practical mode (the estimate starts at
  // 1 unless overridden).
  double l1 = 1.0;
  std::optional<double> l2;  // required in second_order mode
  std::optional<double> l3;  // required in third_order mode
  double c1 = 0.01;          // practical mode: alpha = c1 |grad f(p)|^{2/3}
  std::int64_t max_outer = 0;             // 0: derived from the constants
  std::int64_t max_inner = 1'000'000;     // per inner run, hard cap
  std::int64_t max_total_inner_steps = 0; // 0: unlimited; else stop quietly
  std::int64_t check_interval = 1;
  bool exploit_curvature = true;  // false: selection-only variant
  bool assert_lemmas = false;     // count per-iteration progress violations
  InnerRunObserver observer;

  void validate() const;
  /// Proximal weight and curvature step for the theoretical schedules:
  /// second order alpha = 2 sqrt(l2 eps), eta = alpha/l2; third order
  /// alpha = 2 l3^{1/3} eps^{2/3}, eta = sqrt(2 alpha / l3).
  std::pair<double, double> theoretical_alpha_eta() const;
};

struct GuardedResult {
  Vector p_final;
  double f_final = std::numeric_limits<double>::quiet_NaN();
  double grad_norm_final = std::numeric_limits<double>::quiet_NaN();
  std::int64_t outer_iters = 0;        // K
  std::int64_t total_inner_steps = 0;
  bool converged = false;
  EvalCounters counters;
  std::vector<double> per_iter_progress;  // f(p_{k-1}) - f(p_k)
  std::int64_t witness_events = 0;
  std::int64_t nc_exploit_wins = 0;
  std::int64_t l_doublings = 0;
  std::int64_t lemma_violations = 0;  // populated when assert_lemmas is set
};

/// Dynamic inner parameters for practical mode:
/// eps' = |grad f(p_{k-1})| / 10 and alpha = c1 |grad f(p_{k-1})|^{2/3}.
std::pair<double, double> practical_dynamic_params(double grad_norm_prev,
                                                   double c1);

/// Extra convexity check: fires with w_t = y_t when
/// fhat(x_t) + grad fhat(x_t)'(y_t - x_t) > fhat(y_t), a first-order
/// convexity violation between x_t and y_t.
std::optional<Vector> practical_certify_extra(const Oracle& f_hat,
                                              const Vector& x_t,
                                              const Vector& y_t,
                                              EvalCounters& counters);

struct RankedPair {
  Vector u;
  Vector v;
  double alpha_uv = 0;  // 2 (f(v) - f(u) + grad f(v)'(u-v)) / |u-v|^2
};

struct RankCaches {
  std::span<const std::optional<double>> f_xs;  // f(x_j) on the original f
  std::span<const std::optional<double>> f_ys;  // f(y_j) on the original f
  std::span<const Vector> grad_xs;              // grad f(x_j) on the original f
  std::optional<double> f_w;
};

/// Ranks candidate pairs (v = x_j, u in {y_j, w}) by their curvature
/// estimate alpha_{v,u} on the original f, drops nonpositive ones and keeps
/// the top 5, sorted descending. Ties keep scan order (j ascending, y_j
/// before w).
std::vector<RankedPair> practical_rank_witnesses(
    const Oracle& f, std::span<const Vector> xs, std::span<const Vector> ys,
    const Vector& w, EvalCounters& counters, const RankCaches& caches = {});

/// Ten step sizes, log-uniform from 0.01 |u - v| to 100 (|u| + |v|) with the
/// endpoints exact. The interval cannot invert for distinct u, v.
std::vector<double> practical_eta_grid(const Vector& u, const Vector& v);

struct GuardedStepResult {
  Vector p_next;
  double f_next = std::numeric_limits<double>::quiet_NaN();
  bool witness_event = false;   // certification fired during the inner run
  bool nc_win = false;          // curvature candidate beat the selection
  bool budget_exhausted = false;
  std::int64_t inner_steps = 0;
  std::int64_t l_doublings = 0;
  std::int64_t lemma_violations = 0;
  double alpha = 0;
  std::optional<WitnessPair> witness;
  std::optional<double> f_best_selection;  // f(b1)
};

/// One outer iteration from p_prev, given f(p_prev) and |grad f(p_prev)|.
GuardedStepResult guarded_step(const Oracle& f, const Vector& p_prev,
                               double f_prev, double grad_norm_prev,
                               const GuardedConfig& cfg,
                               SemiAdaptiveL& l_state, EvalCounters& counters,
                               RunTrace* trace = nullptr,
                               std::int64_t outer_index = 1,
                               std::int64_t remaining_inner_budget = 0);

/// Full run: iterates guarded_step until |grad f(p_k)| <= eps or a limit is
/// hit; p_0 itself is tested before the first inner run. Iterates are
/// nonincreasing in f in every mode.
GuardedResult run_guarded(const Oracle& f, const Vector& p0,
                          const GuardedConfig& cfg, RunTrace* trace = nullptr);

}  // namespace ncopt
