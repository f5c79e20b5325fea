#include "ncopt/driver.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>

#include "ncopt/nc_exploit.hpp"

namespace ncopt {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
}

const char* guarded_mode_name(GuardedMode m) {
  switch (m) {
    case GuardedMode::second_order: return "second_order";
    case GuardedMode::third_order: return "third_order";
    case GuardedMode::practical: return "practical";
  }
  return "unknown";
}

ProximalOracle::ProximalOracle(const Oracle& base, Vector center, double alpha)
    : base_(&base), center_(std::move(center)), alpha_(alpha) {
  if (!(alpha > 0)) {
    throw std::invalid_argument("proximal_wrap: alpha must be positive");
  }
  if (center_.size() != base.dimension()) {
    throw std::invalid_argument("proximal_wrap: center dimension mismatch");
  }
}

double ProximalOracle::value(const Vector& x) const {
  return base_->value(x) + alpha_ * (x - center_).squaredNorm();
}

Vector ProximalOracle::gradient(const Vector& x) const {
  return base_->gradient(x) + 2.0 * alpha_ * (x - center_);
}

void ProximalOracle::value_and_gradient(const Vector& x, double& v,
                                        Vector& g) const {
  base_->value_and_gradient(x, v, g);
  v += alpha_ * (x - center_).squaredNorm();
  g += 2.0 * alpha_ * (x - center_);
}

KnownConstants ProximalOracle::constants() const {
  KnownConstants c = base_->constants();
  if (c.l1) *c.l1 += 2.0 * alpha_;  // the penalty adds 2 alpha to smoothness
  if (c.f_lower_bound) {
    // fhat >= f >= lower bound still holds; keep it.
  }
  return c;
}

ProximalOracle proximal_wrap(const Oracle& f, Vector center, double alpha) {
  return ProximalOracle(f, std::move(center), alpha);
}

void GuardedConfig::validate() const {
  if (!(eps > 0)) throw std::invalid_argument("GuardedConfig: eps must be positive");
  if (!(l1 > 0)) throw std::invalid_argument("GuardedConfig: l1 must be positive");
  if (mode == GuardedMode::second_order && !(l2 && *l2 > 0)) {
    throw std::invalid_argument("GuardedConfig: second_order mode requires l2");
  }
  if (mode == GuardedMode::third_order && !(l3 && *l3 > 0)) {
    throw std::invalid_argument("GuardedConfig: third_order mode requires l3");
  }
  if (mode == GuardedMode::practical && !(c1 > 0)) {
    throw std::invalid_argument("GuardedConfig: practical mode requires c1 > 0");
  }
  if (max_inner < 1 || check_interval < 1) {
    throw std::invalid_argument("GuardedConfig: max_inner and check_interval must be >= 1");
  }
}

std::pair<double, double> GuardedConfig::theoretical_alpha_eta() const {
  if (mode == GuardedMode::second_order) {
    const double alpha = 2.0 * std::sqrt(*l2 * eps);
    return {alpha, alpha / *l2};
  }
  if (mode == GuardedMode::third_order) {
    const double alpha = 2.0 * std::cbrt(*l3) * std::pow(eps, 2.0 / 3.0);
    return {alpha, std::sqrt(2.0 * alpha / *l3)};
  }
  throw std::logic_error("theoretical_alpha_eta: practical mode has no fixed schedule");
}

std::pair<double, double> practical_dynamic_params(double grad_norm_prev,
                                                   double c1) {
  if (!(grad_norm_prev > 0)) {
    throw std::invalid_argument(
        "practical_dynamic_params: caller must have terminated at a "
        "stationary point already");
  }
  return {grad_norm_prev / 10.0, c1 * std::pow(grad_norm_prev, 2.0 / 3.0)};
}

namespace {

// Shared test for the extra convexity check, given a cached fhat(y_t).
ExtraCertifyResult certify_extra_impl(const Oracle& f_hat, const Vector& x_t,
                                      const Vector& y_t, double f_yt,
                                      EvalCounters& counters) {
  ExtraCertifyResult r;
  auto [f_xt, g_xt] = eval_both(f_hat, x_t, counters);
  if (f_xt + g_xt.dot(y_t - x_t) > f_yt) {
    r.w = y_t;
  } else {
    r.f_xt = f_xt;
    r.grad_xt = std::move(g_xt);
  }
  return r;
}

}  // namespace

std::optional<Vector> practical_certify_extra(const Oracle& f_hat,
                                              const Vector& x_t,
                                              const Vector& y_t,
                                              EvalCounters& counters) {
  const double f_yt = eval_value(f_hat, y_t, counters);
  return certify_extra_impl(f_hat, x_t, y_t, f_yt, counters).w;
}

std::vector<RankedPair> practical_rank_witnesses(
    const Oracle& f, std::span<const Vector> xs, std::span<const Vector> ys,
    const Vector& w, EvalCounters& counters, const RankCaches& caches) {
  if (ys.empty()) {
    throw std::invalid_argument("practical_rank_witnesses: empty history");
  }
  const std::size_t t = ys.size() - 1;
  if (xs.size() < t) {
    throw std::invalid_argument("practical_rank_witnesses: xs too short");
  }
  auto cached_or_eval = [&](std::span<const std::optional<double>> cache,
                            std::size_t j, const Vector& p) {
    if (j < cache.size() && cache[j]) return *cache[j];
    return eval_value(f, p, counters);
  };
  const double f_w = caches.f_w ? *caches.f_w : eval_value(f, w, counters);

  std::vector<RankedPair> pairs;
  pairs.reserve(2 * t);
  for (std::size_t j = 0; j < t; ++j) {
    const Vector& v = xs[j];
    const double f_v = cached_or_eval(caches.f_xs, j, v);
    const Vector grad_v = (j < caches.grad_xs.size())
                              ? caches.grad_xs[j]
                              : eval_gradient(f, v, counters);
    for (int which = 0; which < 2; ++which) {
      const Vector& u = (which == 0) ? ys[j] : w;
      const double f_u = (which == 0) ? cached_or_eval(caches.f_ys, j, u) : f_w;
      const double dist_sq = (u - v).squaredNorm();
      if (!(dist_sq > 0)) continue;
      // Largest modulus whose strong-convexity inequality the pair violates;
      // nonpositive for convex f, positive exactly when the secant curvature
      // between v and u is negative.
      const double alpha_uv =
          2.0 * (f_v - f_u + grad_v.dot(u - v)) / dist_sq;
      if (alpha_uv > 0) {
        pairs.push_back({u, v, alpha_uv});
      }
    }
  }
  std::stable_sort(pairs.begin(), pairs.end(),
                   [](const RankedPair& a, const RankedPair& b) {
                     return a.alpha_uv > b.alpha_uv;
                   });
  if (pairs.size() > 5) pairs.resize(5);
  return pairs;
}

std::vector<double> practical_eta_grid(const Vector& u, const Vector& v) {
  const double dist = (u - v).norm();
  if (!(dist > 0)) {
    throw std::invalid_argument("practical_eta_grid: u and v must be distinct");
  }
  const double lo = 0.01 * dist;
  const double hi = 100.0 * (u.norm() + v.norm());
  if (!(hi > lo)) {
    // |u - v| <= |u| + |v| makes hi/lo >= 1e4; an inverted interval means
    // non-finite inputs slipped through.
    throw std::invalid_argument("practical_eta_grid: degenerate interval");
  }
  std::vector<double> grid(10);
  const double ratio = hi / lo;
  for (int i = 0; i < 10; ++i) {
    grid[static_cast<std::size_t>(i)] =
        lo * std::pow(ratio, static_cast<double>(i) / 9.0);
  }
  grid.front() = lo;  // endpoints exact
  grid.back() = hi;
  return grid;
}

namespace {

// f(y_s) on the original objective, recovered from the cached fhat values:
// f(y) = fhat(y) - alpha |y - center|^2, costing no oracle calls.
std::vector<std::optional<double>> recover_original_values(
    const std::vector<std::optional<double>>& f_hat_ys,
    const std::vector<Vector>& ys, const Vector& center, double alpha) {
  std::vector<std::optional<double>> out(f_hat_ys.size());
  for (std::size_t s = 0; s < f_hat_ys.size() && s < ys.size(); ++s) {
    if (f_hat_ys[s]) {
      out[s] = *f_hat_ys[s] - alpha * (ys[s] - center).squaredNorm();
    }
  }
  return out;
}

struct PracticalExploit {
  std::optional<Vector> best;
  double best_value = std::numeric_limits<double>::infinity();
};

// Grid search over the ranked pairs: for each pair, each step size, each
// base point z in {v, u} and each sign, evaluate z +- eta * delta and keep
// the global best. Enumeration order fixes tie-breaking.
PracticalExploit practical_exploit(const Oracle& f,
                                   const std::vector<RankedPair>& pairs,
                                   EvalCounters& counters) {
  PracticalExploit out;
  for (const RankedPair& rp : pairs) {
    const Vector diff = rp.u - rp.v;
    const Vector delta = diff / diff.norm();
    const std::vector<double> grid = practical_eta_grid(rp.u, rp.v);
    for (const double eta : grid) {
      for (int base = 0; base < 2; ++base) {
        const Vector& z = (base == 0) ? rp.v : rp.u;
        for (int sign = 0; sign < 2; ++sign) {
          Vector cand = (sign == 0) ? Vector(z + eta * delta)
                                    : Vector(z - eta * delta);
          const double fc = eval_value(f, cand, counters);
          if (fc < out.best_value) {
            out.best_value = fc;
            out.best = std::move(cand);
          }
        }
      }
    }
  }
  return out;
}

}  // namespace

GuardedStepResult guarded_step(const Oracle& f, const Vector& p_prev,
                               double f_prev, double grad_norm_prev,
                               const GuardedConfig& cfg,
                               SemiAdaptiveL& l_state, EvalCounters& counters,
                               RunTrace* trace, std::int64_t outer_index,
                               std::int64_t remaining_inner_budget) {
  const bool practical = cfg.mode == GuardedMode::practical;

  double alpha, eta = 0, eps_inner;
  if (practical) {
    std::tie(eps_inner, alpha) =
        practical_dynamic_params(grad_norm_prev, cfg.c1);
  } else {
    std::tie(alpha, eta) = cfg.theoretical_alpha_eta();
    eps_inner = cfg.eps / 10.0;
  }

  const ProximalOracle f_hat = proximal_wrap(f, p_prev, alpha);

  AgdParams ap;
  ap.smoothness = (practical ? l_state.current_l : cfg.l1) + 2.0 * alpha;
  ap.strong_convexity = alpha;
  ap.target_eps = eps_inner;
  ap.max_iters = cfg.max_inner;
  ap.check_interval = cfg.check_interval;
  if (practical) {
    ap.semi_adaptive = true;
    ap.strict_witness_scan = false;
    ap.extra_certify = [](const Oracle& fh, const Vector& xt, const Vector& yt,
                          double f_yt, EvalCounters& c) {
      return certify_extra_impl(fh, xt, yt, f_yt, c);
    };
  }
  if (remaining_inner_budget > 0) ap.soft_iteration_cap = remaining_inner_budget;
  const double inner_smoothness = ap.smoothness;

  const AgdOutcome out =
      run_monitored_agd(f_hat, p_prev, ap, counters, trace, outer_index);

  GuardedStepResult res;
  res.alpha = alpha;
  res.inner_steps = out.iters;
  res.budget_exhausted = out.stopped_by_cap;
  res.witness_event = out.stall_point.has_value();
  res.witness = out.witness;
  res.l_doublings = out.smoothness_doublings;
  if (practical && out.smoothness_growth > 1.0) {
    l_state.current_l *= out.smoothness_growth;
    l_state.doublings += out.smoothness_doublings;
  }

  if (cfg.observer) {
    cfg.observer(InnerRunView{outer_index, p_prev, alpha, alpha, eps_inner,
                              inner_smoothness, out});
  }

  const auto f_ys_orig =
      recover_original_values(out.f_ys, out.ys, p_prev, alpha);

  auto cached_argmin = [&]() {
    // No fresh evaluations: pick the best cached iterate (y_0 included, so
    // the result is never worse than p_prev).
    std::size_t best = 0;
    double best_v = std::numeric_limits<double>::infinity();
    for (std::size_t s = 0; s < f_ys_orig.size(); ++s) {
      if (f_ys_orig[s] && *f_ys_orig[s] < best_v) {
        best_v = *f_ys_orig[s];
        best = s;
      }
    }
    res.p_next = out.ys[best];
    res.f_next = best_v;
  };

  if (!practical) {
    if (!res.witness_event) {
      if (out.terminated_stationary && f_ys_orig.back()) {
        res.p_next = out.ys.back();
        res.f_next = *f_ys_orig.back();
      } else {
        cached_argmin();
      }
    } else {
      const WitnessPair& wp = *out.witness;
      BestPoint b1;
      std::optional<NcStepResult> b2;
      if (cfg.mode == GuardedMode::second_order) {
        b1 = find_best(f, out.ys, wp.u, counters, f_ys_orig);
        if (cfg.exploit_curvature) {
          b2 = exploit_nc_pair(f, wp.u, wp.v, eta, counters);
        }
      } else {
        b1 = find_best_3(f, out.ys, out.xs, wp.u, wp.v, counters, f_ys_orig);
        if (cfg.exploit_curvature) {
          b2 = exploit_nc_pair_3(f, wp.u, wp.v, eta, counters);
        }
      }
      res.f_best_selection = b1.value;
      if (b2 && b2->f_z < b1.value) {
        res.p_next = std::move(b2->z);
        res.f_next = b2->f_z;
        res.nc_win = true;
      } else {
        res.p_next = std::move(b1.point);
        res.f_next = b1.value;
      }
    }
  } else {
    // Selection always goes through the extended best-point scan; the
    // curvature grid search competes with it on witness events.
    const std::size_t t = out.ys.size() - 1;
    std::vector<std::optional<double>> f_xs_orig(t);
    for (std::size_t j = 0; j < t; ++j) {
      f_xs_orig[j] = eval_value(f, out.xs[j], counters);
    }
    const Vector* u_ptr = out.witness ? &out.witness->u : nullptr;
    BestPoint b1 = find_best_3_practical(f, out.ys, out.xs, u_ptr, counters,
                                         f_ys_orig, f_xs_orig);
    res.f_best_selection = b1.value;
    res.p_next = std::move(b1.point);
    res.f_next = b1.value;

    if (res.witness_event && cfg.exploit_curvature) {
      std::vector<Vector> grads_orig(t);
      for (std::size_t j = 0; j < t; ++j) {
        grads_orig[j] =
            out.grad_xs[j] - 2.0 * alpha * (out.xs[j] - p_prev);
      }
      RankCaches caches;
      caches.f_xs = f_xs_orig;
      caches.f_ys = f_ys_orig;
      caches.grad_xs = grads_orig;
      if (out.f_stall_point) {
        caches.f_w = *out.f_stall_point -
                     alpha * (*out.stall_point - p_prev).squaredNorm();
      }
      const auto ranked = practical_rank_witnesses(
          f, out.xs, out.ys, *out.stall_point, counters, caches);
      const PracticalExploit ex = practical_exploit(f, ranked, counters);
      if (ex.best && ex.best_value < b1.value) {
        res.p_next = std::move(*ex.best);
        res.f_next = ex.best_value;
        res.nc_win = true;
      }
    }
  }

  if (res.nc_win && trace) {
    trace->append({outer_index, out.iters, res.f_next, kNaN, Event::nc_exploit,
                   "", counters});
  }

  // Selection insurance: in second_order mode a curvature win implies either
  // the selection already made the guaranteed progress or the pair was close.
  if (cfg.assert_lemmas && cfg.mode == GuardedMode::second_order &&
      res.nc_win && res.witness) {
    const double l2 = *cfg.l2;
    const double progress_bound = alpha * alpha * alpha / (64.0 * l2 * l2);
    const double dist = (res.witness->u - res.witness->v).norm();
    const bool selection_ok =
        *res.f_best_selection <= f_prev - progress_bound + 1e-12;
    const bool distance_ok = dist <= alpha / (2.0 * l2);
    if (!selection_ok && !distance_ok) ++res.lemma_violations;
  }

  return res;
}

GuardedResult run_guarded(const Oracle& f, const Vector& p0,
                          const GuardedConfig& cfg, RunTrace* trace) {
  cfg.validate();
  if (p0.size() != f.dimension()) {
    throw std::invalid_argument("run_guarded: p0 dimension mismatch");
  }

  GuardedResult res;
  Vector p = p0;
  double f_p = eval_value(f, p, res.counters);
  double gn = norm(eval_gradient(f, p, res.counters));

  SemiAdaptiveL l_state;
  l_state.current_l = cfg.l1;

  std::int64_t max_outer = cfg.max_outer;
  if (max_outer <= 0) {
    max_outer = 1'000'000;
    const auto kc = f.constants();
    if (kc.f_lower_bound && cfg.mode != GuardedMode::practical) {
      const double delta_f = std::max(f_p - *kc.f_lower_bound, 0.0);
      double bound = 0;
      if (cfg.mode == GuardedMode::second_order) {
        bound = 1.0 + 10.0 * delta_f * std::sqrt(*cfg.l2) *
                          std::pow(cfg.eps, -1.5);
      } else {
        bound = 1.0 + 10.0 * delta_f * std::cbrt(*cfg.l3) *
                          std::pow(cfg.eps, -4.0 / 3.0);
      }
      max_outer = 10 * static_cast<std::int64_t>(std::ceil(bound));
      max_outer = std::max<std::int64_t>(max_outer, 1);
    }
  }

  while (gn > cfg.eps && res.outer_iters < max_outer) {
    std::int64_t remaining = 0;
    if (cfg.max_total_inner_steps > 0) {
      remaining = cfg.max_total_inner_steps - res.total_inner_steps;
      if (remaining <= 0) break;
    }
    GuardedStepResult step =
        guarded_step(f, p, f_p, gn, cfg, l_state, res.counters, trace,
                     res.outer_iters + 1, remaining);
    res.total_inner_steps += step.inner_steps;
    res.witness_events += step.witness_event ? 1 : 0;
    res.nc_exploit_wins += step.nc_win ? 1 : 0;
    res.l_doublings += step.l_doublings;
    res.lemma_violations += step.lemma_violations;
    res.per_iter_progress.push_back(f_p - step.f_next);
    p = std::move(step.p_next);
    f_p = step.f_next;
    gn = norm(eval_gradient(f, p, res.counters));
    ++res.outer_iters;
  }
  res.converged = gn <= cfg.eps;
  res.p_final = std::move(p);
  res.f_final = f_p;
  res.grad_norm_final = gn;

  // Per-iteration progress guarantees of the theoretical schedules; the
  // final iterate is exempt.
  if (cfg.assert_lemmas && cfg.mode != GuardedMode::practical &&
      res.outer_iters > 0) {
    const auto [alpha, eta] = cfg.theoretical_alpha_eta();
    (void)eta;
    double drop = cfg.eps * cfg.eps / (5.0 * alpha);
    if (cfg.mode == GuardedMode::second_order) {
      drop = std::min(drop, std::pow(alpha, 3) / (64.0 * *cfg.l2 * *cfg.l2));
    } else {
      drop = std::min(drop, alpha * alpha / (32.0 * *cfg.l3));
    }
    for (std::size_t k = 0; k + 1 < res.per_iter_progress.size(); ++k) {
      if (res.per_iter_progress[k] < drop - 1e-12) ++res.lemma_violations;
    }
    // When the run converged, the last recorded step is the final iterate
    // k = K and is exempt; otherwise it too must make progress.
    if (!res.converged && !res.per_iter_progress.empty() &&
        res.per_iter_progress.back() < drop - 1e-12) {
      ++res.lemma_violations;
    }
  }

  if (trace) {
    trace->append({res.outer_iters, 0, res.f_final, res.grad_norm_final,
                   Event::terminate, res.converged ? "converged" : "limit",
                   res.counters});
  }
  return res;
}

}  // namespace ncopt
