#include "ncopt/baselines.hpp"

#include <cmath>

namespace ncopt {

namespace {

constexpr int kMaxDoublings = 200;
constexpr int kMaxHalvings = 200;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

}  // namespace

Vector semi_adaptive_gradient_step(const Oracle& f, const Vector& x,
                                   SemiAdaptiveL& state, EvalCounters& counters,
                                   std::optional<double>* fx_cache,
                                   Vector* grad_out) {
  const Vector g = eval_gradient(f, x, counters);
  if (grad_out) *grad_out = g;
  const double fx = (fx_cache && *fx_cache) ? **fx_cache
                                            : eval_value(f, x, counters);
  const double grad_sq = g.squaredNorm();
  int doublings = 0;
  for (;;) {
    Vector cand = x - g / state.current_l;
    const double f_cand = eval_value(f, cand, counters);
    if (f_cand <= fx - grad_sq / (2.0 * state.current_l)) {
      if (fx_cache) *fx_cache = f_cand;
      return cand;
    }
    state.current_l *= 2.0;
    ++state.doublings;
    if (++doublings > kMaxDoublings) {
      throw NumericalError(
          "semi-adaptive step: more than 200 doublings; broken oracle?");
    }
  }
}

BaselineResult run_gd(const Oracle& f, const Vector& x0, double eps,
                      std::int64_t max_steps, RunTrace* trace) {
  if (!(eps > 0)) throw std::invalid_argument("run_gd: eps must be positive");
  BaselineResult res;
  SemiAdaptiveL state;
  Vector x = x0;
  double fx = eval_value(f, x, res.counters);
  double gn = kNaN;
  for (;;) {
    const Vector g = eval_gradient(f, x, res.counters);
    gn = g.norm();
    if (trace) {
      trace->append({0, res.steps, fx, gn, Event::agd_step, "", res.counters});
    }
    if (gn <= eps) {
      res.converged = true;
      break;
    }
    if (res.steps >= max_steps) break;
    const double grad_sq = gn * gn;
    int doublings = 0;
    for (;;) {
      Vector cand = x - g / state.current_l;
      const double f_cand = eval_value(f, cand, res.counters);
      if (f_cand <= fx - grad_sq / (2.0 * state.current_l)) {
        x = std::move(cand);
        fx = f_cand;
        break;
      }
      state.current_l *= 2.0;
      ++state.doublings;
      if (++doublings > kMaxDoublings) {
        throw NumericalError("run_gd: smoothness doubling ran away");
      }
    }
    ++res.steps;
  }
  res.x_final = std::move(x);
  res.f_final = fx;
  res.grad_norm_final = gn;
  res.l_doublings = state.doublings;
  if (trace) {
    trace->append({0, res.steps, res.f_final, res.grad_norm_final,
                   Event::terminate, res.converged ? "converged" : "max_steps",
                   res.counters});
  }
  return res;
}

BaselineResult run_ragd(const Oracle& f, const Vector& x0, double eps,
                        std::int64_t max_steps, RunTrace* trace) {
  if (!(eps > 0)) throw std::invalid_argument("run_ragd: eps must be positive");
  BaselineResult res;
  SemiAdaptiveL state;
  Vector x = x0;
  Vector y_prev = x0;
  double f_y_prev = eval_value(f, x0, res.counters);
  std::int64_t momentum_k = 0;  // steps since the last restart
  double gn = kNaN;
  double f_x = f_y_prev;
  for (;;) {
    const Vector g = eval_gradient(f, x, res.counters);
    gn = g.norm();
    if (trace) {
      trace->append({0, res.steps, f_x, gn, Event::agd_step, "", res.counters});
    }
    if (gn <= eps) {
      res.converged = true;
      break;
    }
    if (res.steps >= max_steps) break;

    // After a momentum step x_t is a fresh point, so the descent test needs
    // f(x_t) as well.
    if (std::isnan(f_x)) f_x = eval_value(f, x, res.counters);
    const double grad_sq = gn * gn;
    bool l_changed = false;
    Vector y_next;
    double f_y_next;
    int doublings = 0;
    for (;;) {
      y_next = x - g / state.current_l;
      f_y_next = eval_value(f, y_next, res.counters);
      if (f_y_next <= f_x - grad_sq / (2.0 * state.current_l)) break;
      state.current_l *= 2.0;
      ++state.doublings;
      ++res.l_doublings;
      l_changed = true;
      if (++doublings > kMaxDoublings) {
        throw NumericalError("run_ragd: smoothness doubling ran away");
      }
    }
    ++res.steps;

    bool restart = false;
    if (l_changed) {
      restart = true;
      ++res.restarts;
      if (trace) {
        trace->append({0, res.steps, f_y_next, kNaN, Event::restart,
                       "l_doubled", res.counters});
      }
    }
    if (f_y_next > f_y_prev) {
      restart = true;
      ++res.restarts;
      if (trace) {
        trace->append({0, res.steps, f_y_next, kNaN, Event::restart,
                       "nonmonotone", res.counters});
      }
    }

    if (restart) {
      momentum_k = 0;
      x = y_next;
      f_x = f_y_next;
    } else {
      ++momentum_k;
      const double omega = ragd_momentum(momentum_k);
      x = y_next + omega * (y_next - y_prev);
      f_x = kNaN;  // unknown at the new x; evaluated next iteration
    }
    y_prev = y_next;
    f_y_prev = f_y_next;
  }
  res.x_final = std::move(x);
  res.f_final = std::isnan(f_x) ? eval_value(f, res.x_final, res.counters) : f_x;
  res.grad_norm_final = gn;
  if (trace) {
    trace->append({0, res.steps, res.f_final, res.grad_norm_final,
                   Event::terminate, res.converged ? "converged" : "max_steps",
                   res.counters});
  }
  return res;
}

double ncg_beta(const Vector& g, const Vector& g_prev) {
  const double denom = g_prev.squaredNorm();
  if (!(denom > 0)) return 0.0;
  return std::max(g.dot(g - g_prev) / denom, 0.0);
}

BaselineResult run_ncg(const Oracle& f, const Vector& x0, double eps,
                       std::int64_t max_steps, RunTrace* trace) {
  if (!(eps > 0)) throw std::invalid_argument("run_ncg: eps must be positive");
  BaselineResult res;
  Vector x = x0;
  double eta_prev = 1.0;
  std::optional<Vector> d_prev;
  Vector g_prev;
  double fx = eval_value(f, x, res.counters);
  double gn = kNaN;
  for (;;) {
    const Vector g = eval_gradient(f, x, res.counters);
    gn = g.norm();
    if (trace) {
      trace->append({0, res.steps, fx, gn, Event::agd_step, "", res.counters});
    }
    if (gn <= eps) {
      res.converged = true;
      break;
    }
    if (res.steps >= max_steps) break;

    Vector d;
    if (!d_prev) {
      d = -g;
    } else {
      d = -g + ncg_beta(g, g_prev) * (*d_prev);
      if (d.dot(g) >= 0) d = -g;  // not a descent direction: truncate
    }

    const double slope = d.dot(g);
    double eta = 2.0 * eta_prev;
    int halvings = 0;
    Vector cand;
    double f_cand;
    for (;;) {
      cand = x + eta * d;
      f_cand = eval_value(f, cand, res.counters);
      if (f_cand <= fx + 0.5 * eta * slope) break;
      eta *= 0.5;
      if (++halvings > kMaxHalvings) {
        throw NumericalError("run_ncg: more than 200 halvings in line search");
      }
    }
    x = std::move(cand);
    fx = f_cand;
    eta_prev = eta;
    d_prev = std::move(d);
    g_prev = g;
    ++res.steps;
  }
  res.x_final = std::move(x);
  res.f_final = fx;
  res.grad_norm_final = gn;
  if (trace) {
    trace->append({0, res.steps, res.f_final, res.grad_norm_final,
                   Event::terminate, res.converged ? "converged" : "max_steps",
                   res.counters});
  }
  return res;
}

}  // namespace ncopt
