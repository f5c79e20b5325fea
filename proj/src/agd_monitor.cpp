#include "ncopt/agd_monitor.hpp"

#include <cmath>

namespace ncopt {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr int kMaxDoublings = 200;

double trace_or_nan(std::optional<double> v) { return v ? *v : kNaN; }

}  // namespace

void AgdParams::validate() const {
  if (!(smoothness > 0) || !(strong_convexity > 0)) {
    throw std::invalid_argument("AgdParams: smoothness and strong_convexity must be positive");
  }
  if (strong_convexity > smoothness) {
    throw std::invalid_argument("AgdParams: strong_convexity must not exceed smoothness");
  }
  if (!(target_eps > 0)) {
    throw std::invalid_argument("AgdParams: target_eps must be positive");
  }
  if (max_iters < 1 || check_interval < 1) {
    throw std::invalid_argument("AgdParams: max_iters and check_interval must be >= 1");
  }
}

double AgdParams::momentum() const {
  const double rk = std::sqrt(kappa());
  return (rk - 1.0) / (rk + 1.0);
}

AgdStep agd_step(const Oracle& f, const Vector& x_prev, const Vector& y_prev,
                 const AgdParams& params, EvalCounters& counters) {
  AgdStep s;
  s.grad_x = eval_gradient(f, x_prev, counters);
  s.y_next = x_prev - s.grad_x / params.smoothness;
  s.x_next = s.y_next + params.momentum() * (s.y_next - y_prev);
  return s;
}

CertifyOutcome certify_progress(const Oracle& f, const Vector& y0,
                                const Vector& yt, std::int64_t t,
                                const AgdParams& params, EvalCounters& counters,
                                const CertifyCache& cache) {
  if (t < 1) throw std::invalid_argument("certify_progress: t must be >= 1");
  CertifyOutcome out;
  const double f_y0 = cache.f_y0 ? *cache.f_y0 : eval_value(f, y0, counters);
  const double f_yt = cache.f_yt ? *cache.f_yt : eval_value(f, yt, counters);
  out.f_yt = f_yt;

  if (f_yt > f_y0) {  // non-convex behavior detected outright
    out.w = y0;
    out.f_w = f_y0;
    return out;
  }

  Vector grad_yt =
      cache.grad_yt ? *cache.grad_yt : eval_gradient(f, yt, counters);
  const double grad_sq = grad_yt.squaredNorm();

  double lambda = params.smoothness;
  Vector zt = yt - grad_yt / lambda;
  double f_zt = eval_value(f, zt, counters);
  if (params.semi_adaptive && f_zt > f_yt - grad_sq / (2.0 * lambda)) {
    // Descent test failed: grow L until the step succeeds and report back;
    // the caller terminates the run.
    int doublings = 0;
    do {
      lambda *= 2.0;
      if (++doublings > kMaxDoublings) {
        throw NumericalError("certify_progress: smoothness doubling ran away");
      }
      zt = yt - grad_yt / lambda;
      f_zt = eval_value(f, zt, counters);
    } while (f_zt > f_yt - grad_sq / (2.0 * lambda));
    out.doubled = true;
    out.grown_smoothness = lambda;
    out.grad_yt = std::move(grad_yt);
    out.f_zt = f_zt;
    return out;
  }

  const double psi =
      f_y0 - f_zt + 0.5 * params.strong_convexity * (zt - y0).squaredNorm();
  out.psi = psi;
  out.f_zt = f_zt;
  if (grad_sq > 2.0 * lambda * psi * std::exp(-static_cast<double>(t) /
                                              std::sqrt(params.kappa()))) {
    out.w = std::move(zt);  // AGD has stalled
    out.f_w = f_zt;
  }
  out.grad_yt = std::move(grad_yt);
  return out;
}

namespace {

std::optional<WitnessPair> witness_scan(const Oracle& f,
                                        std::span<const Vector> xs,
                                        std::span<const Vector> ys,
                                        const Vector& w, double sigma,
                                        EvalCounters& counters,
                                        const WitnessScanCache& cache) {
  if (ys.empty()) throw std::invalid_argument("witness scan: empty history");
  const std::size_t t = ys.size() - 1;
  if (xs.size() < t) {
    throw std::invalid_argument("witness scan: xs shorter than scan range");
  }
  const double f_w = cache.f_w ? *cache.f_w : eval_value(f, w, counters);

  for (std::size_t j = 0; j < t; ++j) {
    const Vector& xj = xs[j];
    const double f_xj = eval_value(f, xj, counters);
    const Vector grad_xj = (cache.grad_xs && j < cache.grad_xs->size())
                               ? (*cache.grad_xs)[j]
                               : eval_gradient(f, xj, counters);
    // u = y_j first, then u = w; first strict violation wins.
    for (int which = 0; which < 2; ++which) {
      const Vector& u = (which == 0) ? ys[j] : w;
      double f_u;
      if (which == 0) {
        if (cache.f_ys && j < cache.f_ys->size() && (*cache.f_ys)[j]) {
          f_u = *(*cache.f_ys)[j];
        } else {
          f_u = eval_value(f, u, counters);
        }
      } else {
        f_u = f_w;
      }
      const Vector diff = u - xj;
      const double margin =
          f_xj + grad_xj.dot(diff) + 0.5 * sigma * diff.squaredNorm() - f_u;
      if (margin > 0) {
        return WitnessPair{u, xj, margin};
      }
    }
  }
  return std::nullopt;
}

}  // namespace

WitnessPair find_witness_pair(const Oracle& f, std::span<const Vector> xs,
                              std::span<const Vector> ys, const Vector& w,
                              double sigma, EvalCounters& counters,
                              const WitnessScanCache& cache) {
  auto pair = witness_scan(f, xs, ys, w, sigma, counters, cache);
  if (!pair) {
    throw CertificateContradiction(
        "witness scan exhausted without a violation; the oracle is "
        "inconsistent or the smoothness constants are wrong");
  }
  return std::move(*pair);
}

std::optional<WitnessPair> try_find_witness_pair(
    const Oracle& f, std::span<const Vector> xs, std::span<const Vector> ys,
    const Vector& w, double sigma, EvalCounters& counters,
    const WitnessScanCache& cache) {
  return witness_scan(f, xs, ys, w, sigma, counters, cache);
}

namespace {

// Runtime checks of the certification guarantees; cheap (cached values only)
// and unreachable with a consistent oracle.
void check_iteration_bound(const AgdOutcome& out, const AgdParams& params) {
  if (params.check_interval != 1 || out.iters < 2) return;
  if (!(out.psi_prev > 0)) return;
  const double bound =
      1.0 + std::max(0.0, std::sqrt(params.kappa()) *
                              std::log(2.0 * params.smoothness * out.psi_prev /
                                       (params.target_eps * params.target_eps)));
  if (static_cast<double>(out.iters) > bound * (1.0 + 1e-9) + 1e-9) {
    throw std::logic_error("monitored AGD exceeded its certified iteration bound");
  }
}

void check_envelope(const AgdOutcome& out) {
  if (out.f_ys.empty() || !out.f_ys[0]) return;
  const double f_y0 = *out.f_ys[0];
  const std::size_t t = out.ys.size() - 1;
  // Envelope: f(y_s) <= f(y_0) for s = 1..t-1, and f(w_t) <= f(y_0) when a
  // stall point was produced (u is y_j or w_t, so this also bounds f(u)).
  for (std::size_t s = 1; s < t && s < out.f_ys.size(); ++s) {
    if (out.f_ys[s] && *out.f_ys[s] > f_y0) {
      throw std::logic_error("monitored AGD envelope violated: f(y_s) > f(y_0)");
    }
  }
  if (out.stall_point && out.f_stall_point && *out.f_stall_point > f_y0) {
    throw std::logic_error("monitored AGD envelope violated: f(w_t) > f(y_0)");
  }
}

}  // namespace

AgdOutcome run_monitored_agd(const Oracle& f, const Vector& y0,
                             AgdParams params, EvalCounters& counters,
                             RunTrace* trace, std::int64_t outer_step) {
  params.validate();
  if (y0.size() != f.dimension()) {
    throw std::invalid_argument("run_monitored_agd: y0 dimension mismatch");
  }

  AgdOutcome out;
  out.xs.push_back(y0);
  out.ys.push_back(y0);
  const double f_y0 = eval_value(f, y0, counters);
  out.f_ys.push_back(f_y0);

  const double initial_smoothness = params.smoothness;
  double omega = params.momentum();

  // Side products of the extra certification check, reusable by the next step.
  std::optional<double> pending_f_x;
  std::optional<Vector> pending_grad_x;

  double psi_prev_iter = kNaN;  // psi(z) from the previous certification
  double psi_curr_iter = kNaN;

  auto record = [&](std::int64_t t, Event e, std::optional<double> fv,
                    std::optional<double> gn, const char* detail = "") {
    if (!trace) return;
    trace->append(TraceRecord{outer_step, t, trace_or_nan(fv), trace_or_nan(gn),
                              e, detail, counters});
  };

  auto finalize = [&](std::int64_t t) {
    out.iters = t;
    out.psi_prev = psi_prev_iter;
    out.psi_last = psi_curr_iter;
  };

  for (std::int64_t t = 1;; ++t) {
    if (t > params.max_iters) {
      RunTrace partial = trace ? *trace : RunTrace{};
      throw IterationLimit(
          "monitored AGD exceeded max_iters = " + std::to_string(params.max_iters),
          std::move(partial));
    }
    if (params.soft_iteration_cap > 0 && t > params.soft_iteration_cap) {
      out.stopped_by_cap = true;
      finalize(t - 1);
      return out;
    }

    psi_prev_iter = psi_curr_iter;
    psi_curr_iter = kNaN;

    // Gradient step, possibly with the semi-adaptive descent test.
    Vector grad_x = pending_grad_x ? std::move(*pending_grad_x)
                                   : eval_gradient(f, out.xs.back(), counters);
    pending_grad_x.reset();
    out.grad_xs.push_back(grad_x);

    Vector y_next;
    std::optional<double> f_y_next;
    std::int64_t doublings = 0;
    if (params.semi_adaptive) {
      double f_x;
      if (pending_f_x.has_value()) {
        f_x = *pending_f_x;
      } else {
        f_x = eval_value(f, out.xs.back(), counters);
      }
      const double grad_sq = grad_x.squaredNorm();
      for (;;) {
        y_next = out.xs.back() - grad_x / params.smoothness;
        const double f_cand = eval_value(f, y_next, counters);
        if (f_cand <= f_x - grad_sq / (2.0 * params.smoothness)) {
          f_y_next = f_cand;
          break;
        }
        params.smoothness *= 2.0;
        if (++doublings > kMaxDoublings) {
          throw NumericalError("monitored AGD: smoothness doubling ran away");
        }
      }
    } else {
      y_next = out.xs.back() - grad_x / params.smoothness;
    }
    pending_f_x.reset();

    out.ys.push_back(y_next);
    out.xs.push_back(y_next + omega * (y_next - out.ys[out.ys.size() - 2]));

    if (doublings > 0) {
      // The estimate changed mid-run; stop here and let the caller restart
      // with the grown constant.
      out.f_ys.push_back(f_y_next);
      out.smoothness_doublings += doublings;
      out.smoothness_growth = params.smoothness / initial_smoothness;
      out.stopped_by_doubling = true;
      record(t, Event::restart, f_y_next, std::nullopt, "smoothness_doubled");
      finalize(t);
      return out;
    }

    if (t % params.check_interval != 0) {
      out.f_ys.push_back(f_y_next);
      record(t, Event::agd_step, f_y_next, std::nullopt);
      continue;
    }

    CertifyCache cache;
    cache.f_y0 = f_y0;
    cache.f_yt = f_y_next;
    CertifyOutcome cert =
        certify_progress(f, y0, y_next, t, params, counters, cache);
    out.f_ys.push_back(cert.f_yt);
    if (cert.psi) psi_curr_iter = *cert.psi;

    if (cert.doubled) {
      out.smoothness_doublings +=
          static_cast<std::int64_t>(std::llround(
              std::log2(cert.grown_smoothness / params.smoothness)));
      params.smoothness = cert.grown_smoothness;
      out.smoothness_growth = params.smoothness / initial_smoothness;
      out.stopped_by_doubling = true;
      record(t, Event::restart, cert.f_yt, std::nullopt, "smoothness_doubled");
      finalize(t);
      return out;
    }

    std::optional<Vector> w = cert.w;
    std::optional<double> f_w = cert.f_w;
    const char* detection = cert.grad_yt ? "stall" : "f_increase";
    if (!w && params.extra_certify) {
      ExtraCertifyResult extra = params.extra_certify(
          f, out.xs.back(), y_next, *cert.f_yt, counters);
      if (extra.w) {
        w = std::move(extra.w);
        f_w = cert.f_yt;  // the extra check returns y_t itself
        detection = "convexity_check";
      } else {
        pending_f_x = extra.f_xt;
        pending_grad_x = std::move(extra.grad_xt);
      }
    }

    if (w) {
      record(t, Event::certify_fail, cert.f_yt,
             cert.grad_yt ? std::optional<double>(cert.grad_yt->norm())
                          : std::nullopt,
             detection);
      WitnessScanCache scan_cache;
      scan_cache.f_ys = &out.f_ys;
      scan_cache.grad_xs = &out.grad_xs;
      scan_cache.f_w = f_w;
      if (params.strict_witness_scan) {
        out.witness =
            find_witness_pair(f, out.xs, out.ys, *w, params.strong_convexity,
                              counters, scan_cache);
      } else {
        out.witness =
            try_find_witness_pair(f, out.xs, out.ys, *w,
                                  params.strong_convexity, counters, scan_cache);
      }
      out.stall_point = std::move(w);
      out.f_stall_point = f_w;
      if (out.witness) {
        record(t, Event::witness_found, std::nullopt, std::nullopt);
      }
      finalize(t);
      check_envelope(out);
      if (!params.semi_adaptive) check_iteration_bound(out, params);
      return out;
    }

    const double grad_norm = cert.grad_yt->norm();
    out.final_grad_norm = grad_norm;
    record(t, Event::agd_step, cert.f_yt, grad_norm);
    if (grad_norm <= params.target_eps) {
      out.terminated_stationary = true;
      finalize(t);
      check_envelope(out);
      if (!params.semi_adaptive) check_iteration_bound(out, params);
      return out;
    }
  }
}

}  // namespace ncopt
