#include "ncopt/core.hpp"

#include <cmath>
#include <sstream>

namespace ncopt {

std::string format_point(const Vector& x, Eigen::Index max_coords) {
  std::ostringstream os;
  os << "[";
  const Eigen::Index n = std::min(x.size(), max_coords);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (i > 0) os << ", ";
    os << x[i];
  }
  if (x.size() > max_coords) os << ", ... (" << x.size() << " coords)";
  os << "]";
  return os.str();
}

namespace {

bool all_finite(const Vector& x) { return x.allFinite(); }

[[noreturn]] void throw_non_finite(const char* what, const Vector& x) {
  throw NumericalError(std::string("non-finite ") + what + " at point " +
                       format_point(x));
}

}  // namespace

Evaluation oracle_eval(const Oracle& f, const Vector& x, bool want_value,
                       bool want_gradient, EvalCounters& counters) {
  if (x.size() != f.dimension()) {
    throw std::invalid_argument(
        "oracle_eval: point dimension " + std::to_string(x.size()) +
        " does not match oracle dimension " + std::to_string(f.dimension()));
  }
  if (!all_finite(x)) throw_non_finite("input", x);

  Evaluation out;
  if (want_value && want_gradient) {
    double v;
    Vector g;
    f.value_and_gradient(x, v, g);
    ++counters.n_value;
    ++counters.n_gradient;
    if (!std::isfinite(v)) throw_non_finite("value", x);
    if (!all_finite(g)) throw_non_finite("gradient", x);
    out.value = v;
    out.gradient = std::move(g);
  } else if (want_value) {
    double v = f.value(x);
    ++counters.n_value;
    if (!std::isfinite(v)) throw_non_finite("value", x);
    out.value = v;
  } else if (want_gradient) {
    Vector g = f.gradient(x);
    ++counters.n_gradient;
    if (!all_finite(g)) throw_non_finite("gradient", x);
    out.gradient = std::move(g);
  }
  return out;
}

double eval_value(const Oracle& f, const Vector& x, EvalCounters& counters) {
  return *oracle_eval(f, x, true, false, counters).value;
}

Vector eval_gradient(const Oracle& f, const Vector& x, EvalCounters& counters) {
  return std::move(*oracle_eval(f, x, false, true, counters).gradient);
}

std::pair<double, Vector> eval_both(const Oracle& f, const Vector& x,
                                    EvalCounters& counters) {
  Evaluation e = oracle_eval(f, x, true, true, counters);
  return {*e.value, std::move(*e.gradient)};
}

double dot(const Vector& a, const Vector& b) {
  if (a.size() != b.size()) {
    throw std::invalid_argument("dot: dimension mismatch (" +
                                std::to_string(a.size()) + " vs " +
                                std::to_string(b.size()) + ")");
  }
  return a.dot(b);
}

double norm(const Vector& a) { return std::sqrt(a.dot(a)); }

const char* event_name(Event e) {
  switch (e) {
    case Event::agd_step: return "agd_step";
    case Event::certify_fail: return "certify_fail";
    case Event::witness_found: return "witness_found";
    case Event::nc_exploit: return "nc_exploit";
    case Event::restart: return "restart";
    case Event::terminate: return "terminate";
  }
  return "unknown";
}

void RunTrace::append(TraceRecord r) {
  if (!records.empty()) {
    const TraceRecord& prev = records.back();
    if (r.outer_step < prev.outer_step) {
      throw std::logic_error("RunTrace: outer_step decreased");
    }
    if (r.counters.n_value < prev.counters.n_value ||
        r.counters.n_gradient < prev.counters.n_gradient) {
      throw std::logic_error("RunTrace: counter snapshot decreased");
    }
  }
  records.push_back(std::move(r));
}

}  // namespace ncopt
