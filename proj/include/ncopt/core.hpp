#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

namespace ncopt {

/// Dense point in R^d. All arithmetic is 64-bit; there is no tunable
/// precision anywhere in the library.
using Vector = Eigen::VectorXd;

/// A user-supplied function produced NaN/Inf, or an adaptive doubling /
/// halving scheme ran away (which signals a broken oracle).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The witness scan exhausted every candidate pair. The certification
/// guarantee proves this is unreachable with a consistent oracle and valid
/// smoothness constants, so reaching it is a hard logic error.
class CertificateContradiction : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

std::string format_point(const Vector& x, Eigen::Index max_coords = 8);

/// Exact evaluation accounting. A combined value+gradient call increments
/// both counters by one.
struct EvalCounters {
  std::int64_t n_value = 0;
  std::int64_t n_gradient = 0;

  EvalCounters& operator+=(const EvalCounters& o) {
    n_value += o.n_value;
    n_gradient += o.n_gradient;
    return *this;
  }
  friend bool operator==(const EvalCounters&, const EvalCounters&) = default;
};

/// Optional analytic knowledge about an objective. Theoretical schedules
/// require the constants they use and fail fast when they are absent.
struct KnownConstants {
  std::optional<double> l1;             // Lipschitz constant of the gradient
  std::optional<double> l2;             // Lipschitz constant of the Hessian
  std::optional<double> l3;             // Lipschitz constant of the third derivative
  std::optional<double> strong_convexity;
  std::optional<double> f_lower_bound;
};

/// First-order oracle: values and gradients only. Implementations must be
/// deterministic pure functions of the input point, so results can be
/// re-evaluated from scratch bit-for-bit.
class Oracle {
 public:
  virtual ~Oracle() = default;

  virtual Eigen::Index dimension() const = 0;
  virtual double value(const Vector& x) const = 0;
  virtual Vector gradient(const Vector& x) const = 0;

  /// Fused evaluation; override when value and gradient share work.
  virtual void value_and_gradient(const Vector& x, double& v, Vector& g) const {
    v = value(x);
    g = gradient(x);
  }

  virtual KnownConstants constants() const { return {}; }
};

/// Oracle built from callables; the workhorse for tests and synthetic
/// problems.
class FunctionOracle final : public Oracle {
 public:
  using ValueFn = std::function<double(const Vector&)>;
  using GradientFn = std::function<Vector(const Vector&)>;

  FunctionOracle(Eigen::Index dim, ValueFn value, GradientFn gradient,
                 KnownConstants constants = {})
      : dim_(dim),
        value_(std::move(value)),
        gradient_(std::move(gradient)),
        constants_(constants) {}

  Eigen::Index dimension() const override { return dim_; }
  double value(const Vector& x) const override { return value_(x); }
  Vector gradient(const Vector& x) const override { return gradient_(x); }
  KnownConstants constants() const override { return constants_; }

 private:
  Eigen::Index dim_;
  ValueFn value_;
  GradientFn gradient_;
  KnownConstants constants_;
};

struct Evaluation {
  std::optional<double> value;
  std::optional<Vector> gradient;
};

/// Evaluates the requested quantities at x, incrementing the counters by
/// exactly one per requested quantity. Non-finite inputs or outputs are hard
/// errors naming the offending point.
Evaluation oracle_eval(const Oracle& f, const Vector& x, bool want_value,
                       bool want_gradient, EvalCounters& counters);

double eval_value(const Oracle& f, const Vector& x, EvalCounters& counters);
Vector eval_gradient(const Oracle& f, const Vector& x, EvalCounters& counters);
std::pair<double, Vector> eval_both(const Oracle& f, const Vector& x,
                                    EvalCounters& counters);

/// Inner product with an explicit dimension check.
double dot(const Vector& a, const Vector& b);

/// Euclidean norm, sqrt(dot(a, a)).
double norm(const Vector& a);

enum class Event {
  agd_step,
  certify_fail,
  witness_found,
  nc_exploit,
  restart,
  terminate,
};

const char* event_name(Event e);

struct TraceRecord {
  std::int64_t outer_step = 0;
  std::int64_t inner_step = 0;
  double f_value = std::numeric_limits<double>::quiet_NaN();
  double grad_norm = std::numeric_limits<double>::quiet_NaN();
  Event event = Event::agd_step;
  std::string detail;
  EvalCounters counters;
};

/// Time-ordered event log of one optimizer run. Recording is opt-in per run:
/// every runner accepts a nullable trace pointer and the hot loops stay
/// allocation-free when it is null.
struct RunTrace {
  std::vector<TraceRecord> records;

  /// Appends a record, enforcing that outer_step and the counter snapshot
  /// never decrease.
  void append(TraceRecord r);
};

}  // namespace ncopt
