#include <doctest.h>

#include <cmath>
#include <thread>

#include "ncopt/core.hpp"
#include "ncopt/problems.hpp"

using namespace ncopt;

namespace {

Vector vec(std::initializer_list<double> v) {
  Vector x(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double c : v) x[i++] = c;
  return x;
}

FunctionOracle half_norm_sq(Eigen::Index d) {
  return FunctionOracle(
      d, [](const Vector& x) { return 0.5 * x.squaredNorm(); },
      [](const Vector& x) { return x; });
}

}  // namespace

TEST_CASE("dot basics") {
  CHECK(dot(vec({1, 2}), vec({3, 4})) == 11.0);
  CHECK(dot(vec({0, 0}), vec({5, -7})) == 0.0);
  Vector a = Vector::Constant(3, 1e-8);
  Vector b = Vector::Constant(3, 1e8);
  CHECK(dot(a, b) == doctest::Approx(3.0).epsilon(1e-15));
  CHECK_THROWS_AS(dot(vec({1}), vec({1, 2})), std::invalid_argument);
}

TEST_CASE("norm basics") {
  CHECK(norm(vec({3, 4})) == 5.0);
  CHECK(norm(Vector::Zero(7)) == 0.0);
  CHECK(norm(vec({1, 1, 1, 1})) == 2.0);
}

TEST_CASE("oracle_eval returns requested quantities and counts exactly") {
  const FunctionOracle f = half_norm_sq(2);
  EvalCounters c;

  Evaluation both = oracle_eval(f, vec({1, 1}), true, true, c);
  CHECK(*both.value == 1.0);
  CHECK((*both.gradient - vec({1, 1})).norm() == 0.0);
  CHECK(c.n_value == 1);
  CHECK(c.n_gradient == 1);

  Evaluation value_only = oracle_eval(f, vec({0, 0}), true, false, c);
  CHECK(*value_only.value == 0.0);
  CHECK(!value_only.gradient);
  CHECK(c.n_value == 2);
  CHECK(c.n_gradient == 1);
}

TEST_CASE("oracle_eval rejects non-finite inputs and outputs") {
  EvalCounters c;
  const FunctionOracle bad(
      1, [](const Vector&) { return std::numeric_limits<double>::quiet_NaN(); },
      [](const Vector& x) { return x; });
  CHECK_THROWS_AS(eval_value(bad, vec({1}), c), NumericalError);

  const FunctionOracle f = half_norm_sq(1);
  Vector inf_pt(1);
  inf_pt[0] = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(eval_value(f, inf_pt, c), NumericalError);
  CHECK_THROWS_AS(eval_value(f, vec({1, 2}), c), std::invalid_argument);
}

TEST_CASE("gradients match central finite differences on a biweight instance") {
  const BiweightOracle f(3);
  EvalCounters c;
  const double h = 1e-6;
  for (int trial = 0; trial < 20; ++trial) {
    Vector x(30);
    for (Eigen::Index i = 0; i < 30; ++i) {
      x[i] = std::sin(0.7 * static_cast<double>(trial * 30 + i));
    }
    const Vector g = eval_gradient(f, x, c);
    Vector fd(30);
    for (Eigen::Index i = 0; i < 30; ++i) {
      Vector xp = x, xm = x;
      xp[i] += h;
      xm[i] -= h;
      fd[i] = (f.value(xp) - f.value(xm)) / (2 * h);
    }
    CHECK((fd - g).norm() / std::max(1.0, g.norm()) <= 1e-5);
  }
}

TEST_CASE("spy oracle confirms counter totals equal user-function invocations") {
  std::int64_t spy_values = 0, spy_grads = 0;
  const FunctionOracle f(
      2,
      [&](const Vector& x) {
        ++spy_values;
        return 0.5 * x.squaredNorm();
      },
      [&](const Vector& x) {
        ++spy_grads;
        return Vector(x);
      });
  EvalCounters c;
  for (int i = 0; i < 5; ++i) {
    oracle_eval(f, vec({1.0, 2.0}), true, true, c);
    oracle_eval(f, vec({0.5, 0.5}), true, false, c);
    oracle_eval(f, vec({0.5, 0.5}), false, true, c);
  }
  CHECK(c.n_value == spy_values);
  CHECK(c.n_gradient == spy_grads);
}

TEST_CASE("a shared oracle gives identical results across concurrent runs") {
  // Oracles are pure; independent runs may share one without synchronization.
  const BiweightOracle f(21);
  auto run_once = [&]() {
    EvalCounters c;
    Vector x = Vector::Zero(30);
    for (int step = 0; step < 50; ++step) {
      const Vector g = eval_gradient(f, x, c);
      x -= 0.1 * g;
    }
    return std::pair{f.value(x), c};
  };
  const auto [expected_value, expected_counters] = run_once();

  std::vector<double> values(8);
  std::vector<EvalCounters> counters(8);
  std::vector<std::thread> pool;
  for (int i = 0; i < 8; ++i) {
    pool.emplace_back([&, i] {
      auto [v, c] = run_once();
      values[static_cast<std::size_t>(i)] = v;
      counters[static_cast<std::size_t>(i)] = c;
    });
  }
  for (auto& th : pool) th.join();
  for (int i = 0; i < 8; ++i) {
    CHECK(values[static_cast<std::size_t>(i)] == expected_value);
    CHECK(counters[static_cast<std::size_t>(i)] == expected_counters);
  }
}

TEST_CASE("trace records enforce monotone steps and counters") {
  RunTrace t;
  t.append({0, 1, 1.0, 1.0, Event::agd_step, "", {1, 1}});
  t.append({0, 2, 0.5, 0.5, Event::agd_step, "", {2, 2}});
  CHECK_THROWS_AS(
      t.append({0, 3, 0.1, 0.1, Event::agd_step, "", {1, 2}}),
      std::logic_error);
  TraceRecord back_in_time{-1, 0, 0.0, 0.0, Event::terminate, "", {5, 5}};
  CHECK_THROWS_AS(t.append(back_in_time), std::logic_error);
}
