#include <doctest.h>

#include <cmath>

#include "ncopt/nc_exploit.hpp"
#include "ncopt/problems.hpp"
#include "ncopt/rng.hpp"

using namespace ncopt;

namespace {

Vector scalar(double v) {
  Vector x(1);
  x[0] = v;
  return x;
}

FunctionOracle concave_sq() {
  return FunctionOracle(
      1, [](const Vector& x) { return -x.squaredNorm(); },
      [](const Vector& x) { return Vector(-2 * x); });
}

}  // namespace

TEST_CASE("exploit_nc_pair picks the lower candidate") {
  EvalCounters c;
  const FunctionOracle f = concave_sq();
  // u = 0.1, v = 0, eta = 1: f(1.1) = -1.21 beats f(-0.9) = -0.81, and the
  // decrease clears alpha eta^2 / 12 with alpha = 1.
  const NcStepResult r = exploit_nc_pair(f, scalar(0.1), scalar(0), 1.0, c);
  CHECK(r.z[0] == doctest::Approx(1.1).epsilon(1e-15));
  CHECK(r.f_z == doctest::Approx(-1.21).epsilon(1e-15));
  CHECK(r.chosen_side == NcStepResult::Side::plus);
  CHECK(r.f_z <= f.value(scalar(0.1)) - 1.0 / 12.0);
  CHECK(c.n_value == 2);

  // Even function about u: tie goes to the plus side.
  const FunctionOracle even(
      1, [](const Vector& x) { return (x[0] - 0.1) * (x[0] - 0.1); },
      [](const Vector& x) { return Vector(scalar(2 * (x[0] - 0.1))); });
  const NcStepResult tie = exploit_nc_pair(even, scalar(0.1), scalar(0), 0.5, c);
  CHECK(tie.chosen_side == NcStepResult::Side::plus);
  CHECK(tie.z[0] == doctest::Approx(0.6).epsilon(1e-15));

  // Linear function: the minus side wins.
  const FunctionOracle linear(
      1, [](const Vector& x) { return x[0]; },
      [](const Vector&) { return scalar(1); });
  const NcStepResult lin = exploit_nc_pair(linear, scalar(1), scalar(0), 2.0, c);
  CHECK(lin.z[0] == doctest::Approx(-1.0).epsilon(1e-15));
  CHECK(lin.f_z == doctest::Approx(-1.0).epsilon(1e-15));

  CHECK_THROWS_AS(exploit_nc_pair(f, scalar(1), scalar(1), 1.0, c),
                  std::invalid_argument);
}

TEST_CASE("exploit_nc_pair_3 asymmetric step") {
  EvalCounters c;
  // eta' = sqrt(eta (eta + |u-v|)) - |u-v|.
  {
    const FunctionOracle linear(
        2, [](const Vector& x) { return x[0]; },
        [](const Vector&) {
          Vector g(2);
          g << 1, 0;
          return g;
        });
    Vector u(2), v(2);
    u << 0.5, 0;
    v << 0, 0;
    const NcStepResult r = exploit_nc_pair_3(linear, u, v, 2.0, c);
    // eta' = sqrt(5) - 0.5; the v-side candidate sits at -2 and wins.
    CHECK(r.z[0] == doctest::Approx(-2.0).epsilon(1e-14));
    const double eta_prime = std::sqrt(5.0) - 0.5;
    CHECK(eta_prime == doctest::Approx(1.7360679774997898).epsilon(1e-15));
  }
  CHECK(std::sqrt(1.0 * 1.5) - 0.5 ==
        doctest::Approx(0.7247448713915889).epsilon(1e-15));

  // f = -x^2, u = 0.1, v = 0, eta = 1: candidate u + eta' lands on sqrt(1.1),
  // so f = -1.1 exactly, beating f(v - eta) = -1.
  const FunctionOracle f = concave_sq();
  const NcStepResult r = exploit_nc_pair_3(f, scalar(0.1), scalar(0), 1.0, c);
  CHECK(r.z[0] == doctest::Approx(std::sqrt(1.1)).epsilon(1e-15));
  CHECK(r.f_z == doctest::Approx(-1.1).epsilon(1e-14));
  CHECK(r.chosen_side == NcStepResult::Side::plus);

  CHECK_THROWS_AS(exploit_nc_pair_3(f, scalar(1), scalar(1), 1.0, c),
                  std::invalid_argument);
}

TEST_CASE("find_best argmin order and ties") {
  EvalCounters c;
  const FunctionOracle f(
      1, [](const Vector& x) { return x[0]; },
      [](const Vector&) { return scalar(1); });
  // ys values (3, 2, 1), f(u) = 5: the last y wins.
  std::vector<Vector> ys = {scalar(3), scalar(2), scalar(1)};
  BestPoint b = find_best(f, ys, scalar(5), c);
  CHECK(b.point[0] == 1.0);
  CHECK(b.value == 1.0);

  // Tie between u and the best y: u is enumerated first and wins.
  const FunctionOracle sq(
      1, [](const Vector& x) { return x.squaredNorm(); },
      [](const Vector& x) { return Vector(2 * x); });
  std::vector<Vector> ys_sq = {scalar(1)};
  BestPoint tie = find_best(sq, ys_sq, scalar(-1), c);
  CHECK(tie.point[0] == -1.0);
  CHECK(tie.value == 1.0);

  // Singleton ys.
  std::vector<Vector> single = {scalar(7)};
  BestPoint s = find_best(f, single, scalar(2), c);
  CHECK(s.point[0] == 2.0);

  // Cached values are honored (no evaluation for cached entries).
  EvalCounters c2;
  std::vector<std::optional<double>> cache = {3.0, 2.0, 1.0};
  find_best(f, ys, scalar(5), c2, cache);
  CHECK(c2.n_value == 1);  // only u cost an evaluation
}

TEST_CASE("find_best_3 midpoint and far-point candidates") {
  EvalCounters c;
  // 1-D line through y_{j-1} = 0 and y_j = 1: c_j = 0.5, q_j = -2.
  const FunctionOracle quad(
      1, [](const Vector& x) { return (x[0] + 2) * (x[0] + 2) - 1; },
      [](const Vector& x) { return scalar(2 * (x[0] + 2)); });
  std::vector<Vector> ys = {scalar(0), scalar(1)};
  std::vector<Vector> xs = {scalar(0), scalar(0.5)};
  // v = x_1 so j = 1; q_j = -2 has the deep value -1 and wins.
  BestPoint b = find_best_3(quad, ys, xs, scalar(3), xs[1], c);
  CHECK(b.point[0] == -2.0);
  CHECK(b.value == -1.0);

  // The midpoint candidate c_j = 0.5 wins when the objective dips there.
  const FunctionOracle dip(
      1, [](const Vector& x) { return (x[0] - 0.5) * (x[0] - 0.5); },
      [](const Vector& x) { return scalar(2 * (x[0] - 0.5)); });
  BestPoint mid = find_best_3(dip, ys, xs, scalar(3), xs[1], c);
  CHECK(mid.point[0] == 0.5);
  CHECK(mid.value == 0.0);

  // j = 0 degenerates to {y_0 .. y_t, u}.
  const FunctionOracle lin(
      1, [](const Vector& x) { return x[0]; },
      [](const Vector&) { return scalar(1); });
  BestPoint d = find_best_3(lin, ys, xs, scalar(-5), xs[0], c);
  CHECK(d.point[0] == -5.0);

  // v missing from xs is a contract violation.
  CHECK_THROWS_AS(find_best_3(lin, ys, xs, scalar(0), scalar(0.123), c),
                  std::invalid_argument);
}

TEST_CASE("extended selection adds line candidates only where x beats y") {
  EvalCounters c;
  // f(x) = (x+2)^2 - 1 again; ys = (0, 1), xs = (0, 5). At j = 1 the x value
  // exceeds the y value, so c_1 = 0.5 and q_1 = -2 join the candidate set and
  // q_1 = -2 wins.
  const FunctionOracle quad(
      1, [](const Vector& x) { return (x[0] + 2) * (x[0] + 2) - 1; },
      [](const Vector& x) { return Vector(Vector::Constant(1, 2 * (x[0] + 2))); });
  std::vector<Vector> ys = {scalar(0), scalar(1)};
  std::vector<Vector> xs = {scalar(0), scalar(5)};
  BestPoint with_flag =
      find_best_3_practical(quad, ys, xs, nullptr, c, {}, {});
  CHECK(with_flag.point[0] == 0.0);  // j stops before t: only ys compete
  // Extend the history so j = 1 < t: the far point becomes available.
  ys.push_back(scalar(0.5));
  xs.push_back(scalar(0.5));
  BestPoint ext = find_best_3_practical(quad, ys, xs, nullptr, c, {}, {});
  CHECK(ext.point[0] == -2.0);
  CHECK(ext.value == -1.0);

  // With x values below y values no line candidates appear, and u still
  // competes when given.
  const FunctionOracle lin(
      1, [](const Vector& x) { return x[0]; },
      [](const Vector&) { return Vector(Vector::Constant(1, 1.0)); });
  std::vector<Vector> ys2 = {scalar(3), scalar(2), scalar(1)};
  std::vector<Vector> xs2 = {scalar(3), scalar(1.5), scalar(0.5)};
  const Vector u = scalar(-4);
  BestPoint none = find_best_3_practical(lin, ys2, xs2, &u, c, {}, {});
  CHECK(none.point[0] == -4.0);
}

TEST_CASE("selection never returns a worse point than any candidate") {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const BiweightOracle f(seed % 5);
    EvalCounters c;
    std::vector<Vector> ys;
    const auto t = 2 + rng::keyed_u64(seed, 60, 0) % 4;
    for (std::uint64_t s = 0; s <= t; ++s) {
      Vector y(30);
      for (Eigen::Index i = 0; i < 30; ++i) {
        y[i] = rng::normal01(seed, 61 + s, static_cast<std::uint64_t>(i));
      }
      ys.push_back(std::move(y));
    }
    Vector u(30);
    for (Eigen::Index i = 0; i < 30; ++i) {
      u[i] = rng::normal01(seed, 59, static_cast<std::uint64_t>(i));
    }
    const BestPoint b = find_best(f, ys, u, c);
    EvalCounters c2;
    CHECK(b.value <= eval_value(f, u, c2));
    for (const auto& y : ys) CHECK(b.value <= eval_value(f, y, c2));
  }
}

TEST_CASE("cubic reconstruction is exact on cubics") {
  // h(theta) = theta^3 on nodes (0, -1/8, -1, -27).
  CHECK(cubic_reconstruct(0.0, -0.125, -1.0, -27.0, 0.5) ==
        doctest::Approx(0.125).epsilon(1e-12));
  // Constants reproduce exactly.
  CHECK(cubic_reconstruct(7.0, 7.0, 7.0, 7.0, 0.3) ==
        doctest::Approx(7.0).epsilon(1e-15));
  // h(theta) = theta.
  CHECK(cubic_reconstruct(0.0, -0.5, -1.0, -3.0, 1.0) ==
        doctest::Approx(1.0).epsilon(1e-12));

  double worst = 0;
  for (std::uint64_t s = 0; s < 1000; ++s) {
    double coeff[4];
    for (int i = 0; i < 4; ++i) {
      coeff[i] =
          -10.0 + 20.0 * rng::uniform01(s, 70, static_cast<std::uint64_t>(i));
    }
    auto h = [&](double th) {
      return coeff[0] + th * (coeff[1] + th * (coeff[2] + th * coeff[3]));
    };
    const double th = rng::uniform01(s, 71, 0);
    worst = std::max(
        worst, std::abs(cubic_reconstruct(h(0), h(-0.5), h(-1), h(-3), th) -
                        h(th)));
  }
  CHECK(worst <= 1e-9);
}

TEST_CASE("symmetric pair step achieves the guaranteed decrease on the double well") {
  // Pairs u = c + h d, v = c - h d around the saddle region satisfy the
  // convexity-violation hypothesis with margin alpha by construction; the
  // conclusion is then exact, no slack.
  const DoubleWellOracle dw(3);
  const double l2 = 12.0;
  std::int64_t verified = 0;
  for (std::uint64_t seed = 0; seed < 300; ++seed) {
    Vector dir(3), center(3);
    for (int i = 0; i < 3; ++i) {
      dir[i] = rng::normal01(seed, 80, static_cast<std::uint64_t>(i));
      center[i] =
          0.05 * (2 * rng::uniform01(seed, 81, static_cast<std::uint64_t>(i)) - 1);
    }
    dir.normalize();
    const double alpha = 0.1 + 0.7 * rng::uniform01(seed, 82, 0);
    const double h = (alpha / (4.0 * l2)) *
                     (0.25 + 0.75 * rng::uniform01(seed, 83, 0));
    const Vector u = center + h * dir;
    const Vector v = center - h * dir;
    EvalCounters c;
    const double f_u = eval_value(dw, u, c);
    const double f_v = eval_value(dw, v, c);
    const Vector g_v = eval_gradient(dw, v, c);
    const double lhs = f_u - f_v - dot(g_v, u - v);
    if (!(lhs < -0.5 * alpha * (u - v).squaredNorm())) continue;
    REQUIRE((u - v).norm() <= alpha / (2 * l2));
    const double eta = alpha / l2;
    const NcStepResult z = exploit_nc_pair(dw, u, v, eta, c);
    CHECK(z.f_z <= f_u - alpha * eta * eta / 12.0);
    ++verified;
  }
  CHECK(verified > 200);
}

TEST_CASE("asymmetric pair step achieves the guaranteed decrease") {
  const DoubleWellOracle dw(3);
  const double l3 = 6.0;
  std::int64_t verified = 0;
  for (std::uint64_t seed = 0; seed < 300; ++seed) {
    Vector dir(3), center(3);
    for (int i = 0; i < 3; ++i) {
      dir[i] = rng::normal01(seed, 90, static_cast<std::uint64_t>(i));
      center[i] =
          0.05 * (2 * rng::uniform01(seed, 91, static_cast<std::uint64_t>(i)) - 1);
    }
    dir.normalize();
    const double alpha = 0.1 + 0.7 * rng::uniform01(seed, 92, 0);
    const double eta = std::sqrt(2.0 * alpha / l3);
    const double h = 0.25 * eta * (0.2 + 0.8 * rng::uniform01(seed, 93, 0));
    const Vector u = center + h * dir;
    const Vector v = center - h * dir;
    EvalCounters c;
    const double f_u = eval_value(dw, u, c);
    const double f_v = eval_value(dw, v, c);
    const Vector g_v = eval_gradient(dw, v, c);
    const double lhs = f_u - f_v - dot(g_v, u - v);
    if (!(lhs < -0.5 * alpha * (u - v).squaredNorm())) continue;
    REQUIRE((u - v).norm() <= eta / 2);
    const NcStepResult z = exploit_nc_pair_3(dw, u, v, eta, c);
    const double bound = std::max(f_v - alpha * eta * eta / 4.0,
                                  f_u - alpha * eta * eta / 12.0);
    CHECK(z.f_z <= bound);
    ++verified;
  }
  CHECK(verified > 200);
}
