#include "ncopt/nc_exploit.hpp"

#include <cmath>

namespace ncopt {

namespace {

Vector unit_direction(const Vector& u, const Vector& v, double& distance) {
  distance = (u - v).norm();
  if (!(distance > 0)) {
    throw std::invalid_argument("nc step: u and v must be distinct");
  }
  return (u - v) / distance;
}

}  // namespace

NcStepResult exploit_nc_pair(const Oracle& f, const Vector& u, const Vector& v,
                             double eta, EvalCounters& counters) {
  if (!(eta > 0)) throw std::invalid_argument("exploit_nc_pair: eta must be positive");
  double dist;
  const Vector d = unit_direction(u, v, dist);
  Vector z_plus = u + eta * d;
  Vector z_minus = u - eta * d;
  const double f_plus = eval_value(f, z_plus, counters);
  const double f_minus = eval_value(f, z_minus, counters);
  if (f_minus < f_plus) {
    return {std::move(z_minus), f_minus, NcStepResult::Side::minus};
  }
  return {std::move(z_plus), f_plus, NcStepResult::Side::plus};
}

NcStepResult exploit_nc_pair_3(const Oracle& f, const Vector& u,
                               const Vector& v, double eta,
                               EvalCounters& counters) {
  if (!(eta > 0)) throw std::invalid_argument("exploit_nc_pair_3: eta must be positive");
  double dist;
  const Vector d = unit_direction(u, v, dist);
  const double eta_prime = std::sqrt(eta * (eta + dist)) - dist;
  // eta (eta + s) >= s^2 holds whenever s <= eta/2, so eta' >= 0 there; a
  // negative value means the caller broke the distance precondition.
  if (eta_prime < 0) {
    throw std::invalid_argument("exploit_nc_pair_3: |u - v| too large for eta");
  }
  Vector z_u = u + eta_prime * d;
  Vector z_v = v - eta * d;
  const double f_u_side = eval_value(f, z_u, counters);
  const double f_v_side = eval_value(f, z_v, counters);
  if (f_v_side < f_u_side) {
    return {std::move(z_v), f_v_side, NcStepResult::Side::minus};
  }
  return {std::move(z_u), f_u_side, NcStepResult::Side::plus};
}

namespace {

double value_or_eval(const Oracle& f, const Vector& x,
                     std::span<const std::optional<double>> cache,
                     std::size_t index, EvalCounters& counters) {
  if (index < cache.size() && cache[index]) return *cache[index];
  return eval_value(f, x, counters);
}

struct ArgMin {
  const Vector* point = nullptr;
  double value = std::numeric_limits<double>::infinity();

  void offer(const Vector& p, double v) {
    if (v < value) {  // strict: earlier candidates win ties
      value = v;
      point = &p;
    }
  }
};

}  // namespace

BestPoint find_best(const Oracle& f, std::span<const Vector> ys,
                    const Vector& u, EvalCounters& counters,
                    std::span<const std::optional<double>> f_ys) {
  if (ys.empty()) throw std::invalid_argument("find_best: empty ys");
  ArgMin best;
  best.offer(u, eval_value(f, u, counters));
  for (std::size_t s = 0; s < ys.size(); ++s) {
    best.offer(ys[s], value_or_eval(f, ys[s], f_ys, s, counters));
  }
  return {*best.point, best.value};
}

BestPoint find_best_3(const Oracle& f, std::span<const Vector> ys,
                      std::span<const Vector> xs, const Vector& u,
                      const Vector& v, EvalCounters& counters,
                      std::span<const std::optional<double>> f_ys) {
  if (ys.empty()) throw std::invalid_argument("find_best_3: empty ys");
  std::optional<std::size_t> j;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (xs[i].size() == v.size() && (xs[i].array() == v.array()).all()) {
      j = i;
      break;
    }
  }
  if (!j) {
    throw std::invalid_argument(
        "find_best_3: v is not among the xs sequence (contract violation "
        "upstream)");
  }

  Vector c_j, q_j;
  if (*j > 0) {
    c_j = 0.5 * (ys[*j] + ys[*j - 1]);
    q_j = -2.0 * ys[*j] + 3.0 * ys[*j - 1];
  } else {
    c_j = ys[0];
    q_j = ys[0];
  }

  ArgMin best;
  for (std::size_t s = 0; s < ys.size(); ++s) {
    best.offer(ys[s], value_or_eval(f, ys[s], f_ys, s, counters));
  }
  best.offer(c_j, eval_value(f, c_j, counters));
  best.offer(q_j, eval_value(f, q_j, counters));
  best.offer(u, eval_value(f, u, counters));
  return {*best.point, best.value};
}

BestPoint find_best_3_practical(const Oracle& f, std::span<const Vector> ys,
                                std::span<const Vector> xs, const Vector* u,
                                EvalCounters& counters,
                                std::span<const std::optional<double>> f_ys,
                                std::span<const std::optional<double>> f_xs) {
  if (ys.empty()) throw std::invalid_argument("find_best_3_practical: empty ys");
  ArgMin best;
  std::vector<double> y_values(ys.size());
  for (std::size_t s = 0; s < ys.size(); ++s) {
    y_values[s] = value_or_eval(f, ys[s], f_ys, s, counters);
    best.offer(ys[s], y_values[s]);
  }
  std::vector<Vector> extras;
  extras.reserve(2 * ys.size());
  const std::size_t t = ys.size() - 1;
  for (std::size_t j = 1; j < t && j < xs.size(); ++j) {
    const double f_xj = value_or_eval(f, xs[j], f_xs, j, counters);
    if (f_xj > y_values[j]) {
      extras.push_back(0.5 * (ys[j] + ys[j - 1]));
      extras.push_back(-2.0 * ys[j] + 3.0 * ys[j - 1]);
    }
  }
  for (const Vector& p : extras) {
    best.offer(p, eval_value(f, p, counters));
  }
  if (u != nullptr) {
    best.offer(*u, eval_value(f, *u, counters));
  }
  return {*best.point, best.value};
}

double cubic_reconstruct(double h0, double h_neg_half, double h_neg1,
                         double h_neg3, double theta_query) {
  const double th = theta_query;
  const double th2 = th * th;
  const double th3 = th2 * th;
  // Coefficients of each node value as polynomials in theta; they sum to one
  // and reproduce any cubic exactly.
  const double c0 = 1.0 + (10.0 / 3.0) * th + 3.0 * th2 + (2.0 / 3.0) * th3;
  const double c_half = -((24.0 / 5.0) * th + (32.0 / 5.0) * th2 + (8.0 / 5.0) * th3);
  const double c1 = (3.0 / 2.0) * th + (7.0 / 2.0) * th2 + th3;
  const double c3 = -(th / 30.0 + th2 / 10.0 + th3 / 15.0);
  return c0 * h0 + c_half * h_neg_half + c1 * h_neg1 + c3 * h_neg3;
}

}  // namespace ncopt
