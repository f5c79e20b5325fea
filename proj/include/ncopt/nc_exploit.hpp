#pragma once

#include <optional>
#include <span>

#include "ncopt/core.hpp"

namespace ncopt {

// Turning a certified strong-convexity violation between u and v into
// function-value decrease: step from u (or v) along +-(u - v)/|u - v| by a
// smoothness-calibrated amount and keep the lower of the two candidates.

struct NcStepResult {
  Vector z;
  double f_z = 0;
  enum class Side { plus, minus } chosen_side = Side::plus;
};

/// Symmetric step pair: candidates u + eta*d and u - eta*d with
/// d = (u - v)/|u - v|; exactly two function evaluations, ties go to the
/// plus side. Under a Hessian-Lipschitz bound rho, a pair violating
/// convexity with margin alpha and |u - v| <= alpha/(2 rho) guarantees
/// f(z) <= f(u) - alpha eta^2 / 12 for any eta <= alpha/rho.
NcStepResult exploit_nc_pair(const Oracle& f, const Vector& u, const Vector& v,
                             double eta, EvalCounters& counters);

/// Asymmetric step pair for third-order smoothness: candidates
/// u + eta'*d and v - eta*d where eta' = sqrt(eta (eta + |u - v|)) - |u - v|.
/// Two function evaluations; ties go to the u-side candidate. With a
/// third-derivative Lipschitz bound L3, eta <= sqrt(2 alpha / L3) and
/// |u - v| <= eta/2 give f(z) <= max{f(v) - alpha eta^2/4, f(u) - alpha eta^2/12}.
NcStepResult exploit_nc_pair_3(const Oracle& f, const Vector& u,
                               const Vector& v, double eta,
                               EvalCounters& counters);

struct BestPoint {
  Vector point;
  double value = 0;
};

/// Argmin of f over the fixed candidate order (u, y_0, ..., y_t); ties go to
/// the earliest candidate. Entries of f_ys, where provided, are trusted
/// cached values and cost no evaluations.
BestPoint find_best(const Oracle& f, std::span<const Vector> ys,
                    const Vector& u, EvalCounters& counters,
                    std::span<const std::optional<double>> f_ys = {});

/// Argmin of f over (y_0, ..., y_t, c_j, q_j, u) where j locates v among the
/// xs sequence, c_j = (y_j + y_{j-1})/2 and q_j = -2 y_j + 3 y_{j-1} (the
/// midpoint and the theta = -3 point of the line through y_{j-1} and y_j);
/// j = 0 degenerates to c_j = q_j = y_0. Only c_j, q_j and u may cost fresh
/// evaluations. v not being found among xs is a contract violation upstream.
BestPoint find_best_3(const Oracle& f, std::span<const Vector> ys,
                      std::span<const Vector> xs, const Vector& u,
                      const Vector& v, EvalCounters& counters,
                      std::span<const std::optional<double>> f_ys = {});

/// Benchmark-variant selection: candidates are every y_s plus c_j, q_j for
/// every j in [1, t-1] with f(x_j) > f(y_j), plus u when present. f_xs and
/// f_ys supply the comparison values; missing entries are evaluated.
BestPoint find_best_3_practical(const Oracle& f, std::span<const Vector> ys,
                                std::span<const Vector> xs, const Vector* u,
                                EvalCounters& counters,
                                std::span<const std::optional<double>> f_ys,
                                std::span<const std::optional<double>> f_xs);

/// Value at theta_query of the unique cubic through the four nodes
/// (0, h0), (-1/2, h_neg_half), (-1, h_neg1), (-3, h_neg3), via the explicit
/// coefficient combination in theta. Pure interpolation helper; it backs the
/// test oracle for the selection guarantees above.
double cubic_reconstruct(double h0, double h_neg_half, double h_neg1,
                         double h_neg3, double theta_query);

}  // namespace ncopt
