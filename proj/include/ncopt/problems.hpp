#pragma once

#include <cstdint>
#include <string>
#include <utility>

#include <Eigen/Dense>

#include "ncopt/core.hpp"

namespace ncopt {

// ---------------------------------------------------------------------------
// Robust regression with the smooth biweight loss
//
//   f(x) = (1/m) sum_i phi(a_i' x - b_i),   phi(r) = r^2 / (1 + r^2).
//
// Instance data is generated from a seed with the documented stream layout
// (see rng.hpp): stream 0 holds A row-major, stream 1 the ground truth z
// (N(0, 4I)), stream 2 the Gaussian noise nu1, stream 3 the Bernoulli(0.3)
// corruption nu2; then b = A z + 3 nu1 + nu2.
// ---------------------------------------------------------------------------

struct BiweightInstance {
  std::uint64_t seed = 0;
  Eigen::MatrixXd a;  // m x d
  Vector b;           // m
};

namespace biweight_streams {
inline constexpr std::uint64_t matrix = 0;
inline constexpr std::uint64_t ground_truth = 1;
inline constexpr std::uint64_t gaussian_noise = 2;
inline constexpr std::uint64_t corruption = 3;
}  // namespace biweight_streams

BiweightInstance gen_biweight(std::uint64_t seed, Eigen::Index d = 30,
                              Eigen::Index m = 60);

std::pair<double, Vector> biweight_eval(const BiweightInstance& inst,
                                        const Vector& x);

/// JSON serialization of an instance (row-major A, seed, dimensions).
std::string biweight_to_json(const BiweightInstance& inst);
BiweightInstance biweight_from_json(const std::string& text);

class BiweightOracle final : public Oracle {
 public:
  explicit BiweightOracle(BiweightInstance inst) : inst_(std::move(inst)) {}
  explicit BiweightOracle(std::uint64_t seed) : inst_(gen_biweight(seed)) {}

  Eigen::Index dimension() const override { return inst_.a.cols(); }
  double value(const Vector& x) const override;
  Vector gradient(const Vector& x) const override;
  void value_and_gradient(const Vector& x, double& v, Vector& g) const override;
  KnownConstants constants() const override;

  const BiweightInstance& instance() const { return inst_; }

 private:
  BiweightInstance inst_;
};

// ---------------------------------------------------------------------------
// Synthetic functions with exact constants
// ---------------------------------------------------------------------------

/// f(x) = 1/2 sum_i lambda_i x_i^2 with all lambda_i > 0. Exposes
/// l1 = max lambda, strong_convexity = min lambda, l2 = l3 = 0.
class QuadraticOracle final : public Oracle {
 public:
  explicit QuadraticOracle(Vector eigenvalues);

  Eigen::Index dimension() const override { return eigenvalues_.size(); }
  double value(const Vector& x) const override;
  Vector gradient(const Vector& x) const override;
  KnownConstants constants() const override;

  const Vector& eigenvalues() const { return eigenvalues_; }

 private:
  Vector eigenvalues_;
};

/// Separable double well f(x) = sum_i (x_i^4/4 - x_i^2/2) restricted to the
/// box |x_i| <= 2, where the derivative bounds give l1 = 11, l2 = 12, l3 = 6
/// (|3x^2-1| <= 11, |6x| <= 12, f'''' = 6). Evaluation outside the box is a
/// hard error because the constants stop being valid there. Minima sit at
/// +-1 per coordinate, so the lower bound is -d/4.
class DoubleWellOracle final : public Oracle {
 public:
  explicit DoubleWellOracle(Eigen::Index dim) : dim_(dim) {
    if (dim <= 0) throw std::invalid_argument("DoubleWellOracle: dim must be positive");
  }

  Eigen::Index dimension() const override { return dim_; }
  double value(const Vector& x) const override;
  Vector gradient(const Vector& x) const override;
  KnownConstants constants() const override;

  static constexpr double box_half_width = 2.0;

 private:
  void check_box(const Vector& x) const;
  Eigen::Index dim_;
};

}  // namespace ncopt
