#include "ncopt/problems.hpp"

#include <cmath>

#include <json.hpp>

#include "ncopt/rng.hpp"

namespace ncopt {

BiweightInstance gen_biweight(std::uint64_t seed, Eigen::Index d,
                              Eigen::Index m) {
  if (d <= 0 || m <= 0) {
    throw std::invalid_argument("gen_biweight: dimensions must be positive");
  }
  namespace bs = biweight_streams;
  BiweightInstance inst;
  inst.seed = seed;
  inst.a.resize(m, d);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) {
      inst.a(i, j) = rng::normal01(seed, bs::matrix,
                                   static_cast<std::uint64_t>(i * d + j));
    }
  }
  Vector z(d);
  for (Eigen::Index j = 0; j < d; ++j) {
    // N(0, 4I): standard normal scaled by 2
    z[j] = 2.0 * rng::normal01(seed, bs::ground_truth,
                               static_cast<std::uint64_t>(j));
  }
  Vector nu1(m);
  Vector nu2(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    nu1[i] = rng::normal01(seed, bs::gaussian_noise,
                           static_cast<std::uint64_t>(i));
    nu2[i] = rng::bernoulli(seed, bs::corruption,
                            static_cast<std::uint64_t>(i), 0.3)
                 ? 1.0
                 : 0.0;
  }
  // b = A z + 3 nu1 + nu2, with the row products pinned to an ascending
  // fused-multiply-add chain so the instance is bit-reproducible in any
  // implementation of the recipe (BLAS accumulation orders are not).
  inst.b.resize(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    double acc = 0.0;
    for (Eigen::Index j = 0; j < d; ++j) {
      acc = std::fma(inst.a(i, j), z[j], acc);
    }
    inst.b[i] = acc + 3.0 * nu1[i] + nu2[i];
  }
  return inst;
}

std::pair<double, Vector> biweight_eval(const BiweightInstance& inst,
                                        const Vector& x) {
  if (x.size() != inst.a.cols()) {
    throw std::invalid_argument("biweight_eval: dimension mismatch");
  }
  const Eigen::Index m = inst.a.rows();
  const Vector r = inst.a * x - inst.b;
  double value = 0;
  Vector weights(m);  // phi'(r_i) = 2 r / (1 + r^2)^2
  for (Eigen::Index i = 0; i < m; ++i) {
    const double q = 1.0 + r[i] * r[i];
    value += r[i] * r[i] / q;
    weights[i] = 2.0 * r[i] / (q * q);
  }
  const double inv_m = 1.0 / static_cast<double>(m);
  return {value * inv_m, inv_m * (inst.a.transpose() * weights)};
}

std::string biweight_to_json(const BiweightInstance& inst) {
  nlohmann::ordered_json j;
  j["kind"] = "biweight";
  j["seed"] = inst.seed;
  j["m"] = inst.a.rows();
  j["d"] = inst.a.cols();
  std::vector<double> a_flat;
  a_flat.reserve(static_cast<std::size_t>(inst.a.size()));
  for (Eigen::Index i = 0; i < inst.a.rows(); ++i) {
    for (Eigen::Index k = 0; k < inst.a.cols(); ++k) a_flat.push_back(inst.a(i, k));
  }
  j["a_row_major"] = a_flat;
  j["b"] = std::vector<double>(inst.b.data(), inst.b.data() + inst.b.size());
  return j.dump();
}

BiweightInstance biweight_from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  if (j.at("kind").get<std::string>() != "biweight") {
    throw std::invalid_argument("biweight_from_json: wrong kind");
  }
  BiweightInstance inst;
  inst.seed = j.at("seed").get<std::uint64_t>();
  const auto m = j.at("m").get<Eigen::Index>();
  const auto d = j.at("d").get<Eigen::Index>();
  const auto a_flat = j.at("a_row_major").get<std::vector<double>>();
  const auto b = j.at("b").get<std::vector<double>>();
  if (a_flat.size() != static_cast<std::size_t>(m * d) ||
      b.size() != static_cast<std::size_t>(m)) {
    throw std::invalid_argument("biweight_from_json: inconsistent sizes");
  }
  inst.a.resize(m, d);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index k = 0; k < d; ++k) {
      inst.a(i, k) = a_flat[static_cast<std::size_t>(i * d + k)];
    }
  }
  inst.b = Eigen::Map<const Vector>(b.data(), m);
  return inst;
}

double BiweightOracle::value(const Vector& x) const {
  const Eigen::Index m = inst_.a.rows();
  const Vector r = inst_.a * x - inst_.b;
  double value = 0;
  for (Eigen::Index i = 0; i < m; ++i) {
    value += r[i] * r[i] / (1.0 + r[i] * r[i]);
  }
  return value / static_cast<double>(m);
}

Vector BiweightOracle::gradient(const Vector& x) const {
  return biweight_eval(inst_, x).second;
}

void BiweightOracle::value_and_gradient(const Vector& x, double& v,
                                        Vector& g) const {
  auto [value, grad] = biweight_eval(inst_, x);
  v = value;
  g = std::move(grad);
}

KnownConstants BiweightOracle::constants() const {
  KnownConstants c;
  c.f_lower_bound = 0.0;  // phi >= 0
  return c;
}

QuadraticOracle::QuadraticOracle(Vector eigenvalues)
    : eigenvalues_(std::move(eigenvalues)) {
  if (eigenvalues_.size() == 0 || (eigenvalues_.array() <= 0).any()) {
    throw std::invalid_argument("QuadraticOracle: eigenvalues must be positive");
  }
}

double QuadraticOracle::value(const Vector& x) const {
  return 0.5 * (eigenvalues_.array() * x.array().square()).sum();
}

Vector QuadraticOracle::gradient(const Vector& x) const {
  return eigenvalues_.cwiseProduct(x);
}

KnownConstants QuadraticOracle::constants() const {
  KnownConstants c;
  c.l1 = eigenvalues_.maxCoeff();
  c.strong_convexity = eigenvalues_.minCoeff();
  c.l2 = 0.0;
  c.l3 = 0.0;
  c.f_lower_bound = 0.0;
  return c;
}

void DoubleWellOracle::check_box(const Vector& x) const {
  if (x.lpNorm<Eigen::Infinity>() > box_half_width) {
    throw std::domain_error("double well evaluated outside |x|_inf <= 2 at " +
                            format_point(x) +
                            "; smoothness constants are invalid there");
  }
}

double DoubleWellOracle::value(const Vector& x) const {
  check_box(x);
  return (0.25 * x.array().pow(4) - 0.5 * x.array().square()).sum();
}

Vector DoubleWellOracle::gradient(const Vector& x) const {
  check_box(x);
  return x.array().cube() - x.array();
}

KnownConstants DoubleWellOracle::constants() const {
  KnownConstants c;
  c.l1 = 11.0;
  c.l2 = 12.0;
  c.l3 = 6.0;
  c.f_lower_bound = -0.25 * static_cast<double>(dim_);
  return c;
}

}  // namespace ncopt
