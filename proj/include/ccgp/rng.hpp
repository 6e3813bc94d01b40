#pragma once

#include <cstdint>
#include <random>

#include <Eigen/Core>

namespace ccgp {

using Rng = std::mt19937_64;

/// SplitMix64 mixing step; used to derive independent stream seeds
/// from a master seed without correlated low bits.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seed for sub-stream `stream` of a master seed.
inline std::uint64_t split_seed(std::uint64_t master, std::uint64_t stream) {
  return splitmix64(master ^ splitmix64(stream + 0x632be59bd9b4e019ULL));
}

inline double runif(Rng& rng) {
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

inline double runif(Rng& rng, double a, double b) {
  return std::uniform_real_distribution<double>(a, b)(rng);
}

inline double rnorm(Rng& rng) {
  return std::normal_distribution<double>(0.0, 1.0)(rng);
}

inline Eigen::VectorXd rnorm_vec(Rng& rng, Eigen::Index n) {
  Eigen::VectorXd z(n);
  std::normal_distribution<double> d(0.0, 1.0);
  for (Eigen::Index i = 0; i < n; ++i) z[i] = d(rng);
  return z;
}

/// Draw from InverseGamma(shape, rate), i.e. 1/Gamma(shape, rate).
inline double rinvgamma(Rng& rng, double shape, double rate) {
  std::gamma_distribution<double> g(shape, 1.0 / rate);
  double x = g(rng);
  while (x <= 0.0) x = g(rng);
  return 1.0 / x;
}

/// Uniform draw on the unit sphere S^{q-1}.
inline Eigen::VectorXd runif_sphere(Rng& rng, Eigen::Index q) {
  Eigen::VectorXd v = rnorm_vec(rng, q);
  double n = v.norm();
  while (n < 1e-12) {
    v = rnorm_vec(rng, q);
    n = v.norm();
  }
  return v / n;
}

}  // namespace ccgp
