#pragma once

#include <cmath>
#include <numbers>

namespace ccgp {

inline constexpr double log_2pi = 1.8378770664093454836;

inline double norm_logpdf(double z) { return -0.5 * (log_2pi + z * z); }

inline double norm_pdf(double z) { return std::exp(norm_logpdf(z)); }

inline double norm_cdf(double z) {
  return 0.5 * std::erfc(-z / std::numbers::sqrt2);
}

double norm_quantile(double p);

/// Student-t with nu degrees of freedom.
double t_logpdf(double x, double nu);
double t_cdf(double x, double nu);
double t_quantile(double p, double nu);

/// log density of InverseGamma(shape, rate): rate^shape/Gamma(shape) *
/// x^{-shape-1} exp(-rate/x).
double invgamma_logpdf(double x, double shape, double rate);

/// log density of N(mean, sd^2) at x.
inline double normal_logpdf(double x, double mean, double sd) {
  const double z = (x - mean) / sd;
  return -std::log(sd) + norm_logpdf(z);
}

}  // namespace ccgp
