#pragma once

#include <string>
#include <string_view>
#include <utility>

#include "ccgp/rng.hpp"

namespace ccgp {

enum class CopulaFamily { clayton, frank, gaussian, gumbel, t3 };

CopulaFamily family_from_string(std::string_view name);
std::string to_string(CopulaFamily family);

/// Clamp bounds applied to copula arguments and near-independence
/// parameters. u arguments are clamped to [u_eps, 1-u_eps]; Clayton theta
/// (resp. |theta| for Frank) at or below theta_eps is evaluated with the
/// analytic independence limit.
inline constexpr double u_eps = 1e-10;
inline constexpr double theta_eps = 1e-8;

/// Family tag + parameter, validated against the family's domain:
/// Clayton theta > 0, Frank theta != 0, Gaussian/T3 theta in (-1,1),
/// Gumbel theta >= 1. Values inside the domain but within theta_eps of
/// the independence point are clamped onto it.
class CopulaParam {
 public:
  CopulaParam(CopulaFamily family, double theta);

  CopulaFamily family() const { return family_; }
  double theta() const { return theta_; }

 private:
  CopulaFamily family_;
  double theta_;
};

/// Mutually consistent calibration triple: unconstrained f, copula-scale
/// theta = inv_link(f), Kendall-scale tau = tau_from_theta(theta).
struct CalibrationValue {
  double f;
  double theta;
  double tau;
};

CalibrationValue calibration_value(CopulaFamily family, double f);

/// log copula density log c(u1,u2;theta). Arguments are clamped to the
/// epsilon interval; returns -inf rather than NaN for states the density
/// cannot support.
double log_density(const CopulaParam& p, double u1, double u2);

/// Copula CDF C(u1,u2;theta).
double cdf(const CopulaParam& p, double u1, double u2);

/// Conditional CDF h(u1|u2) = dC/du2 = P(U1 <= u1 | U2 = u2).
double h_function(const CopulaParam& p, double u1, double u2);

/// Inverse of h in its first argument: u1 with h(u1|u2) = w. Closed form
/// for Clayton/Frank, bisection to 1e-10 otherwise.
double h_inverse(const CopulaParam& p, double w, double u2);

/// Inverse link g^{-1} mapping the unconstrained calibration scale to the
/// copula parameter (Table-driven per family).
CopulaParam inv_link(CopulaFamily family, double f);

/// Link g: theta -> f, inverse of inv_link.
double link(CopulaFamily family, double theta);

double tau_from_theta(const CopulaParam& p);
CopulaParam theta_from_tau(CopulaFamily family, double tau);

/// One pair (u1,u2) ~ C(.,.;theta) by conditional inversion.
std::pair<double, double> sample_pair(const CopulaParam& p, Rng& rng);

/// E(U1 | U2 = u2) = int_0^1 z c(z,u2;theta) dz by 64-node Gauss-Legendre
/// on the clamped interval.
double cond_expectation_u(const CopulaParam& p, double u2);

/// E(Y1 | Y2 = y2, X = x) with Gaussian margins:
/// f1 + sigma1 * int_0^1 qnorm(z) c(z, pnorm((y2-f2)/sigma2); theta) dz.
double cond_expectation_y(double f1, double f2, double sigma1, double sigma2,
                          double y2, const CopulaParam& p);

/// First Debye function D1(x) = (1/x) int_0^x t/(e^t - 1) dt.
double debye1(double x);

}  // namespace ccgp
