#include "ccgp/copula.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "ccgp/dist.hpp"
#include "ccgp/quadrature.hpp"

namespace ccgp {

namespace {

constexpr double neg_inf = -std::numeric_limits<double>::infinity();

double clamp_u(double u) { return std::clamp(u, u_eps, 1.0 - u_eps); }

double clamp01(double x) { return std::clamp(x, 0.0, 1.0); }

// log(e^a + e^b)
double lse2(double a, double b) {
  const double m = std::max(a, b);
  return m + std::log(std::exp(a - m) + std::exp(b - m));
}

bool is_independence(const CopulaParam& p) {
  switch (p.family()) {
    case CopulaFamily::clayton:
      return p.theta() <= theta_eps;
    case CopulaFamily::frank:
      return std::abs(p.theta()) <= theta_eps;
    case CopulaFamily::gaussian:
    case CopulaFamily::t3:
      return p.theta() == 0.0;
    case CopulaFamily::gumbel:
      return p.theta() == 1.0;
  }
  return false;
}

// ---- Clayton ------------------------------------------------------------
// S = u^-t + v^-t - 1 evaluated in log space; exponents -t*log(u) can be
// large for big theta.
double clayton_log_s(double t, double u, double v) {
  const double a = -t * std::log(u), b = -t * std::log(v);
  const double m = std::max(a, b);
  return m + std::log(std::exp(a - m) + std::exp(b - m) - std::exp(-m));
}

double clayton_logpdf(double t, double u, double v) {
  const double ls = clayton_log_s(t, u, v);
  return std::log1p(t) - (t + 1.0) * (std::log(u) + std::log(v)) -
         (2.0 + 1.0 / t) * ls;
}

double clayton_cdf(double t, double u, double v) {
  return std::exp(-clayton_log_s(t, u, v) / t);
}

double clayton_h(double t, double u, double v) {
  const double lh =
      -(t + 1.0) * std::log(v) - (1.0 + 1.0 / t) * clayton_log_s(t, u, v);
  return clamp01(std::exp(lh));
}

double clayton_hinv(double t, double w, double v) {
  // u = [1 + v^-t (w^{-t/(1+t)} - 1)]^{-1/t}
  const double logt = std::log(std::expm1(-t / (1.0 + t) * std::log(w)));
  const double arg = -t * std::log(v) + logt;
  double log1p_term;
  if (arg > 700.0)
    log1p_term = arg;
  else
    log1p_term = std::log1p(std::exp(arg));
  return clamp_u(std::exp(-log1p_term / t));
}

// ---- Frank --------------------------------------------------------------
// Positive-theta forms; theta < 0 handled by the 90-degree rotation
// c_{-t}(u,v) = c_t(1-u, v).
double frank_log_denom(double t, double u, double v) {
  // D = e^{-tu} + e^{-tv} - e^{-t(u+v)} - e^{-t},  log D, with u <= v.
  if (u > v) std::swap(u, v);
  const double inner = std::exp(-t * (v - u)) - std::exp(-t * v) -
                       std::exp(-t * (1.0 - u));
  if (inner <= -1.0) return neg_inf;
  return -t * u + std::log1p(inner);
}

double frank_logpdf(double t, double u, double v) {
  const double ld = frank_log_denom(t, u, v);
  if (!std::isfinite(ld)) return neg_inf;
  return std::log(t) + std::log(-std::expm1(-t)) - t * (u + v) - 2.0 * ld;
}

double frank_cdf(double t, double u, double v) {
  const double r = std::expm1(-t * u) * std::expm1(-t * v) / std::expm1(-t);
  return clamp01(-std::log1p(r) / t);
}

double frank_h(double t, double u, double v) {
  // h = e^{-tv} (1 - e^{-tu}) / D
  const double ld = frank_log_denom(t, u, v);
  if (!std::isfinite(ld)) return u;  // degenerate; fall back to independence
  const double lh = -t * v + std::log(-std::expm1(-t * u)) - ld;
  return clamp01(std::exp(lh));
}

double frank_hinv(double t, double w, double v) {
  // log(1+a) = lse(-tv + log(1-w), -t + log w) - lse(-tv + log(1-w), log w)
  const double l1mw = std::log1p(-w), lw = std::log(w);
  const double num = lse2(-t * v + l1mw, -t + lw);
  const double den = lse2(-t * v + l1mw, lw);
  return clamp_u(-(num - den) / t);
}

// ---- Gaussian -----------------------------------------------------------
double gaussian_logpdf(double rho, double u, double v) {
  const double s = 1.0 - rho * rho;
  if (s <= 0.0) return neg_inf;
  const double z1 = norm_quantile(u), z2 = norm_quantile(v);
  return -0.5 * std::log(s) -
         (rho * rho * (z1 * z1 + z2 * z2) - 2.0 * rho * z1 * z2) / (2.0 * s);
}

double gaussian_h(double rho, double u, double v) {
  const double s = 1.0 - rho * rho;
  if (s <= 0.0) return rho > 0 ? (u >= v ? 1.0 : 0.0) : (u >= 1.0 - v);
  const double z1 = norm_quantile(u), z2 = norm_quantile(v);
  return norm_cdf((z1 - rho * z2) / std::sqrt(s));
}

double gaussian_cdf(double rho, double u, double v) {
  // C(u,v) = uv + int_0^rho phi2(z1,z2;r) dr
  const double z1 = norm_quantile(u), z2 = norm_quantile(v);
  auto phi2 = [&](double r) {
    const double s = 1.0 - r * r;
    return std::exp(-(z1 * z1 - 2.0 * r * z1 * z2 + z2 * z2) / (2.0 * s)) /
           (2.0 * std::numbers::pi * std::sqrt(s));
  };
  return clamp01(u * v + integrate_adaptive(phi2, 0.0, rho, 1e-12, 1e-14));
}

// ---- Gumbel -------------------------------------------------------------
// x = -log u, y = -log v, S = x^t + y^t, A = S^{1/t}.
double gumbel_log_s(double t, double x, double y) {
  const double lx = std::log(x), ly = std::log(y);
  const double m = std::max(lx, ly), n = std::min(lx, ly);
  return t * m + std::log1p(std::exp(t * (n - m)));
}

double gumbel_logpdf(double t, double u, double v) {
  const double x = -std::log(u), y = -std::log(v);
  const double ls = gumbel_log_s(t, x, y);
  const double a = std::exp(ls / t);
  return -a + (t - 1.0) * (std::log(x) + std::log(y)) - std::log(u) -
         std::log(v) + (2.0 / t - 2.0) * ls + std::log1p((t - 1.0) / a);
}

double gumbel_cdf(double t, double u, double v) {
  const double x = -std::log(u), y = -std::log(v);
  return std::exp(-std::exp(gumbel_log_s(t, x, y) / t));
}

double gumbel_h(double t, double u, double v) {
  const double x = -std::log(u), y = -std::log(v);
  const double ls = gumbel_log_s(t, x, y);
  const double a = std::exp(ls / t);
  const double lh =
      -a + (1.0 / t - 1.0) * ls + (t - 1.0) * std::log(y) - std::log(v);
  return clamp01(std::exp(lh));
}

// ---- T3 (bivariate Student t, nu = 3) -----------------------------------
constexpr double t3_nu = 3.0;

double t3_logpdf(double rho, double u, double v) {
  const double s = 1.0 - rho * rho;
  if (s <= 0.0) return neg_inf;
  const double x = t_quantile(u, t3_nu), y = t_quantile(v, t3_nu);
  const double q = (x * x - 2.0 * rho * x * y + y * y) / s;
  const double log_joint =
      -std::log(2.0 * std::numbers::pi) - 0.5 * std::log(s) -
      0.5 * (t3_nu + 2.0) * std::log1p(q / t3_nu);
  return log_joint - t_logpdf(x, t3_nu) - t_logpdf(y, t3_nu);
}

double t3_h(double rho, double u, double v) {
  const double s = 1.0 - rho * rho;
  const double x = t_quantile(u, t3_nu), y = t_quantile(v, t3_nu);
  const double scale = std::sqrt((t3_nu + y * y) * s / (t3_nu + 1.0));
  return t_cdf((x - rho * y) / scale, t3_nu + 1.0);
}

double t3_cdf(double rho, double u, double v) {
  // C(u,v) = int_0^v h(u|t) dt; the integrand is smooth on (0,1).
  auto f = [&](double t) { return t3_h(rho, u, t); };
  return clamp01(integrate_adaptive(f, u_eps, v, 1e-10, 1e-13));
}

// Monotone bisection for families without a closed-form h-inverse.
template <typename H>
double hinv_bisect(const H& h, double w) {
  double lo = u_eps, hi = 1.0 - u_eps;
  if (h(lo) >= w) return lo;
  if (h(hi) <= w) return hi;
  for (int it = 0; it < 100 && hi - lo > 1e-10; ++it) {
    const double mid = 0.5 * (lo + hi);
    (h(mid) < w ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

CopulaFamily family_from_string(std::string_view name) {
  if (name == "clayton") return CopulaFamily::clayton;
  if (name == "frank") return CopulaFamily::frank;
  if (name == "gaussian") return CopulaFamily::gaussian;
  if (name == "gumbel") return CopulaFamily::gumbel;
  if (name == "t3") return CopulaFamily::t3;
  throw std::invalid_argument("unknown copula family: " + std::string(name));
}

std::string to_string(CopulaFamily family) {
  switch (family) {
    case CopulaFamily::clayton:
      return "clayton";
    case CopulaFamily::frank:
      return "frank";
    case CopulaFamily::gaussian:
      return "gaussian";
    case CopulaFamily::gumbel:
      return "gumbel";
    case CopulaFamily::t3:
      return "t3";
  }
  return "?";
}

CopulaParam::CopulaParam(CopulaFamily family, double theta)
    : family_(family), theta_(theta) {
  if (!std::isfinite(theta))
    throw std::domain_error("CopulaParam: theta must be finite");
  switch (family) {
    case CopulaFamily::clayton:
      if (theta < 0.0)
        throw std::domain_error("CopulaParam: Clayton requires theta >= 0");
      theta_ = std::max(theta, theta_eps);
      break;
    case CopulaFamily::frank:
      if (std::abs(theta) < theta_eps)
        theta_ = theta < 0.0 ? -theta_eps : theta_eps;
      break;
    case CopulaFamily::gaussian:
    case CopulaFamily::t3:
      if (!(theta > -1.0 && theta < 1.0))
        throw std::domain_error(
            "CopulaParam: Gaussian/T3 require theta in (-1,1)");
      break;
    case CopulaFamily::gumbel:
      if (theta < 1.0)
        throw std::domain_error("CopulaParam: Gumbel requires theta >= 1");
      break;
  }
}

double log_density(const CopulaParam& p, double u1, double u2) {
  const double u = clamp_u(u1), v = clamp_u(u2);
  if (is_independence(p)) return 0.0;
  const double t = p.theta();
  double r;
  switch (p.family()) {
    case CopulaFamily::clayton:
      r = clayton_logpdf(t, u, v);
      break;
    case CopulaFamily::frank:
      r = t > 0.0 ? frank_logpdf(t, u, v) : frank_logpdf(-t, 1.0 - u, v);
      break;
    case CopulaFamily::gaussian:
      r = gaussian_logpdf(t, u, v);
      break;
    case CopulaFamily::gumbel:
      r = gumbel_logpdf(t, u, v);
      break;
    case CopulaFamily::t3:
      r = t3_logpdf(t, u, v);
      break;
    default:
      r = neg_inf;
  }
  return std::isnan(r) ? neg_inf : r;
}

double cdf(const CopulaParam& p, double u1, double u2) {
  if (u1 <= 0.0 || u2 <= 0.0) return 0.0;
  if (u1 >= 1.0 && u2 >= 1.0) return 1.0;
  if (u1 >= 1.0) return u2;
  if (u2 >= 1.0) return u1;
  const double u = clamp_u(u1), v = clamp_u(u2);
  if (is_independence(p)) return u * v;
  const double t = p.theta();
  switch (p.family()) {
    case CopulaFamily::clayton:
      return clayton_cdf(t, u, v);
    case CopulaFamily::frank:
      return t > 0.0 ? frank_cdf(t, u, v) : v - frank_cdf(-t, 1.0 - u, v);
    case CopulaFamily::gaussian:
      return gaussian_cdf(t, u, v);
    case CopulaFamily::gumbel:
      return gumbel_cdf(t, u, v);
    case CopulaFamily::t3:
      return t3_cdf(t, u, v);
  }
  return u * v;
}

double h_function(const CopulaParam& p, double u1, double u2) {
  if (u1 <= 0.0) return 0.0;
  if (u1 >= 1.0) return 1.0;
  const double u = clamp_u(u1), v = clamp_u(u2);
  if (is_independence(p)) return u;
  const double t = p.theta();
  switch (p.family()) {
    case CopulaFamily::clayton:
      return clayton_h(t, u, v);
    case CopulaFamily::frank:
      return t > 0.0 ? frank_h(t, u, v) : 1.0 - frank_h(-t, 1.0 - u, v);
    case CopulaFamily::gaussian:
      return gaussian_h(t, u, v);
    case CopulaFamily::gumbel:
      return gumbel_h(t, u, v);
    case CopulaFamily::t3:
      return t3_h(t, u, v);
  }
  return u;
}

double h_inverse(const CopulaParam& p, double w, double u2) {
  const double wv = clamp_u(w), v = clamp_u(u2);
  if (is_independence(p)) return wv;
  const double t = p.theta();
  switch (p.family()) {
    case CopulaFamily::clayton:
      return clayton_hinv(t, wv, v);
    case CopulaFamily::frank:
      return t > 0.0 ? frank_hinv(t, wv, v)
                     : 1.0 - frank_hinv(-t, 1.0 - wv, v);
    default:
      return hinv_bisect([&](double u) { return h_function(p, u, v); }, wv);
  }
}

CopulaParam inv_link(CopulaFamily family, double f) {
  if (!std::isfinite(f))
    throw std::domain_error("inv_link: f must be finite");
  switch (family) {
    case CopulaFamily::clayton:
      return {family, std::max(std::expm1(f), theta_eps)};
    case CopulaFamily::frank:
      return {family, f};
    case CopulaFamily::gaussian:
    case CopulaFamily::t3:
      return {family, std::tanh(0.5 * f)};
    case CopulaFamily::gumbel:
      return {family, std::exp(f) + 1.0};
  }
  throw std::logic_error("inv_link: unreachable");
}

double link(CopulaFamily family, double theta) {
  switch (family) {
    case CopulaFamily::clayton:
      return std::log1p(theta);
    case CopulaFamily::frank:
      return theta;
    case CopulaFamily::gaussian:
    case CopulaFamily::t3:
      return 2.0 * std::atanh(theta);
    case CopulaFamily::gumbel:
      return std::log(theta - 1.0);
  }
  throw std::logic_error("link: unreachable");
}

CalibrationValue calibration_value(CopulaFamily family, double f) {
  const CopulaParam p = inv_link(family, f);
  return {f, p.theta(), tau_from_theta(p)};
}

double debye1(double x) {
  if (x == 0.0) return 1.0;
  auto f = [](double t) {
    if (std::abs(t) < 1e-8) return 1.0 - 0.5 * t;  // t/expm1(t) series
    return t / std::expm1(t);
  };
  return integrate_adaptive(f, 0.0, x, 1e-12, 1e-15) / x;
}

double tau_from_theta(const CopulaParam& p) {
  const double t = p.theta();
  switch (p.family()) {
    case CopulaFamily::clayton:
      return t <= theta_eps ? 0.0 : t / (t + 2.0);
    case CopulaFamily::frank:
      if (std::abs(t) <= theta_eps) return 0.0;
      return 1.0 - 4.0 / t * (1.0 - debye1(t));
    case CopulaFamily::gaussian:
    case CopulaFamily::t3:
      return 2.0 / std::numbers::pi * std::asin(t);
    case CopulaFamily::gumbel:
      return 1.0 - 1.0 / t;
  }
  return 0.0;
}

CopulaParam theta_from_tau(CopulaFamily family, double tau) {
  if (!(tau > -1.0 && tau < 1.0))
    throw std::domain_error("theta_from_tau: tau must be in (-1,1)");
  switch (family) {
    case CopulaFamily::clayton: {
      if (tau < 0.0)
        throw std::domain_error("theta_from_tau: Clayton requires tau >= 0");
      return {family, 2.0 * tau / (1.0 - tau)};
    }
    case CopulaFamily::gaussian:
    case CopulaFamily::t3:
      return {family, std::sin(0.5 * std::numbers::pi * tau)};
    case CopulaFamily::gumbel: {
      if (tau < 0.0)
        throw std::domain_error("theta_from_tau: Gumbel requires tau >= 0");
      return {family, 1.0 / (1.0 - tau)};
    }
    case CopulaFamily::frank: {
      if (std::abs(tau) < 1e-12) return {family, theta_eps};
      // tau(theta) is increasing and odd; bracket on |theta| then bisect
      // to |tau error| < 1e-10.
      const double sign = tau > 0.0 ? 1.0 : -1.0;
      const double atau = std::abs(tau);
      auto tau_of = [&](double th) {
        return tau_from_theta(CopulaParam(family, th));
      };
      double lo = 1e-8, hi = 1.0;
      while (tau_of(hi) < atau) {
        lo = hi;
        hi *= 2.0;
        if (hi > 1e6)
          throw std::domain_error("theta_from_tau: Frank tau out of range");
      }
      for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double tm = tau_of(mid);
        if (std::abs(tm - atau) < 1e-11) return {family, sign * mid};
        (tm < atau ? lo : hi) = mid;
      }
      return {family, sign * 0.5 * (lo + hi)};
    }
  }
  throw std::logic_error("theta_from_tau: unreachable");
}

std::pair<double, double> sample_pair(const CopulaParam& p, Rng& rng) {
  const double u2 = runif(rng);
  const double w = runif(rng);
  return {h_inverse(p, w, u2), u2};
}

double cond_expectation_u(const CopulaParam& p, double u2) {
  if (is_independence(p)) return 0.5;
  const double v = clamp_u(u2);
  auto f = [&](double z) { return z * std::exp(log_density(p, z, v)); };
  return integrate_gl(f, u_eps, 1.0 - u_eps, 64);
}

double cond_expectation_y(double f1, double f2, double sigma1, double sigma2,
                          double y2, const CopulaParam& p) {
  if (sigma1 <= 0.0 || sigma2 <= 0.0)
    throw std::domain_error("cond_expectation_y: sigmas must be positive");
  if (is_independence(p)) return f1;
  const double v = clamp_u(norm_cdf((y2 - f2) / sigma2));
  auto f = [&](double z) {
    return norm_quantile(z) * std::exp(log_density(p, z, v));
  };
  return f1 + sigma1 * integrate_gl(f, u_eps, 1.0 - u_eps, 64);
}

}  // namespace ccgp
