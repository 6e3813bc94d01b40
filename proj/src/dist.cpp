#include "ccgp/dist.hpp"

#include <stdexcept>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>
#include <boost/math/special_functions/gamma.hpp>

namespace ccgp {

double norm_quantile(double p) {
  if (!(p > 0.0 && p < 1.0))
    throw std::domain_error("norm_quantile: p must be in (0,1)");
  static const boost::math::normal_distribution<double> d(0.0, 1.0);
  return boost::math::quantile(d, p);
}

double t_logpdf(double x, double nu) {
  const boost::math::students_t_distribution<double> d(nu);
  return std::log(boost::math::pdf(d, x));
}

double t_cdf(double x, double nu) {
  const boost::math::students_t_distribution<double> d(nu);
  return boost::math::cdf(d, x);
}

double t_quantile(double p, double nu) {
  if (!(p > 0.0 && p < 1.0))
    throw std::domain_error("t_quantile: p must be in (0,1)");
  const boost::math::students_t_distribution<double> d(nu);
  return boost::math::quantile(d, p);
}

double invgamma_logpdf(double x, double shape, double rate) {
  if (x <= 0.0) throw std::domain_error("invgamma_logpdf: x must be > 0");
  return shape * std::log(rate) - boost::math::lgamma(shape) -
         (shape + 1.0) * std::log(x) - rate / x;
}

}  // namespace ccgp
