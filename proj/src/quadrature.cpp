#include "ccgp/quadrature.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <stdexcept>

namespace ccgp {

GaussLegendre::GaussLegendre(int n) {
  if (n < 1) throw std::invalid_argument("GaussLegendre: order must be >= 1");
  nodes.resize(n);
  weights.resize(n);
  // Newton iteration on Legendre polynomials, symmetric roots.
  const int m = (n + 1) / 2;
  for (int i = 0; i < m; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double pp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = 0.0;
      for (int j = 0; j < n; ++j) {
        double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * j + 1.0) * x * p1 - j * p2) / (j + 1.0);
      }
      pp = n * (x * p0 - p1) / (x * x - 1.0);
      double dx = p0 / pp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    nodes[i] = -x;
    nodes[n - 1 - i] = x;
    weights[i] = 2.0 / ((1.0 - x * x) * pp * pp);
    weights[n - 1 - i] = weights[i];
  }
}

const GaussLegendre& GaussLegendre::rule(int n) {
  static std::map<int, GaussLegendre> cache;
  static std::mutex mu;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, GaussLegendre(n)).first;
  return it->second;
}

double integrate_gl(const std::function<double(double)>& f, double a, double b,
                    int n) {
  const auto& r = GaussLegendre::rule(n);
  const double c = 0.5 * (b - a), d = 0.5 * (b + a);
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += r.weights[i] * f(c * r.nodes[i] + d);
  return c * s;
}

namespace {

double adapt_rec(const std::function<double(double)>& f, double a, double b,
                 double whole, double rel_tol, double abs_tol, int depth) {
  const double m = 0.5 * (a + b);
  const double left = integrate_gl(f, a, m, 15);
  const double right = integrate_gl(f, m, b, 15);
  const double delta = left + right - whole;
  if (depth <= 0 ||
      std::abs(delta) <= abs_tol + rel_tol * std::abs(left + right)) {
    return left + right;
  }
  return adapt_rec(f, a, m, left, rel_tol, 0.5 * abs_tol, depth - 1) +
         adapt_rec(f, m, b, right, rel_tol, 0.5 * abs_tol, depth - 1);
}

}  // namespace

double integrate_adaptive(const std::function<double(double)>& f, double a,
                          double b, double rel_tol, double abs_tol,
                          int max_depth) {
  if (a == b) return 0.0;
  const double whole = integrate_gl(f, a, b, 15);
  return adapt_rec(f, a, b, whole, rel_tol, abs_tol, max_depth);
}

}  // namespace ccgp
