#pragma once

#include <functional>
#include <vector>

namespace ccgp {

/// Gauss-Legendre rule on [-1,1]. Rules are computed once per order and
/// cached; thread-safe via static initialization of the common orders.
struct GaussLegendre {
  std::vector<double> nodes;
  std::vector<double> weights;

  explicit GaussLegendre(int n);

  /// Shared rule instance for order n (n in {7, 15, 32, 64} precached).
  static const GaussLegendre& rule(int n);
};

/// Fixed-order Gauss-Legendre integral of f over [a, b].
double integrate_gl(const std::function<double(double)>& f, double a, double b,
                    int n = 64);

/// Adaptive bisecting Gauss-Legendre (order 15) to the given tolerances.
double integrate_adaptive(const std::function<double(double)>& f, double a,
                          double b, double rel_tol = 1e-10,
                          double abs_tol = 1e-14, int max_depth = 48);

}  // namespace ccgp
