#include <doctest.h>

#include <cmath>

#include <Eigen/Dense>

#include "ccgp/dist.hpp"
#include "ccgp/gp.hpp"
#include "test_helpers.hpp"

using namespace ccgp;

namespace {

Eigen::MatrixXd random_inputs(int n, int d, std::uint64_t seed) {
  Rng rng(seed);
  Eigen::MatrixXd x(n, d);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) x(i, j) = runif(rng);
  return x;
}

KernelParams params_for(int d, double w0 = 0.3, double ws = -1.2) {
  KernelParams p;
  p.w.resize(d + 1);
  p.w[0] = w0;
  for (int k = 1; k <= d; ++k) p.w[k] = ws;
  return p;
}

}  // namespace

TEST_CASE("kernel point evaluations") {
  const KernelParams p = params_for(2, 0.7, -0.5);
  Eigen::Vector2d a(0.3, 0.9), b(0.3, 0.9);
  CHECK(kernel(a, b, p) == doctest::Approx(std::exp(0.7)).epsilon(1e-14));
  // d = 1, w = (0, w1), squared distance e^{w1} -> e^{-1}
  KernelParams p1 = params_for(1, 0.0, -0.8);
  Eigen::VectorXd x1(1), x2(1);
  x1 << 0.0;
  x2 << std::sqrt(std::exp(-0.8));
  CHECK(kernel(x1, x2, p1) == doctest::Approx(std::exp(-1.0)).epsilon(1e-12));
  // amplitude limit
  KernelParams p0 = params_for(1, -700.0, 0.0);
  CHECK(kernel(x1, x2, p0) == doctest::Approx(0.0));
  // symmetry
  Eigen::Vector2d c(0.1, 0.4);
  CHECK(kernel(a, c, p) == kernel(c, a, p));
  Eigen::Vector3d bad(0.1, 0.2, 0.3);
  CHECK_THROWS(kernel(a, bad, p));
}

TEST_CASE("kernel matrices symmetric positive semidefinite") {
  const Eigen::MatrixXd x = random_inputs(20, 3, 5);
  const KernelParams p = params_for(3);
  const Eigen::MatrixXd k = kernel_matrix(x, x, p);
  CHECK((k - k.transpose()).cwiseAbs().maxCoeff() < 1e-12);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(k);
  CHECK(es.eigenvalues().minCoeff() > -1e-8);
}

TEST_CASE("interp_matrix identities") {
  const Eigen::MatrixXd x = random_inputs(6, 2, 9);
  const KernelParams p = params_for(2);
  const InducingSet z{x, InducingProvenance::kmeans_centers};
  const GPBlock b = interp_matrix(x, z, p);
  CHECK((b.A - Eigen::MatrixXd::Identity(6, 6)).cwiseAbs().maxCoeff() < 1e-6);

  // distant row decays to zero under short length-scales
  Eigen::MatrixXd far(1, 2);
  far << 40.0, 40.0;
  const KernelParams sharp = params_for(2, 0.0, -3.0);
  const GPBlock bf = interp_matrix(far, z, sharp);
  CHECK(bf.A.cwiseAbs().maxCoeff() < 1e-10);

  // m = 1: scalar inverse k(x, z)/k(z, z)
  const InducingSet z1{x.topRows(1), InducingProvenance::kmeans_centers};
  const GPBlock b1 = interp_matrix(x, z1, p);
  for (int i = 0; i < 6; ++i) {
    const double expect = kernel(x.row(i), x.row(0), p) /
                          (kernel(x.row(0), x.row(0), p) + b1.jitter);
    CHECK(b1.A(i, 0) == doctest::Approx(expect).epsilon(1e-7));
  }
}

TEST_CASE("interp_matrix and residual_cov match dense-inverse oracles") {
  for (int m : {3, 5, 8}) {
    const Eigen::MatrixXd z = random_inputs(m, 2, 100 + m);
    const Eigen::MatrixXd x = random_inputs(11, 2, 200 + m);
    const KernelParams p = params_for(2);
    const InducingSet zs{z, InducingProvenance::kmeans_centers};
    const GPBlock b = interp_matrix(x, zs, p);

    Eigen::MatrixXd kzz = kernel_matrix(z, z, p);
    kzz.diagonal().array() += b.jitter;
    const Eigen::MatrixXd a_dense =
        kernel_matrix(x, z, p) * kzz.inverse();
    CHECK((b.A - a_dense).cwiseAbs().maxCoeff() < 1e-8);

    // chol reproduces the jittered kernel matrix
    CHECK((b.chol_kzz * b.chol_kzz.transpose() - kzz).cwiseAbs().maxCoeff() <
          1e-8);

    const Eigen::MatrixXd bm = residual_cov(x, z, p);
    const Eigen::MatrixXd bm_dense =
        kernel_matrix(x, x, p) -
        kernel_matrix(x, z, p) * kzz.inverse() *
            kernel_matrix(x, z, p).transpose();
    CHECK((bm - bm_dense).cwiseAbs().maxCoeff() < 1e-8);
  }
}

TEST_CASE("residual_cov properties") {
  const Eigen::MatrixXd x = random_inputs(7, 2, 33);
  const KernelParams p = params_for(2);
  // B(X, X) = 0
  const Eigen::MatrixXd b0 = residual_cov(x, x, p);
  CHECK(b0.cwiseAbs().maxCoeff() < 1e-6);
  // distant point keeps its full prior variance
  Eigen::MatrixXd far(1, 2);
  far << 30.0, -30.0;
  const KernelParams sharp = params_for(2, 0.4, -3.0);
  const Eigen::MatrixXd bf = residual_cov(far, x, sharp);
  CHECK(bf(0, 0) ==
        doctest::Approx(kernel(far.row(0), far.row(0), sharp)).epsilon(1e-8));
  // PSD within tolerance
  const Eigen::MatrixXd z = random_inputs(4, 2, 44);
  const Eigen::MatrixXd b = residual_cov(x, z, p);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(b);
  CHECK(es.eigenvalues().minCoeff() > -1e-8);
  CHECK(b.trace() > -1e-8);
}

TEST_CASE("kmeans inducing selection") {
  // m = n returns the data points (up to ordering)
  const Eigen::MatrixXd x = random_inputs(8, 2, 21);
  const InducingSet z = select_inducing_kmeans(x, 8, 3);
  for (int i = 0; i < 8; ++i) {
    double best = 1e9;
    for (int c = 0; c < 8; ++c)
      best = std::min(best, (x.row(i) - z.points.row(c)).norm());
    CHECK(best < 1e-12);
  }

  // two well separated blobs: oracle = exhaustive 2-partition of 10 points
  Eigen::MatrixXd blobs(10, 1);
  Rng rng(5);
  for (int i = 0; i < 5; ++i) blobs(i, 0) = 0.05 + 0.01 * rnorm(rng);
  for (int i = 5; i < 10; ++i) blobs(i, 0) = 0.95 + 0.01 * rnorm(rng);
  double best_cost = 1e18;
  double best_c0 = 0, best_c1 = 0;
  for (int mask = 1; mask < 511; ++mask) {
    double s0 = 0, s1 = 0;
    int n0 = 0, n1 = 0;
    for (int i = 0; i < 10; ++i) {
      if (mask & (1 << i)) {
        s0 += blobs(i, 0);
        ++n0;
      } else {
        s1 += blobs(i, 0);
        ++n1;
      }
    }
    if (n0 == 0 || n1 == 0) continue;
    const double c0 = s0 / n0, c1 = s1 / n1;
    double cost = 0;
    for (int i = 0; i < 10; ++i) {
      const double v = blobs(i, 0);
      cost += std::min((v - c0) * (v - c0), (v - c1) * (v - c1));
    }
    if (cost < best_cost) {
      best_cost = cost;
      best_c0 = std::min(c0, c1);
      best_c1 = std::max(c0, c1);
    }
  }
  const InducingSet z2 = select_inducing_kmeans(blobs, 2, 17);
  const double lo = std::min(z2.points(0, 0), z2.points(1, 0));
  const double hi = std::max(z2.points(0, 0), z2.points(1, 0));
  CHECK(lo == doctest::Approx(best_c0).epsilon(1e-9));
  CHECK(hi == doctest::Approx(best_c1).epsilon(1e-9));

  // determinism
  const InducingSet za = select_inducing_kmeans(x, 4, 99);
  const InducingSet zb = select_inducing_kmeans(x, 4, 99);
  CHECK((za.points - zb.points).cwiseAbs().maxCoeff() == 0.0);

  CHECK_THROWS(select_inducing_kmeans(x, 9, 1));
}

TEST_CASE("inducing grids") {
  const InducingSet g = inducing_grid_1d(4, 3);
  CHECK(g.points(0, 0) == -2.0);
  CHECK(g.points(1, 0) == 0.0);
  CHECK(g.points(2, 0) == 2.0);
  const InducingSet g2 = inducing_grid_1d(1, 2);
  CHECK(g2.points(0, 0) == -1.0);
  CHECK(g2.points(1, 0) == 1.0);
  for (int q : {1, 2, 10}) {
    for (int m : {2, 5, 30}) {
      const InducingSet gq = inducing_grid_1d(q, m);
      CHECK(gq.points(0, 0) == -std::sqrt(double(q)));
      CHECK(gq.points(m - 1, 0) == std::sqrt(double(q)));
    }
  }
  CHECK_THROWS(inducing_grid(0.0, 1.0, 1));
  const InducingSet unit = inducing_grid(0.0, 1.0, 5);
  CHECK(unit.points(0, 0) == 0.0);
  CHECK(unit.points(4, 0) == 1.0);
}

TEST_CASE("gp prior logpdf against dense oracle") {
  const Eigen::MatrixXd z = random_inputs(5, 2, 77);
  const KernelParams p = params_for(2);
  Rng rng(3);
  const Eigen::VectorXd f = rnorm_vec(rng, 5);
  double jitter = 0.0;
  const Eigen::MatrixXd l = chol_kernel(z, p, &jitter);
  Eigen::MatrixXd k = kernel_matrix(z, z, p);
  k.diagonal().array() += jitter;
  const double oracle = -0.5 * f.dot(k.inverse() * f) -
                        0.5 * std::log(k.determinant()) -
                        0.5 * 5.0 * log_2pi;
  CHECK(gp_prior_logpdf(f, l) == doctest::Approx(oracle).epsilon(1e-8));
  // scaling the vector scales the quadratic form by c^2
  const double base = gp_prior_logpdf(f, l);
  const double scaled = gp_prior_logpdf(2.0 * f, l);
  const double quad = -0.5 * f.dot(k.inverse() * f);
  CHECK(scaled - base == doctest::Approx(3.0 * quad).epsilon(1e-7));
}

TEST_CASE("sample_gp_prior moments and determinism") {
  const Eigen::MatrixXd z = random_inputs(4, 1, 15);
  const KernelParams p = params_for(1);
  const Eigen::MatrixXd l = chol_kernel(z, p);
  {
    Rng r1(8), r2(8);
    CHECK((sample_gp_prior(l, r1) - sample_gp_prior(l, r2))
              .cwiseAbs()
              .maxCoeff() == 0.0);
  }
  Rng rng(123);
  const int n = 10000;
  double s = 0.0, s2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double v = sample_gp_prior(l, rng)[0];
    s += v;
    s2 += v * v;
  }
  const double var = s2 / n - (s / n) * (s / n);
  const double k11 = (l * l.transpose())(0, 0);
  CHECK(std::abs(var - k11) / k11 < 0.05);
}

TEST_CASE("jitter escalation on a degenerate inducing set") {
  // duplicated rows make K singular; escalation must still factor it
  Eigen::MatrixXd z(3, 1);
  z << 0.5, 0.5, 0.5;
  const KernelParams p = params_for(1);
  double jitter = 0.0;
  const Eigen::MatrixXd l = chol_kernel(z, p, &jitter);
  CHECK(jitter > 0.0);
  CHECK(l.allFinite());
}
