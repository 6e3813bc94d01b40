#pragma once

#include <cstdint>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "ccgp/rng.hpp"

namespace ccgp {

/// Squared-exponential kernel parameters: w[0] is the log amplitude,
/// w[1..d] the per-dimension log squared length-scales.
struct KernelParams {
  Eigen::VectorXd w;

  int dims() const { return static_cast<int>(w.size()) - 1; }
};

double kernel(const Eigen::Ref<const Eigen::VectorXd>& xi,
              const Eigen::Ref<const Eigen::VectorXd>& xj,
              const KernelParams& params);

/// K(A,B) with rows of A and B as inputs.
Eigen::MatrixXd kernel_matrix(const Eigen::Ref<const Eigen::MatrixXd>& a,
                              const Eigen::Ref<const Eigen::MatrixXd>& b,
                              const KernelParams& params);

enum class InducingProvenance { kmeans_centers, grid_1d };

struct InducingSet {
  Eigen::MatrixXd points;  // m x d
  InducingProvenance provenance = InducingProvenance::kmeans_centers;

  int m() const { return static_cast<int>(points.rows()); }
  int dims() const { return static_cast<int>(points.cols()); }
};

/// Interpolation matrix A = K(X,Z) [K(Z,Z)+jitter I]^{-1} together with the
/// lower Cholesky factor of the jittered inducing kernel matrix.
struct GPBlock {
  Eigen::MatrixXd A;         // n x m
  Eigen::MatrixXd chol_kzz;  // m x m lower triangular
  double jitter = 0.0;

  double log_det_kzz() const {
    return 2.0 * chol_kzz.diagonal().array().log().sum();
  }
};

/// Cholesky of K(Z,Z)+jitter I with jitter escalation. Starts at
/// 1e-8 * mean(diag K) and multiplies by 10 up to 1e-2 * mean(diag K)
/// before giving up.
Eigen::MatrixXd chol_kernel(const Eigen::Ref<const Eigen::MatrixXd>& z,
                            const KernelParams& params,
                            double* jitter_used = nullptr);

GPBlock interp_matrix(const Eigen::Ref<const Eigen::MatrixXd>& x,
                      const InducingSet& z, const KernelParams& params);

/// Interpolation rows for new inputs against an existing block's factor.
Eigen::MatrixXd interp_rows(const Eigen::Ref<const Eigen::MatrixXd>& x,
                            const InducingSet& z, const KernelParams& params,
                            const Eigen::MatrixXd& chol_kzz);

/// Residual covariance B = K(X*,X*) - K(X*,X) [K(X,X)+jitter I]^{-1} K(X*,X)^T.
Eigen::MatrixXd residual_cov(const Eigen::Ref<const Eigen::MatrixXd>& x_star,
                             const Eigen::Ref<const Eigen::MatrixXd>& x,
                             const KernelParams& params);

/// k-means++ seeded Lloyd's algorithm, 50 iterations, deterministic under
/// the seed. m must not exceed the number of rows.
InducingSet select_inducing_kmeans(const Eigen::Ref<const Eigen::MatrixXd>& x,
                                   int m, std::uint64_t seed);

/// m equally spaced points on [-sqrt(q), sqrt(q)] (projection range of the
/// single index under unit-box covariates).
InducingSet inducing_grid_1d(int q, int m);

/// m equally spaced points on [lo, hi]; used for single-covariate
/// calibration grids on [0,1].
InducingSet inducing_grid(double lo, double hi, int m);

double gp_prior_logpdf(const Eigen::Ref<const Eigen::VectorXd>& f_tilde,
                       const Eigen::MatrixXd& chol_kzz);
double gp_prior_logpdf(const Eigen::Ref<const Eigen::VectorXd>& f_tilde,
                       const InducingSet& z, const KernelParams& params);

Eigen::VectorXd sample_gp_prior(const Eigen::MatrixXd& chol_kzz, Rng& rng);
Eigen::VectorXd sample_gp_prior(const InducingSet& z,
                                const KernelParams& params, Rng& rng);

}  // namespace ccgp
