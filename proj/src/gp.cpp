#include "ccgp/gp.hpp"

#include <cmath>

#include "ccgp/dist.hpp"
#include <limits>
#include <stdexcept>
#include <vector>

namespace ccgp {

double kernel(const Eigen::Ref<const Eigen::VectorXd>& xi,
              const Eigen::Ref<const Eigen::VectorXd>& xj,
              const KernelParams& params) {
  if (xi.size() != xj.size() || xi.size() != params.dims())
    throw std::invalid_argument("kernel: dimension mismatch");
  double s = 0.0;
  for (Eigen::Index k = 0; k < xi.size(); ++k) {
    const double d = xi[k] - xj[k];
    s += d * d * std::exp(-params.w[k + 1]);
  }
  return std::exp(params.w[0] - s);
}

Eigen::MatrixXd kernel_matrix(const Eigen::Ref<const Eigen::MatrixXd>& a,
                              const Eigen::Ref<const Eigen::MatrixXd>& b,
                              const KernelParams& params) {
  if (a.cols() != b.cols() || a.cols() != params.dims())
    throw std::invalid_argument("kernel_matrix: dimension mismatch");
  const double amp = std::exp(params.w[0]);
  Eigen::MatrixXd k(a.rows(), b.rows());
  // Scale inputs once so the pairwise loop is a plain squared distance.
  Eigen::ArrayXd inv_ls =
      (-0.5 * params.w.tail(params.dims()).array()).exp();
  Eigen::MatrixXd as = a.array().rowwise() * inv_ls.transpose();
  Eigen::MatrixXd bs = b.array().rowwise() * inv_ls.transpose();
  for (Eigen::Index j = 0; j < bs.rows(); ++j) {
    k.col(j) =
        (as.rowwise() - bs.row(j)).rowwise().squaredNorm().array() * -1.0;
  }
  return amp * k.array().exp();
}

Eigen::MatrixXd chol_kernel(const Eigen::Ref<const Eigen::MatrixXd>& z,
                            const KernelParams& params, double* jitter_used) {
  Eigen::MatrixXd kzz = kernel_matrix(z, z, params);
  const double scale = kzz.diagonal().mean();
  // Exact factorization first: inflating well-conditioned matrices would
  // bias interpolation identities like A(Z,Z) = I. The jitter ladder only
  // engages when the factor signals (near-)singularity.
  {
    Eigen::LLT<Eigen::MatrixXd> llt(kzz);
    if (llt.info() == Eigen::Success) {
      const Eigen::MatrixXd l = llt.matrixL();
      const double lmin = l.diagonal().minCoeff();
      if (lmin > 0.0 && lmin * lmin >= 1e-8 * scale) {
        if (jitter_used) *jitter_used = 0.0;
        return l;
      }
    }
  }
  double jitter = 1e-8 * scale;
  const double max_jitter = 1e-2 * scale;
  while (true) {
    Eigen::MatrixXd kj = kzz;
    kj.diagonal().array() += jitter;
    Eigen::LLT<Eigen::MatrixXd> llt(kj);
    if (llt.info() == Eigen::Success && llt.matrixLLT().diagonal().minCoeff() > 0.0) {
      if (jitter_used) *jitter_used = jitter;
      return llt.matrixL();
    }
    jitter *= 10.0;
    if (jitter > max_jitter)
      throw std::runtime_error(
          "chol_kernel: Cholesky failed; inducing set numerically degenerate");
  }
}

GPBlock interp_matrix(const Eigen::Ref<const Eigen::MatrixXd>& x,
                      const InducingSet& z, const KernelParams& params) {
  GPBlock block;
  block.chol_kzz = chol_kernel(z.points, params, &block.jitter);
  block.A = interp_rows(x, z, params, block.chol_kzz);
  return block;
}

Eigen::MatrixXd interp_rows(const Eigen::Ref<const Eigen::MatrixXd>& x,
                            const InducingSet& z, const KernelParams& params,
                            const Eigen::MatrixXd& chol_kzz) {
  Eigen::MatrixXd kxz = kernel_matrix(x, z.points, params);
  // A = Kxz Kzz^{-1} via two triangular solves; no explicit inverse.
  Eigen::MatrixXd tmp =
      chol_kzz.triangularView<Eigen::Lower>().solve(kxz.transpose());
  return chol_kzz.transpose()
      .triangularView<Eigen::Upper>()
      .solve(tmp)
      .transpose();
}

Eigen::MatrixXd residual_cov(const Eigen::Ref<const Eigen::MatrixXd>& x_star,
                             const Eigen::Ref<const Eigen::MatrixXd>& x,
                             const KernelParams& params) {
  const Eigen::MatrixXd kss = kernel_matrix(x_star, x_star, params);
  const Eigen::MatrixXd ksx = kernel_matrix(x_star, x, params);
  const Eigen::MatrixXd l = chol_kernel(x, params);
  const Eigen::MatrixXd v =
      l.triangularView<Eigen::Lower>().solve(ksx.transpose());
  return kss - v.transpose() * v;
}

InducingSet select_inducing_kmeans(const Eigen::Ref<const Eigen::MatrixXd>& x,
                                   int m, std::uint64_t seed) {
  const int n = static_cast<int>(x.rows());
  if (m < 1 || m > n)
    throw std::invalid_argument("select_inducing_kmeans: need 1 <= m <= n");
  Rng rng(seed);

  // k-means++ seeding
  Eigen::MatrixXd centers(m, x.cols());
  std::vector<double> d2(n, std::numeric_limits<double>::max());
  {
    std::uniform_int_distribution<int> pick(0, n - 1);
    centers.row(0) = x.row(pick(rng));
  }
  for (int c = 1; c < m; ++c) {
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
      const double d = (x.row(i) - centers.row(c - 1)).squaredNorm();
      d2[i] = std::min(d2[i], d);
      total += d2[i];
    }
    int chosen = 0;
    if (total > 0.0) {
      double r = runif(rng) * total, acc = 0.0;
      for (int i = 0; i < n; ++i) {
        acc += d2[i];
        if (acc >= r) {
          chosen = i;
          break;
        }
      }
    } else {
      chosen = std::uniform_int_distribution<int>(0, n - 1)(rng);
    }
    centers.row(c) = x.row(chosen);
  }

  // Lloyd iterations, fixed count; ties resolved to the lowest index.
  std::vector<int> assign(n, 0);
  for (int iter = 0; iter < 50; ++iter) {
    for (int i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::max();
      int bc = 0;
      for (int c = 0; c < m; ++c) {
        const double d = (x.row(i) - centers.row(c)).squaredNorm();
        if (d < best) {
          best = d;
          bc = c;
        }
      }
      assign[i] = bc;
    }
    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(m, x.cols());
    std::vector<int> counts(m, 0);
    for (int i = 0; i < n; ++i) {
      sums.row(assign[i]) += x.row(i);
      ++counts[assign[i]];
    }
    for (int c = 0; c < m; ++c) {
      if (counts[c] > 0) {
        centers.row(c) = sums.row(c) / counts[c];
      } else {
        // empty cluster: grab the point farthest from its center
        double worst = -1.0;
        int wi = 0;
        for (int i = 0; i < n; ++i) {
          const double d = (x.row(i) - centers.row(assign[i])).squaredNorm();
          if (d > worst) {
            worst = d;
            wi = i;
          }
        }
        centers.row(c) = x.row(wi);
      }
    }
  }
  return {centers, InducingProvenance::kmeans_centers};
}

InducingSet inducing_grid_1d(int q, int m) {
  const double r = std::sqrt(static_cast<double>(q));
  return inducing_grid(-r, r, m);
}

InducingSet inducing_grid(double lo, double hi, int m) {
  if (m < 2) throw std::invalid_argument("inducing_grid: need m >= 2");
  Eigen::MatrixXd pts(m, 1);
  for (int i = 0; i < m; ++i)
    pts(i, 0) = lo + (hi - lo) * static_cast<double>(i) / (m - 1);
  return {pts, InducingProvenance::grid_1d};
}

double gp_prior_logpdf(const Eigen::Ref<const Eigen::VectorXd>& f_tilde,
                       const Eigen::MatrixXd& chol_kzz) {
  if (f_tilde.size() != chol_kzz.rows())
    throw std::invalid_argument("gp_prior_logpdf: dimension mismatch");
  const Eigen::VectorXd alpha =
      chol_kzz.triangularView<Eigen::Lower>().solve(f_tilde);
  const double m = static_cast<double>(f_tilde.size());
  return -0.5 * alpha.squaredNorm() -
         chol_kzz.diagonal().array().log().sum() - 0.5 * m * log_2pi;
}

double gp_prior_logpdf(const Eigen::Ref<const Eigen::VectorXd>& f_tilde,
                       const InducingSet& z, const KernelParams& params) {
  return gp_prior_logpdf(f_tilde, chol_kernel(z.points, params));
}

Eigen::VectorXd sample_gp_prior(const Eigen::MatrixXd& chol_kzz, Rng& rng) {
  return chol_kzz.triangularView<Eigen::Lower>() *
         rnorm_vec(rng, chol_kzz.rows());
}

Eigen::VectorXd sample_gp_prior(const InducingSet& z,
                                const KernelParams& params, Rng& rng) {
  return sample_gp_prior(chol_kernel(z.points, params), rng);
}

}  // namespace ccgp
