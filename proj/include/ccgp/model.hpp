#pragma once

#include <cstdint>
#include <variant>

#include <Eigen/Core>

#include "ccgp/copula.hpp"
#include "ccgp/dataset.hpp"
#include "ccgp/gp.hpp"

namespace ccgp {

/// One marginal Gaussian regression with a sparse-GP mean:
/// Y_j ~ N(A(X,Z_j;w_j) f_tilde, sigma2 I).
struct MarginalState {
  Eigen::VectorXd f_tilde;
  KernelParams w;
  double sigma2 = 1.0;
};

/// Calibration through the single index: f = A(X beta, Z; w) f_tilde with
/// ||beta|| = 1.
struct GpSimCalib {
  Eigen::VectorXd beta;
  Eigen::VectorXd f_tilde;
  KernelParams w;  // 2 entries: amplitude + one length-scale
};

/// Covariate-free copula parameter, random-walked on the unconstrained
/// f-scale.
struct ConstantCalib {
  double f = 0.0;
};

/// Calibration GP over a single covariate column (no index vector).
struct SingleCovCalib {
  int index = 0;
  Eigen::VectorXd f_tilde;
  KernelParams w;
};

using CalibrationState = std::variant<GpSimCalib, ConstantCalib, SingleCovCalib>;

struct FullState {
  MarginalState marg1, marg2;
  CalibrationState calib;
  CopulaFamily family = CopulaFamily::clayton;
};

enum class MarginModel { gaussian_gp, uniform };
enum class CalibKind { gpsim, constant, single_covariate };

CalibKind calib_kind_from_string(std::string_view name, int* index);
std::string to_string(CalibKind kind);

struct ModelSpec {
  CopulaFamily family = CopulaFamily::clayton;
  CalibKind calib = CalibKind::gpsim;
  int single_index = 0;  // covariate column for single_covariate
  MarginModel margins = MarginModel::gaussian_gp;
  int m1 = 30, m2 = 30, m = 30;

  std::string label() const;
};

/// Data plus fixed inducing geometry; everything the likelihood needs that
/// does not change during sampling.
struct Model {
  Dataset data;
  ModelSpec spec;
  InducingSet z1, z2;   // empty when margins are uniform
  InducingSet z_calib;  // empty for constant calibration

  static Model build(Dataset data, const ModelSpec& spec, std::uint64_t seed);

  bool uniform_margins() const {
    return spec.margins == MarginModel::uniform;
  }
};

/// A(X,Z;w) f_tilde.
Eigen::VectorXd marginal_means(const Eigen::Ref<const Eigen::MatrixXd>& x,
                               const MarginalState& marg,
                               const InducingSet& z);

/// Calibration values on the f-scale for each row of X.
Eigen::VectorXd calibration_values(const Eigen::Ref<const Eigen::MatrixXd>& x,
                                   const CalibrationState& calib,
                                   const InducingSet& z_calib);

/// Copula parameters theta_i = inv_link(f_i) for each row of X.
Eigen::VectorXd calibration_thetas(const Eigen::Ref<const Eigen::MatrixXd>& x,
                                   const CalibrationState& calib,
                                   const InducingSet& z_calib,
                                   CopulaFamily family);

/// Reusable interpolation cache for per-draw prediction. Consecutive
/// posterior draws usually share kernel parameters (rejected random-walk
/// moves), so the A matrix is rebuilt only when the key changes.
struct PredCache {
  Eigen::VectorXd key_w, key_beta;
  Eigen::MatrixXd a;
  bool valid = false;
};

Eigen::VectorXd marginal_means_cached(const Eigen::Ref<const Eigen::MatrixXd>& x,
                                      const MarginalState& marg,
                                      const InducingSet& z, PredCache& cache);

Eigen::VectorXd calibration_values_cached(
    const Eigen::Ref<const Eigen::MatrixXd>& x, const CalibrationState& calib,
    const InducingSet& z_calib, PredCache& cache);

/// Joint log likelihood of the data under the state. Throws if the result
/// is not finite (degenerate state).
double joint_loglik(const Model& model, const FullState& state);

/// Sum of all log prior terms: GP priors for latent vectors, N(0,5I) for
/// kernel parameters, IG(0.1,0.1) for variances, N(0,5) for the constant
/// calibration f, constant for beta on the sphere.
double log_prior(const Model& model, const FullState& state);

double log_posterior(const Model& model, const FullState& state);

/// Draw an initial state from the priors (latent vectors from the GP prior,
/// beta uniform on the sphere); used for tests and as a fallback.
FullState random_state(const Model& model, Rng& rng);

}  // namespace ccgp
