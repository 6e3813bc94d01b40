#pragma once

#include <vector>

#include <Eigen/Core>

namespace ccgp {

/// Affine transforms applied at ingestion: responses standardized to mean 0
/// and sd 1, covariates min-max scaled into [0,1]. Kept so predictions can
/// be reported on the original scales.
struct Normalization {
  Eigen::VectorXd x_min, x_range;  // length q
  double y1_mean = 0.0, y1_sd = 1.0;
  double y2_mean = 0.0, y2_sd = 1.0;

  static Normalization identity(int q);
};

struct Dataset {
  Eigen::VectorXd y1, y2;  // n
  Eigen::MatrixXd x;       // n x q, entries in [0,1]
  Normalization norm;

  int n() const { return static_cast<int>(y1.size()); }
  int q() const { return static_cast<int>(x.cols()); }

  /// Validates the invariants (consistent sizes, n >= 2, X in [0,1]).
  void check() const;

  Dataset rows(const std::vector<int>& idx) const;

  /// Dataset that keeps only the listed covariate columns.
  Dataset select_covariates(const std::vector<int>& cols) const;

  double y1_original(double y) const { return y * norm.y1_sd + norm.y1_mean; }
  double y2_original(double y) const { return y * norm.y2_sd + norm.y2_mean; }
};

/// Standardize responses and min-max scale covariates of raw columns.
/// Throws on constant covariate columns (zero range).
Dataset normalize(const Eigen::VectorXd& y1_raw, const Eigen::VectorXd& y2_raw,
                  const Eigen::MatrixXd& x_raw);

/// Apply an existing normalization to raw columns; covariates are clamped
/// to [0,1] and clamped_count reports how many entries moved.
Dataset apply_normalization(const Eigen::VectorXd& y1_raw,
                            const Eigen::VectorXd& y2_raw,
                            const Eigen::MatrixXd& x_raw,
                            const Normalization& norm,
                            int* clamped_count = nullptr);

}  // namespace ccgp
