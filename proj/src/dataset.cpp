#include "ccgp/dataset.hpp"

#include <algorithm>
#include <stdexcept>
#include <vector>

namespace ccgp {

Normalization Normalization::identity(int q) {
  Normalization n;
  n.x_min = Eigen::VectorXd::Zero(q);
  n.x_range = Eigen::VectorXd::Ones(q);
  return n;
}

void Dataset::check() const {
  if (y1.size() < 2) throw std::invalid_argument("Dataset: need n >= 2");
  if (y2.size() != y1.size() || x.rows() != y1.size())
    throw std::invalid_argument("Dataset: inconsistent sizes");
  if ((x.array() < 0.0).any() || (x.array() > 1.0).any())
    throw std::invalid_argument("Dataset: covariates must lie in [0,1]");
  if (!y1.allFinite() || !y2.allFinite() || !x.allFinite())
    throw std::invalid_argument("Dataset: missing or non-finite values");
}

Dataset Dataset::rows(const std::vector<int>& idx) const {
  Dataset out;
  out.norm = norm;
  out.y1.resize(idx.size());
  out.y2.resize(idx.size());
  out.x.resize(idx.size(), x.cols());
  for (size_t k = 0; k < idx.size(); ++k) {
    out.y1[k] = y1[idx[k]];
    out.y2[k] = y2[idx[k]];
    out.x.row(k) = x.row(idx[k]);
  }
  return out;
}

Dataset Dataset::select_covariates(const std::vector<int>& cols) const {
  Dataset out;
  out.y1 = y1;
  out.y2 = y2;
  out.x.resize(x.rows(), cols.size());
  out.norm.y1_mean = norm.y1_mean;
  out.norm.y1_sd = norm.y1_sd;
  out.norm.y2_mean = norm.y2_mean;
  out.norm.y2_sd = norm.y2_sd;
  out.norm.x_min.resize(cols.size());
  out.norm.x_range.resize(cols.size());
  for (size_t k = 0; k < cols.size(); ++k) {
    if (cols[k] < 0 || cols[k] >= x.cols())
      throw std::invalid_argument("select_covariates: column out of range");
    out.x.col(k) = x.col(cols[k]);
    out.norm.x_min[k] = norm.x_min[cols[k]];
    out.norm.x_range[k] = norm.x_range[cols[k]];
  }
  return out;
}

namespace {

void standardize(const Eigen::VectorXd& raw, Eigen::VectorXd& out, double& mean,
                 double& sd) {
  mean = raw.mean();
  const double n = static_cast<double>(raw.size());
  sd = std::sqrt((raw.array() - mean).square().sum() / (n - 1.0));
  if (sd <= 0.0)
    throw std::invalid_argument("normalize: response has zero variance");
  out = (raw.array() - mean) / sd;
}

}  // namespace

Dataset normalize(const Eigen::VectorXd& y1_raw, const Eigen::VectorXd& y2_raw,
                  const Eigen::MatrixXd& x_raw) {
  if (y1_raw.size() < 2) throw std::invalid_argument("normalize: need n >= 2");
  Dataset d;
  standardize(y1_raw, d.y1, d.norm.y1_mean, d.norm.y1_sd);
  standardize(y2_raw, d.y2, d.norm.y2_mean, d.norm.y2_sd);
  const int q = static_cast<int>(x_raw.cols());
  d.norm.x_min.resize(q);
  d.norm.x_range.resize(q);
  d.x.resize(x_raw.rows(), q);
  for (int j = 0; j < q; ++j) {
    const double lo = x_raw.col(j).minCoeff();
    const double hi = x_raw.col(j).maxCoeff();
    if (hi - lo <= 0.0)
      throw std::invalid_argument("normalize: covariate column " +
                                  std::to_string(j + 1) +
                                  " is constant (zero range)");
    d.norm.x_min[j] = lo;
    d.norm.x_range[j] = hi - lo;
    d.x.col(j) = (x_raw.col(j).array() - lo) / (hi - lo);
  }
  d.check();
  return d;
}

Dataset apply_normalization(const Eigen::VectorXd& y1_raw,
                            const Eigen::VectorXd& y2_raw,
                            const Eigen::MatrixXd& x_raw,
                            const Normalization& norm, int* clamped_count) {
  Dataset d;
  d.norm = norm;
  d.y1 = (y1_raw.array() - norm.y1_mean) / norm.y1_sd;
  d.y2 = (y2_raw.array() - norm.y2_mean) / norm.y2_sd;
  d.x.resize(x_raw.rows(), x_raw.cols());
  int clamped = 0;
  for (int j = 0; j < x_raw.cols(); ++j) {
    for (int i = 0; i < x_raw.rows(); ++i) {
      double v = (x_raw(i, j) - norm.x_min[j]) / norm.x_range[j];
      if (v < 0.0 || v > 1.0) {
        v = std::clamp(v, 0.0, 1.0);
        ++clamped;
      }
      d.x(i, j) = v;
    }
  }
  if (clamped_count) *clamped_count = clamped;
  return d;
}

}  // namespace ccgp
