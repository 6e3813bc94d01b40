#pragma once

#include <vector>

#include "ccgp/selection.hpp"

namespace ccgp {

struct SplitData {
  Dataset train, test;
  std::vector<int> train_idx, test_idx;
  std::uint64_t split_seed = 0;
};

/// Uniform random partition without replacement; train_frac defaults to
/// the 2:1 split. Deterministic given the seed.
SplitData split_train_test(const Dataset& data, double train_frac,
                           std::uint64_t seed);

/// Per-draw predictive quantities at the test covariates: PIT values and
/// marginal log densities from the draw's marginal fit, copula parameters
/// from the draw's calibration, interpolated through the training-fit
/// inducing sets.
struct PredictiveTable {
  Eigen::MatrixXd u1, u2;        // M x n*
  Eigen::MatrixXd marg1, marg2;  // M x n* marginal log densities
  Eigen::MatrixXd theta;         // M x n*
  CopulaFamily family = CopulaFamily::clayton;
};

PredictiveTable predictive_table(const Model& trained,
                                 const PosteriorDraws& draws,
                                 const Dataset& test);

/// Out-of-sample predictive log score sum_i log{(1/M) sum_t P(y*_i|w_t)}.
double cvml_obs(const PredictiveTable& table);

/// Same with the copula parameter of pair i taken from test case
/// lambda(i); marginal terms untouched. lambda must be a bijection.
double cvml_perm(const PredictiveTable& table, const std::vector<int>& lambda);

double ccvml_obs(const PredictiveTable& table);
double ccvml_perm(const PredictiveTable& table, const std::vector<int>& lambda);

struct EvidenceReport {
  double observed = 0.0;
  std::vector<double> permuted;
  double ev = 0.0;
  bool supports_sa = false;       // EV > 0.05
  bool degenerate_constant = false;  // all permuted values tie the observed
  int n_perms = 0;
  std::uint64_t perm_seed = 0;
};

/// EV = 2 min{ frac(obs < perm_j), frac(obs > perm_j) } with strict
/// inequalities. The all-tied case (constant calibration) is flagged and
/// reported as EV = 1.
EvidenceReport evidence(double observed, const std::vector<double>& permuted,
                        std::uint64_t perm_seed);

enum class SaCriterion { cvml, ccvml };

/// Full permutation evidence computation: J random permutations of the
/// test indices with a dedicated seed.
EvidenceReport sa_evidence(const PredictiveTable& table, int n_perms,
                           std::uint64_t perm_seed,
                           SaCriterion criterion = SaCriterion::cvml,
                           int jobs = 1);

}  // namespace ccgp
