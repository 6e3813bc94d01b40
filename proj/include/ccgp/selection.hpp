#pragma once

#include <string>
#include <vector>

#include "ccgp/mcmc.hpp"

namespace ccgp {

/// Per-draw, per-observation log densities under the model: joint
/// likelihood terms and the two Gaussian marginal terms (zero when the
/// margins are uniform). Rows are draws, columns observations.
struct LoglikTable {
  Eigen::MatrixXd joint;  // M x n
  Eigen::MatrixXd marg1;  // M x n
  Eigen::MatrixXd marg2;  // M x n

  int draws() const { return static_cast<int>(joint.rows()); }
  int obs() const { return static_cast<int>(joint.cols()); }
};

LoglikTable loglik_table(const Model& model, const PosteriorDraws& draws);

/// Cross-validated pseudo marginal likelihood estimated from posterior
/// draws by inverse-likelihood averaging (log-sum-exp stabilized). Larger
/// is better.
double cvml(const LoglikTable& table);
double cvml(const Model& model, const PosteriorDraws& draws);

/// Conditional CVML: predictive power for one response given the other,
/// averaged over the two directions. Equals CVML under uniform margins.
double ccvml(const LoglikTable& table);
double ccvml(const Model& model, const PosteriorDraws& draws);

struct Waic {
  double waic = 0.0;
  double fit = 0.0;
  double penalty = 0.0;  // unbiased sample variance of per-draw log liks
};

/// WAIC = -2 fit + 2 penalty; smaller is better.
Waic waic(const LoglikTable& table);
Waic waic(const Model& model, const PosteriorDraws& draws);

struct CriterionValues {
  double cvml = 0.0;
  double ccvml = 0.0;
  double waic = 0.0;
  double waic_fit = 0.0;
  double waic_penalty = 0.0;
  int n_draws = 0;
};

CriterionValues criteria(const Model& model, const PosteriorDraws& draws);

struct SelectionEntry {
  std::string model_label;
  CriterionValues values;
  std::uint64_t seed = 0;  // fit seed, kept for provenance
};

struct SelectionReport {
  std::vector<SelectionEntry> entries;

  int best_cvml() const;   // index of largest CVML
  int best_ccvml() const;  // index of largest CCVML
  int best_waic() const;   // index of smallest WAIC
};

}  // namespace ccgp
