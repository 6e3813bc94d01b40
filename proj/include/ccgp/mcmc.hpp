#pragma once

#include <functional>
#include <vector>

#include "ccgp/model.hpp"

namespace ccgp {

struct SamplerConfig {
  int iters = 5000;
  int burn_in = -1;  // -1 -> iters/2
  double target_accept = 0.30;
  int adapt_window = 50;
  std::uint64_t seed = 1;
  int thin = 1;
  int init_iters = 150;  // length of each initialization chain
  bool run_init = true;

  int effective_burn_in() const { return burn_in < 0 ? iters / 2 : burn_in; }
  void validate() const;
};

struct BlockRates {
  double w1 = 0, w2 = 0, w_calib = 0;
  double sigma1 = 0, sigma2 = 0;
  double beta = 0, const_theta = 0;
};

struct PosteriorDraws {
  std::vector<FullState> states;  // post burn-in, thinned
  BlockRates acceptance;          // measured after burn-in
  ModelSpec spec;
  SamplerConfig config;
  std::uint64_t seed = 0;
  int thin = 1;

  int size() const { return static_cast<int>(states.size()); }
};

/// Draw from the von Mises-Fisher distribution on S^{q-1} with mean
/// direction mu (unit norm) and concentration kappa >= 0, by the
/// Ulrich/Wood rejection scheme.
Eigen::VectorXd sample_vmf(const Eigen::Ref<const Eigen::VectorXd>& mu,
                           double kappa, Rng& rng);

struct EssOutcome {
  double loglik;
  int proposals;
};

/// Elliptical slice sampling update for f with prior N(0, L L^T).
/// loglik must return the log likelihood as a function of f alone;
/// cur_loglik is its value at the current f. Always terminates via
/// bracket shrinkage.
EssOutcome ess_update(
    Eigen::VectorXd& f, const Eigen::MatrixXd& chol_lower,
    const std::function<double(const Eigen::VectorXd&)>& loglik,
    double cur_loglik, Rng& rng);

/// Random-walk Metropolis step with N(0, step_sd^2 I) increments on the
/// given log target. Returns true on acceptance and updates cur_lp.
bool rwm_step(Eigen::VectorXd& x, double step_sd,
              const std::function<double(const Eigen::VectorXd&)>& log_target,
              double& cur_lp, Rng& rng);

/// Metropolis-within-Gibbs sampler for the joint copula model. Sweep order:
/// w1, w2, w, sigma1^2, sigma2^2, beta, f~1, f~2, f~ (calibration blocks
/// replaced by the constant-theta update under constant calibration).
/// Step sizes adapt toward the target acceptance rate during burn-in only.
class Sampler {
 public:
  Sampler(const Model& model, const SamplerConfig& cfg, FullState init,
          Rng rng);

  /// One full sweep over all blocks; adapts proposals when adapt is true.
  void sweep(bool adapt);

  PosteriorDraws run();

  // Individual block updates (public so tests can drive them directly).
  bool update_w1();
  bool update_w2();
  bool update_w_calib();
  bool update_sigma2(int j);  // j in {1,2}
  bool update_beta();
  void update_f1();
  void update_f2();
  void update_f_calib();
  bool update_const_theta();

  const FullState& state() const { return st_; }
  double loglik() const { return gauss1_ + gauss2_ + copsum_; }
  double copula_loglik() const { return copsum_; }

  /// IG proposal parameters for sigma_j^2 given the current residuals.
  std::pair<double, double> ig_proposal_params(int j) const;
  /// Reduced IM acceptance ratio (copula terms only).
  double im_log_ratio_reduced(int j, double s2_star) const;
  /// Full Metropolis-Hastings log ratio for the same move.
  double im_log_ratio_full(int j, double s2_star) const;

  void freeze_margins(bool on) { freeze_margins_ = on; }
  Rng& rng() { return rng_; }

  double step_w1 = 0.15, step_w2 = 0.15, step_w_calib = 0.15;
  double step_theta = 0.5;
  double kappa = 100.0;

 private:
  struct Counter {
    long acc = 0, tot = 0;
    void add(bool a) {
      acc += a;
      ++tot;
    }
    void reset() { acc = tot = 0; }
    double rate() const { return tot > 0 ? double(acc) / double(tot) : 0.0; }
  };

  void rebuild_all();
  void refresh_margin(int j);
  void refresh_calib();
  double gauss_of(const Eigen::VectorXd& resid, double sigma2) const;
  Eigen::VectorXd pit_of(const Eigen::VectorXd& resid, double sigma2) const;
  double copsum_of(const Eigen::VectorXd& u1, const Eigen::VectorXd& u2,
                   const Eigen::VectorXd& fcal) const;
  void adapt_steps();

  const Model& m_;
  SamplerConfig cfg_;
  Rng rng_;
  FullState st_;
  bool freeze_margins_ = false;

  GPBlock b1_, b2_;
  Eigen::VectorXd f1_, f2_, r1_, r2_, u1_, u2_;
  double gauss1_ = 0.0, gauss2_ = 0.0;

  Eigen::MatrixXd chol_calib_;
  Eigen::MatrixXd a_calib_;
  Eigen::VectorXd proj_;
  Eigen::VectorXd fcal_;
  double copsum_ = 0.0;

  Counter win_w1_, win_w2_, win_wc_, win_s1_, win_s2_, win_beta_, win_th_;
  Counter post_w1_, post_w2_, post_wc_, post_s1_, post_s2_, post_beta_,
      post_th_;
  int window_iters_ = 0;
  int window_index_ = 0;
  bool tally_post_ = false;

  friend PosteriorDraws run_chain(const Model&, const SamplerConfig&);
};

/// Three short chains (margin 1, margin 2, calibration with margins
/// frozen) assembled into a starting state near the posterior mode.
FullState init_pipeline(const Model& model, const SamplerConfig& cfg,
                        Rng& rng);

/// Initialization pipeline followed by the full MwG chain.
PosteriorDraws run_chain(const Model& model, const SamplerConfig& cfg);

}  // namespace ccgp
