#include "ccgp/mcmc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "ccgp/dist.hpp"

namespace ccgp {

namespace {

constexpr double neg_inf = -std::numeric_limits<double>::infinity();
constexpr double w_prior_var = 5.0;
constexpr double ig_shape = 0.1;
constexpr double ig_rate = 0.1;

double normal_iid_logpdf(const Eigen::VectorXd& v, double var) {
  return -0.5 * v.size() * (log_2pi + std::log(var)) -
         0.5 * v.squaredNorm() / var;
}

double rbeta_sym(Rng& rng, double a) {
  std::gamma_distribution<double> g(a, 1.0);
  const double x = g(rng), y = g(rng);
  return x / (x + y);
}

}  // namespace

void SamplerConfig::validate() const {
  if (iters < 2) throw std::invalid_argument("SamplerConfig: iters too small");
  if (effective_burn_in() >= iters)
    throw std::invalid_argument("SamplerConfig: burn_in must be < iters");
  if (thin < 1) throw std::invalid_argument("SamplerConfig: thin must be >= 1");
}

Eigen::VectorXd sample_vmf(const Eigen::Ref<const Eigen::VectorXd>& mu,
                           double kappa, Rng& rng) {
  const int q = static_cast<int>(mu.size());
  if (q < 1) throw std::invalid_argument("sample_vmf: empty mean direction");
  if (kappa < 0.0) throw std::invalid_argument("sample_vmf: kappa < 0");
  if (std::abs(mu.norm() - 1.0) > 1e-8)
    throw std::invalid_argument("sample_vmf: mu must have unit norm");
  if (q == 1) {
    // S^0 = {-1, +1}: p(x) proportional to exp(kappa x mu)
    const double p_plus = 1.0 / (1.0 + std::exp(-2.0 * kappa));
    return (runif(rng) < p_plus ? 1.0 : -1.0) * mu;
  }

  // Wood (1994) rejection sampler for the cosine w = x . mu
  const double d = q - 1.0;
  const double b = (-2.0 * kappa + std::sqrt(4.0 * kappa * kappa + d * d)) / d;
  const double x0 = (1.0 - b) / (1.0 + b);
  const double c = kappa * x0 + d * std::log(1.0 - x0 * x0);
  double w = 0.0;
  for (int it = 0; it < 10000; ++it) {
    const double z = rbeta_sym(rng, 0.5 * d);
    w = (1.0 - (1.0 + b) * z) / (1.0 - (1.0 - b) * z);
    const double u = runif(rng);
    if (kappa * w + d * std::log(1.0 - x0 * w) - c >= std::log(u)) break;
  }

  // Tangent direction: standard normal projected off mu.
  Eigen::VectorXd v = rnorm_vec(rng, q);
  v -= v.dot(mu) * mu;
  double nv = v.norm();
  while (nv < 1e-12) {
    v = rnorm_vec(rng, q);
    v -= v.dot(mu) * mu;
    nv = v.norm();
  }
  Eigen::VectorXd x = w * mu + std::sqrt(std::max(0.0, 1.0 - w * w)) * v / nv;
  return x / x.norm();
}

EssOutcome ess_update(
    Eigen::VectorXd& f, const Eigen::MatrixXd& chol_lower,
    const std::function<double(const Eigen::VectorXd&)>& loglik,
    double cur_loglik, Rng& rng) {
  const Eigen::VectorXd nu = sample_gp_prior(chol_lower, rng);
  const double logy = cur_loglik + std::log(runif(rng));
  const double tau = 2.0 * std::numbers::pi;
  double theta = runif(rng, 0.0, tau);
  double theta_min = theta - tau;
  double theta_max = theta;
  int proposals = 0;
  while (true) {
    ++proposals;
    const Eigen::VectorXd f_prop =
        std::cos(theta) * f + std::sin(theta) * nu;
    const double ll = loglik(f_prop);
    if (ll > logy) {
      f = f_prop;
      return {ll, proposals};
    }
    if (theta < 0.0)
      theta_min = theta;
    else
      theta_max = theta;
    theta = runif(rng, theta_min, theta_max);
    if (proposals > 10000)
      throw std::runtime_error("ess_update: bracket failed to terminate");
  }
}

bool rwm_step(Eigen::VectorXd& x, double step_sd,
              const std::function<double(const Eigen::VectorXd&)>& log_target,
              double& cur_lp, Rng& rng) {
  const Eigen::VectorXd prop = x + step_sd * rnorm_vec(rng, x.size());
  const double lp = log_target(prop);
  if (std::log(runif(rng)) < lp - cur_lp) {
    x = prop;
    cur_lp = lp;
    return true;
  }
  return false;
}

Sampler::Sampler(const Model& model, const SamplerConfig& cfg, FullState init,
                 Rng rng)
    : m_(model), cfg_(cfg), rng_(rng), st_(std::move(init)) {
  rebuild_all();
  if (!std::isfinite(loglik()))
    throw std::runtime_error("Sampler: initial state has non-finite loglik");
}

double Sampler::gauss_of(const Eigen::VectorXd& resid, double sigma2) const {
  const double n = static_cast<double>(resid.size());
  return -0.5 * n * (log_2pi + std::log(sigma2)) -
         0.5 * resid.squaredNorm() / sigma2;
}

Eigen::VectorXd Sampler::pit_of(const Eigen::VectorXd& resid,
                                double sigma2) const {
  const double s = std::sqrt(sigma2);
  Eigen::VectorXd u(resid.size());
  for (Eigen::Index i = 0; i < resid.size(); ++i)
    u[i] = norm_cdf(resid[i] / s);
  return u;
}

double Sampler::copsum_of(const Eigen::VectorXd& u1, const Eigen::VectorXd& u2,
                          const Eigen::VectorXd& fcal) const {
  double s = 0.0;
  for (Eigen::Index i = 0; i < u1.size(); ++i) {
    s += log_density(inv_link(st_.family, fcal[i]), u1[i], u2[i]);
    if (s == neg_inf) return neg_inf;
  }
  return s;
}

void Sampler::refresh_margin(int j) {
  const Dataset& d = m_.data;
  if (j == 1) {
    f1_ = b1_.A * st_.marg1.f_tilde;
    r1_ = d.y1 - f1_;
    u1_ = pit_of(r1_, st_.marg1.sigma2);
    gauss1_ = gauss_of(r1_, st_.marg1.sigma2);
  } else {
    f2_ = b2_.A * st_.marg2.f_tilde;
    r2_ = d.y2 - f2_;
    u2_ = pit_of(r2_, st_.marg2.sigma2);
    gauss2_ = gauss_of(r2_, st_.marg2.sigma2);
  }
}

void Sampler::refresh_calib() {
  const int n = m_.data.n();
  if (const auto* c = std::get_if<ConstantCalib>(&st_.calib)) {
    fcal_ = Eigen::VectorXd::Constant(n, c->f);
    return;
  }
  if (const auto* c = std::get_if<GpSimCalib>(&st_.calib)) {
    proj_ = m_.data.x * c->beta;
    chol_calib_ = chol_kernel(m_.z_calib.points, c->w);
    a_calib_ = interp_rows(proj_, m_.z_calib, c->w, chol_calib_);
    fcal_ = a_calib_ * c->f_tilde;
  } else if (const auto* c = std::get_if<SingleCovCalib>(&st_.calib)) {
    proj_ = m_.data.x.col(c->index);
    chol_calib_ = chol_kernel(m_.z_calib.points, c->w);
    a_calib_ = interp_rows(proj_, m_.z_calib, c->w, chol_calib_);
    fcal_ = a_calib_ * c->f_tilde;
  }
}

void Sampler::rebuild_all() {
  const Dataset& d = m_.data;
  if (m_.uniform_margins()) {
    u1_ = d.y1;
    u2_ = d.y2;
    gauss1_ = gauss2_ = 0.0;
  } else {
    b1_ = interp_matrix(d.x, m_.z1, st_.marg1.w);
    b2_ = interp_matrix(d.x, m_.z2, st_.marg2.w);
    refresh_margin(1);
    refresh_margin(2);
  }
  refresh_calib();
  copsum_ = copsum_of(u1_, u2_, fcal_);
}

bool Sampler::update_w1() {
  MarginalState& mg = st_.marg1;
  const Eigen::VectorXd w_prop =
      mg.w.w + step_w1 * rnorm_vec(rng_, mg.w.w.size());
  const KernelParams kp{w_prop};
  GPBlock b;
  try {
    b = interp_matrix(m_.data.x, m_.z1, kp);
  } catch (const std::runtime_error&) {
    return false;  // numerically degenerate proposal
  }
  const Eigen::VectorXd f = b.A * mg.f_tilde;
  const Eigen::VectorXd r = m_.data.y1 - f;
  const double gauss = gauss_of(r, mg.sigma2);
  const Eigen::VectorXd u = pit_of(r, mg.sigma2);
  const double cop = copsum_of(u, u2_, fcal_);
  const double log_r = (gauss + cop + gp_prior_logpdf(mg.f_tilde, b.chol_kzz) +
                        normal_iid_logpdf(w_prop, w_prior_var)) -
                       (gauss1_ + copsum_ +
                        gp_prior_logpdf(mg.f_tilde, b1_.chol_kzz) +
                        normal_iid_logpdf(mg.w.w, w_prior_var));
  if (std::log(runif(rng_)) < log_r) {
    mg.w.w = w_prop;
    b1_ = std::move(b);
    f1_ = f;
    r1_ = r;
    u1_ = u;
    gauss1_ = gauss;
    copsum_ = cop;
    return true;
  }
  return false;
}

bool Sampler::update_w2() {
  MarginalState& mg = st_.marg2;
  const Eigen::VectorXd w_prop =
      mg.w.w + step_w2 * rnorm_vec(rng_, mg.w.w.size());
  const KernelParams kp{w_prop};
  GPBlock b;
  try {
    b = interp_matrix(m_.data.x, m_.z2, kp);
  } catch (const std::runtime_error&) {
    return false;
  }
  const Eigen::VectorXd f = b.A * mg.f_tilde;
  const Eigen::VectorXd r = m_.data.y2 - f;
  const double gauss = gauss_of(r, mg.sigma2);
  const Eigen::VectorXd u = pit_of(r, mg.sigma2);
  const double cop = copsum_of(u1_, u, fcal_);
  const double log_r = (gauss + cop + gp_prior_logpdf(mg.f_tilde, b.chol_kzz) +
                        normal_iid_logpdf(w_prop, w_prior_var)) -
                       (gauss2_ + copsum_ +
                        gp_prior_logpdf(mg.f_tilde, b2_.chol_kzz) +
                        normal_iid_logpdf(mg.w.w, w_prior_var));
  if (std::log(runif(rng_)) < log_r) {
    mg.w.w = w_prop;
    b2_ = std::move(b);
    f2_ = f;
    r2_ = r;
    u2_ = u;
    gauss2_ = gauss;
    copsum_ = cop;
    return true;
  }
  return false;
}

bool Sampler::update_w_calib() {
  Eigen::VectorXd* w_cur = nullptr;
  const Eigen::VectorXd* f_tilde = nullptr;
  if (auto* c = std::get_if<GpSimCalib>(&st_.calib)) {
    w_cur = &c->w.w;
    f_tilde = &c->f_tilde;
  } else if (auto* c = std::get_if<SingleCovCalib>(&st_.calib)) {
    w_cur = &c->w.w;
    f_tilde = &c->f_tilde;
  } else {
    return false;
  }
  const Eigen::VectorXd w_prop =
      *w_cur + step_w_calib * rnorm_vec(rng_, w_cur->size());
  const KernelParams kp{w_prop};
  Eigen::MatrixXd chol;
  try {
    chol = chol_kernel(m_.z_calib.points, kp);
  } catch (const std::runtime_error&) {
    return false;
  }
  const Eigen::MatrixXd a = interp_rows(proj_, m_.z_calib, kp, chol);
  const Eigen::VectorXd fcal = a * (*f_tilde);
  const double cop = copsum_of(u1_, u2_, fcal);
  const double log_r =
      (cop + gp_prior_logpdf(*f_tilde, chol) +
       normal_iid_logpdf(w_prop, w_prior_var)) -
      (copsum_ + gp_prior_logpdf(*f_tilde, chol_calib_) +
       normal_iid_logpdf(*w_cur, w_prior_var));
  if (std::log(runif(rng_)) < log_r) {
    *w_cur = w_prop;
    chol_calib_ = std::move(chol);
    a_calib_ = a;
    fcal_ = fcal;
    copsum_ = cop;
    return true;
  }
  return false;
}

std::pair<double, double> Sampler::ig_proposal_params(int j) const {
  const Eigen::VectorXd& r = j == 1 ? r1_ : r2_;
  return {ig_shape + 0.5 * r.size(), ig_rate + 0.5 * r.squaredNorm()};
}

double Sampler::im_log_ratio_reduced(int j, double s2_star) const {
  const Eigen::VectorXd u_star = pit_of(j == 1 ? r1_ : r2_, s2_star);
  const double cop = j == 1 ? copsum_of(u_star, u2_, fcal_)
                            : copsum_of(u1_, u_star, fcal_);
  return cop - copsum_;
}

double Sampler::im_log_ratio_full(int j, double s2_star) const {
  const Eigen::VectorXd& r = j == 1 ? r1_ : r2_;
  const double s2_cur = j == 1 ? st_.marg1.sigma2 : st_.marg2.sigma2;
  const auto [a, b] = ig_proposal_params(j);
  const Eigen::VectorXd u_star = pit_of(r, s2_star);
  const double cop_star = j == 1 ? copsum_of(u_star, u2_, fcal_)
                                 : copsum_of(u1_, u_star, fcal_);
  const double cop_cur = copsum_;
  const double post_star = gauss_of(r, s2_star) + cop_star +
                           invgamma_logpdf(s2_star, ig_shape, ig_rate);
  const double post_cur = gauss_of(r, s2_cur) + cop_cur +
                          invgamma_logpdf(s2_cur, ig_shape, ig_rate);
  return (post_star - post_cur) +
         (invgamma_logpdf(s2_cur, a, b) - invgamma_logpdf(s2_star, a, b));
}

bool Sampler::update_sigma2(int j) {
  const auto [a, b] = ig_proposal_params(j);
  const double s2_star = rinvgamma(rng_, a, b);
  // Gaussian-likelihood, prior, and proposal terms cancel; the ratio is
  // the copula factor alone.
  const double log_r = im_log_ratio_reduced(j, s2_star);
  if (std::log(runif(rng_)) < log_r) {
    if (j == 1) {
      st_.marg1.sigma2 = s2_star;
      u1_ = pit_of(r1_, s2_star);
      gauss1_ = gauss_of(r1_, s2_star);
    } else {
      st_.marg2.sigma2 = s2_star;
      u2_ = pit_of(r2_, s2_star);
      gauss2_ = gauss_of(r2_, s2_star);
    }
    copsum_ = copsum_of(u1_, u2_, fcal_);
    return true;
  }
  return false;
}

bool Sampler::update_beta() {
  auto* c = std::get_if<GpSimCalib>(&st_.calib);
  if (!c) return false;
  Eigen::VectorXd beta_prop = sample_vmf(c->beta, kappa, rng_);
  beta_prop /= beta_prop.norm();
  const Eigen::VectorXd proj = m_.data.x * beta_prop;
  const Eigen::MatrixXd a = interp_rows(proj, m_.z_calib, c->w, chol_calib_);
  const Eigen::VectorXd fcal = a * c->f_tilde;
  const double cop = copsum_of(u1_, u2_, fcal);
  // VMF proposal is symmetric in (mu, x); prior on the sphere is uniform.
  if (std::log(runif(rng_)) < cop - copsum_) {
    c->beta = beta_prop;
    proj_ = proj;
    a_calib_ = a;
    fcal_ = fcal;
    copsum_ = cop;
    return true;
  }
  return false;
}

void Sampler::update_f1() {
  MarginalState& mg = st_.marg1;
  const Dataset& d = m_.data;
  auto ll = [&](const Eigen::VectorXd& ft) {
    const Eigen::VectorXd r = d.y1 - b1_.A * ft;
    return gauss_of(r, mg.sigma2) +
           copsum_of(pit_of(r, mg.sigma2), u2_, fcal_);
  };
  ess_update(mg.f_tilde, b1_.chol_kzz, ll, gauss1_ + copsum_, rng_);
  refresh_margin(1);
  copsum_ = copsum_of(u1_, u2_, fcal_);
}

void Sampler::update_f2() {
  MarginalState& mg = st_.marg2;
  const Dataset& d = m_.data;
  auto ll = [&](const Eigen::VectorXd& ft) {
    const Eigen::VectorXd r = d.y2 - b2_.A * ft;
    return gauss_of(r, mg.sigma2) +
           copsum_of(u1_, pit_of(r, mg.sigma2), fcal_);
  };
  ess_update(mg.f_tilde, b2_.chol_kzz, ll, gauss2_ + copsum_, rng_);
  refresh_margin(2);
  copsum_ = copsum_of(u1_, u2_, fcal_);
}

void Sampler::update_f_calib() {
  Eigen::VectorXd* f_tilde = nullptr;
  if (auto* c = std::get_if<GpSimCalib>(&st_.calib))
    f_tilde = &c->f_tilde;
  else if (auto* c = std::get_if<SingleCovCalib>(&st_.calib))
    f_tilde = &c->f_tilde;
  else
    return;
  auto ll = [&](const Eigen::VectorXd& ft) {
    return copsum_of(u1_, u2_, a_calib_ * ft);
  };
  ess_update(*f_tilde, chol_calib_, ll, copsum_, rng_);
  fcal_ = a_calib_ * (*f_tilde);
  copsum_ = copsum_of(u1_, u2_, fcal_);
}

bool Sampler::update_const_theta() {
  auto* c = std::get_if<ConstantCalib>(&st_.calib);
  if (!c) return false;
  const double f_prop = c->f + step_theta * rnorm(rng_);
  const Eigen::VectorXd fcal =
      Eigen::VectorXd::Constant(m_.data.n(), f_prop);
  const double cop = copsum_of(u1_, u2_, fcal);
  const double log_r =
      (cop + normal_logpdf(f_prop, 0.0, std::sqrt(w_prior_var))) -
      (copsum_ + normal_logpdf(c->f, 0.0, std::sqrt(w_prior_var)));
  if (std::log(runif(rng_)) < log_r) {
    c->f = f_prop;
    fcal_ = fcal;
    copsum_ = cop;
    return true;
  }
  return false;
}

void Sampler::sweep(bool adapt) {
  const bool margins = !m_.uniform_margins() && !freeze_margins_;
  const bool constant = std::holds_alternative<ConstantCalib>(st_.calib);
  const bool gpsim = std::holds_alternative<GpSimCalib>(st_.calib);

  if (margins) {
    const bool a1 = update_w1();
    const bool a2 = update_w2();
    win_w1_.add(a1);
    win_w2_.add(a2);
    if (tally_post_) {
      post_w1_.add(a1);
      post_w2_.add(a2);
    }
  }
  if (!constant) {
    const bool a = update_w_calib();
    win_wc_.add(a);
    if (tally_post_) post_wc_.add(a);
  }
  if (margins) {
    const bool a1 = update_sigma2(1);
    const bool a2 = update_sigma2(2);
    win_s1_.add(a1);
    win_s2_.add(a2);
    if (tally_post_) {
      post_s1_.add(a1);
      post_s2_.add(a2);
    }
  }
  if (gpsim) {
    const bool a = update_beta();
    win_beta_.add(a);
    if (tally_post_) post_beta_.add(a);
  }
  if (margins) {
    update_f1();
    update_f2();
  }
  if (constant) {
    const bool a = update_const_theta();
    win_th_.add(a);
    if (tally_post_) post_th_.add(a);
  } else {
    update_f_calib();
  }

  if (!std::isfinite(loglik()))
    throw std::runtime_error("Sampler: non-finite log likelihood in sweep");

  if (adapt) {
    if (++window_iters_ >= cfg_.adapt_window) {
      adapt_steps();
      window_iters_ = 0;
    }
  }
}

void Sampler::adapt_steps() {
  ++window_index_;
  const double gain =
      std::clamp(1.0 / std::sqrt(static_cast<double>(window_index_)), 0.05,
                 1.0);
  auto tune = [&](Counter& c, double& step) {
    if (c.tot > 0) {
      step = std::clamp(
          step * std::exp(gain * (c.rate() - cfg_.target_accept)), 1e-4, 10.0);
    }
    c.reset();
  };
  tune(win_w1_, step_w1);
  tune(win_w2_, step_w2);
  tune(win_wc_, step_w_calib);
  tune(win_th_, step_theta);
  if (win_beta_.tot > 0) {
    // larger kappa = smaller moves, so the sign flips
    kappa = std::clamp(
        kappa * std::exp(-gain * (win_beta_.rate() - cfg_.target_accept)),
        1.0, 1e7);
  }
  win_beta_.reset();
  win_s1_.reset();
  win_s2_.reset();
}

PosteriorDraws Sampler::run() {
  const int burn = cfg_.effective_burn_in();
  PosteriorDraws out;
  out.spec = m_.spec;
  out.config = cfg_;
  out.seed = cfg_.seed;
  out.thin = cfg_.thin;
  out.states.reserve((cfg_.iters - burn) / cfg_.thin + 1);
  for (int t = 0; t < cfg_.iters; ++t) {
    if (t == burn) tally_post_ = true;
    sweep(/*adapt=*/t < burn);
    if (t >= burn && (t - burn) % cfg_.thin == 0) out.states.push_back(st_);
  }
  out.acceptance.w1 = post_w1_.rate();
  out.acceptance.w2 = post_w2_.rate();
  out.acceptance.w_calib = post_wc_.rate();
  out.acceptance.sigma1 = post_s1_.rate();
  out.acceptance.sigma2 = post_s2_.rate();
  out.acceptance.beta = post_beta_.rate();
  out.acceptance.const_theta = post_th_.rate();
  return out;
}

namespace {

// Short no-copula chain for one margin; returns second-half means.
MarginalState fit_margin_gp(const Eigen::VectorXd& y, const Dataset& d,
                            const InducingSet& z, int iters, Rng& rng) {
  const int q = d.q();
  MarginalState mg;
  mg.w.w = Eigen::VectorXd::Constant(q + 1, -1.0);
  mg.f_tilde = Eigen::VectorXd::Zero(z.m());
  mg.sigma2 = 1.0;

  GPBlock b = interp_matrix(d.x, z, mg.w);
  double step = 0.15;
  int win_acc = 0, win_tot = 0, win_idx = 0;

  Eigen::VectorXd sum_f = Eigen::VectorXd::Zero(z.m());
  Eigen::VectorXd sum_w = Eigen::VectorXd::Zero(q + 1);
  double sum_s2 = 0.0;
  int n_avg = 0;

  for (int t = 0; t < iters; ++t) {
    // RWM on w against the margin-only posterior
    {
      const Eigen::VectorXd w_prop =
          mg.w.w + step * rnorm_vec(rng, q + 1);
      const KernelParams kp{w_prop};
      bool ok = true;
      GPBlock bp;
      try {
        bp = interp_matrix(d.x, z, kp);
      } catch (const std::runtime_error&) {
        ok = false;
      }
      if (ok) {
        auto gauss = [&](const GPBlock& blk) {
          const Eigen::VectorXd r = y - blk.A * mg.f_tilde;
          return -0.5 * r.size() * (log_2pi + std::log(mg.sigma2)) -
                 0.5 * r.squaredNorm() / mg.sigma2;
        };
        const double log_r =
            (gauss(bp) + gp_prior_logpdf(mg.f_tilde, bp.chol_kzz) +
             normal_iid_logpdf(w_prop, w_prior_var)) -
            (gauss(b) + gp_prior_logpdf(mg.f_tilde, b.chol_kzz) +
             normal_iid_logpdf(mg.w.w, w_prior_var));
        if (std::log(runif(rng)) < log_r) {
          mg.w.w = w_prop;
          b = std::move(bp);
          ++win_acc;
        }
      }
      ++win_tot;
      if (win_tot >= 50) {
        const double gain = std::clamp(1.0 / std::sqrt(double(++win_idx)),
                                       0.05, 1.0);
        step = std::clamp(
            step * std::exp(gain * (double(win_acc) / win_tot - 0.30)), 1e-4,
            10.0);
        win_acc = win_tot = 0;
      }
    }
    // Conjugate Gibbs draw for sigma2 (no copula here)
    {
      const Eigen::VectorXd r = y - b.A * mg.f_tilde;
      mg.sigma2 = rinvgamma(rng, ig_shape + 0.5 * r.size(),
                            ig_rate + 0.5 * r.squaredNorm());
    }
    // ESS for the latent values
    {
      auto ll = [&](const Eigen::VectorXd& ft) {
        const Eigen::VectorXd r = y - b.A * ft;
        return -0.5 * r.squaredNorm() / mg.sigma2;
      };
      const Eigen::VectorXd r = y - b.A * mg.f_tilde;
      ess_update(mg.f_tilde, b.chol_kzz, ll,
                 -0.5 * r.squaredNorm() / mg.sigma2, rng);
    }
    if (t >= iters / 2) {
      sum_f += mg.f_tilde;
      sum_w += mg.w.w;
      sum_s2 += mg.sigma2;
      ++n_avg;
    }
  }
  mg.f_tilde = sum_f / n_avg;
  mg.w.w = sum_w / n_avg;
  mg.sigma2 = sum_s2 / n_avg;
  return mg;
}

}  // namespace

FullState init_pipeline(const Model& model, const SamplerConfig& cfg,
                        Rng& rng) {
  FullState st = random_state(model, rng);
  // Latent vectors start at zero. The calibration kernel starts at a short
  // length-scale: a smooth start is a trap (flexible proposals are rejected
  // against a flat surface and the chain takes very long to leave the
  // smooth mode), whereas an over-flexible start relaxes quickly.
  if (auto* c = std::get_if<GpSimCalib>(&st.calib)) {
    c->f_tilde.setZero();
    c->w.w << 0.0, -4.0;
  }
  if (auto* c = std::get_if<SingleCovCalib>(&st.calib)) {
    c->f_tilde.setZero();
    c->w.w << 0.0, -4.0;
  }
  if (auto* c = std::get_if<ConstantCalib>(&st.calib)) c->f = 0.0;

  if (!model.uniform_margins()) {
    st.marg1 =
        fit_margin_gp(model.data.y1, model.data, model.z1, cfg.init_iters, rng);
    st.marg2 =
        fit_margin_gp(model.data.y2, model.data, model.z2, cfg.init_iters, rng);
  }

  // Short calibration-only chain with the margins frozen.
  SamplerConfig sub = cfg;
  sub.iters = std::max(2, cfg.init_iters);
  sub.burn_in = sub.iters - 1;
  Sampler s(model, sub, st, rng);
  s.freeze_margins(true);
  for (int t = 0; t < sub.iters; ++t) s.sweep(/*adapt=*/true);
  rng = s.rng();  // keep the stream deterministic across the pipeline
  return s.state();
}

PosteriorDraws run_chain(const Model& model, const SamplerConfig& cfg) {
  cfg.validate();
  Rng rng(cfg.seed);
  FullState init = cfg.run_init ? init_pipeline(model, cfg, rng)
                                : random_state(model, rng);
  Sampler s(model, cfg, std::move(init), rng);
  PosteriorDraws draws = s.run();
  draws.seed = cfg.seed;
  return draws;
}

}  // namespace ccgp
