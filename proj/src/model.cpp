#include "ccgp/model.hpp"

#include <cmath>
#include <stdexcept>

#include "ccgp/dist.hpp"

namespace ccgp {

namespace {

constexpr double w_prior_var = 5.0;
constexpr double ig_shape = 0.1;
constexpr double ig_rate = 0.1;

double normal_iid_logpdf(const Eigen::VectorXd& v, double var) {
  return -0.5 * v.size() * (log_2pi + std::log(var)) -
         0.5 * v.squaredNorm() / var;
}

}  // namespace

CalibKind calib_kind_from_string(std::string_view name, int* index) {
  if (name == "gpsim") return CalibKind::gpsim;
  if (name == "constant") return CalibKind::constant;
  if (name.rfind("single:", 0) == 0) {
    if (index) *index = std::stoi(std::string(name.substr(7))) - 1;
    return CalibKind::single_covariate;
  }
  throw std::invalid_argument("unknown calibration: " + std::string(name));
}

std::string to_string(CalibKind kind) {
  switch (kind) {
    case CalibKind::gpsim:
      return "gpsim";
    case CalibKind::constant:
      return "constant";
    case CalibKind::single_covariate:
      return "single";
  }
  return "?";
}

std::string ModelSpec::label() const {
  std::string s = ccgp::to_string(family) + ":" + ccgp::to_string(calib);
  if (calib == CalibKind::single_covariate)
    s += ":" + std::to_string(single_index + 1);
  return s;
}

Model Model::build(Dataset data, const ModelSpec& spec, std::uint64_t seed) {
  data.check();
  Model mod;
  mod.spec = spec;
  if (spec.margins == MarginModel::gaussian_gp) {
    mod.z1 = select_inducing_kmeans(data.x, std::min(spec.m1, data.n()),
                                    split_seed(seed, 101));
    mod.z2 = spec.m1 == spec.m2
                 ? mod.z1
                 : select_inducing_kmeans(data.x, std::min(spec.m2, data.n()),
                                          split_seed(seed, 102));
  }
  switch (spec.calib) {
    case CalibKind::gpsim:
      mod.z_calib = inducing_grid_1d(data.q(), spec.m);
      break;
    case CalibKind::single_covariate:
      if (spec.single_index < 0 || spec.single_index >= data.q())
        throw std::invalid_argument("Model: single covariate out of range");
      mod.z_calib = inducing_grid(0.0, 1.0, spec.m);
      break;
    case CalibKind::constant:
      break;
  }
  mod.data = std::move(data);
  return mod;
}

Eigen::VectorXd marginal_means(const Eigen::Ref<const Eigen::MatrixXd>& x,
                               const MarginalState& marg,
                               const InducingSet& z) {
  return interp_matrix(x, z, marg.w).A * marg.f_tilde;
}

Eigen::VectorXd calibration_values(const Eigen::Ref<const Eigen::MatrixXd>& x,
                                   const CalibrationState& calib,
                                   const InducingSet& z_calib) {
  const int n = static_cast<int>(x.rows());
  if (const auto* c = std::get_if<ConstantCalib>(&calib))
    return Eigen::VectorXd::Constant(n, c->f);
  Eigen::MatrixXd proj(n, 1);
  const Eigen::VectorXd* f_tilde = nullptr;
  const KernelParams* w = nullptr;
  if (const auto* c = std::get_if<GpSimCalib>(&calib)) {
    proj.col(0) = x * c->beta;
    f_tilde = &c->f_tilde;
    w = &c->w;
  } else if (const auto* c = std::get_if<SingleCovCalib>(&calib)) {
    proj.col(0) = x.col(c->index);
    f_tilde = &c->f_tilde;
    w = &c->w;
  }
  return interp_matrix(proj, z_calib, *w).A * (*f_tilde);
}

Eigen::VectorXd calibration_thetas(const Eigen::Ref<const Eigen::MatrixXd>& x,
                                   const CalibrationState& calib,
                                   const InducingSet& z_calib,
                                   CopulaFamily family) {
  Eigen::VectorXd f = calibration_values(x, calib, z_calib);
  for (Eigen::Index i = 0; i < f.size(); ++i)
    f[i] = inv_link(family, f[i]).theta();
  return f;
}

namespace {

bool same_vec(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return a.size() == b.size() && (a.array() == b.array()).all();
}

}  // namespace

Eigen::VectorXd marginal_means_cached(const Eigen::Ref<const Eigen::MatrixXd>& x,
                                      const MarginalState& marg,
                                      const InducingSet& z, PredCache& cache) {
  if (!cache.valid || !same_vec(cache.key_w, marg.w.w)) {
    cache.a = interp_matrix(x, z, marg.w).A;
    cache.key_w = marg.w.w;
    cache.key_beta.resize(0);
    cache.valid = true;
  }
  return cache.a * marg.f_tilde;
}

Eigen::VectorXd calibration_values_cached(
    const Eigen::Ref<const Eigen::MatrixXd>& x, const CalibrationState& calib,
    const InducingSet& z_calib, PredCache& cache) {
  const int n = static_cast<int>(x.rows());
  if (const auto* c = std::get_if<ConstantCalib>(&calib))
    return Eigen::VectorXd::Constant(n, c->f);
  const Eigen::VectorXd* f_tilde = nullptr;
  const KernelParams* w = nullptr;
  Eigen::VectorXd beta_key;
  Eigen::MatrixXd proj(n, 1);
  if (const auto* c = std::get_if<GpSimCalib>(&calib)) {
    proj.col(0) = x * c->beta;
    f_tilde = &c->f_tilde;
    w = &c->w;
    beta_key = c->beta;
  } else {
    const auto& sc = std::get<SingleCovCalib>(calib);
    proj.col(0) = x.col(sc.index);
    f_tilde = &sc.f_tilde;
    w = &sc.w;
  }
  if (!cache.valid || !same_vec(cache.key_w, w->w) ||
      !same_vec(cache.key_beta, beta_key)) {
    cache.a = interp_matrix(proj, z_calib, *w).A;
    cache.key_w = w->w;
    cache.key_beta = beta_key;
    cache.valid = true;
  }
  return cache.a * (*f_tilde);
}

double joint_loglik(const Model& model, const FullState& state) {
  const Dataset& d = model.data;
  const int n = d.n();
  Eigen::VectorXd u1(n), u2(n);
  double ll = 0.0;
  if (model.uniform_margins()) {
    u1 = d.y1;
    u2 = d.y2;
  } else {
    const Eigen::VectorXd f1 = marginal_means(d.x, state.marg1, model.z1);
    const Eigen::VectorXd f2 = marginal_means(d.x, state.marg2, model.z2);
    const double s1 = std::sqrt(state.marg1.sigma2);
    const double s2 = std::sqrt(state.marg2.sigma2);
    for (int i = 0; i < n; ++i) {
      const double z1 = (d.y1[i] - f1[i]) / s1;
      const double z2 = (d.y2[i] - f2[i]) / s2;
      ll += norm_logpdf(z1) - std::log(s1) + norm_logpdf(z2) - std::log(s2);
      u1[i] = norm_cdf(z1);
      u2[i] = norm_cdf(z2);
    }
  }
  const Eigen::VectorXd f =
      calibration_values(d.x, state.calib, model.z_calib);
  for (int i = 0; i < n; ++i) {
    ll += log_density(inv_link(state.family, f[i]), u1[i], u2[i]);
  }
  if (!std::isfinite(ll))
    throw std::runtime_error("joint_loglik: non-finite log likelihood");
  return ll;
}

double log_prior(const Model& model, const FullState& state) {
  double lp = 0.0;
  if (!model.uniform_margins()) {
    lp += gp_prior_logpdf(state.marg1.f_tilde, model.z1, state.marg1.w);
    lp += gp_prior_logpdf(state.marg2.f_tilde, model.z2, state.marg2.w);
    lp += normal_iid_logpdf(state.marg1.w.w, w_prior_var);
    lp += normal_iid_logpdf(state.marg2.w.w, w_prior_var);
    if (state.marg1.sigma2 <= 0.0 || state.marg2.sigma2 <= 0.0)
      throw std::domain_error("log_prior: sigma2 must be positive");
    lp += invgamma_logpdf(state.marg1.sigma2, ig_shape, ig_rate);
    lp += invgamma_logpdf(state.marg2.sigma2, ig_shape, ig_rate);
  }
  if (const auto* c = std::get_if<GpSimCalib>(&state.calib)) {
    lp += gp_prior_logpdf(c->f_tilde, model.z_calib, c->w);
    lp += normal_iid_logpdf(c->w.w, w_prior_var);
    // beta uniform on the sphere: constant
  } else if (const auto* c = std::get_if<SingleCovCalib>(&state.calib)) {
    lp += gp_prior_logpdf(c->f_tilde, model.z_calib, c->w);
    lp += normal_iid_logpdf(c->w.w, w_prior_var);
  } else if (const auto* c = std::get_if<ConstantCalib>(&state.calib)) {
    lp += normal_logpdf(c->f, 0.0, std::sqrt(w_prior_var));
  }
  return lp;
}

double log_posterior(const Model& model, const FullState& state) {
  return joint_loglik(model, state) + log_prior(model, state);
}

FullState random_state(const Model& model, Rng& rng) {
  FullState st;
  st.family = model.spec.family;
  const int q = model.data.q();
  if (!model.uniform_margins()) {
    st.marg1.w.w = Eigen::VectorXd::Constant(q + 1, -1.0);
    st.marg2.w.w = Eigen::VectorXd::Constant(q + 1, -1.0);
    st.marg1.f_tilde = sample_gp_prior(model.z1, st.marg1.w, rng);
    st.marg2.f_tilde = sample_gp_prior(model.z2, st.marg2.w, rng);
    st.marg1.sigma2 = 1.0;
    st.marg2.sigma2 = 1.0;
  } else {
    st.marg1.f_tilde.resize(0);
    st.marg2.f_tilde.resize(0);
    st.marg1.w.w.resize(0);
    st.marg2.w.w.resize(0);
  }
  switch (model.spec.calib) {
    case CalibKind::gpsim: {
      GpSimCalib c;
      c.beta = runif_sphere(rng, q);
      c.w.w = Eigen::VectorXd::Constant(2, -1.0);
      c.f_tilde = sample_gp_prior(model.z_calib, c.w, rng);
      st.calib = std::move(c);
      break;
    }
    case CalibKind::single_covariate: {
      SingleCovCalib c;
      c.index = model.spec.single_index;
      c.w.w = Eigen::VectorXd::Constant(2, -1.0);
      c.f_tilde = sample_gp_prior(model.z_calib, c.w, rng);
      st.calib = std::move(c);
      break;
    }
    case CalibKind::constant: {
      ConstantCalib c;
      c.f = rnorm(rng) * std::sqrt(w_prior_var);
      st.calib = c;
      break;
    }
  }
  return st;
}

}  // namespace ccgp
