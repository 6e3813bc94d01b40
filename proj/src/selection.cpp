#include "ccgp/selection.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "ccgp/dist.hpp"

namespace ccgp {

namespace {

// log( (1/M) sum_t exp(v_t) )
double log_mean_exp(const Eigen::Ref<const Eigen::VectorXd>& v) {
  const double m = v.maxCoeff();
  if (!std::isfinite(m)) return m;
  return m + std::log((v.array() - m).exp().sum()) - std::log(double(v.size()));
}

void check_finite(const Eigen::MatrixXd& a, const char* what) {
  for (int t = 0; t < a.rows(); ++t)
    for (int i = 0; i < a.cols(); ++i)
      if (!std::isfinite(a(t, i)))
        throw std::runtime_error(std::string("selection: non-finite ") + what +
                                 " at draw " + std::to_string(t) +
                                 ", observation " + std::to_string(i));
}

}  // namespace

LoglikTable loglik_table(const Model& model, const PosteriorDraws& draws) {
  const Dataset& d = model.data;
  const int m = draws.size(), n = d.n();
  if (m < 1) throw std::invalid_argument("loglik_table: no draws");
  LoglikTable tab;
  tab.joint.resize(m, n);
  tab.marg1.setZero(m, n);
  tab.marg2.setZero(m, n);
  PredCache c1, c2, cc;
  for (int t = 0; t < m; ++t) {
    const FullState& st = draws.states[t];
    Eigen::VectorXd u1(n), u2(n);
    if (model.uniform_margins()) {
      u1 = d.y1;
      u2 = d.y2;
    } else {
      const Eigen::VectorXd f1 =
          marginal_means_cached(d.x, st.marg1, model.z1, c1);
      const Eigen::VectorXd f2 =
          marginal_means_cached(d.x, st.marg2, model.z2, c2);
      const double s1 = std::sqrt(st.marg1.sigma2);
      const double s2 = std::sqrt(st.marg2.sigma2);
      for (int i = 0; i < n; ++i) {
        const double z1 = (d.y1[i] - f1[i]) / s1;
        const double z2 = (d.y2[i] - f2[i]) / s2;
        tab.marg1(t, i) = norm_logpdf(z1) - std::log(s1);
        tab.marg2(t, i) = norm_logpdf(z2) - std::log(s2);
        u1[i] = norm_cdf(z1);
        u2[i] = norm_cdf(z2);
      }
    }
    const Eigen::VectorXd f =
        calibration_values_cached(d.x, st.calib, model.z_calib, cc);
    for (int i = 0; i < n; ++i) {
      tab.joint(t, i) = tab.marg1(t, i) + tab.marg2(t, i) +
                        log_density(inv_link(st.family, f[i]), u1[i], u2[i]);
    }
  }
  check_finite(tab.joint, "log likelihood");
  return tab;
}

double cvml(const LoglikTable& tab) {
  double total = 0.0;
  for (int i = 0; i < tab.obs(); ++i)
    total -= log_mean_exp(-tab.joint.col(i));
  return total;
}

double ccvml(const LoglikTable& tab) {
  double total = 0.0;
  for (int i = 0; i < tab.obs(); ++i) {
    const Eigen::VectorXd l = tab.joint.col(i);
    total -= 0.5 * log_mean_exp(tab.marg2.col(i) - l);
    total -= 0.5 * log_mean_exp(tab.marg1.col(i) - l);
  }
  return total;
}

Waic waic(const LoglikTable& tab) {
  if (tab.draws() < 2) throw std::invalid_argument("waic: need >= 2 draws");
  Waic out;
  for (int i = 0; i < tab.obs(); ++i) {
    const Eigen::VectorXd l = tab.joint.col(i);
    out.fit += log_mean_exp(l);
    const double mean = l.mean();
    out.penalty += (l.array() - mean).square().sum() / (l.size() - 1.0);
  }
  out.waic = -2.0 * out.fit + 2.0 * out.penalty;
  return out;
}

double cvml(const Model& model, const PosteriorDraws& draws) {
  return cvml(loglik_table(model, draws));
}

double ccvml(const Model& model, const PosteriorDraws& draws) {
  return ccvml(loglik_table(model, draws));
}

Waic waic(const Model& model, const PosteriorDraws& draws) {
  return waic(loglik_table(model, draws));
}

CriterionValues criteria(const Model& model, const PosteriorDraws& draws) {
  const LoglikTable tab = loglik_table(model, draws);
  CriterionValues v;
  v.cvml = cvml(tab);
  v.ccvml = ccvml(tab);
  const Waic w = waic(tab);
  v.waic = w.waic;
  v.waic_fit = w.fit;
  v.waic_penalty = w.penalty;
  v.n_draws = tab.draws();
  return v;
}

namespace {

template <typename Get>
int best_index(const std::vector<SelectionEntry>& entries, Get get,
               bool smallest) {
  if (entries.empty()) return -1;
  int best = 0;
  for (int i = 1; i < static_cast<int>(entries.size()); ++i) {
    const double a = get(entries[i]), b = get(entries[best]);
    if (smallest ? a < b : a > b) best = i;
  }
  return best;
}

}  // namespace

int SelectionReport::best_cvml() const {
  return best_index(
      entries, [](const SelectionEntry& e) { return e.values.cvml; }, false);
}

int SelectionReport::best_ccvml() const {
  return best_index(
      entries, [](const SelectionEntry& e) { return e.values.ccvml; }, false);
}

int SelectionReport::best_waic() const {
  return best_index(
      entries, [](const SelectionEntry& e) { return e.values.waic; }, true);
}

}  // namespace ccgp
