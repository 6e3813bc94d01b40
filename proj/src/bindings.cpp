// Python bindings for the main operations: copula math, scenario
// generation, model fitting, selection criteria and the permutation test.

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "ccgp/datagen.hpp"
#include "ccgp/io.hpp"
#include "ccgp/mcmc.hpp"
#include "ccgp/sa_test.hpp"
#include "ccgp/selection.hpp"

namespace py = pybind11;
using namespace ccgp;

namespace {

CopulaParam make_param(const std::string& family, double theta) {
  return CopulaParam(family_from_string(family), theta);
}

ModelSpec make_spec(const std::string& family, const std::string& calibration,
                    bool uniform_margins, int m) {
  ModelSpec spec;
  spec.family = family_from_string(family);
  int idx = 0;
  spec.calib = calib_kind_from_string(calibration, &idx);
  spec.single_index = idx;
  spec.margins =
      uniform_margins ? MarginModel::uniform : MarginModel::gaussian_gp;
  spec.m = spec.m1 = spec.m2 = m;
  return spec;
}

Dataset make_dataset(const Eigen::VectorXd& y1, const Eigen::VectorXd& y2,
                     const Eigen::MatrixXd& x, bool normalize_data) {
  if (normalize_data) return normalize(y1, y2, x);
  Dataset d;
  d.y1 = y1;
  d.y2 = y2;
  d.x = x;
  d.norm = Normalization::identity(int(x.cols()));
  d.check();
  return d;
}

/// Fitted model handle: the posterior draws plus everything needed to
/// predict and score.
struct Fit {
  Model model;
  PosteriorDraws draws;

  Eigen::VectorXd tau_mean(const Eigen::MatrixXd& x) const {
    return posterior_tau_mean(model, draws, x);
  }

  Eigen::MatrixXd tau_draws(const Eigen::MatrixXd& x) const {
    Eigen::MatrixXd out(draws.size(), x.rows());
    PredCache cache;
    for (int t = 0; t < draws.size(); ++t) {
      const Eigen::VectorXd f = calibration_values_cached(
          x, draws.states[t].calib, model.z_calib, cache);
      for (int i = 0; i < x.rows(); ++i)
        out(t, i) = tau_from_theta(inv_link(draws.states[t].family, f[i]));
    }
    return out;
  }

  Eigen::MatrixXd beta_draws() const {
    if (!std::holds_alternative<GpSimCalib>(draws.states.front().calib))
      throw std::runtime_error("beta_draws: not a GP-SIM fit");
    Eigen::MatrixXd out(draws.size(), model.data.q());
    for (int t = 0; t < draws.size(); ++t)
      out.row(t) = std::get<GpSimCalib>(draws.states[t].calib).beta.transpose();
    return out;
  }

  Eigen::MatrixXd sigma2_draws() const {
    Eigen::MatrixXd out(draws.size(), 2);
    for (int t = 0; t < draws.size(); ++t) {
      out(t, 0) = draws.states[t].marg1.sigma2;
      out(t, 1) = draws.states[t].marg2.sigma2;
    }
    return out;
  }

  py::dict acceptance() const {
    py::dict d;
    d["w1"] = draws.acceptance.w1;
    d["w2"] = draws.acceptance.w2;
    d["w_calib"] = draws.acceptance.w_calib;
    d["sigma1"] = draws.acceptance.sigma1;
    d["sigma2"] = draws.acceptance.sigma2;
    d["beta"] = draws.acceptance.beta;
    d["const_theta"] = draws.acceptance.const_theta;
    return d;
  }

  py::dict criteria_dict() const {
    const CriterionValues v = criteria(model, draws);
    py::dict d;
    d["cvml"] = v.cvml;
    d["ccvml"] = v.ccvml;
    d["waic"] = v.waic;
    d["waic_fit"] = v.waic_fit;
    d["waic_penalty"] = v.waic_penalty;
    d["n_draws"] = v.n_draws;
    return d;
  }

  void save(const std::string& path) const { save_draws(draws, model, path); }
};

Fit fit_impl(const Eigen::VectorXd& y1, const Eigen::VectorXd& y2,
             const Eigen::MatrixXd& x, const std::string& family,
             const std::string& calibration, bool uniform_margins, int iters,
             int burn_in, int thin, int m, std::uint64_t seed,
             bool normalize_data) {
  const Dataset data = make_dataset(y1, y2, x, normalize_data);
  const ModelSpec spec = make_spec(family, calibration, uniform_margins, m);
  Model model = Model::build(data, spec, seed);
  SamplerConfig cfg;
  cfg.iters = iters;
  cfg.burn_in = burn_in;
  cfg.thin = thin;
  cfg.seed = seed;
  PosteriorDraws draws = run_chain(model, cfg);
  return Fit{std::move(model), std::move(draws)};
}

py::dict sa_test_impl(const Fit& fit, const Eigen::VectorXd& y1,
                      const Eigen::VectorXd& y2, const Eigen::MatrixXd& x,
                      int n_perms, std::uint64_t perm_seed, int jobs) {
  Dataset test;
  test.y1 = y1;
  test.y2 = y2;
  test.x = x;
  test.norm = fit.model.data.norm;
  const PredictiveTable tab = predictive_table(fit.model, fit.draws, test);
  const EvidenceReport rc =
      sa_evidence(tab, n_perms, perm_seed, SaCriterion::cvml, jobs);
  const EvidenceReport rcc =
      sa_evidence(tab, n_perms, perm_seed, SaCriterion::ccvml, jobs);
  auto pack = [](const EvidenceReport& r) {
    py::dict d;
    d["observed"] = r.observed;
    d["permuted"] = r.permuted;
    d["ev"] = r.ev;
    d["supports_sa"] = r.supports_sa;
    d["degenerate_constant"] = r.degenerate_constant;
    return d;
  };
  py::dict out;
  out["cvml"] = pack(rc);
  out["ccvml"] = pack(rcc);
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, mod) {
  mod.doc() =
      "Bivariate conditional copula models with sparse GP-SIM calibration";

  mod.def(
      "log_density",
      [](const std::string& family, double u1, double u2, double theta) {
        return log_density(make_param(family, theta), u1, u2);
      },
      py::arg("family"), py::arg("u1"), py::arg("u2"), py::arg("theta"));
  mod.def(
      "cdf",
      [](const std::string& family, double u1, double u2, double theta) {
        return cdf(make_param(family, theta), u1, u2);
      },
      py::arg("family"), py::arg("u1"), py::arg("u2"), py::arg("theta"));
  mod.def(
      "h_function",
      [](const std::string& family, double u1, double u2, double theta) {
        return h_function(make_param(family, theta), u1, u2);
      },
      py::arg("family"), py::arg("u1"), py::arg("u2"), py::arg("theta"));
  mod.def(
      "inv_link",
      [](const std::string& family, double f) {
        return inv_link(family_from_string(family), f).theta();
      },
      py::arg("family"), py::arg("f"));
  mod.def(
      "tau_from_theta",
      [](const std::string& family, double theta) {
        return tau_from_theta(make_param(family, theta));
      },
      py::arg("family"), py::arg("theta"));
  mod.def(
      "theta_from_tau",
      [](const std::string& family, double tau) {
        return theta_from_tau(family_from_string(family), tau).theta();
      },
      py::arg("family"), py::arg("tau"));
  mod.def(
      "cond_expectation_u",
      [](const std::string& family, double u2, double theta) {
        return cond_expectation_u(make_param(family, theta), u2);
      },
      py::arg("family"), py::arg("u2"), py::arg("theta"));
  mod.def(
      "sample_pairs",
      [](const std::string& family, double theta, int n, std::uint64_t seed) {
        const CopulaParam p = make_param(family, theta);
        Rng rng(seed);
        Eigen::MatrixXd out(n, 2);
        for (int i = 0; i < n; ++i) {
          const auto [u1, u2] = sample_pair(p, rng);
          out(i, 0) = u1;
          out(i, 1) = u2;
        }
        return out;
      },
      py::arg("family"), py::arg("theta"), py::arg("n"), py::arg("seed") = 1);

  mod.def(
      "generate_scenario",
      [](const std::string& scenario, int n, const std::string& family,
         std::uint64_t seed, bool uniform_margins) {
        const GeneratedData g =
            generate(Scenario::get(scenario_from_string(scenario)), n,
                     family_from_string(family), seed, uniform_margins);
        py::dict out;
        out["y1"] = g.data.y1;
        out["y2"] = g.data.y2;
        out["x"] = g.data.x;
        out["tau"] = g.truth.tau;
        out["f1"] = g.truth.f1;
        out["f2"] = g.truth.f2;
        return out;
      },
      py::arg("scenario"), py::arg("n"), py::arg("family") = "clayton",
      py::arg("seed") = 1, py::arg("uniform_margins") = false);

  py::class_<Fit>(mod, "Fit")
      .def("tau_mean", &Fit::tau_mean, py::arg("x"))
      .def("tau_draws", &Fit::tau_draws, py::arg("x"))
      .def("beta_draws", &Fit::beta_draws)
      .def("sigma2_draws", &Fit::sigma2_draws)
      .def("acceptance", &Fit::acceptance)
      .def("criteria", &Fit::criteria_dict)
      .def("save", &Fit::save, py::arg("path"))
      .def_property_readonly(
          "n_draws", [](const Fit& f) { return f.draws.size(); });

  mod.def("fit", &fit_impl, py::arg("y1"), py::arg("y2"), py::arg("x"),
          py::arg("family") = "clayton", py::arg("calibration") = "gpsim",
          py::arg("uniform_margins") = false, py::arg("iters") = 5000,
          py::arg("burn_in") = -1, py::arg("thin") = 1, py::arg("m") = 30,
          py::arg("seed") = 1, py::arg("normalize") = false);

  mod.def("sa_test", &sa_test_impl, py::arg("fit"), py::arg("y1"),
          py::arg("y2"), py::arg("x"), py::arg("n_perms") = 500,
          py::arg("perm_seed") = 1, py::arg("jobs") = 1);

  mod.def(
      "split_train_test",
      [](const Eigen::VectorXd& y1, const Eigen::VectorXd& y2,
         const Eigen::MatrixXd& x, double train_frac, std::uint64_t seed) {
        Dataset d = make_dataset(y1, y2, x, false);
        const SplitData sp = split_train_test(d, train_frac, seed);
        py::dict out;
        out["train_idx"] = sp.train_idx;
        out["test_idx"] = sp.test_idx;
        return out;
      },
      py::arg("y1"), py::arg("y2"), py::arg("x"),
      py::arg("train_frac") = 2.0 / 3.0, py::arg("seed") = 1);

  mod.attr("__version__") = "0.1.0";
}
