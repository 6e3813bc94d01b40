#include "ccgp/datagen.hpp"

#include <atomic>
#include <cmath>
#include <future>
#include <stdexcept>

#include "ccgp/dist.hpp"

namespace ccgp {

ScenarioId scenario_from_string(std::string_view name) {
  if (name == "sc1") return ScenarioId::sc1;
  if (name == "sc2") return ScenarioId::sc2;
  if (name == "sc3") return ScenarioId::sc3;
  if (name == "sc4") return ScenarioId::sc4;
  if (name == "sc5") return ScenarioId::sc5;
  if (name == "sc6") return ScenarioId::sc6;
  if (name == "misscov") return ScenarioId::misscov;
  throw std::invalid_argument("unknown scenario: " + std::string(name));
}

std::string to_string(ScenarioId id) {
  switch (id) {
    case ScenarioId::sc1:
      return "sc1";
    case ScenarioId::sc2:
      return "sc2";
    case ScenarioId::sc3:
      return "sc3";
    case ScenarioId::sc4:
      return "sc4";
    case ScenarioId::sc5:
      return "sc5";
    case ScenarioId::sc6:
      return "sc6";
    case ScenarioId::misscov:
      return "misscov";
  }
  return "?";
}

Scenario Scenario::get(ScenarioId id) {
  Scenario sc;
  sc.id = id;
  auto f1_std = [](const Eigen::VectorXd& x) {
    return 0.6 * std::sin(5.0 * x[0]) - 0.9 * std::sin(2.0 * x[1]);
  };
  auto f2_std = [](const Eigen::VectorXd& x) {
    return 0.6 * std::sin(3.0 * x[0] + 5.0 * x[1]);
  };
  switch (id) {
    case ScenarioId::sc1: {
      sc.beta = Eigen::Vector2d(1.0, 3.0) / std::sqrt(10.0);
      const Eigen::VectorXd b = sc.beta;
      sc.f1 = f1_std;
      sc.f2 = f2_std;
      sc.calib = [b](const Eigen::VectorXd& x) {
        return 0.7 + 0.15 * std::sin(15.0 * b.dot(x));
      };
      break;
    }
    case ScenarioId::sc2: {
      sc.beta = Eigen::Vector2d(1.0, 3.0) / std::sqrt(10.0);
      const Eigen::VectorXd b = sc.beta;
      sc.f1 = f1_std;
      sc.f2 = f2_std;
      sc.calib = [b](const Eigen::VectorXd& x) {
        return 0.3 * std::sin(5.0 * b.dot(x));
      };
      break;
    }
    case ScenarioId::sc3: {
      sc.q = 10;
      Eigen::VectorXd b(10);
      b << 1, 10, -3, 6, 1, -6, 3, 7, -1, -5;
      b /= std::sqrt(267.0);
      sc.beta = b;
      sc.f1 = [b](const Eigen::VectorXd& x) { return std::cos(b.dot(x)); };
      sc.f2 = [b](const Eigen::VectorXd& x) { return std::sin(b.dot(x)); };
      sc.calib = [b](const Eigen::VectorXd& x) {
        return 0.7 + 0.20 * std::sin(5.0 * b.dot(x));
      };
      break;
    }
    case ScenarioId::sc4:
      sc.f1 = f1_std;
      sc.f2 = f2_std;
      sc.calib = [](const Eigen::VectorXd&) { return 0.5; };
      break;
    case ScenarioId::sc5:
      sc.f1 = f1_std;
      sc.f2 = f2_std;
      sc.eta_scale = true;
      sc.calib = [](const Eigen::VectorXd& x) {
        return 1.0 + 0.7 * std::sin(3.0 * std::pow(x[0], 3)) -
               0.5 * std::cos(6.0 * x[1] * x[1]);
      };
      break;
    case ScenarioId::sc6:
      sc.f1 = f1_std;
      sc.f2 = f2_std;
      sc.eta_scale = true;
      sc.calib = [](const Eigen::VectorXd& x) {
        return 1.0 + 0.7 * x[0] - 0.5 * x[1] * x[1];
      };
      break;
    case ScenarioId::misscov:
      sc.f1 = [](const Eigen::VectorXd& x) {
        return 0.6 * std::sin(5.0 * x[0] + x[1]);
      };
      sc.f2 = [](const Eigen::VectorXd& x) {
        return 0.6 * std::sin(x[0] + 5.0 * x[1]);
      };
      sc.calib = [](const Eigen::VectorXd&) { return 0.5; };
      break;
  }
  return sc;
}

GeneratedData generate(const Scenario& sc, int n, CopulaFamily family,
                       std::uint64_t seed, bool uniform_margins) {
  if (n < 2) throw std::invalid_argument("generate: need n >= 2");
  Rng x_rng(split_seed(seed, 1));
  Eigen::MatrixXd x(n, sc.q);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < sc.q; ++j) x(i, j) = runif(x_rng);
  return generate_with_x(sc, x, family, split_seed(seed, 2), uniform_margins);
}

GeneratedData generate_with_x(const Scenario& sc,
                              const Eigen::Ref<const Eigen::MatrixXd>& x,
                              CopulaFamily family, std::uint64_t seed,
                              bool uniform_margins) {
  const int n = static_cast<int>(x.rows());
  if (x.cols() != sc.q)
    throw std::invalid_argument("generate_with_x: covariate width mismatch");
  Rng rng(seed);
  GeneratedData out;
  out.data.x = x;
  out.data.y1.resize(n);
  out.data.y2.resize(n);
  out.data.norm = Normalization::identity(sc.q);
  out.truth.tau.resize(n);
  out.truth.f1.resize(n);
  out.truth.f2.resize(n);

  const bool tau_limited =
      family == CopulaFamily::clayton || family == CopulaFamily::gumbel;
  int clamped = 0;
  for (int i = 0; i < n; ++i) {
    const Eigen::VectorXd xi = out.data.x.row(i);
    CopulaParam p = CopulaParam(family, 1.0);
    if (sc.eta_scale) {
      p = inv_link(family, sc.calib(xi));
      out.truth.tau[i] = tau_from_theta(p);
    } else {
      double tau = sc.calib(xi);
      if (tau_limited && tau < 1e-3) {
        tau = 1e-3;
        ++clamped;
      }
      p = theta_from_tau(family, tau);
      out.truth.tau[i] = tau;
    }
    const auto [u1, u2] = sample_pair(p, rng);
    out.truth.f1[i] = sc.f1(xi);
    out.truth.f2[i] = sc.f2(xi);
    if (uniform_margins) {
      out.data.y1[i] = u1;
      out.data.y2[i] = u2;
    } else {
      out.data.y1[i] = out.truth.f1[i] + sc.sigma1 * norm_quantile(u1);
      out.data.y2[i] = out.truth.f2[i] + sc.sigma2 * norm_quantile(u2);
    }
  }
  out.truth.clamp_fraction = double(clamped) / n;
  return out;
}

MissCovData generate_misscov(int n, std::uint64_t seed) {
  MissCovData out;
  out.full = generate(Scenario::get(ScenarioId::misscov), n,
                      CopulaFamily::clayton, seed);
  out.withheld = out.full.data.select_covariates({0});
  return out;
}

ReplicateMetrics replicate_metrics(
    const Eigen::Ref<const Eigen::MatrixXd>& estimates,
    const Eigen::Ref<const Eigen::VectorXd>& truth) {
  const int r = static_cast<int>(estimates.rows());
  const int n = static_cast<int>(estimates.cols());
  if (r < 1 || n != truth.size())
    throw std::invalid_argument("replicate_metrics: shape mismatch");
  ReplicateMetrics m;
  for (int i = 0; i < n; ++i) {
    const double mean = estimates.col(i).mean();
    m.ibias2 += (mean - truth[i]) * (mean - truth[i]);
    m.ivar += (estimates.col(i).array() - mean).square().sum() / r;
  }
  m.ibias2 /= n;
  m.ivar /= n;
  m.imse = m.ibias2 + m.ivar;
  return m;
}

Eigen::VectorXd posterior_tau_mean(const Model& model,
                                   const PosteriorDraws& draws,
                                   const Eigen::Ref<const Eigen::MatrixXd>& x) {
  const int n = static_cast<int>(x.rows());
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(n);
  PredCache cache;
  for (const FullState& st : draws.states) {
    const Eigen::VectorXd f =
        calibration_values_cached(x, st.calib, model.z_calib, cache);
    for (int i = 0; i < n; ++i)
      acc[i] += tau_from_theta(inv_link(st.family, f[i]));
  }
  return acc / double(draws.size());
}

EuGrid EuGrid::standard(int q) {
  EuGrid g;
  g.u2.resize(4);
  g.u2 << 0.2, 0.4, 0.6, 0.8;
  if (q == 2) {
    g.x.resize(16, 2);
    int r = 0;
    for (double a : {0.2, 0.4, 0.6, 0.8})
      for (double b : {0.2, 0.4, 0.6, 0.8}) g.x.row(r++) << a, b;
  } else {
    // Halton points scattered in [0,1]^q (the paper leaves these
    // unspecified; 33 matches its Sc3 grid size).
    const int pts = 33;
    g.x.resize(pts, q);
    static const int primes[] = {2,  3,  5,  7,  11, 13, 17,
                                 19, 23, 29, 31, 37, 41};
    for (int j = 0; j < q; ++j) {
      const int base = primes[j % 13];
      for (int i = 0; i < pts; ++i) {
        double f = 1.0, v = 0.0;
        int k = i + 1;
        while (k > 0) {
          f /= base;
          v += f * (k % base);
          k /= base;
        }
        g.x(i, j) = v;
      }
    }
  }
  return g;
}

Eigen::VectorXd posterior_eu_mean(const Model& model,
                                  const PosteriorDraws& draws,
                                  const EuGrid& grid) {
  const int gx = static_cast<int>(grid.x.rows());
  const int gu = static_cast<int>(grid.u2.size());
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(gx * gu);
  PredCache cache;
  for (const FullState& st : draws.states) {
    const Eigen::VectorXd f =
        calibration_values_cached(grid.x, st.calib, model.z_calib, cache);
    for (int i = 0; i < gx; ++i) {
      const CopulaParam p = inv_link(st.family, f[i]);
      for (int k = 0; k < gu; ++k)
        acc[i * gu + k] += cond_expectation_u(p, grid.u2[k]);
    }
  }
  return acc / double(draws.size());
}

Eigen::VectorXd true_eu(const Scenario& sc, CopulaFamily family,
                        const EuGrid& grid) {
  const int gx = static_cast<int>(grid.x.rows());
  const int gu = static_cast<int>(grid.u2.size());
  Eigen::VectorXd out(gx * gu);
  const bool tau_limited =
      family == CopulaFamily::clayton || family == CopulaFamily::gumbel;
  for (int i = 0; i < gx; ++i) {
    const Eigen::VectorXd xi = grid.x.row(i);
    CopulaParam p = CopulaParam(family, 1.0);
    if (sc.eta_scale) {
      p = inv_link(family, sc.calib(xi));
    } else {
      double tau = sc.calib(xi);
      if (tau_limited && tau < 1e-3) tau = 1e-3;
      p = theta_from_tau(family, tau);
    }
    for (int k = 0; k < gu; ++k)
      out[i * gu + k] = cond_expectation_u(p, grid.u2[k]);
  }
  return out;
}

std::string ModelChoice::label() const {
  ModelSpec spec;
  spec.family = family;
  spec.calib = calib;
  spec.single_index = single_index;
  return spec.label();
}

namespace {

struct ReplicateOutcome {
  bool ok = false;
  // per model
  std::vector<Eigen::VectorXd> tau_hat;
  std::vector<Eigen::VectorXd> eu_hat;
  std::vector<CriterionValues> crit;
};

ReplicateOutcome run_replicate(const ReplicateStudyConfig& cfg,
                               const Scenario& sc, const Eigen::MatrixXd& x,
                               const EuGrid& grid, int rep,
                               std::uint64_t scenario_seed) {
  ReplicateOutcome out;
  const std::uint64_t data_seed = split_seed(scenario_seed, 2 * rep + 1);
  GeneratedData gen = generate_with_x(sc, x, cfg.generator_family, data_seed,
                                      cfg.uniform_margins);
  for (size_t k = 0; k < cfg.models.size(); ++k) {
    const ModelChoice& mc = cfg.models[k];
    ModelSpec spec;
    spec.family = mc.family;
    spec.calib = mc.calib;
    spec.single_index = mc.single_index;
    spec.margins =
        cfg.uniform_margins ? MarginModel::uniform : MarginModel::gaussian_gp;
    spec.m = spec.m1 = spec.m2 = cfg.m;
    const std::uint64_t fit_seed = split_seed(data_seed, 7919ULL * (k + 1));
    Model model = Model::build(gen.data, spec, fit_seed);
    SamplerConfig scfg;
    scfg.iters = cfg.iters;
    scfg.seed = fit_seed;
    PosteriorDraws draws = run_chain(model, scfg);
    out.tau_hat.push_back(posterior_tau_mean(model, draws, gen.data.x));
    out.eu_hat.push_back(posterior_eu_mean(model, draws, grid));
    out.crit.push_back(criteria(model, draws));
  }
  out.ok = true;
  return out;
}

}  // namespace

ReplicateStudyResult replicate_study(const ReplicateStudyConfig& cfg) {
  if (cfg.models.empty() || cfg.scenarios.empty())
    throw std::invalid_argument("replicate_study: empty configuration");
  ReplicateStudyResult result;
  result.seed = cfg.seed;

  for (ScenarioId sid : cfg.scenarios) {
    const Scenario sc = Scenario::get(sid);
    const std::uint64_t scenario_seed =
        split_seed(cfg.seed, 1000003ULL * std::uint64_t(int(sid)));
    // Covariates are evaluation targets shared by all replicates.
    Rng x_rng(split_seed(scenario_seed, 0));
    Eigen::MatrixXd x(cfg.n, sc.q);
    for (int i = 0; i < cfg.n; ++i)
      for (int j = 0; j < sc.q; ++j) x(i, j) = runif(x_rng);
    const EuGrid grid = EuGrid::standard(sc.q);

    const bool tau_limited = cfg.generator_family == CopulaFamily::clayton ||
                             cfg.generator_family == CopulaFamily::gumbel;
    Eigen::VectorXd tau_truth(cfg.n);
    for (int i = 0; i < cfg.n; ++i) {
      const Eigen::VectorXd xi = x.row(i);
      if (sc.eta_scale) {
        tau_truth[i] =
            tau_from_theta(inv_link(cfg.generator_family, sc.calib(xi)));
      } else {
        double tau = sc.calib(xi);
        if (tau_limited && tau < 1e-3) tau = 1e-3;
        tau_truth[i] = tau;
      }
    }
    const Eigen::VectorXd eu_truth = true_eu(sc, cfg.generator_family, grid);

    std::vector<ReplicateOutcome> outcomes(cfg.replicates);
    auto one = [&](int r) {
      try {
        outcomes[r] = run_replicate(cfg, sc, x, grid, r, scenario_seed);
      } catch (const std::exception&) {
        outcomes[r].ok = false;
      }
    };
    const int jobs = std::max(1, cfg.jobs);
    if (jobs == 1) {
      for (int r = 0; r < cfg.replicates; ++r) one(r);
    } else {
      std::atomic<int> next{0};
      std::vector<std::future<void>> futures;
      for (int w = 0; w < jobs; ++w) {
        futures.push_back(std::async(std::launch::async, [&] {
          for (int r = next.fetch_add(1); r < cfg.replicates;
               r = next.fetch_add(1))
            one(r);
        }));
      }
      for (auto& f : futures) f.get();
    }

    const int n_models = static_cast<int>(cfg.models.size());
    int ok_count = 0;
    for (const auto& oc : outcomes) ok_count += oc.ok;
    for (int k = 0; k < n_models; ++k) {
      ReplicateRow row;
      row.scenario = sid;
      row.model = cfg.models[k];
      row.failures = cfg.replicates - ok_count;
      if (ok_count > 0) {
        Eigen::MatrixXd tau_est(ok_count, cfg.n);
        Eigen::MatrixXd eu_est(ok_count, eu_truth.size());
        int wins_cvml = 0, wins_ccvml = 0, wins_waic = 0;
        int r = 0;
        for (const auto& oc : outcomes) {
          if (!oc.ok) continue;
          tau_est.row(r) = oc.tau_hat[k].transpose();
          eu_est.row(r) = oc.eu_hat[k].transpose();
          int best_cv = 0, best_ccv = 0, best_w = 0;
          for (int j = 1; j < n_models; ++j) {
            if (oc.crit[j].cvml > oc.crit[best_cv].cvml) best_cv = j;
            if (oc.crit[j].ccvml > oc.crit[best_ccv].ccvml) best_ccv = j;
            if (oc.crit[j].waic < oc.crit[best_w].waic) best_w = j;
          }
          wins_cvml += best_cv == k;
          wins_ccvml += best_ccv == k;
          wins_waic += best_w == k;
          ++r;
        }
        row.tau_metrics = replicate_metrics(tau_est, tau_truth);
        row.eu_metrics = replicate_metrics(eu_est, eu_truth);
        row.cvml_win = double(wins_cvml) / ok_count;
        row.ccvml_win = double(wins_ccvml) / ok_count;
        row.waic_win = double(wins_waic) / ok_count;
      }
      result.rows.push_back(std::move(row));
    }
  }
  return result;
}

}  // namespace ccgp
