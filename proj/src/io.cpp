#include "ccgp/io.hpp"

#include <charconv>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <json.hpp>

namespace ccgp {

using nlohmann::json;

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

double parse_cell(const std::string& cell, int row, int col) {
  double v = 0.0;
  const char* b = cell.data();
  const char* e = b + cell.size();
  while (b < e && (*b == ' ' || *b == '\t')) ++b;
  auto [p, ec] = std::from_chars(b, e, v);
  while (p < e && (*p == ' ' || *p == '\t')) ++p;
  if (ec != std::errc() || p != e)
    throw std::invalid_argument("CSV: non-numeric cell '" + cell + "' at row " +
                             std::to_string(row) + ", column " +
                             std::to_string(col));
  return v;
}

json spec_to_json(const ModelSpec& spec) {
  return json{{"family", to_string(spec.family)},
              {"calibration", to_string(spec.calib)},
              {"single_index", spec.single_index},
              {"uniform_margins", spec.margins == MarginModel::uniform},
              {"m1", spec.m1},
              {"m2", spec.m2},
              {"m", spec.m}};
}

ModelSpec spec_from_json(const json& j) {
  ModelSpec spec;
  spec.family = family_from_string(j.at("family").get<std::string>());
  const std::string calib = j.at("calibration").get<std::string>();
  if (calib == "gpsim")
    spec.calib = CalibKind::gpsim;
  else if (calib == "constant")
    spec.calib = CalibKind::constant;
  else
    spec.calib = CalibKind::single_covariate;
  spec.single_index = j.at("single_index").get<int>();
  spec.margins = j.at("uniform_margins").get<bool>() ? MarginModel::uniform
                                                     : MarginModel::gaussian_gp;
  spec.m1 = j.at("m1").get<int>();
  spec.m2 = j.at("m2").get<int>();
  spec.m = j.at("m").get<int>();
  return spec;
}

void write_matrix_block(std::ostream& os, const Eigen::VectorXd& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i)
    os << ',' << std::setprecision(17) << v[i];
}

}  // namespace

RawColumns read_csv_columns(const std::filesystem::path& csv_path) {
  std::ifstream in(csv_path);
  if (!in) throw std::invalid_argument("CSV: cannot open " + csv_path.string());
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument("CSV: empty file");
  const auto header = split_line(line);
  if (header.size() < 3 || header[0] != "y1" || header[1] != "y2")
    throw std::invalid_argument(
        "CSV: header must be y1,y2,x1..xq (got '" + line + "')");
  const int q = static_cast<int>(header.size()) - 2;
  for (int j = 0; j < q; ++j)
    if (header[2 + j] != "x" + std::to_string(j + 1))
      throw std::invalid_argument("CSV: expected column x" +
                               std::to_string(j + 1) + ", got '" +
                               header[2 + j] + "'");
  std::vector<std::array<double, 2>> ys;
  std::vector<std::vector<double>> xs;
  int row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    const auto cells = split_line(line);
    if (static_cast<int>(cells.size()) != q + 2)
      throw std::invalid_argument("CSV: row " + std::to_string(row) + " has " +
                               std::to_string(cells.size()) +
                               " cells, expected " + std::to_string(q + 2));
    std::array<double, 2> y{parse_cell(cells[0], row, 1),
                            parse_cell(cells[1], row, 2)};
    std::vector<double> x(q);
    for (int j = 0; j < q; ++j) x[j] = parse_cell(cells[2 + j], row, 3 + j);
    ys.push_back(y);
    xs.push_back(std::move(x));
  }
  if (ys.size() < 2) throw std::invalid_argument("CSV: need at least 2 rows");
  RawColumns raw;
  const int n = static_cast<int>(ys.size());
  raw.y1.resize(n);
  raw.y2.resize(n);
  raw.x.resize(n, q);
  for (int i = 0; i < n; ++i) {
    raw.y1[i] = ys[i][0];
    raw.y2[i] = ys[i][1];
    for (int j = 0; j < q; ++j) raw.x(i, j) = xs[i][j];
  }
  return raw;
}

Dataset ingest(const std::filesystem::path& csv_path) {
  const RawColumns raw = read_csv_columns(csv_path);
  return normalize(raw.y1, raw.y2, raw.x);
}

void save_draws(const PosteriorDraws& draws, const Model& model,
                const std::filesystem::path& path) {
  if (draws.states.empty()) throw std::invalid_argument("save_draws: empty");
  std::ofstream os(path);
  if (!os) throw std::runtime_error("save_draws: cannot open " + path.string());

  const FullState& st0 = draws.states.front();
  const bool margins = !model.uniform_margins();
  const bool gpsim = std::holds_alternative<GpSimCalib>(st0.calib);
  const bool single = std::holds_alternative<SingleCovCalib>(st0.calib);
  const int q = model.data.q();

  json header = {
      {"format", "ccgp-draws-v1"},
      {"n_draws", draws.size()},
      {"thin", draws.thin},
      {"seed", draws.seed},
      {"q", q},
      {"spec", spec_to_json(draws.spec)},
      {"dims",
       {{"m1", margins ? int(st0.marg1.f_tilde.size()) : 0},
        {"m2", margins ? int(st0.marg2.f_tilde.size()) : 0},
        {"m", gpsim ? int(std::get<GpSimCalib>(st0.calib).f_tilde.size())
              : single
                  ? int(std::get<SingleCovCalib>(st0.calib).f_tilde.size())
                  : 0}}},
      {"acceptance",
       {{"w1", draws.acceptance.w1},
        {"w2", draws.acceptance.w2},
        {"w_calib", draws.acceptance.w_calib},
        {"sigma1", draws.acceptance.sigma1},
        {"sigma2", draws.acceptance.sigma2},
        {"beta", draws.acceptance.beta},
        {"const_theta", draws.acceptance.const_theta}}},
  };
  os << "# " << header.dump() << "\n";

  os << "draw";
  if (margins) {
    os << ",sigma1_sq,sigma2_sq";
    for (int k = 0; k <= q; ++k) os << ",w1_" << k;
    for (int k = 0; k <= q; ++k) os << ",w2_" << k;
    for (int k = 0; k < st0.marg1.f_tilde.size(); ++k) os << ",f1_" << k;
    for (int k = 0; k < st0.marg2.f_tilde.size(); ++k) os << ",f2_" << k;
  }
  if (gpsim) {
    for (int k = 0; k < q; ++k) os << ",beta_" << k;
  }
  if (gpsim || single) {
    os << ",wc_0,wc_1";
    const int m = gpsim ? int(std::get<GpSimCalib>(st0.calib).f_tilde.size())
                        : int(std::get<SingleCovCalib>(st0.calib).f_tilde.size());
    for (int k = 0; k < m; ++k) os << ",fc_" << k;
  } else if (!gpsim && !single) {
    os << ",theta_f";
  }
  os << "\n";

  for (int t = 0; t < draws.size(); ++t) {
    const FullState& st = draws.states[t];
    os << t;
    if (margins) {
      os << ',' << std::setprecision(17) << st.marg1.sigma2 << ','
         << std::setprecision(17) << st.marg2.sigma2;
      write_matrix_block(os, st.marg1.w.w);
      write_matrix_block(os, st.marg2.w.w);
      write_matrix_block(os, st.marg1.f_tilde);
      write_matrix_block(os, st.marg2.f_tilde);
    }
    if (const auto* c = std::get_if<GpSimCalib>(&st.calib)) {
      write_matrix_block(os, c->beta);
      write_matrix_block(os, c->w.w);
      write_matrix_block(os, c->f_tilde);
    } else if (const auto* c = std::get_if<SingleCovCalib>(&st.calib)) {
      write_matrix_block(os, c->w.w);
      write_matrix_block(os, c->f_tilde);
    } else if (const auto* c = std::get_if<ConstantCalib>(&st.calib)) {
      os << ',' << std::setprecision(17) << c->f;
    }
    os << "\n";
  }
}

PosteriorDraws load_draws(const std::filesystem::path& path,
                          ModelSpec* spec_out) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_draws: cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || line.size() < 2 || line[0] != '#')
    throw std::runtime_error("load_draws: missing JSON header line");
  const json header = json::parse(line.substr(1));
  const ModelSpec spec = spec_from_json(header.at("spec"));
  if (spec_out) *spec_out = spec;

  PosteriorDraws draws;
  draws.spec = spec;
  draws.seed = header.at("seed").get<std::uint64_t>();
  draws.thin = header.at("thin").get<int>();
  const int q = header.at("q").get<int>();
  const int m1 = header.at("dims").at("m1").get<int>();
  const int m2 = header.at("dims").at("m2").get<int>();
  const int m = header.at("dims").at("m").get<int>();
  const auto& acc = header.at("acceptance");
  draws.acceptance.w1 = acc.at("w1").get<double>();
  draws.acceptance.w2 = acc.at("w2").get<double>();
  draws.acceptance.w_calib = acc.at("w_calib").get<double>();
  draws.acceptance.sigma1 = acc.at("sigma1").get<double>();
  draws.acceptance.sigma2 = acc.at("sigma2").get<double>();
  draws.acceptance.beta = acc.at("beta").get<double>();
  draws.acceptance.const_theta = acc.at("const_theta").get<double>();

  std::getline(in, line);  // column header
  const bool margins = spec.margins == MarginModel::gaussian_gp;
  int row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    const auto cells = split_line(line);
    size_t pos = 1;  // skip draw index
    auto next = [&]() -> double {
      if (pos >= cells.size())
        throw std::runtime_error("load_draws: truncated row " +
                                 std::to_string(row));
      const size_t col = pos++;
      return parse_cell(cells[col], row, int(col) + 1);
    };
    FullState st;
    st.family = spec.family;
    if (margins) {
      st.marg1.sigma2 = next();
      st.marg2.sigma2 = next();
      st.marg1.w.w.resize(q + 1);
      for (int k = 0; k <= q; ++k) st.marg1.w.w[k] = next();
      st.marg2.w.w.resize(q + 1);
      for (int k = 0; k <= q; ++k) st.marg2.w.w[k] = next();
      st.marg1.f_tilde.resize(m1);
      for (int k = 0; k < m1; ++k) st.marg1.f_tilde[k] = next();
      st.marg2.f_tilde.resize(m2);
      for (int k = 0; k < m2; ++k) st.marg2.f_tilde[k] = next();
    }
    switch (spec.calib) {
      case CalibKind::gpsim: {
        GpSimCalib c;
        c.beta.resize(q);
        for (int k = 0; k < q; ++k) c.beta[k] = next();
        c.w.w.resize(2);
        c.w.w[0] = next();
        c.w.w[1] = next();
        c.f_tilde.resize(m);
        for (int k = 0; k < m; ++k) c.f_tilde[k] = next();
        st.calib = std::move(c);
        break;
      }
      case CalibKind::single_covariate: {
        SingleCovCalib c;
        c.index = spec.single_index;
        c.w.w.resize(2);
        c.w.w[0] = next();
        c.w.w[1] = next();
        c.f_tilde.resize(m);
        for (int k = 0; k < m; ++k) c.f_tilde[k] = next();
        st.calib = std::move(c);
        break;
      }
      case CalibKind::constant: {
        ConstantCalib c;
        c.f = next();
        st.calib = c;
        break;
      }
    }
    draws.states.push_back(std::move(st));
  }
  return draws;
}

void save_selection_report(const SelectionReport& report,
                           const std::filesystem::path& json_path,
                           const std::filesystem::path& csv_path) {
  json j = json::array();
  for (const auto& e : report.entries) {
    j.push_back({{"model", e.model_label},
                 {"seed", e.seed},
                 {"cvml", e.values.cvml},
                 {"ccvml", e.values.ccvml},
                 {"waic", e.values.waic},
                 {"waic_fit", e.values.waic_fit},
                 {"waic_penalty", e.values.waic_penalty},
                 {"n_draws", e.values.n_draws}});
  }
  std::ofstream(json_path) << json{{"models", j}}.dump(2) << "\n";

  std::ofstream csv(csv_path);
  csv << "model,seed,cvml,ccvml,waic,waic_fit,waic_penalty,n_draws\n";
  for (const auto& e : report.entries) {
    csv << e.model_label << ',' << e.seed << ','
        << std::setprecision(12) << e.values.cvml
        << ',' << e.values.ccvml << ',' << e.values.waic << ','
        << e.values.waic_fit << ',' << e.values.waic_penalty << ','
        << e.values.n_draws << "\n";
  }
}

namespace {

json evidence_to_json(const EvidenceReport& rep) {
  return json{{"observed", rep.observed},
              {"permuted", rep.permuted},
              {"ev", rep.ev},
              {"supports_sa", rep.supports_sa},
              {"degenerate_constant", rep.degenerate_constant},
              {"n_perms", rep.n_perms},
              {"perm_seed", rep.perm_seed}};
}

}  // namespace

void save_evidence_report(const EvidenceReport& cvml_report,
                          const EvidenceReport& ccvml_report,
                          const std::filesystem::path& json_path) {
  std::ofstream(json_path) << json{{"cvml", evidence_to_json(cvml_report)},
                                   {"ccvml", evidence_to_json(ccvml_report)}}
                                  .dump(2)
                           << "\n";
}

void save_dataset_csv(const Dataset& data, const std::filesystem::path& path) {
  std::ofstream os(path);
  os << "y1,y2";
  for (int j = 0; j < data.q(); ++j) os << ",x" << (j + 1);
  os << "\n";
  for (int i = 0; i < data.n(); ++i) {
    os << std::setprecision(17) << data.y1[i] << ',' << data.y2[i];
    for (int j = 0; j < data.q(); ++j) os << ',' << data.x(i, j);
    os << "\n";
  }
}

void save_generated(const GeneratedData& gen, const Scenario& sc,
                    CopulaFamily family, std::uint64_t seed,
                    bool uniform_margins,
                    const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  save_dataset_csv(gen.data, out_dir / "data.csv");
  {
    std::ofstream os(out_dir / "ground_truth.csv");
    os << "tau,f1,f2\n";
    for (int i = 0; i < gen.truth.tau.size(); ++i)
      os << std::setprecision(17) << gen.truth.tau[i] << ','
         << gen.truth.f1[i] << ',' << gen.truth.f2[i] << "\n";
  }
  json sidecar = {{"scenario", to_string(sc.id)},
                  {"q", sc.q},
                  {"family", to_string(family)},
                  {"seed", seed},
                  {"n", gen.data.n()},
                  {"uniform_margins", uniform_margins},
                  {"sigma1", sc.sigma1},
                  {"sigma2", sc.sigma2},
                  {"clamp_fraction", gen.truth.clamp_fraction}};
  if (sc.beta.size() > 0)
    sidecar["beta"] = std::vector<double>(sc.beta.data(),
                                          sc.beta.data() + sc.beta.size());
  std::ofstream(out_dir / "scenario.json") << sidecar.dump(2) << "\n";
}

void save_replicate_study(const ReplicateStudyResult& result,
                          const ReplicateStudyConfig& config,
                          const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  {
    std::ofstream os(out_dir / "metrics.csv");
    os << "scenario,model,seed,target,ibias2,ivar,imse,sqrt_ibias2,sqrt_ivar,"
          "sqrt_imse,failures\n";
    for (const auto& r : result.rows) {
      auto line = [&](const char* target, const ReplicateMetrics& m) {
        os << to_string(r.scenario) << ',' << r.model.label() << ','
           << result.seed << ',' << target << ',' << std::setprecision(10)
           << m.ibias2 << ',' << m.ivar << ',' << m.imse << ','
           << std::sqrt(m.ibias2) << ',' << std::sqrt(m.ivar) << ','
           << std::sqrt(m.imse) << ',' << r.failures << "\n";
      };
      line("tau", r.tau_metrics);
      line("eu", r.eu_metrics);
    }
  }
  {
    std::ofstream os(out_dir / "rates.csv");
    os << "scenario,model,seed,criterion,win_rate\n";
    for (const auto& r : result.rows) {
      os << to_string(r.scenario) << ',' << r.model.label() << ','
         << result.seed << ",cvml," << r.cvml_win << "\n";
      os << to_string(r.scenario) << ',' << r.model.label() << ','
         << result.seed << ",ccvml," << r.ccvml_win << "\n";
      os << to_string(r.scenario) << ',' << r.model.label() << ','
         << result.seed << ",waic," << r.waic_win << "\n";
    }
  }
  json cfg = {{"replicates", config.replicates},
              {"n", config.n},
              {"iters", config.iters},
              {"m", config.m},
              {"uniform_margins", config.uniform_margins},
              {"generator_family", to_string(config.generator_family)},
              {"seed", config.seed},
              {"jobs", config.jobs}};
  cfg["scenarios"] = json::array();
  for (auto s : config.scenarios) cfg["scenarios"].push_back(to_string(s));
  cfg["models"] = json::array();
  for (const auto& m : config.models) cfg["models"].push_back(m.label());
  std::ofstream(out_dir / "study_config.json") << cfg.dump(2) << "\n";
}

}  // namespace ccgp
