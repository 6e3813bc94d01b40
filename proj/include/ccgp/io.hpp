#pragma once

#include <filesystem>
#include <string>

#include "ccgp/datagen.hpp"
#include "ccgp/mcmc.hpp"
#include "ccgp/sa_test.hpp"
#include "ccgp/selection.hpp"

namespace ccgp {

/// Read a CSV with header y1,y2,x1..xq, standardize responses and min-max
/// scale covariates. Throws with a specific message on malformed input,
/// non-numeric cells, or constant covariate columns.
Dataset ingest(const std::filesystem::path& csv_path);

/// Raw numeric columns of an ingest-shaped CSV, without normalization.
struct RawColumns {
  Eigen::VectorXd y1, y2;
  Eigen::MatrixXd x;
};
RawColumns read_csv_columns(const std::filesystem::path& csv_path);

/// One row per draw (scalars, flattened latent vectors, beta) with a JSON
/// header line (prefixed '#') recording dimensions, seed and spec.
void save_draws(const PosteriorDraws& draws, const Model& model,
                const std::filesystem::path& path);
PosteriorDraws load_draws(const std::filesystem::path& path,
                          ModelSpec* spec_out = nullptr);

void save_selection_report(const SelectionReport& report,
                           const std::filesystem::path& json_path,
                           const std::filesystem::path& csv_path);

void save_evidence_report(const EvidenceReport& cvml_report,
                          const EvidenceReport& ccvml_report,
                          const std::filesystem::path& json_path);

void save_dataset_csv(const Dataset& data, const std::filesystem::path& path);

void save_generated(const GeneratedData& gen, const Scenario& sc,
                    CopulaFamily family, std::uint64_t seed,
                    bool uniform_margins,
                    const std::filesystem::path& out_dir);

void save_replicate_study(const ReplicateStudyResult& result,
                          const ReplicateStudyConfig& config,
                          const std::filesystem::path& out_dir);

}  // namespace ccgp
