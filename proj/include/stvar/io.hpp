#pragma once

// File formats: binary field series with JSON sidecars, planar series text
// files, SOM/spec/truth/config JSON documents, chain files, and CSV exports.

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "stvar/data_model.hpp"
#include "stvar/evaluate.hpp"
#include "stvar/mcmc.hpp"
#include "stvar/model.hpp"
#include "stvar/som.hpp"
#include "stvar/synthetic.hpp"

namespace stvar::io {

namespace fs = std::filesystem;
using nlohmann::json;

/// Sidecar path of a binary series file: "<path>.json".
fs::path sidecar_path(const fs::path& series);

void save_series(const data::RawSeries& series, const fs::path& path);
/// MalformedHeader, DimensionMismatch, ShortRead on bad files.
data::RawSeries load_series(const fs::path& path);

/// Same binary layout as a raw series; the sidecar carries the constants.
void save_state(const data::StateSeries& series, const fs::path& path);
data::StateSeries load_state(const fs::path& path);

void save_planar(const model::PlanarSeries& series, const fs::path& path);
model::PlanarSeries load_planar(const fs::path& path);

json som_to_json(const som::SomModel& model);
som::SomModel som_from_json(const json& j);
void save_som(const som::SomModel& model, const fs::path& path);
som::SomModel load_som(const fs::path& path);

json spec_to_json(const model::ModelSpec& spec);
/// Accepts a spec object or a ladder name string ("model0".."model11").
model::ModelSpec spec_from_json(const json& j);

json mcmc_config_to_json(const mcmc::McmcConfig& config);
/// Unknown keys are rejected with InvalidConfig.
mcmc::McmcConfig mcmc_config_from_json(const json& j);

json truth_to_json(const synthetic::TruthBundle& truth);
synthetic::TruthBundle truth_from_json(const json& j);

/// Column labels of one chain line.
std::vector<std::string> chain_labels(const mcmc::Chain& chain);
void save_chain(const mcmc::Chain& chain, const fs::path& path);
mcmc::Chain load_chain(const fs::path& path);

json matrix_to_json(const Eigen::MatrixXd& m);
Eigen::MatrixXd matrix_from_json(const json& j);

json read_json(const fs::path& path);
void write_json(const json& j, const fs::path& path);
void write_text(const std::string& text, const fs::path& path);

/// Value with `digits` significant digits (reports).
std::string sig(double value, int digits = 5);
/// Round-trip representation (data files).
std::string full(double value);

json scores_to_json(const std::vector<evaluate::ModelScore>& scores);
/// Plain-text comparison table with 5 significant digits.
std::string scores_table(const std::vector<evaluate::ModelScore>& scores);

/// Matrix CSV with "cell1".. row and column labels; undefined rows as NA.
void save_transitions_csv(const evaluate::TransitionMatrix& tm, const fs::path& path);
void save_distances_csv(const std::vector<std::vector<double>>& per_cell, const fs::path& path);
void save_frequencies_csv(const evaluate::FrequencyTable& table, const fs::path& path);
void save_grid_csv(const Eigen::MatrixXd& grid, const fs::path& path);

}  // namespace stvar::io
