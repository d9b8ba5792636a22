#pragma once

// Model comparison scores, SOM summaries and transition analysis.

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "stvar/data_model.hpp"
#include "stvar/mcmc.hpp"
#include "stvar/model.hpp"
#include "stvar/som.hpp"

namespace stvar::evaluate {

using model::PlanarSeries;
using model::Tessellation;

struct ModelScore {
  std::string model;
  double rmspe = 0.0;
  double dic = 0.0;
  double p_d = 0.0;
  double coverage = 0.0;
};

/// sqrt(mean ||s_hat_t - s_t||^2) over steps 2..T. `predicted` has T-1 rows.
double rmspe(const PlanarSeries& actual, const Eigen::MatrixXd& predicted);

enum class Region { ellipse, rectangle };

/// Whether `actual` lies in the level-`level` region built from `draws` (B x 2).
/// ellipse: Mahalanobis distance under the draws' own mean and covariance,
/// thresholded at the empirical quantile of the draws' distances.
/// rectangle: per-coordinate central intervals.
bool in_region(const Eigen::Vector2d& actual, const Eigen::MatrixXd& draws, double level = 0.95,
               Region region = Region::ellipse);

/// Fraction of steps whose true location falls inside its region; draw set t
/// predicts row t of `actual`.
double coverage(const Eigen::MatrixXd& actual, const std::vector<Eigen::MatrixXd>& draw_sets, double level = 0.95,
                Region region = Region::ellipse);
/// Draw set t predicts s_{t+1}.
double coverage(const PlanarSeries& actual, const std::vector<Eigen::MatrixXd>& draw_sets, double level = 0.95,
                Region region = Region::ellipse);

struct DicResult {
  double dic = 0.0;
  double p_d = 0.0;
  double d_bar = 0.0;  // posterior mean deviance
  double d_hat = 0.0;  // deviance at the posterior mean
};

/// Posterior mean of the draws (Sigma repaired to PD by eigenvalue flooring).
mcmc::PosteriorDraw posterior_mean(const mcmc::Chain& chain);

/// Deviance information criterion with the conditional likelihood.
DicResult dic(const mcmc::Chain& chain, const PlanarSeries& series);

/// One-step predictive draws for every step of the series (T-1 sets).
std::vector<Eigen::MatrixXd> predictive_draws(const mcmc::Chain& chain, const PlanarSeries& series,
                                              Exec exec = Exec::parallel);

struct PredictiveSummary {
  Eigen::MatrixXd means;      // (T-1) x 2 predictive means
  std::vector<char> inside;   // per step: truth inside the region
};

/// Streams predictive draws step by step without keeping them.
PredictiveSummary predictive_summary(const mcmc::Chain& chain, const PlanarSeries& series, double level = 0.95,
                                     Region region = Region::ellipse, Exec exec = Exec::parallel);

/// RMSPE, DIC, p_D and coverage of a fitted chain on its series.
ModelScore score_model(const mcmc::Chain& chain, const PlanarSeries& series, double level = 0.95,
                       Exec exec = Exec::parallel);

// ---------------------------------------------------------------------------

struct TransitionMatrix {
  Eigen::MatrixXd probs;   // source cell x destination cell
  Eigen::MatrixXd counts;  // raw tallies
  std::vector<bool> defined;

  std::size_t size() const { return static_cast<std::size_t>(probs.rows()); }
};

/// Row-normalizes a count matrix; empty rows are left at zero and flagged.
TransitionMatrix normalize_counts(const Eigen::MatrixXd& counts);

/// Transitions between consecutive assignments (0-based labels < n_cells).
TransitionMatrix empirical_transitions(const std::vector<int>& cells, std::size_t n_cells);
/// Uses the series' node labels, or the planar cell when they are absent.
TransitionMatrix empirical_transitions(const PlanarSeries& series, const Tessellation& tess);

/// Restricts the starting points of model_transitions.
struct BlockContext {
  std::optional<int> year;
  std::optional<int> season;
};

/// From every observed location inside the block, predictive draws are
/// tabulated by destination cell.
TransitionMatrix model_transitions(const mcmc::Chain& chain, const PlanarSeries& series,
                                   const BlockContext& block = {}, Exec exec = Exec::parallel);

struct DistanceSummary {
  std::size_t count = 0;
  double q05 = 0.0, q25 = 0.0, median = 0.0, q75 = 0.0, q95 = 0.0, mean = 0.0;
};

/// Step lengths ||s_{t+1} - s_t|| grouped by the source cell of s_t.
std::vector<std::vector<double>> transition_distances(const PlanarSeries& series, const Tessellation& tess);
/// Step lengths from each observed location to its predictive draws.
std::vector<std::vector<double>> predictive_transition_distances(const mcmc::Chain& chain,
                                                                 const PlanarSeries& series,
                                                                 Exec exec = Exec::parallel);
DistanceSummary summarize(std::vector<double> values);

/// Linear-interpolation sample quantile (q in [0, 1]).
double quantile(std::vector<double> values, double q);

enum class GroupKind { all, season, year_range };

struct Grouping {
  GroupKind kind = GroupKind::all;
  SeasonCalendar seasons;
  std::vector<std::pair<int, int>> year_ranges;  // inclusive
};

struct FrequencyTable {
  std::vector<std::string> groups;
  Eigen::MatrixXi counts;  // group x node
};

FrequencyTable node_frequencies(const std::vector<int>& assignments, std::size_t n_nodes, const Grouping& grouping = {},
                                const std::vector<Date>& dates = {});

/// Arranges per-node values on an n_rows x n_cols node array (row-major).
Eigen::MatrixXd as_node_array(const Eigen::VectorXd& per_node, std::size_t n_rows, std::size_t n_cols);

enum class MapMode { raw, anomaly };

/// Per-node grids (n_rows x n_cols) of one variable in native units; anomaly
/// mode subtracts the training data's per-cell mean.
std::vector<Eigen::MatrixXd> node_field_maps(const som::SomModel& model, const data::GridSpec& grid,
                                             const data::Standardization& standardization, std::size_t variable,
                                             MapMode mode);

struct LagScan {
  std::vector<double> aic;  // index p-1
  std::size_t best_lag = 1;
};

/// Per-observation AIC, log|Sigma_p| + 2k/n, of least-squares VAR(p) fits with
/// intercept on a common estimation sample, p = 1..max_lag.
LagScan var_lag_aic(const PlanarSeries& series, std::size_t max_lag);

}  // namespace stvar::evaluate
