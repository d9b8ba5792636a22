#include "stvar/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <numbers>
#include <numeric>

#include "stvar/error.hpp"

namespace stvar::evaluate {

namespace {

// Runs body(i) for i in [0, n); the first exception thrown by any iteration
// is rethrown on the calling thread.
template <class Body>
void for_each_index(std::size_t n, Exec exec, Body body) {
  if (exec == Exec::serial) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::exception_ptr error;
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) {
    try {
      body(static_cast<std::size_t>(i));
    } catch (...) {
#pragma omp critical(stvar_eval_error)
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
}

std::size_t source_cell(const PlanarSeries& series, const Tessellation& tess, std::size_t t) {
  if (!series.node.empty()) return static_cast<std::size_t>(series.node[t]);
  return projection::assign_cell(series.at(t), tess);
}

const Date* date_at(const PlanarSeries& series, std::size_t t) {
  return series.dates.empty() ? nullptr : &series.dates[t];
}

void check_chain_series(const mcmc::Chain& chain, const PlanarSeries& series) {
  if (chain.draws.empty()) fail(ErrorCode::EmptyData, "chain has no draws");
  if (chain.series_length != series.size())
    fail(ErrorCode::LengthMismatch, "chain was fitted to " + std::to_string(chain.series_length) +
                                        " locations but the series has " + std::to_string(series.size()));
}

Eigen::Matrix2d floor_eigenvalues(const Eigen::Matrix2d& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(0.5 * (m + m.transpose()));
  Eigen::Vector2d ev = eig.eigenvalues();
  const double floor = std::max(1e-10 * std::abs(ev(1)), 1e-300);
  if (ev(0) >= floor) return 0.5 * (m + m.transpose());
  ev = ev.cwiseMax(floor);
  return eig.eigenvectors() * ev.asDiagonal() * eig.eigenvectors().transpose();
}

}  // namespace

double quantile(std::vector<double> values, double q) {
  if (values.empty()) fail(ErrorCode::EmptyData, "quantile of an empty sample");
  std::sort(values.begin(), values.end());
  const double h = (static_cast<double>(values.size()) - 1.0) * std::clamp(q, 0.0, 1.0);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  if (lo + 1 >= values.size()) return values.back();
  return values[lo] + (h - static_cast<double>(lo)) * (values[lo + 1] - values[lo]);
}

double rmspe(const PlanarSeries& actual, const Eigen::MatrixXd& predicted) {
  if (actual.size() < 2 || static_cast<std::size_t>(predicted.rows()) != actual.size() - 1 || predicted.cols() != 2)
    fail(ErrorCode::LengthMismatch, "predictions must have one row per step after the first");
  const Eigen::MatrixXd err = predicted - actual.points.bottomRows(predicted.rows());
  return std::sqrt(err.rowwise().squaredNorm().sum() / static_cast<double>(predicted.rows()));
}

bool in_region(const Eigen::Vector2d& actual, const Eigen::MatrixXd& draws, double level, Region region) {
  const Eigen::Index B = draws.rows();
  if (B < 3) fail(ErrorCode::DegenerateDraws, "too few predictive draws");
  if (region == Region::rectangle) {
    for (int k = 0; k < 2; ++k) {
      std::vector<double> col(draws.col(k).data(), draws.col(k).data() + B);
      const double lo = quantile(col, 0.5 * (1.0 - level));
      const double hi = quantile(col, 1.0 - 0.5 * (1.0 - level));
      if (actual(k) < lo || actual(k) > hi) return false;
    }
    return true;
  }
  const Eigen::RowVector2d mu = draws.colwise().mean();
  const Eigen::MatrixXd centered = draws.rowwise() - mu;
  const Eigen::Matrix2d cov = centered.transpose() * centered / static_cast<double>(B - 1);
  Eigen::LLT<Eigen::Matrix2d> llt(cov);
  if (llt.info() != Eigen::Success || !(cov.determinant() > 1e-14 * cov.trace() * cov.trace()))
    fail(ErrorCode::DegenerateDraws, "predictive draw covariance is singular");
  std::vector<double> m(static_cast<std::size_t>(B));
  for (Eigen::Index b = 0; b < B; ++b) {
    const Eigen::Vector2d z = llt.matrixL().solve(centered.row(b).transpose());
    m[static_cast<std::size_t>(b)] = z.squaredNorm();
  }
  const double threshold = quantile(std::move(m), level);
  const Eigen::Vector2d za = llt.matrixL().solve(actual - mu.transpose());
  return za.squaredNorm() <= threshold;
}

double coverage(const Eigen::MatrixXd& actual, const std::vector<Eigen::MatrixXd>& draw_sets, double level,
                Region region) {
  if (static_cast<std::size_t>(actual.rows()) != draw_sets.size() || draw_sets.empty())
    fail(ErrorCode::LengthMismatch, "one draw set per actual location is required");
  std::size_t inside = 0;
  for (std::size_t t = 0; t < draw_sets.size(); ++t) {
    if (draw_sets[t].rows() < 100) fail(ErrorCode::DegenerateDraws, "coverage needs at least 100 draws per step");
    if (in_region(actual.row(static_cast<Eigen::Index>(t)).transpose(), draw_sets[t], level, region)) ++inside;
  }
  return static_cast<double>(inside) / static_cast<double>(draw_sets.size());
}

double coverage(const PlanarSeries& actual, const std::vector<Eigen::MatrixXd>& draw_sets, double level,
                Region region) {
  if (actual.size() < 2 || draw_sets.size() != actual.size() - 1)
    fail(ErrorCode::LengthMismatch, "one draw set per step after the first is required");
  return coverage(Eigen::MatrixXd(actual.points.bottomRows(actual.size() - 1)), draw_sets, level, region);
}

// ---------------------------------------------------------------------------

mcmc::PosteriorDraw posterior_mean(const mcmc::Chain& chain) {
  if (chain.draws.empty()) fail(ErrorCode::EmptyData, "chain has no draws");
  const double n = static_cast<double>(chain.draws.size());
  mcmc::PosteriorDraw mean{Eigen::MatrixXd::Zero(chain.draws[0].phi.rows(), 2), Eigen::Matrix2d::Zero(), std::nullopt};
  for (const auto& d : chain.draws) {
    mean.phi += d.phi / n;
    mean.sigma += d.sigma / n;
  }
  mean.sigma = floor_eigenvalues(mean.sigma);
  if (chain.draws[0].spatial) {
    model::SpatialState s;
    s.theta.setZero();
    s.q.setZero();
    s.wstar = Eigen::MatrixXd::Zero(2, chain.draws[0].spatial->wstar.cols());
    for (const auto& d : chain.draws) {
      s.theta += d.spatial->theta / n;
      s.q += d.spatial->q / n;
      s.wstar += d.spatial->wstar / n;
    }
    mean.spatial = s;
  }
  return mean;
}

DicResult dic(const mcmc::Chain& chain, const PlanarSeries& series) {
  check_chain_series(chain, series);
  const model::DesignPair design = model::build_design(series, chain.layout);
  if (chain.draws[0].phi.rows() != static_cast<Eigen::Index>(design.layout.columns()) &&
      !chain.spec().random_walk())
    fail(ErrorCode::DimensionMismatch, "chain coefficients do not match the design");
  const double n = static_cast<double>(design.rows());
  const bool spatial = chain.spec().spatial();
  const bool rw = chain.spec().random_walk();

  std::optional<mcmc::Regression> reg;
  Eigen::Matrix2d rw_cross = Eigen::Matrix2d::Zero();
  if (rw) {
    rw_cross = model::residual_cross(design, Eigen::MatrixXd::Identity(2, 2));
  } else if (!spatial) {
    reg.emplace(design.X);
    reg->set_response(design.X, design.Y);
  }
  auto deviance = [&](const mcmc::PosteriorDraw& d) {
    if (spatial) {
      const model::SpatialAdjust adj{design.layout.knots(), *d.spatial};
      const Eigen::MatrixXd eta = model::coregional_eta(design.origins, adj, design.layout.spec().jitter);
      return -2.0 * model::log_likelihood(design, d.phi, d.sigma, eta);
    }
    const Eigen::Matrix2d cross = rw ? rw_cross : reg->cross(d.phi);
    Eigen::LLT<Eigen::Matrix2d> llt(d.sigma);
    if (llt.info() != Eigen::Success) fail(ErrorCode::NonPDSigma, "draw Sigma is not positive definite");
    const double log_det = 2.0 * std::log(llt.matrixL()(0, 0) * llt.matrixL()(1, 1));
    return 2.0 * n * std::log(2.0 * std::numbers::pi) + n * log_det + llt.solve(cross).trace();
  };

  // Spatial deviances need a predictive-process solve per draw, so they use
  // the same evenly spaced subset as the predictive summaries.
  const std::vector<std::size_t> idx = spatial
      ? mcmc::predictive_subset(chain.draws.size(), chain.config.max_predictive_draws)
      : mcmc::predictive_subset(chain.draws.size(), chain.draws.size());
  std::vector<double> dev(idx.size());
  for_each_index(idx.size(), spatial ? Exec::parallel : Exec::serial,
                 [&](std::size_t i) { dev[i] = deviance(chain.draws[idx[i]]); });
  DicResult r;
  r.d_bar = std::accumulate(dev.begin(), dev.end(), 0.0) / static_cast<double>(dev.size());
  r.d_hat = deviance(posterior_mean(chain));
  r.p_d = r.d_bar - r.d_hat;
  r.dic = r.d_bar + r.p_d;
  return r;
}

std::vector<Eigen::MatrixXd> predictive_draws(const mcmc::Chain& chain, const PlanarSeries& series, Exec exec) {
  check_chain_series(chain, series);
  const mcmc::Predictor pred(chain);
  std::vector<Eigen::MatrixXd> sets(series.size() - 1);
  for_each_index(sets.size(), exec, [&](std::size_t t) {
    Rng rng(pred.step_seed(t));
    sets[t] = pred.draws(series.at(t), date_at(series, t), rng);
  });
  return sets;
}

PredictiveSummary predictive_summary(const mcmc::Chain& chain, const PlanarSeries& series, double level,
                                     Region region, Exec exec) {
  check_chain_series(chain, series);
  const mcmc::Predictor pred(chain);
  const std::size_t n = series.size() - 1;
  PredictiveSummary out;
  out.means.resize(static_cast<Eigen::Index>(n), 2);
  out.inside.assign(n, 0);
  for_each_index(n, exec, [&](std::size_t t) {
    Rng rng(pred.step_seed(t));
    const Eigen::MatrixXd draws = pred.draws(series.at(t), date_at(series, t), rng);
    out.means.row(static_cast<Eigen::Index>(t)) = draws.colwise().mean();
    out.inside[t] = in_region(series.at(t + 1), draws, level, region) ? 1 : 0;
  });
  return out;
}

ModelScore score_model(const mcmc::Chain& chain, const PlanarSeries& series, double level, Exec exec) {
  const PredictiveSummary summary = predictive_summary(chain, series, level, Region::ellipse, exec);
  const DicResult d = dic(chain, series);
  ModelScore s;
  s.model = chain.spec().name();
  s.rmspe = rmspe(series, summary.means);
  s.dic = d.dic;
  s.p_d = d.p_d;
  const auto inside = std::accumulate(summary.inside.begin(), summary.inside.end(), std::size_t{0});
  s.coverage = static_cast<double>(inside) / static_cast<double>(summary.inside.size());
  return s;
}

// ---------------------------------------------------------------------------

TransitionMatrix normalize_counts(const Eigen::MatrixXd& counts) {
  TransitionMatrix tm;
  tm.counts = counts;
  tm.probs = Eigen::MatrixXd::Zero(counts.rows(), counts.cols());
  tm.defined.assign(static_cast<std::size_t>(counts.rows()), false);
  for (Eigen::Index i = 0; i < counts.rows(); ++i) {
    const double total = counts.row(i).sum();
    if (total <= 0.0) continue;
    tm.probs.row(i) = counts.row(i) / total;
    tm.defined[static_cast<std::size_t>(i)] = true;
  }
  return tm;
}

TransitionMatrix empirical_transitions(const std::vector<int>& cells, std::size_t n_cells) {
  if (cells.size() < 2) fail(ErrorCode::EmptySeries, "transitions need at least two days");
  const auto M = static_cast<Eigen::Index>(n_cells);
  Eigen::MatrixXd counts = Eigen::MatrixXd::Zero(M, M);
  for (std::size_t t = 0; t + 1 < cells.size(); ++t) {
    const int a = cells[t], b = cells[t + 1];
    if (a < 0 || b < 0 || a >= M || b >= M) fail(ErrorCode::DimensionMismatch, "cell label out of range");
    counts(a, b) += 1.0;
  }
  return normalize_counts(counts);
}

TransitionMatrix empirical_transitions(const PlanarSeries& series, const Tessellation& tess) {
  std::vector<int> cells(series.size());
  for (std::size_t t = 0; t < series.size(); ++t) cells[t] = static_cast<int>(source_cell(series, tess, t));
  return empirical_transitions(cells, tess.size());
}

namespace {

bool in_block(const PlanarSeries& series, std::size_t t, const BlockContext& block, const SeasonCalendar& cal) {
  if (!block.year && !block.season) return true;
  if (series.dates.empty()) fail(ErrorCode::UnlabeledDate, "block selection needs dated locations");
  const Date& d = series.dates[t];
  if (block.year && d.year != *block.year) return false;
  if (block.season && cal.season(d) != *block.season) return false;
  return true;
}

}  // namespace

TransitionMatrix model_transitions(const mcmc::Chain& chain, const PlanarSeries& series, const BlockContext& block,
                                   Exec exec) {
  check_chain_series(chain, series);
  const Tessellation& tess = chain.layout.tessellation();
  if (tess.size() == 0) fail(ErrorCode::InvalidSpec, "chain carries no tessellation");
  const mcmc::Predictor pred(chain);
  const std::size_t T = series.size();
  const auto M = static_cast<Eigen::Index>(tess.size());
  std::vector<Eigen::VectorXd> rows(T);
  std::vector<int> source(T, -1);
  for_each_index(T, exec, [&](std::size_t t) {
    if (!in_block(series, t, block, chain.spec().seasons)) return;
    source[t] = static_cast<int>(projection::assign_cell(series.at(t), tess));
    Rng rng(pred.step_seed(t));
    const Eigen::MatrixXd draws = pred.draws(series.at(t), date_at(series, t), rng);
    rows[t] = Eigen::VectorXd::Zero(M);
    for (Eigen::Index b = 0; b < draws.rows(); ++b)
      rows[t](static_cast<Eigen::Index>(projection::assign_cell(draws.row(b).transpose(), tess))) += 1.0;
  });
  Eigen::MatrixXd counts = Eigen::MatrixXd::Zero(M, M);
  for (std::size_t t = 0; t < T; ++t)
    if (source[t] >= 0) counts.row(source[t]) += rows[t].transpose();
  return normalize_counts(counts);
}

std::vector<std::vector<double>> transition_distances(const PlanarSeries& series, const Tessellation& tess) {
  if (series.size() < 2) fail(ErrorCode::EmptySeries, "transition distances need at least two locations");
  std::vector<std::vector<double>> out(tess.size());
  for (std::size_t t = 0; t + 1 < series.size(); ++t) {
    const std::size_t c = source_cell(series, tess, t);
    if (c >= out.size()) fail(ErrorCode::DimensionMismatch, "cell label out of range");
    out[c].push_back((series.at(t + 1) - series.at(t)).norm());
  }
  return out;
}

std::vector<std::vector<double>> predictive_transition_distances(const mcmc::Chain& chain, const PlanarSeries& series,
                                                                 Exec exec) {
  check_chain_series(chain, series);
  const Tessellation& tess = chain.layout.tessellation();
  const mcmc::Predictor pred(chain);
  std::vector<Eigen::VectorXd> steps(series.size());
  for_each_index(series.size(), exec, [&](std::size_t t) {
    Rng rng(pred.step_seed(t));
    const Eigen::MatrixXd draws = pred.draws(series.at(t), date_at(series, t), rng);
    steps[t] = (draws.rowwise() - series.at(t).transpose()).rowwise().norm();
  });
  std::vector<std::vector<double>> out(tess.size());
  for (std::size_t t = 0; t < series.size(); ++t) {
    auto& bucket = out[projection::assign_cell(series.at(t), tess)];
    bucket.insert(bucket.end(), steps[t].data(), steps[t].data() + steps[t].size());
  }
  return out;
}

DistanceSummary summarize(std::vector<double> values) {
  DistanceSummary s;
  s.count = values.size();
  if (values.empty()) return s;
  std::sort(values.begin(), values.end());
  s.q05 = quantile(values, 0.05);
  s.q25 = quantile(values, 0.25);
  s.median = quantile(values, 0.5);
  s.q75 = quantile(values, 0.75);
  s.q95 = quantile(values, 0.95);
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  return s;
}

FrequencyTable node_frequencies(const std::vector<int>& assignments, std::size_t n_nodes, const Grouping& grouping,
                                const std::vector<Date>& dates) {
  if (grouping.kind != GroupKind::all && dates.size() != assignments.size())
    fail(ErrorCode::UnlabeledDate, "grouped frequencies need one date per assignment");
  FrequencyTable table;
  switch (grouping.kind) {
    case GroupKind::all: table.groups = {"all"}; break;
    case GroupKind::season: table.groups = grouping.seasons.names; break;
    case GroupKind::year_range:
      for (const auto& [a, b] : grouping.year_ranges) table.groups.push_back(std::to_string(a) + "-" + std::to_string(b));
      break;
  }
  table.counts = Eigen::MatrixXi::Zero(static_cast<Eigen::Index>(table.groups.size()), static_cast<Eigen::Index>(n_nodes));
  for (std::size_t i = 0; i < assignments.size(); ++i) {
    const int node = assignments[i];
    if (node < 0 || static_cast<std::size_t>(node) >= n_nodes) fail(ErrorCode::DimensionMismatch, "node label out of range");
    switch (grouping.kind) {
      case GroupKind::all: table.counts(0, node) += 1; break;
      case GroupKind::season: table.counts(grouping.seasons.season(dates[i]), node) += 1; break;
      case GroupKind::year_range:
        for (std::size_t g = 0; g < grouping.year_ranges.size(); ++g) {
          const auto& [a, b] = grouping.year_ranges[g];
          if (dates[i].year >= a && dates[i].year <= b) table.counts(static_cast<Eigen::Index>(g), node) += 1;
        }
        break;
    }
  }
  return table;
}

Eigen::MatrixXd as_node_array(const Eigen::VectorXd& per_node, std::size_t n_rows, std::size_t n_cols) {
  if (static_cast<std::size_t>(per_node.size()) != n_rows * n_cols)
    fail(ErrorCode::DimensionMismatch, "node count does not fill the node array");
  Eigen::MatrixXd out(n_rows, n_cols);
  for (std::size_t r = 0; r < n_rows; ++r)
    for (std::size_t c = 0; c < n_cols; ++c) out(r, c) = per_node(r * n_cols + c);
  return out;
}

std::vector<Eigen::MatrixXd> node_field_maps(const som::SomModel& model, const data::GridSpec& grid,
                                             const data::Standardization& st, std::size_t variable, MapMode mode) {
  if (model.dim() != grid.dim()) fail(ErrorCode::GridMismatch, "node dimension does not match the grid");
  if (variable >= grid.n_vars()) fail(ErrorCode::GridMismatch, "variable index out of range");
  const auto V = static_cast<Eigen::Index>(grid.n_vars()), C = static_cast<Eigen::Index>(grid.n_cells());
  const Eigen::Index mean_cols = st.mode == data::StandardizeMode::pooled ? 1 : C;
  if (st.mean.rows() != V || st.mean.cols() != mean_cols || st.sd.rows() != V || st.sd.cols() != mean_cols)
    fail(ErrorCode::GridMismatch, "standardization constants do not match the grid");
  if (mode == MapMode::anomaly && (st.cell_mean.rows() != V || st.cell_mean.cols() != C))
    fail(ErrorCode::GridMismatch, "per-cell means do not match the grid");
  std::vector<Eigen::MatrixXd> maps;
  for (std::size_t m = 0; m < model.size(); ++m) {
    Eigen::MatrixXd g(grid.n_rows, grid.n_cols);
    for (std::size_t r = 0; r < grid.n_rows; ++r)
      for (std::size_t c = 0; c < grid.n_cols; ++c) {
        const std::size_t cell = r * grid.n_cols + c;
        const double z = model.nodes(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(grid.component(variable, cell)));
        double x = st.mean_at(variable, cell) + st.sd_at(variable, cell) * z;
        if (mode == MapMode::anomaly) x -= st.cell_mean(static_cast<Eigen::Index>(variable), static_cast<Eigen::Index>(cell));
        g(r, c) = x;
      }
    maps.push_back(std::move(g));
  }
  return maps;
}

LagScan var_lag_aic(const PlanarSeries& series, std::size_t max_lag) {
  if (max_lag < 1) fail(ErrorCode::InvalidConfig, "max_lag must be at least 1");
  const std::size_t T = series.size();
  if (T <= 2 * max_lag + 10) fail(ErrorCode::EmptySeries, "series too short for the requested lags");
  const std::size_t n = T - max_lag;
  const Eigen::MatrixXd Y = series.points.bottomRows(n);
  LagScan scan;
  for (std::size_t p = 1; p <= max_lag; ++p) {
    Eigen::MatrixXd X(n, 1 + 2 * p);
    X.col(0).setOnes();
    for (std::size_t lag = 1; lag <= p; ++lag)
      X.middleCols(1 + 2 * (lag - 1), 2) = series.points.middleRows(max_lag - lag, n);
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
    if (qr.rank() < X.cols()) fail(ErrorCode::SingularDesign, "lagged design is singular");
    const Eigen::MatrixXd R = Y - X * qr.solve(Y);
    const Eigen::Matrix2d S = R.transpose() * R / static_cast<double>(n);
    const double k = 2.0 * static_cast<double>(X.cols());
    scan.aic.push_back(std::log(S.determinant()) + 2.0 * k / static_cast<double>(n));
  }
  scan.best_lag = static_cast<std::size_t>(std::min_element(scan.aic.begin(), scan.aic.end()) - scan.aic.begin()) + 1;
  return scan;
}

}  // namespace stvar::evaluate
