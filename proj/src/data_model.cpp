#include "stvar/data_model.hpp"

#include <cmath>

#include "stvar/error.hpp"

namespace stvar::data {

void GridSpec::validate() const {
  if (n_rows < 1 || n_cols < 1) fail(ErrorCode::DimensionMismatch, "grid must have at least one row and column");
  if (variables.empty()) fail(ErrorCode::DimensionMismatch, "grid has no variables");
}

void RawSeries::validate() const {
  grid.validate();
  if (values.vars() != grid.n_vars() || values.cells() != grid.n_cells())
    fail(ErrorCode::DimensionMismatch, "field array does not match grid");
  if (values.days() < 2) fail(ErrorCode::EmptySeries, "need at least two days");
  if (!dates.empty()) {
    if (dates.size() != values.days()) fail(ErrorCode::DimensionMismatch, "date count differs from day count");
    if (!strictly_increasing(dates)) fail(ErrorCode::DimensionMismatch, "dates must be strictly increasing");
  }
}

StateSeries from_matrix(const Eigen::MatrixXd& matrix) {
  StateSeries s;
  s.matrix = matrix;
  s.grid.n_rows = 1;
  s.grid.n_cols = 1;
  for (Eigen::Index j = 0; j < matrix.cols(); ++j) s.grid.variables.push_back("x" + std::to_string(j + 1));
  const auto d = matrix.cols();
  auto& st = s.standardization;
  st.mean = Eigen::MatrixXd::Zero(d, 1);
  st.sd = Eigen::MatrixXd::Ones(d, 1);
  st.cell_mean = matrix.rows() > 0 ? Eigen::MatrixXd(matrix.colwise().mean().transpose()) : Eigen::MatrixXd::Zero(d, 1);
  st.cell_sd = Eigen::MatrixXd::Ones(d, 1);
  return s;
}

namespace {

// Two-pass mean and sample sd over a sequence of values.
template <class Fn>
std::pair<double, double> moments(std::size_t n, Fn&& value) {
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) sum += value(i);
  const double mean = sum / static_cast<double>(n);
  double ss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double e = value(i) - mean;
    ss += e * e;
  }
  return {mean, std::sqrt(ss / static_cast<double>(n - 1))};
}

}  // namespace

StateSeries standardize(const RawSeries& raw, StandardizeMode mode) {
  if (raw.values.days() < 2) fail(ErrorCode::EmptySeries, "need at least two days to standardize");
  raw.validate();
  const std::size_t T = raw.days(), V = raw.grid.n_vars(), C = raw.grid.n_cells();
  const auto& f = raw.values;

  Standardization st;
  st.mode = mode;
  st.cell_mean.resize(V, C);
  st.cell_sd.resize(V, C);
  for (std::size_t v = 0; v < V; ++v)
    for (std::size_t c = 0; c < C; ++c) {
      auto [m, s] = moments(T, [&](std::size_t t) { return f(t, v, c); });
      st.cell_mean(v, c) = m;
      st.cell_sd(v, c) = s;
    }

  if (mode == StandardizeMode::pooled) {
    st.mean.resize(V, 1);
    st.sd.resize(V, 1);
#pragma omp parallel for schedule(static)
    for (std::size_t v = 0; v < V; ++v) {
      auto [m, s] = moments(T * C, [&](std::size_t i) { return f(i / C, v, i % C); });
      st.mean(v, 0) = m;
      st.sd(v, 0) = s;
    }
  } else {
    st.mean = st.cell_mean;
    st.sd = st.cell_sd;
  }

  for (std::size_t v = 0; v < V; ++v)
    for (Eigen::Index j = 0; j < st.sd.cols(); ++j)
      if (!(st.sd(v, j) > 0.0)) fail(ErrorCode::ZeroVariance, raw.grid.variables[v]);

  FieldArray z(T, V, C);
  for (std::size_t t = 0; t < T; ++t)
    for (std::size_t v = 0; v < V; ++v)
      for (std::size_t c = 0; c < C; ++c) z(t, v, c) = (f(t, v, c) - st.mean_at(v, c)) / st.sd_at(v, c);

  StateSeries out;
  out.matrix = flatten(z);
  out.grid = raw.grid;
  out.standardization = std::move(st);
  out.dates = raw.dates;
  return out;
}

Eigen::MatrixXd flatten(const FieldArray& fields) {
  const std::size_t T = fields.days(), V = fields.vars(), C = fields.cells();
  Eigen::MatrixXd m(T, V * C);
  for (std::size_t t = 0; t < T; ++t)
    for (std::size_t v = 0; v < V; ++v)
      for (std::size_t c = 0; c < C; ++c) m(t, v * C + c) = fields(t, v, c);
  return m;
}

FieldArray unflatten(const Eigen::MatrixXd& matrix, const GridSpec& grid) {
  if (static_cast<std::size_t>(matrix.cols()) != grid.dim())
    fail(ErrorCode::DimensionMismatch, "matrix width does not match grid dimension");
  const std::size_t T = matrix.rows(), V = grid.n_vars(), C = grid.n_cells();
  FieldArray f(T, V, C);
  for (std::size_t t = 0; t < T; ++t)
    for (std::size_t v = 0; v < V; ++v)
      for (std::size_t c = 0; c < C; ++c) f(t, v, c) = matrix(t, grid.component(v, c));
  return f;
}

}  // namespace stvar::data
