#pragma once

// Gridded multivariate daily fields and their flattening into the state
// vectors the SOM trains on.

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "stvar/calendar.hpp"

namespace stvar::data {

struct GridSpec {
  std::size_t n_rows = 1;
  std::size_t n_cols = 1;
  std::vector<std::string> variables;

  std::size_t n_cells() const { return n_rows * n_cols; }
  std::size_t n_vars() const { return variables.size(); }
  /// Length of one flattened daily vector.
  std::size_t dim() const { return n_vars() * n_cells(); }
  /// Component index of (variable, cell); variable-major, then row-major over cells.
  std::size_t component(std::size_t var, std::size_t cell) const { return var * n_cells() + cell; }
  void validate() const;

  bool operator==(const GridSpec&) const = default;
};

/// T x V x C array of measurements in native units, indexed (day, variable, cell).
class FieldArray {
 public:
  FieldArray() = default;
  FieldArray(std::size_t days, std::size_t vars, std::size_t cells)
      : days_(days), vars_(vars), cells_(cells), values_(days * vars * cells, 0.0) {}

  std::size_t days() const { return days_; }
  std::size_t vars() const { return vars_; }
  std::size_t cells() const { return cells_; }

  double& operator()(std::size_t t, std::size_t v, std::size_t c) { return values_[(t * vars_ + v) * cells_ + c]; }
  double operator()(std::size_t t, std::size_t v, std::size_t c) const { return values_[(t * vars_ + v) * cells_ + c]; }

  /// Day-major, variable-major, cell-row-major storage (the on-disk order).
  std::vector<double>& raw() { return values_; }
  const std::vector<double>& raw() const { return values_; }

  bool operator==(const FieldArray&) const = default;

 private:
  std::size_t days_ = 0, vars_ = 0, cells_ = 0;
  std::vector<double> values_;
};

struct RawSeries {
  GridSpec grid;
  FieldArray values;
  std::vector<Date> dates;  // empty when unlabeled

  std::size_t days() const { return values.days(); }
  /// Shape and date checks; throws DimensionMismatch / EmptySeries.
  void validate() const;
};

enum class StandardizeMode { pooled, per_cell };

/// Constants used to standardize, plus raw per-cell climatology for anomaly maps.
struct Standardization {
  StandardizeMode mode = StandardizeMode::pooled;
  Eigen::MatrixXd mean;       // V x 1 (pooled) or V x C (per_cell)
  Eigen::MatrixXd sd;         // same shape as mean, 1/(N-1) divisor
  Eigen::MatrixXd cell_mean;  // V x C raw per-cell means over days
  Eigen::MatrixXd cell_sd;    // V x C raw per-cell sds over days

  double mean_at(std::size_t v, std::size_t c) const { return mode == StandardizeMode::pooled ? mean(v, 0) : mean(v, c); }
  double sd_at(std::size_t v, std::size_t c) const { return mode == StandardizeMode::pooled ? sd(v, 0) : sd(v, c); }
};

struct StateSeries {
  Eigen::MatrixXd matrix;  // T x d
  GridSpec grid;
  Standardization standardization;
  std::vector<Date> dates;

  std::size_t days() const { return static_cast<std::size_t>(matrix.rows()); }
  std::size_t dim() const { return static_cast<std::size_t>(matrix.cols()); }
};

/// Wraps an already-flattened T x d matrix (e.g. a synthetic cloud) as a state
/// series on a 1 x 1 grid with one variable per component and identity constants.
StateSeries from_matrix(const Eigen::MatrixXd& matrix);

/// Per-variable standardization pooled over all cells and days (or per cell).
/// Throws EmptySeries when T < 2 and ZeroVariance(variable) when constant.
StateSeries standardize(const RawSeries& raw, StandardizeMode mode = StandardizeMode::pooled);

Eigen::MatrixXd flatten(const FieldArray& fields);
FieldArray unflatten(const Eigen::MatrixXd& matrix, const GridSpec& grid);

}  // namespace stvar::data
