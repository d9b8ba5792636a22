#pragma once

// The bivariate autoregressive model family for planar location series:
//   s_{t+1} = A(s_t, t) s_t + eta(s_t, t) + e_{t+1},  e ~ N(0, Sigma)
// with A blocked over tessellation cells and/or time blocks, optional
// intercept blocks, and an optional coregionalized predictive-process
// adjustment eta(s) = Q (w1~(s), w2~(s))'.

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "stvar/calendar.hpp"
#include "stvar/projection.hpp"

namespace stvar::model {

using projection::PlanarSeries;
using projection::Tessellation;

enum class AStructure {
  random_walk,
  constant,
  tessellation,
  quarter,
  quarter_by_year,
  year,
  tessellation_by_year,
  tessellation_by_quarter,
};

enum class EtaStructure { none, constant, quarter, year, spatial };

const char* to_string(AStructure a);
const char* to_string(EtaStructure e);
AStructure parse_a_structure(const std::string& name);
EtaStructure parse_eta_structure(const std::string& name);

struct KnotGrid {
  std::size_t per_axis = 8;
  double padding = 0.10;
};

/// Diagonal jitter schedule for correlation-matrix factorizations.
struct JitterPolicy {
  double initial = 1e-10;
  double max = 1e-6;
  double growth = 10.0;
};

struct ModelSpec {
  AStructure a = AStructure::constant;
  EtaStructure eta = EtaStructure::none;
  SeasonCalendar seasons;
  KnotGrid knots;
  JitterPolicy jitter;

  /// Row `index` (0..11) of the model ladder.
  static ModelSpec ladder(int index);
  /// Accepts "model0".."model11".
  static ModelSpec from_name(const std::string& name);
  std::optional<int> ladder_index() const;
  std::string name() const;
  void validate() const;

  bool needs_cells() const;
  bool needs_seasons() const;
  bool needs_years() const;
  bool spatial() const { return eta == EtaStructure::spatial; }
  bool random_walk() const { return a == AStructure::random_walk; }
};

/// Column bookkeeping shared by design construction, simulation and prediction.
class DesignLayout {
 public:
  DesignLayout() = default;
  /// `dates` supplies the year list for annual blocks; `extent_points` fixes
  /// the knot grid for spatial specs.
  DesignLayout(const ModelSpec& spec, const Tessellation& tess, const std::vector<Date>& dates,
               const Eigen::MatrixXd& extent_points = {});

  const ModelSpec& spec() const { return spec_; }
  const Tessellation& tessellation() const { return tess_; }
  const std::vector<int>& years() const { return years_; }
  const Eigen::MatrixXd& knots() const { return knots_; }

  std::size_t a_blocks() const { return a_blocks_; }
  std::size_t intercept_blocks() const { return intercept_blocks_; }
  /// Regression width p = 2 a_blocks + intercept_blocks.
  std::size_t columns() const { return 2 * a_blocks_ + intercept_blocks_; }

  /// A-block used at (s, date). Throws UnlabeledDate when a needed label is missing.
  std::size_t a_block(const Eigen::Vector2d& s, const Date* date) const;
  std::optional<std::size_t> intercept_block(const Date* date) const;

  /// Regression row x_t for conditioning location s and its date.
  Eigen::RowVectorXd row(const Eigen::Vector2d& s, const Date* date) const;

  std::vector<std::string> column_labels() const;
  std::string a_block_label(std::size_t b) const;

  /// A_b = (rows 2b, 2b+1 of Phi)'.
  static Eigen::Matrix2d a_matrix(const Eigen::MatrixXd& phi, std::size_t block);

  /// Restores a layout saved with a chain.
  static DesignLayout restore(const ModelSpec& spec, const Tessellation& tess, std::vector<int> years,
                              Eigen::MatrixXd knots);

 private:
  int year_index(const Date& d) const;
  void compute_blocks();

  ModelSpec spec_;
  Tessellation tess_;
  std::vector<int> years_;
  Eigen::MatrixXd knots_;
  std::size_t a_blocks_ = 0;
  std::size_t intercept_blocks_ = 0;
};

struct DesignPair {
  Eigen::MatrixXd Y;        // (T-1) x 2: s_2..s_T
  Eigen::MatrixXd X;        // (T-1) x p
  Eigen::MatrixXd origins;  // (T-1) x 2: s_1..s_{T-1}
  DesignLayout layout;
  std::vector<std::string> column_map;
  bool rank_warning = false;

  std::size_t rows() const { return static_cast<std::size_t>(Y.rows()); }
  std::size_t series_length() const { return rows() + 1; }
};

DesignPair build_design(const PlanarSeries& series, const Tessellation& tess, const ModelSpec& spec);
/// Rebuilds a design on an existing layout (e.g. one restored from a chain).
DesignPair build_design(const PlanarSeries& series, const DesignLayout& layout);

struct MleResult {
  Eigen::MatrixXd phi;    // p x 2
  Eigen::Matrix2d sigma;
};

/// Closed-form conditional MLE. Random-walk designs return phi = I.
MleResult mle_var(const DesignPair& design);

/// (Y - X Phi - eta)'(Y - X Phi - eta); eta may be empty.
Eigen::Matrix2d residual_cross(const DesignPair& design, const Eigen::MatrixXd& phi,
                               const Eigen::MatrixXd& eta = {});

/// (Y - X)'(Y - X)/(T - 1) with X the lagged series.
Eigen::Matrix2d rw_sigma_mle(const PlanarSeries& series);

/// exp(-theta ||a_i - b_j||).
Eigen::MatrixXd exp_corr(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double theta);

/// Regular k x k knots over the padded bounding box of `points`.
Eigen::MatrixXd make_knots(const Eigen::MatrixXd& points, const KnotGrid& grid);

/// One parent process's knot correlation C*(theta), factorized with the
/// jitter policy.
class KnotProcess {
 public:
  KnotProcess() = default;
  KnotProcess(const Eigen::MatrixXd& knots, double theta, const JitterPolicy& jitter);

  double theta() const { return theta_; }
  double jitter() const { return jitter_; }
  std::size_t size() const { return static_cast<std::size_t>(knots_.rows()); }
  const Eigen::MatrixXd& knots() const { return knots_; }

  /// Rows c(s; theta)' C*^{-1} for every row of `sites`.
  Eigen::MatrixXd weights(const Eigen::MatrixXd& sites) const;
  Eigen::RowVectorXd weights(const Eigen::Vector2d& s) const;
  Eigen::MatrixXd solve(const Eigen::MatrixXd& rhs) const { return chol_.solve(rhs); }
  /// log |C*|.
  double log_det() const { return log_det_; }
  /// Lower factor of C*.
  Eigen::MatrixXd lower() const { return chol_.matrixL(); }
  /// c*(s)' C*^{-1} c*(s') on every pair of sites.
  Eigen::MatrixXd induced_covariance(const Eigen::MatrixXd& sites) const;

 private:
  Eigen::MatrixXd knots_;
  double theta_ = 1.0;
  double jitter_ = 0.0;
  double log_det_ = 0.0;
  Eigen::LLT<Eigen::MatrixXd> chol_;
};

/// c(s; theta)' C*(theta)^{-1}.
Eigen::RowVectorXd pp_basis(const Eigen::Vector2d& s, const Eigen::MatrixXd& knots, double theta,
                            const JitterPolicy& jitter = {});

/// Current values of the spatial adjustment.
struct SpatialState {
  Eigen::Vector2d theta{1.0, 1.0};
  Eigen::Matrix2d q = Eigen::Matrix2d::Identity();  // lower triangular
  Eigen::MatrixXd wstar;                            // 2 x m knot values
};

struct SpatialAdjust {
  Eigen::MatrixXd knots;  // m x 2
  SpatialState state;
};

/// eta(s) = Q (w1~(s), w2~(s))'.
Eigen::Vector2d coregional_eta(const Eigen::Vector2d& s, const SpatialAdjust& adjust,
                               const JitterPolicy& jitter = {});

/// eta rows for many sites at once.
Eigen::MatrixXd coregional_eta(const Eigen::MatrixXd& sites, const SpatialAdjust& adjust,
                               const JitterPolicy& jitter = {});

struct Params {
  Eigen::MatrixXd phi;
  Eigen::Matrix2d sigma;
  std::optional<SpatialState> spatial;
};

/// Gaussian log-likelihood of Y given X Phi (+ eta) and Sigma; NonPDSigma
/// when Sigma is not positive definite.
double log_likelihood(const DesignPair& design, const Params& params);
double log_likelihood(const DesignPair& design, const Eigen::MatrixXd& phi, const Eigen::Matrix2d& sigma,
                      const Eigen::MatrixXd& eta = {});

}  // namespace stvar::model
