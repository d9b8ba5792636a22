#include "stvar/model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

#include "stvar/error.hpp"

namespace stvar::model {

namespace {

struct LadderRow {
  AStructure a;
  EtaStructure eta;
};

constexpr LadderRow kLadder[12] = {
    {AStructure::random_walk, EtaStructure::none},
    {AStructure::constant, EtaStructure::none},
    {AStructure::tessellation, EtaStructure::none},
    {AStructure::tessellation, EtaStructure::quarter},
    {AStructure::quarter, EtaStructure::none},
    {AStructure::quarter, EtaStructure::constant},
    {AStructure::quarter, EtaStructure::year},
    {AStructure::quarter_by_year, EtaStructure::none},
    {AStructure::year, EtaStructure::none},
    {AStructure::tessellation_by_year, EtaStructure::none},
    {AStructure::tessellation_by_quarter, EtaStructure::none},
    {AStructure::constant, EtaStructure::spatial},
};

}  // namespace

const char* to_string(AStructure a) {
  switch (a) {
    case AStructure::random_walk: return "random_walk";
    case AStructure::constant: return "constant";
    case AStructure::tessellation: return "tessellation";
    case AStructure::quarter: return "quarter";
    case AStructure::quarter_by_year: return "quarter_by_year";
    case AStructure::year: return "year";
    case AStructure::tessellation_by_year: return "tessellation_by_year";
    case AStructure::tessellation_by_quarter: return "tessellation_by_quarter";
  }
  return "?";
}

const char* to_string(EtaStructure e) {
  switch (e) {
    case EtaStructure::none: return "none";
    case EtaStructure::constant: return "constant";
    case EtaStructure::quarter: return "quarter";
    case EtaStructure::year: return "year";
    case EtaStructure::spatial: return "spatial";
  }
  return "?";
}

AStructure parse_a_structure(const std::string& name) {
  for (auto a : {AStructure::random_walk, AStructure::constant, AStructure::tessellation, AStructure::quarter,
                 AStructure::quarter_by_year, AStructure::year, AStructure::tessellation_by_year,
                 AStructure::tessellation_by_quarter})
    if (name == to_string(a)) return a;
  fail(ErrorCode::InvalidSpec, "unknown a_structure '" + name + "'");
}

EtaStructure parse_eta_structure(const std::string& name) {
  for (auto e : {EtaStructure::none, EtaStructure::constant, EtaStructure::quarter, EtaStructure::year,
                 EtaStructure::spatial})
    if (name == to_string(e)) return e;
  fail(ErrorCode::InvalidSpec, "unknown eta_structure '" + name + "'");
}

ModelSpec ModelSpec::ladder(int index) {
  if (index < 0 || index >= 12) fail(ErrorCode::InvalidSpec, "model index must be 0..11");
  ModelSpec s;
  s.a = kLadder[index].a;
  s.eta = kLadder[index].eta;
  return s;
}

ModelSpec ModelSpec::from_name(const std::string& name) {
  if (name.rfind("model", 0) == 0 && name.size() > 5) {
    const std::string digits = name.substr(5);
    if (std::all_of(digits.begin(), digits.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); }))
      return ladder(std::stoi(digits));
  }
  fail(ErrorCode::InvalidSpec, "unknown model name '" + name + "'");
}

std::optional<int> ModelSpec::ladder_index() const {
  for (int i = 0; i < 12; ++i)
    if (kLadder[i].a == a && kLadder[i].eta == eta) return i;
  return std::nullopt;
}

std::string ModelSpec::name() const {
  auto i = ladder_index();
  return i ? "model" + std::to_string(*i) : std::string(to_string(a)) + "+" + to_string(eta);
}

void ModelSpec::validate() const {
  seasons.validate();
  if (a == AStructure::random_walk && eta != EtaStructure::none)
    fail(ErrorCode::InvalidSpec, "random walk admits no adjustment term");
  if (!ladder_index())
    fail(ErrorCode::InvalidSpec, std::string("(") + to_string(a) + ", " + to_string(eta) + ") is not a ladder model");
  if (spatial() && (knots.per_axis < 1 || !(knots.padding >= 0.0)))
    fail(ErrorCode::InvalidSpec, "knot grid needs at least one knot per axis");
  if (!(jitter.initial > 0.0 && jitter.max >= jitter.initial && jitter.growth > 1.0))
    fail(ErrorCode::InvalidSpec, "invalid jitter policy");
}

bool ModelSpec::needs_cells() const {
  return a == AStructure::tessellation || a == AStructure::tessellation_by_year ||
         a == AStructure::tessellation_by_quarter;
}

bool ModelSpec::needs_seasons() const {
  return a == AStructure::quarter || a == AStructure::quarter_by_year || a == AStructure::tessellation_by_quarter ||
         eta == EtaStructure::quarter;
}

bool ModelSpec::needs_years() const {
  return a == AStructure::quarter_by_year || a == AStructure::year || a == AStructure::tessellation_by_year ||
         eta == EtaStructure::year;
}

// ---------------------------------------------------------------------------

DesignLayout::DesignLayout(const ModelSpec& spec, const Tessellation& tess, const std::vector<Date>& dates,
                           const Eigen::MatrixXd& extent_points)
    : spec_(spec), tess_(tess) {
  spec_.validate();
  if (spec_.needs_years()) {
    std::set<int> ys;
    for (const auto& d : dates) ys.insert(d.year);
    if (ys.empty()) fail(ErrorCode::UnlabeledDate, "annual blocks need dated observations");
    years_.assign(ys.begin(), ys.end());
  }
  if (spec_.spatial()) {
    if (extent_points.rows() == 0) fail(ErrorCode::InvalidSpec, "spatial adjustment needs points to place knots");
    knots_ = make_knots(extent_points, spec_.knots);
  }
  compute_blocks();
}

DesignLayout DesignLayout::restore(const ModelSpec& spec, const Tessellation& tess, std::vector<int> years,
                                   Eigen::MatrixXd knots) {
  DesignLayout l;
  l.spec_ = spec;
  l.spec_.validate();
  l.tess_ = tess;
  l.years_ = std::move(years);
  l.knots_ = std::move(knots);
  l.compute_blocks();
  return l;
}

void DesignLayout::compute_blocks() {
  const std::size_t L = tess_.size();
  const auto S = static_cast<std::size_t>(spec_.seasons.n_seasons());
  const std::size_t Y = years_.size();
  if (spec_.needs_cells() && L == 0) fail(ErrorCode::InvalidSpec, "tessellation blocks need node coordinates");
  switch (spec_.a) {
    case AStructure::random_walk:
    case AStructure::constant: a_blocks_ = 1; break;
    case AStructure::tessellation: a_blocks_ = L; break;
    case AStructure::quarter: a_blocks_ = S; break;
    case AStructure::quarter_by_year: a_blocks_ = S * Y; break;
    case AStructure::year: a_blocks_ = Y; break;
    case AStructure::tessellation_by_year: a_blocks_ = L * Y; break;
    case AStructure::tessellation_by_quarter: a_blocks_ = L * S; break;
  }
  switch (spec_.eta) {
    case EtaStructure::none:
    case EtaStructure::spatial: intercept_blocks_ = 0; break;
    case EtaStructure::constant: intercept_blocks_ = 1; break;
    case EtaStructure::quarter: intercept_blocks_ = S; break;
    case EtaStructure::year: intercept_blocks_ = Y; break;
  }
}

int DesignLayout::year_index(const Date& d) const {
  auto it = std::lower_bound(years_.begin(), years_.end(), d.year);
  if (it == years_.end() || *it != d.year)
    fail(ErrorCode::UnlabeledDate, "year " + std::to_string(d.year) + " has no block");
  return static_cast<int>(it - years_.begin());
}

std::size_t DesignLayout::a_block(const Eigen::Vector2d& s, const Date* date) const {
  const bool timed = spec_.a == AStructure::quarter || spec_.a == AStructure::quarter_by_year ||
                     spec_.a == AStructure::year || spec_.a == AStructure::tessellation_by_year ||
                     spec_.a == AStructure::tessellation_by_quarter;
  if (timed && date == nullptr) fail(ErrorCode::UnlabeledDate, "time-blocked transition needs a date");
  const std::size_t L = tess_.size();
  const auto S = static_cast<std::size_t>(spec_.seasons.n_seasons());
  auto cell = [&] { return projection::assign_cell(s, tess_); };
  switch (spec_.a) {
    case AStructure::random_walk:
    case AStructure::constant: return 0;
    case AStructure::tessellation: return cell();
    case AStructure::quarter: return static_cast<std::size_t>(spec_.seasons.season(*date));
    case AStructure::quarter_by_year:
      return static_cast<std::size_t>(year_index(*date)) * S + static_cast<std::size_t>(spec_.seasons.season(*date));
    case AStructure::year: return static_cast<std::size_t>(year_index(*date));
    case AStructure::tessellation_by_year: return static_cast<std::size_t>(year_index(*date)) * L + cell();
    case AStructure::tessellation_by_quarter:
      return static_cast<std::size_t>(spec_.seasons.season(*date)) * L + cell();
  }
  return 0;
}

std::optional<std::size_t> DesignLayout::intercept_block(const Date* date) const {
  switch (spec_.eta) {
    case EtaStructure::none:
    case EtaStructure::spatial: return std::nullopt;
    case EtaStructure::constant: return 0;
    case EtaStructure::quarter:
      if (!date) fail(ErrorCode::UnlabeledDate, "seasonal intercept needs a date");
      return static_cast<std::size_t>(spec_.seasons.season(*date));
    case EtaStructure::year:
      if (!date) fail(ErrorCode::UnlabeledDate, "annual intercept needs a date");
      return static_cast<std::size_t>(year_index(*date));
  }
  return std::nullopt;
}

Eigen::RowVectorXd DesignLayout::row(const Eigen::Vector2d& s, const Date* date) const {
  Eigen::RowVectorXd x = Eigen::RowVectorXd::Zero(columns());
  const std::size_t b = a_block(s, date);
  x(2 * b) = s(0);
  x(2 * b + 1) = s(1);
  if (auto e = intercept_block(date)) x(2 * a_blocks_ + *e) = 1.0;
  return x;
}

std::string DesignLayout::a_block_label(std::size_t b) const {
  const std::size_t L = tess_.size();
  const auto S = static_cast<std::size_t>(spec_.seasons.n_seasons());
  auto cell = [](std::size_t l) { return "cell" + std::to_string(l + 1); };
  auto season = [&](std::size_t s) { return spec_.seasons.names[s]; };
  auto year = [&](std::size_t y) { return std::to_string(years_[y]); };
  switch (spec_.a) {
    case AStructure::random_walk: return "identity";
    case AStructure::constant: return "all";
    case AStructure::tessellation: return cell(b);
    case AStructure::quarter: return season(b);
    case AStructure::quarter_by_year: return year(b / S) + ":" + season(b % S);
    case AStructure::year: return year(b);
    case AStructure::tessellation_by_year: return cell(b % L) + ":" + year(b / L);
    case AStructure::tessellation_by_quarter: return cell(b % L) + ":" + season(b / L);
  }
  return "?";
}

std::vector<std::string> DesignLayout::column_labels() const {
  std::vector<std::string> labels;
  for (std::size_t b = 0; b < a_blocks_; ++b) {
    labels.push_back("A[" + a_block_label(b) + "].x");
    labels.push_back("A[" + a_block_label(b) + "].y");
  }
  for (std::size_t e = 0; e < intercept_blocks_; ++e) {
    std::string what;
    switch (spec_.eta) {
      case EtaStructure::constant: what = "all"; break;
      case EtaStructure::quarter: what = spec_.seasons.names[e]; break;
      case EtaStructure::year: what = std::to_string(years_[e]); break;
      default: break;
    }
    labels.push_back("eta[" + what + "]");
  }
  return labels;
}

Eigen::Matrix2d DesignLayout::a_matrix(const Eigen::MatrixXd& phi, std::size_t block) {
  return phi.block(2 * block, 0, 2, 2).transpose();
}

// ---------------------------------------------------------------------------

namespace {

void fill_design(DesignPair& d, const PlanarSeries& series) {
  const std::size_t T = series.size();
  const bool dated = !series.dates.empty();
  const std::size_t n = T - 1, p = d.layout.columns();
  d.Y = series.points.bottomRows(n);
  d.origins = series.points.topRows(n);
  d.X.resize(n, p);
  for (std::size_t t = 0; t < n; ++t) d.X.row(t) = d.layout.row(series.at(t), dated ? &series.dates[t] : nullptr);
  d.column_map = d.layout.column_labels();
  if (!d.layout.spec().random_walk()) {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(d.X);
    d.rank_warning = qr.rank() < static_cast<Eigen::Index>(p);
  }
}

void check_series(const PlanarSeries& series) {
  if (series.size() < 3) fail(ErrorCode::EmptySeries, "design needs at least three locations");
  if (!series.dates.empty() && series.dates.size() != series.size())
    fail(ErrorCode::LengthMismatch, "date count differs from series length");
}

}  // namespace

DesignPair build_design(const PlanarSeries& series, const Tessellation& tess, const ModelSpec& spec) {
  check_series(series);
  const std::vector<Date> conditioning =
      series.dates.empty() ? std::vector<Date>{} : std::vector<Date>(series.dates.begin(), series.dates.end() - 1);
  DesignPair d;
  d.layout = DesignLayout(spec, tess, conditioning, series.points);
  fill_design(d, series);
  return d;
}

DesignPair build_design(const PlanarSeries& series, const DesignLayout& layout) {
  check_series(series);
  DesignPair d;
  d.layout = layout;
  fill_design(d, series);
  return d;
}

Eigen::Matrix2d residual_cross(const DesignPair& design, const Eigen::MatrixXd& phi, const Eigen::MatrixXd& eta) {
  Eigen::MatrixXd R = design.Y - design.X * phi;
  if (eta.size() > 0) R -= eta;
  return R.transpose() * R;
}

MleResult mle_var(const DesignPair& design) {
  const double n = static_cast<double>(design.rows());
  MleResult r;
  if (design.layout.spec().random_walk()) {
    r.phi = Eigen::MatrixXd::Identity(2, 2);
  } else {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design.X);
    if (qr.rank() < design.X.cols()) fail(ErrorCode::SingularDesign, "X'X is singular");
    r.phi = qr.solve(design.Y);
  }
  r.sigma = residual_cross(design, r.phi) / n;
  return r;
}

Eigen::Matrix2d rw_sigma_mle(const PlanarSeries& series) {
  const Eigen::Index T = series.points.rows();
  if (T < 2) fail(ErrorCode::EmptySeries, "need at least two locations");
  const Eigen::MatrixXd inc = series.points.bottomRows(T - 1) - series.points.topRows(T - 1);
  return inc.transpose() * inc / static_cast<double>(T - 1);
}

// ---------------------------------------------------------------------------

Eigen::MatrixXd exp_corr(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double theta) {
  if (!(theta > 0.0) || !std::isfinite(theta)) fail(ErrorCode::NonPositiveDecay, "decay must be positive");
  Eigen::MatrixXd c(a.rows(), b.rows());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < b.rows(); ++j) c(i, j) = std::exp(-theta * (a.row(i) - b.row(j)).norm());
  return c;
}

Eigen::MatrixXd make_knots(const Eigen::MatrixXd& points, const KnotGrid& grid) {
  Eigen::Vector2d lo = points.colwise().minCoeff().transpose();
  Eigen::Vector2d hi = points.colwise().maxCoeff().transpose();
  Eigen::Vector2d extent = hi - lo;
  for (int k = 0; k < 2; ++k)
    if (extent(k) <= 0.0) extent(k) = 1.0;
  lo -= grid.padding * extent;
  hi += grid.padding * extent;
  const std::size_t k = grid.per_axis;
  Eigen::MatrixXd knots(k * k, 2);
  auto pos = [k](double a, double b, std::size_t i) {
    return k == 1 ? 0.5 * (a + b) : a + (b - a) * static_cast<double>(i) / static_cast<double>(k - 1);
  };
  for (std::size_t iy = 0; iy < k; ++iy)
    for (std::size_t ix = 0; ix < k; ++ix) {
      knots(iy * k + ix, 0) = pos(lo(0), hi(0), ix);
      knots(iy * k + ix, 1) = pos(lo(1), hi(1), iy);
    }
  return knots;
}

KnotProcess::KnotProcess(const Eigen::MatrixXd& knots, double theta, const JitterPolicy& jitter)
    : knots_(knots), theta_(theta) {
  const Eigen::MatrixXd C = exp_corr(knots, knots, theta);
  const Eigen::Index m = C.rows();
  double added = 0.0;
  for (;;) {
    chol_.compute(added > 0.0 ? Eigen::MatrixXd(C + added * Eigen::MatrixXd::Identity(m, m)) : C);
    if (chol_.info() == Eigen::Success && chol_.rcond() > 1e-12) break;
    added = added == 0.0 ? jitter.initial : added * jitter.growth;
    if (added > jitter.max * (1.0 + 1e-12))
      fail(ErrorCode::IllConditioned, "knot correlation matrix is ill-conditioned at theta=" + std::to_string(theta));
  }
  jitter_ = added;
  log_det_ = 2.0 * Eigen::MatrixXd(chol_.matrixL()).diagonal().array().log().sum();
}

Eigen::MatrixXd KnotProcess::weights(const Eigen::MatrixXd& sites) const {
  const Eigen::MatrixXd cross = exp_corr(sites, knots_, theta_);
  return chol_.solve(cross.transpose()).transpose();
}

Eigen::RowVectorXd KnotProcess::weights(const Eigen::Vector2d& s) const {
  return weights(Eigen::MatrixXd(s.transpose())).row(0);
}

Eigen::MatrixXd KnotProcess::induced_covariance(const Eigen::MatrixXd& sites) const {
  const Eigen::MatrixXd cross = exp_corr(sites, knots_, theta_);
  return cross * chol_.solve(cross.transpose());
}

Eigen::RowVectorXd pp_basis(const Eigen::Vector2d& s, const Eigen::MatrixXd& knots, double theta,
                            const JitterPolicy& jitter) {
  return KnotProcess(knots, theta, jitter).weights(s);
}

Eigen::MatrixXd coregional_eta(const Eigen::MatrixXd& sites, const SpatialAdjust& adjust,
                               const JitterPolicy& jitter) {
  const auto& st = adjust.state;
  Eigen::MatrixXd w(sites.rows(), 2);
  for (int k = 0; k < 2; ++k) {
    const KnotProcess proc(adjust.knots, st.theta(k), jitter);
    const Eigen::VectorXd alpha = proc.solve(st.wstar.row(k).transpose());
    w.col(k) = exp_corr(sites, adjust.knots, st.theta(k)) * alpha;
  }
  return w * st.q.transpose();
}

Eigen::Vector2d coregional_eta(const Eigen::Vector2d& s, const SpatialAdjust& adjust, const JitterPolicy& jitter) {
  return coregional_eta(Eigen::MatrixXd(s.transpose()), adjust, jitter).row(0).transpose();
}

// ---------------------------------------------------------------------------

double log_likelihood(const DesignPair& design, const Eigen::MatrixXd& phi, const Eigen::Matrix2d& sigma,
                      const Eigen::MatrixXd& eta) {
  if (!sigma.isApprox(sigma.transpose(), 1e-12)) fail(ErrorCode::NonPDSigma, "Sigma is not symmetric");
  Eigen::LLT<Eigen::Matrix2d> llt(sigma);
  if (llt.info() != Eigen::Success || !(llt.matrixL()(0, 0) > 0.0) || !(llt.matrixL()(1, 1) > 0.0))
    fail(ErrorCode::NonPDSigma, "Sigma is not positive definite");
  const double n = static_cast<double>(design.rows());
  const double log_det = 2.0 * (std::log(llt.matrixL()(0, 0)) + std::log(llt.matrixL()(1, 1)));
  const Eigen::Matrix2d S = residual_cross(design, phi, eta);
  const double quad = llt.solve(S).trace();
  return -n * std::log(2.0 * std::numbers::pi) - 0.5 * n * log_det - 0.5 * quad;
}

double log_likelihood(const DesignPair& design, const Params& params) {
  Eigen::MatrixXd eta;
  if (params.spatial) {
    SpatialAdjust adj{design.layout.knots(), *params.spatial};
    eta = coregional_eta(design.origins, adj, design.layout.spec().jitter);
  }
  return log_likelihood(design, params.phi, params.sigma, eta);
}

}  // namespace stvar::model
