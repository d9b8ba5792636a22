#include "stvar/synthetic.hpp"

#include <cmath>

#include "stvar/error.hpp"
#include "stvar/rng.hpp"

namespace stvar::synthetic {

model::DesignLayout TruthBundle::layout() const {
  return model::DesignLayout::restore(spec, tess, years, spatial ? spatial->knots : Eigen::MatrixXd());
}

void TruthBundle::validate() const {
  const auto l = layout();
  if (!spec.random_walk() && (phi.rows() != static_cast<Eigen::Index>(l.columns()) || phi.cols() != 2))
    fail(ErrorCode::DimensionMismatch, "truth coefficients do not match the layout of " + spec.name());
  if (!sigma.isApprox(sigma.transpose())) fail(ErrorCode::NonPDSigma, "true Sigma is not symmetric");
  if (!sigma.isZero(0.0)) {
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(sigma);
    if (eig.eigenvalues()(0) < 0.0) fail(ErrorCode::NonPDSigma, "true Sigma is not positive semidefinite");
  }
  if (spec.spatial() != spatial.has_value()) fail(ErrorCode::InvalidSpec, "spatial truth must match the model spec");
  if (spatial && spatial->state.wstar.cols() != spatial->knots.rows())
    fail(ErrorCode::DimensionMismatch, "knot values do not match the knots");
}

Tessellation default_tessellation() {
  Tessellation t;
  t.node_planar.resize(12, 2);
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 3; ++c) {
      t.node_planar(r * 3 + c, 0) = 10.0 * (c - 1);
      t.node_planar(r * 3 + c, 1) = 10.0 * (r - 1.5);
    }
  return t;
}

Eigen::Matrix2d default_sigma() { return (Eigen::Matrix2d() << 40.0, 10.0, 10.0, 50.0).finished(); }

Eigen::Matrix2d scaled_rotation(double rho, double angle) {
  return rho * (Eigen::Matrix2d() << std::cos(angle), -std::sin(angle), std::sin(angle), std::cos(angle)).finished();
}

TruthBundle default_truth(const ModelSpec& spec, const Tessellation& tess, std::vector<int> years,
                          std::uint64_t seed) {
  TruthBundle truth;
  truth.spec = spec;
  truth.tess = tess;
  truth.years = std::move(years);
  truth.sigma = default_sigma();
  truth.seed = seed;
  if (spec.needs_years() && truth.years.empty()) truth.years = {2000, 2001};
  if (spec.spatial()) {
    // Knots over the padded box of the node lattice; the field itself is a
    // draw from its prior.
    model::SpatialAdjust adj;
    adj.knots = model::make_knots(tess.node_planar, spec.knots);
    adj.state.theta = Eigen::Vector2d(0.08, 0.12);
    adj.state.q = (Eigen::Matrix2d() << 3.0, 0.0, 1.0, 2.0).finished();
    adj.state.wstar.resize(2, adj.knots.rows());
    Rng rng(derive_seed(seed, 77));
    for (int k = 0; k < 2; ++k) {
      const model::KnotProcess proc(adj.knots, adj.state.theta(k), spec.jitter);
      Eigen::VectorXd z(adj.knots.rows());
      for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = rng.normal();
      adj.state.wstar.row(k) = (proc.lower() * z).transpose();
    }
    truth.spatial = adj;
  }
  const auto layout = truth.layout();
  if (spec.random_walk()) {
    truth.phi = Eigen::MatrixXd::Identity(2, 2);
    return truth;
  }
  truth.phi = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(layout.columns()), 2);
  const std::size_t B = layout.a_blocks();
  for (std::size_t b = 0; b < B; ++b) {
    // Golden-ratio spacing spreads moduli and angles evenly over their ranges.
    const double u = std::fmod(0.5 + 0.6180339887498949 * static_cast<double>(b), 1.0);
    const double v = std::fmod(0.25 + 0.3819660112501051 * static_cast<double>(b), 1.0);
    const double rho = B == 1 ? 0.85 : 0.5 + 0.45 * u;
    const double angle = B == 1 ? 0.3 : -0.6 + 1.2 * v;
    truth.phi.block(static_cast<Eigen::Index>(2 * b), 0, 2, 2) = scaled_rotation(rho, angle).transpose();
  }
  for (std::size_t e = 0; e < layout.intercept_blocks(); ++e) {
    const double a = 2.0 * static_cast<double>(e) + 0.5;
    truth.phi.row(static_cast<Eigen::Index>(2 * B + e)) << 3.0 * std::cos(a), 3.0 * std::sin(a);
  }
  return truth;
}

double max_spectral_radius(const Eigen::MatrixXd& phi, std::size_t a_blocks) {
  double r = 0.0;
  for (std::size_t b = 0; b < a_blocks; ++b) {
    const Eigen::Matrix2d A = model::DesignLayout::a_matrix(phi, b);
    r = std::max(r, A.eigenvalues().cwiseAbs().maxCoeff());
  }
  return r;
}

Simulation simulate_var(const TruthBundle& truth, std::size_t T, const Eigen::Vector2d& s0,
                        const std::vector<Date>& dates) {
  if (T < 2) fail(ErrorCode::EmptySeries, "simulation needs T >= 2");
  if (!dates.empty() && dates.size() != T) fail(ErrorCode::LengthMismatch, "one date per location is required");
  truth.validate();
  const auto layout = truth.layout();

  Simulation sim;
  sim.explosive_warning = !truth.spec.random_walk() && max_spectral_radius(truth.phi, layout.a_blocks()) >= 1.0;

  Eigen::Matrix2d L = Eigen::Matrix2d::Zero();
  if (!truth.sigma.isZero(0.0)) {
    Eigen::LLT<Eigen::Matrix2d> llt(truth.sigma);
    if (llt.info() != Eigen::Success) fail(ErrorCode::NonPDSigma, "true Sigma is not positive definite");
    L = llt.matrixL();
  }
  Rng rng(truth.seed);
  Eigen::MatrixXd points(static_cast<Eigen::Index>(T), 2);
  points.row(0) = s0.transpose();
  for (std::size_t t = 0; t + 1 < T; ++t) {
    const Eigen::Vector2d s = points.row(static_cast<Eigen::Index>(t)).transpose();
    const Date* date = dates.empty() ? nullptr : &dates[t];
    Eigen::Vector2d next = (layout.row(s, date) * truth.phi).transpose();
    if (truth.spatial) next += model::coregional_eta(s, *truth.spatial, truth.spec.jitter);
    const Eigen::Vector2d z(rng.normal(), rng.normal());
    points.row(static_cast<Eigen::Index>(t + 1)) = (next + L * z).transpose();
  }
  sim.series = truth.tess.size() > 0 ? projection::make_series(points, truth.tess, dates)
                                     : PlanarSeries{points, std::vector<int>(T, 0), dates};
  return sim;
}

data::StateSeries simulate_uniform_cloud(std::size_t n, const Eigen::VectorXd& lo, const Eigen::VectorXd& hi,
                                         std::uint64_t seed) {
  if (n < 1) fail(ErrorCode::EmptyData, "cloud needs at least one point");
  if (lo.size() != hi.size() || lo.size() == 0 || !(hi.array() > lo.array()).all())
    fail(ErrorCode::InvalidConfig, "rectangle must be nondegenerate");
  Rng rng(seed);
  Eigen::MatrixXd m(static_cast<Eigen::Index>(n), lo.size());
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = rng.uniform(lo(j), hi(j));
  return data::from_matrix(m);
}

}  // namespace stvar::synthetic
