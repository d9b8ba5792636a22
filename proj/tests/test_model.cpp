#include <cmath>
#include <numbers>

#include "doctest.h"
#include "oracles.hpp"
#include "stvar/model.hpp"
#include "stvar/rng.hpp"
#include "stvar/synthetic.hpp"
#include "support.hpp"

using namespace stvar;
using namespace stvar::model;

namespace {

PlanarSeries simulated(int ladder, std::size_t T, std::uint64_t seed, const std::vector<Date>& dates = {}) {
  const auto spec = ModelSpec::ladder(ladder);
  std::vector<int> years;
  for (const auto& d : dates)
    if (years.empty() || years.back() != d.year) years.push_back(d.year);
  const auto truth = synthetic::default_truth(spec, synthetic::default_tessellation(), years, seed);
  return synthetic::simulate_var(truth, T, Eigen::Vector2d(1.3, -0.7), dates).series;
}

PlanarSeries from_points(const Eigen::MatrixXd& pts) {
  return projection::make_series(pts, synthetic::default_tessellation());
}

// 2-column A-blocks of row t that hold any nonzero entry
std::vector<int> nonzero_blocks(const Eigen::MatrixXd& X, Eigen::Index t, std::size_t a_blocks) {
  std::vector<int> hit;
  for (std::size_t b = 0; b < a_blocks; ++b)
    if (X(t, 2 * b) != 0.0 || X(t, 2 * b + 1) != 0.0) hit.push_back(static_cast<int>(b));
  return hit;
}

}  // namespace

TEST_CASE("ladder names and spec validation") {
  for (int i = 0; i < 12; ++i) {
    const auto s = ModelSpec::ladder(i);
    CHECK(s.ladder_index() == i);
    CHECK(ModelSpec::from_name("model" + std::to_string(i)).ladder_index() == i);
  }
  CHECK(ModelSpec::ladder(0).random_walk());
  CHECK(ModelSpec::ladder(11).spatial());
  CHECK_FAILS_WITH(ModelSpec::from_name("model12"), ErrorCode::InvalidSpec);
  CHECK_FAILS_WITH(ModelSpec::from_name("var"), ErrorCode::InvalidSpec);
  ModelSpec bad;
  bad.a = AStructure::random_walk;
  bad.eta = EtaStructure::constant;
  CHECK_FAILS_WITH(bad.validate(), ErrorCode::InvalidSpec);
}

TEST_CASE("constant A with three locations") {
  Eigen::MatrixXd pts(3, 2);
  pts << 1, 2, 3, 5, -4, 0.5;
  const auto d = build_design(from_points(pts), synthetic::default_tessellation(), ModelSpec::ladder(1));
  CHECK(d.X.cols() == 2);
  CHECK(d.X == pts.topRows(2));
  CHECK(d.Y == pts.bottomRows(2));
  CHECK(d.origins == pts.topRows(2));
  CHECK(d.column_map.size() == 2);
}

TEST_CASE("tessellation design: one active 2-column block per row, at the cell of s_t") {
  const auto tess = synthetic::default_tessellation();
  const auto series = simulated(2, 300, 3);
  const auto d = build_design(series, tess, ModelSpec::ladder(2));
  REQUIRE(d.X.cols() == 24);
  for (Eigen::Index t = 0; t < d.X.rows(); ++t) {
    const auto blocks = nonzero_blocks(d.X, t, 12);
    REQUIRE(blocks.size() == 1);
    const auto cell = projection::assign_cell(series.at(static_cast<std::size_t>(t)), tess);
    CHECK(static_cast<std::size_t>(blocks[0]) == cell);
    CHECK(d.X(t, 2 * cell) == series.points(t, 0));
    CHECK(d.X(t, 2 * cell + 1) == series.points(t, 1));
  }
}

TEST_CASE("tessellation-by-year design over two years") {
  const auto dates = noleap_days({2001, 12, 1}, 90);  // December 2001 through February 2002
  const auto series = simulated(9, dates.size(), 4, dates);
  const auto d = build_design(series, synthetic::default_tessellation(), ModelSpec::ladder(9));
  REQUIRE(d.layout.a_blocks() == 24);
  CHECK(d.X.cols() == 48);
  for (Eigen::Index t = 0; t < d.X.rows(); ++t) {
    const auto blocks = nonzero_blocks(d.X, t, 24);
    REQUIRE(blocks.size() == 1);
    // year-major or cell-major, the block must match this row's year
    const bool second_year = dates[t].year == 2002;
    const auto cell = projection::assign_cell(series.at(static_cast<std::size_t>(t)), synthetic::default_tessellation());
    CHECK(d.layout.a_block(series.at(static_cast<std::size_t>(t)), &dates[t]) == static_cast<std::size_t>(blocks[0]));
    CHECK((d.layout.a_block_label(blocks[0]).find(second_year ? "2002" : "2001") != std::string::npos));
    CHECK(d.layout.a_block_label(blocks[0]).find("cell" + std::to_string(cell + 1)) != std::string::npos);
  }
}

TEST_CASE("intercept columns and dated specs") {
  const auto dates = noleap_days({2003, 1, 1}, 400);
  const auto series = simulated(3, dates.size(), 5, dates);
  const auto d = build_design(series, synthetic::default_tessellation(), ModelSpec::ladder(3));
  CHECK(d.X.cols() == 24 + 4);
  for (Eigen::Index t = 0; t < d.X.rows(); ++t) {
    const auto row = d.X.row(t).tail(4);
    CHECK(row.sum() == 1.0);
    CHECK(row(SeasonCalendar{}.season(dates[t])) == 1.0);
  }
  const auto undated = from_points(series.points);
  CHECK_FAILS_WITH(build_design(undated, synthetic::default_tessellation(), ModelSpec::ladder(3)),
                   ErrorCode::UnlabeledDate);
}

TEST_CASE("mle_var interpolates noiseless data") {
  const auto series = simulated(2, 200, 6);
  auto d = build_design(series, synthetic::default_tessellation(), ModelSpec::ladder(2));
  Rng rng(7);
  Eigen::MatrixXd phi(24, 2);
  for (auto& x : phi.reshaped()) x = rng.normal(0.0, 0.5);
  d.Y = d.X * phi;
  const auto r = mle_var(d);
  CHECK((r.phi - phi).cwiseAbs().maxCoeff() < 1e-10);
  CHECK(r.sigma.cwiseAbs().maxCoeff() < 1e-20);
}

TEST_CASE("mle_var matches a numerical maximizer of the likelihood") {
  const auto series = simulated(1, 50, 8);
  const auto d = build_design(series, synthetic::default_tessellation(), ModelSpec::ladder(1));
  const auto r = mle_var(d);
  // theta = (vec Phi, log L11, L21, log L22) with Sigma = L L'
  const auto unpack = [](const Eigen::VectorXd& v, Eigen::MatrixXd& phi, Eigen::Matrix2d& sigma) {
    phi = Eigen::Map<const Eigen::MatrixXd>(v.data(), 2, 2);
    Eigen::Matrix2d L;
    L << std::exp(v(4)), 0.0, v(5), std::exp(v(6));
    sigma = L * L.transpose();
  };
  const auto negll = [&](const Eigen::VectorXd& v) {
    Eigen::MatrixXd phi;
    Eigen::Matrix2d sigma;
    unpack(v, phi, sigma);
    const Eigen::MatrixXd R = d.Y - d.X * phi;
    const double n = static_cast<double>(R.rows());
    const double quad = (R * sigma.inverse() * R.transpose()).trace();
    return n * std::log(2.0 * std::numbers::pi) + 0.5 * n * std::log(sigma.determinant()) + 0.5 * quad;
  };
  Eigen::VectorXd x0(7);
  x0 << 0.5, 0.0, 0.0, 0.5, 0.0, 0.0, 0.0;
  const auto best = oracle::minimize(negll, x0);
  Eigen::MatrixXd phi;
  Eigen::Matrix2d sigma;
  unpack(best.x, phi, sigma);
  CHECK((phi - r.phi).cwiseAbs().maxCoeff() < 1e-6);
  CHECK((sigma - r.sigma).cwiseAbs().maxCoeff() < 1e-6);
  CHECK(log_likelihood(d, r.phi, r.sigma) == doctest::Approx(-best.value).epsilon(1e-12));
}

TEST_CASE("duplicated design column is singular") {
  const auto series = simulated(1, 40, 9);
  auto d = build_design(series, synthetic::default_tessellation(), ModelSpec::ladder(1));
  d.X.col(1) = d.X.col(0);
  CHECK_FAILS_WITH(mle_var(d), ErrorCode::SingularDesign);
}

TEST_CASE("rw_sigma_mle") {
  CHECK(rw_sigma_mle(from_points(Eigen::MatrixXd::Constant(6, 2, 3.5))).cwiseAbs().maxCoeff() == 0.0);

  Eigen::MatrixXd zigzag(5, 2);
  zigzag << 0, 0, 1, 0, 0, 0, 1, 0, 0, 0;
  const Eigen::Matrix2d s = rw_sigma_mle(from_points(zigzag));
  CHECK(s(0, 0) == doctest::Approx(1.0));
  CHECK(s(0, 1) == 0.0);
  CHECK(s(1, 1) == 0.0);

  const auto series = simulated(0, 120, 10);
  const auto d = build_design(series, synthetic::default_tessellation(), ModelSpec::ladder(0));
  const auto r = mle_var(d);
  CHECK(r.phi == Eigen::MatrixXd::Identity(2, 2));
  CHECK((r.sigma - rw_sigma_mle(series)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("exp_corr") {
  Eigen::MatrixXd a(1, 2), b(1, 2);
  a << 0.3, -2.0;
  CHECK(exp_corr(a, a, 7.0)(0, 0) == 1.0);
  const double theta = 0.8;
  b << 0.3 + std::log(2.0) / theta, -2.0;
  CHECK(exp_corr(a, b, theta)(0, 0) == doctest::Approx(0.5).epsilon(1e-14));

  Rng rng(11);
  Eigen::MatrixXd sites(5, 2);
  for (auto& x : sites.reshaped()) x = rng.uniform(-3.0, 3.0);
  const auto C = exp_corr(sites, sites, 0.6);
  CHECK((C - C.transpose()).cwiseAbs().maxCoeff() == 0.0);
  CHECK(C.diagonal().isOnes());
  CHECK(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(C).eigenvalues().minCoeff() > 0.0);
  CHECK_FAILS_WITH(exp_corr(a, b, 0.0), ErrorCode::NonPositiveDecay);
  CHECK_FAILS_WITH(exp_corr(a, b, -1.0), ErrorCode::NonPositiveDecay);
}

TEST_CASE("pp_basis interpolates at knots and decays far away") {
  Rng rng(12);
  Eigen::MatrixXd knots(6, 2);
  for (auto& x : knots.reshaped()) x = rng.uniform(0.0, 4.0);
  const auto w3 = pp_basis(knots.row(3).transpose(), knots, 1.3);
  Eigen::RowVectorXd e3 = Eigen::RowVectorXd::Zero(6);
  e3(3) = 1.0;
  CHECK((w3 - e3).cwiseAbs().maxCoeff() < 1e-8);
  const auto far = pp_basis(Eigen::Vector2d(200.0, 200.0), knots, 1.3);
  CHECK(far.cwiseAbs().maxCoeff() < 1e-50);
  CHECK_FAILS_WITH(pp_basis(Eigen::Vector2d(1.0, 1.0), knots, 0.0), ErrorCode::NonPositiveDecay);
}

TEST_CASE("induced covariance equals the variance of the conditional expectation") {
  Eigen::MatrixXd knots(3, 2), sites(2, 2);
  knots << 0, 0, 1.5, 0.2, 0.4, 1.1;
  sites << 0.7, 0.5, -0.3, 0.9;
  const double theta = 0.9;
  KnotProcess proc(knots, theta, {});
  const auto induced = proc.induced_covariance(sites);

  // joint correlation of (sites, knots); cov(E[w|w*]) = C_ss - Schur complement
  Eigen::MatrixXd all(5, 2);
  all << sites, knots;
  const auto J = exp_corr(all, all, theta);
  const Eigen::MatrixXd Css = J.topLeftCorner(2, 2), Csk = J.topRightCorner(2, 3), Ckk = J.bottomRightCorner(3, 3);
  const Eigen::MatrixXd schur = Css - Csk * Ckk.fullPivLu().inverse() * Csk.transpose();
  CHECK((induced - (Css - schur)).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((induced - induced.transpose()).cwiseAbs().maxCoeff() < 1e-15);
  CHECK(induced.diagonal().maxCoeff() <= 1.0);
  CHECK(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(induced).eigenvalues().minCoeff() > -1e-14);
}

TEST_CASE("coregional_eta") {
  Eigen::MatrixXd knots(4, 2);
  knots << 0, 0, 2, 0, 0, 2, 2, 2;
  SpatialAdjust adj;
  adj.knots = knots;
  adj.state.theta = {0.7, 1.9};
  adj.state.wstar.resize(2, 4);
  adj.state.wstar << 0.5, -1.0, 2.0, 0.25, 1.5, 0.0, -0.75, 3.0;

  for (Eigen::Index i = 0; i < 4; ++i) {
    const auto eta = coregional_eta(Eigen::Vector2d(knots.row(i)), adj);
    CHECK(eta(0) == doctest::Approx(adj.state.wstar(0, i)));
    CHECK(eta(1) == doctest::Approx(adj.state.wstar(1, i)));
  }

  adj.state.q << 2, 0, 0, 0;
  Rng rng(13);
  for (int k = 0; k < 20; ++k) CHECK(coregional_eta(Eigen::Vector2d(rng.uniform(-1, 3), rng.uniform(-1, 3)), adj)(1) == 0.0);

  adj.state.q << 1.5, 0, -0.5, 2.0;
  const auto eta = coregional_eta(Eigen::Vector2d(knots.row(2)), adj);
  // (1.5 * 2.0, -0.5 * 2.0 + 2.0 * -0.75)
  CHECK(eta(0) == doctest::Approx(3.0));
  CHECK(eta(1) == doctest::Approx(-2.5));

  const auto many = coregional_eta(knots, adj);
  for (Eigen::Index i = 0; i < 4; ++i)
    CHECK((many.row(i).transpose() - coregional_eta(Eigen::Vector2d(knots.row(i)), adj)).norm() < 1e-12);
}

TEST_CASE("log_likelihood identities") {
  const auto series = simulated(1, 60, 14);
  auto d = build_design(series, synthetic::default_tessellation(), ModelSpec::ladder(1));
  const double n = static_cast<double>(d.rows());

  SUBCASE("zero residuals with identity covariance") {
    Eigen::MatrixXd phi(2, 2);
    phi << 0.6, 0.1, -0.2, 0.7;
    auto exact = d;
    exact.Y = exact.X * phi;
    CHECK(log_likelihood(exact, phi, Eigen::Matrix2d::Identity()) ==
          doctest::Approx(-n * std::log(2.0 * std::numbers::pi)).epsilon(1e-14));
  }
  SUBCASE("doubling Sigma") {
    const auto r = mle_var(d);
    Eigen::Matrix2d sigma;
    sigma << 1.3, 0.4, 0.4, 0.9;
    const Eigen::MatrixXd R = d.Y - d.X * r.phi;
    const double quad = (R * sigma.inverse() * R.transpose()).trace();
    const double delta = log_likelihood(d, r.phi, 2.0 * sigma) - log_likelihood(d, r.phi, sigma);
    CHECK(delta == doctest::Approx(-n * std::log(2.0) + 0.25 * quad).epsilon(1e-12));
  }
  SUBCASE("the MLE is a local maximum") {
    const auto r = mle_var(d);
    const double top = log_likelihood(d, r.phi, r.sigma);
    Rng rng(15);
    for (int k = 0; k < 200; ++k) {
      Eigen::MatrixXd phi = r.phi;
      for (auto& x : phi.reshaped()) x += rng.normal(0.0, 1e-3);
      Eigen::Matrix2d sigma = r.sigma;
      const double e = rng.normal(0.0, 1e-3);
      sigma(0, 0) *= std::exp(rng.normal(0.0, 1e-3));
      sigma(1, 1) *= std::exp(rng.normal(0.0, 1e-3));
      sigma(0, 1) += e;
      sigma(1, 0) += e;
      CHECK(log_likelihood(d, phi, sigma) <= top);
    }
  }
  SUBCASE("non-PD Sigma") {
    Eigen::Matrix2d bad;
    bad << 1, 2, 2, 1;
    CHECK_FAILS_WITH(log_likelihood(d, mle_var(d).phi, bad), ErrorCode::NonPDSigma);
  }
}

TEST_CASE("knot grid covers the padded bounding box") {
  Eigen::MatrixXd pts(3, 2);
  pts << 0, 0, 10, 5, 4, 2;
  const auto k = make_knots(pts, {3, 0.1});
  REQUIRE(k.rows() == 9);
  CHECK(k.col(0).minCoeff() == doctest::Approx(-1.0));
  CHECK(k.col(0).maxCoeff() == doctest::Approx(11.0));
  CHECK(k.col(1).minCoeff() == doctest::Approx(-0.5));
  CHECK(k.col(1).maxCoeff() == doctest::Approx(5.5));
}
