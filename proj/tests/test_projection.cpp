#include <cmath>
#include <numbers>

#include "doctest.h"
#include "oracles.hpp"
#include "stvar/projection.hpp"
#include "stvar/rng.hpp"
#include "support.hpp"

using namespace stvar;
using namespace stvar::projection;

namespace {

Eigen::MatrixXd normal_rows(Eigen::Index n, Eigen::Index d, std::uint64_t seed) {
  Rng rng(seed);
  Eigen::MatrixXd m(n, d);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < d; ++j) m(i, j) = rng.normal(0.0, 1.0);
  return m;
}

som::SomModel model_with(Eigen::MatrixXd nodes, Eigen::MatrixXd planar) {
  som::SomModel m;
  m.nodes = std::move(nodes);
  m.planar = std::move(planar);
  return m;
}

}  // namespace

TEST_CASE("two nodes embed at their distance with zero stress") {
  Eigen::MatrixXd D(2, 2);
  D << 0, 5, 5, 0;
  const auto r = sammon_embed(D);
  CHECK((r.coords.row(0) - r.coords.row(1)).norm() == doctest::Approx(5.0).epsilon(1e-12));
  CHECK(r.stress < 1e-20);
}

TEST_CASE("a planar triangle embeds exactly") {
  Eigen::MatrixXd D(3, 3);
  D << 0, 3, 4, 3, 0, 5, 4, 5, 0;
  const auto r = sammon_embed(D);
  CHECK(r.stress < 1e-10);
  CHECK((oracle::pairwise(r.coords) - D).cwiseAbs().maxCoeff() < 1e-5);
  CHECK(r.coords.colwise().mean().norm() < 1e-12);
}

TEST_CASE("regular simplex of four points: positive stress at a verified minimum") {
  Eigen::MatrixXd D = Eigen::MatrixXd::Ones(4, 4) - Eigen::MatrixXd::Identity(4, 4);
  const auto r = sammon_embed(D);
  CHECK(r.stress > 1e-3);
  // stress never increases along the accepted iterations
  for (std::size_t k = 1; k < r.stress_trace.size(); ++k) CHECK(r.stress_trace[k] <= r.stress_trace[k - 1]);

  const auto objective = [&](const Eigen::VectorXd& v) {
    return oracle::stress(D, Eigen::Map<const Eigen::MatrixXd>(v.data(), 4, 2));
  };
  const Eigen::VectorXd here = Eigen::Map<const Eigen::VectorXd>(r.coords.data(), 8);
  CHECK(oracle::fd_gradient(objective, here).lpNorm<Eigen::Infinity>() < 1e-5);
  // classical scaling is degenerate for equal distances, so the reference
  // minimum is the best of several starts
  const Eigen::MatrixXd start = classical_scaling(D, 2);
  double best = oracle::minimize(objective, Eigen::Map<const Eigen::VectorXd>(start.data(), 8)).value;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Eigen::MatrixXd s = normal_rows(4, 2, 100 + seed);
    best = std::min(best, oracle::minimize(objective, Eigen::Map<const Eigen::VectorXd>(s.data(), 8)).value);
  }
  CHECK(r.stress == doctest::Approx(best).epsilon(1e-4));
}

TEST_CASE("sammon_stress reference values") {
  Eigen::MatrixXd D(3, 3);
  D << 0, 3, 4, 3, 0, 5, 4, 5, 0;
  Eigen::MatrixXd exact(3, 2);
  exact << 0, 0, 3, 0, 0, 4;
  CHECK(sammon_stress(D, exact) == doctest::Approx(0.0));
  CHECK(sammon_stress(D, Eigen::MatrixXd::Constant(3, 2, 0.7)) == doctest::Approx(1.0));

  Eigen::MatrixXd D2(2, 2);
  D2 << 0, 2, 2, 0;
  Eigen::MatrixXd one_apart(2, 2);
  one_apart << 0, 0, 1, 0;
  CHECK(sammon_stress(D2, one_apart) == doctest::Approx(0.25));
  CHECK(sammon_stress(D, exact) == doctest::Approx(oracle::stress(D, exact)));
}

TEST_CASE("sammon_stress rejects coincident inputs") {
  Eigen::MatrixXd D(3, 3);
  D << 0, 0, 1, 0, 0, 1, 1, 1, 0;
  CHECK_FAILS_WITH(sammon_stress(D, Eigen::MatrixXd::Zero(3, 2)), ErrorCode::DegenerateDistances);
  CHECK_FAILS_WITH(sammon_embed(D), ErrorCode::DegenerateDistances);
}

TEST_CASE("sammon_stress is invariant under rigid motions") {
  const auto pts = normal_rows(10, 5, 21);
  const auto D = oracle::pairwise(pts);
  const auto coords = normal_rows(10, 2, 22);
  const double a = 0.83;
  Eigen::Matrix2d rot;
  rot << std::cos(a), -std::sin(a), std::sin(a), std::cos(a);
  Eigen::MatrixXd moved = coords * rot.transpose();
  moved.rowwise() += Eigen::RowVector2d(3.0, -11.0);
  CHECK(sammon_stress(D, moved) == doctest::Approx(sammon_stress(D, coords)).epsilon(1e-12));
  CHECK(sammon_stress(D, coords) == doctest::Approx(oracle::stress(D, coords)).epsilon(1e-12));
}

TEST_CASE("sammon_embed agrees with an independent minimizer on low-rank nodes") {
  Rng rng(23);
  Eigen::MatrixXd latent(8, 2), plane(2, 30);
  for (auto& x : latent.reshaped()) x = rng.uniform();
  for (auto& x : plane.reshaped()) x = rng.normal(0.0, 1.0);
  const Eigen::MatrixXd nodes = latent * plane + 0.1 * normal_rows(8, 30, 24);
  const auto D = oracle::pairwise(nodes);
  const auto r = sammon_embed(D);
  const auto objective = [&](const Eigen::VectorXd& v) {
    return oracle::stress(D, Eigen::Map<const Eigen::MatrixXd>(v.data(), 8, 2));
  };
  const Eigen::MatrixXd start = classical_scaling(D, 2);
  const auto best = oracle::minimize(objective, Eigen::Map<const Eigen::VectorXd>(start.data(), 16));
  CHECK(r.stress == doctest::Approx(best.value).epsilon(1e-4));
  CHECK(r.stress == doctest::Approx(oracle::stress(D, r.coords)).epsilon(1e-12));
}

TEST_CASE("embed_nodes writes centered Sammon coordinates into the model") {
  auto model = model_with(normal_rows(9, 6, 25), som::lattice(9));
  const auto r = embed_nodes(model);
  CHECK(model.planar == r.coords);
  CHECK(model.planar.colwise().mean().norm() < 1e-12);
  CHECK(r.stress == doctest::Approx(sammon_stress(oracle::pairwise(model.nodes), model.planar)));
}

TEST_CASE("assign_cell") {
  Tessellation tess{som::lattice(9)};
  for (std::size_t m = 0; m < 9; ++m) CHECK(assign_cell(tess.node_planar.row(m).transpose(), tess) == m);

  Tessellation pair{(Eigen::MatrixXd(2, 2) << 0, 0, 2, 0).finished()};
  CHECK(assign_cell(Eigen::Vector2d(1.0, 0.0), pair) == 0);
  CHECK(assign_cell(Eigen::Vector2d(1.0 + 1e-12, 0.0), pair) == 1);

  Tessellation random{normal_rows(40, 2, 26)};
  const Eigen::MatrixXd pts = normal_rows(500, 2, 27) * 1.5;
  for (Eigen::Index i = 0; i < pts.rows(); ++i)
    CHECK(assign_cell(pts.row(i).transpose(), random) == oracle::nearest(pts.row(i), random.node_planar));
}

TEST_CASE("projecting a reference vector lands in its own cell") {
  const auto model = model_with(normal_rows(9, 5, 28), som::lattice(9));
  Tessellation tess{model.planar};
  for (std::size_t m = 0; m < 9; ++m) {
    const auto s = project_point(model.nodes.row(m), model);
    CHECK(assign_cell(s, tess) == m);
  }
}

TEST_CASE("two nodes: the projection is the centroid of candidates nearer the winner") {
  Eigen::MatrixXd nodes(2, 3);
  nodes << 0, 0, 0, 1, 1, 1;
  Eigen::MatrixXd planar(2, 2);
  planar << 0.0, 0.0, 1.0, 0.3;
  const auto model = model_with(nodes, planar);
  const Eigen::RowVectorXd x = (Eigen::RowVectorXd(3) << 0.2, 0.1, 0.4).finished();  // nearer node 0

  // the candidate grid, rebuilt here: bounding box padded by a quarter of the extent
  const double x0 = -0.25, x1 = 1.25, y0 = -0.075, y1 = 0.375;
  Eigen::Vector2d sum = Eigen::Vector2d::Zero();
  int count = 0;
  for (int i = 0; i < 201; ++i)
    for (int j = 0; j < 201; ++j) {
      const Eigen::Vector2d c(x0 + (x1 - x0) * i / 200.0, y0 + (y1 - y0) * j / 200.0);
      if ((c - planar.row(0).transpose()).squaredNorm() < (c - planar.row(1).transpose()).squaredNorm()) {
        sum += c;
        ++count;
      }
    }
  const Eigen::Vector2d expected = sum / count;
  const auto s = project_point(x, model);
  CHECK(s.x() == doctest::Approx(expected.x()).epsilon(1e-12));
  CHECK(s.y() == doctest::Approx(expected.y()).epsilon(1e-12));
}

TEST_CASE("a point equidistant from a symmetric layout projects to its center") {
  const Eigen::MatrixXd nodes = Eigen::MatrixXd::Identity(4, 4);
  Eigen::MatrixXd planar(4, 2);
  planar << -1, -1, 1, -1, 1, 1, -1, 1;
  const auto model = model_with(nodes, planar);
  const auto s = project_point(Eigen::RowVectorXd::Zero(4), model);
  CHECK(std::abs(s.x()) < 1e-12);
  CHECK(std::abs(s.y()) < 1e-12);
}

TEST_CASE("rank_order sorts by data-space distance, ties by index") {
  Eigen::MatrixXd nodes(4, 1);
  nodes << 3, -1, 1, 0;
  const auto model = model_with(nodes, som::lattice(4));
  Projector proj(model);
  const auto order = proj.rank_order(Eigen::RowVectorXd::Zero(1));
  CHECK(order == std::vector<int>{3, 1, 2, 0});
}

TEST_CASE("project_series") {
  const auto model = model_with(normal_rows(12, 4, 29), som::lattice(12));

  SUBCASE("a single day") {
    const auto series = project_series(data::from_matrix(model.nodes.topRows(1)), model);
    CHECK(series.size() == 1);
    CHECK(series.node[0] == 0);
  }
  SUBCASE("the reference vectors themselves") {
    const auto series = project_series(data::from_matrix(model.nodes), model);
    for (int m = 0; m < 12; ++m) CHECK(series.node[m] == m);
  }
  SUBCASE("cells agree with data-space winners; serial equals parallel") {
    const auto data = data::from_matrix(normal_rows(200, 4, 30));
    const auto par = project_series(data, model, {}, Exec::parallel);
    const auto ser = project_series(data, model, {}, Exec::serial);
    CHECK(par.points == ser.points);
    for (Eigen::Index t = 0; t < 200; ++t)
      CHECK(static_cast<std::size_t>(par.node[t]) == som::find_winner(data.matrix.row(t), model));
  }
}
