#include "stvar/projection.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "stvar/error.hpp"

namespace stvar::projection {

namespace {

void check_distances(const Eigen::MatrixXd& D) {
  if (D.rows() != D.cols()) fail(ErrorCode::DegenerateDistances, "distance matrix is not square");
  for (Eigen::Index i = 0; i < D.rows(); ++i)
    for (Eigen::Index j = i + 1; j < D.cols(); ++j)
      if (!(D(i, j) > 0.0) || !std::isfinite(D(i, j)))
        fail(ErrorCode::DegenerateDistances, "zero or invalid distance between distinct nodes");
}

double stress_unchecked(const Eigen::MatrixXd& D, const Eigen::MatrixXd& Y) {
  const Eigen::Index M = D.rows();
  double scale = 0.0, sum = 0.0;
  for (Eigen::Index i = 0; i < M; ++i)
    for (Eigen::Index j = i + 1; j < M; ++j) {
      const double e = D(i, j) - (Y.row(i) - Y.row(j)).norm();
      scale += D(i, j);
      sum += e * e / D(i, j);
    }
  return scale > 0.0 ? sum / scale : 0.0;
}

}  // namespace

Eigen::MatrixXd classical_scaling(const Eigen::MatrixXd& D, int dims) {
  const Eigen::Index M = D.rows();
  const Eigen::MatrixXd J = Eigen::MatrixXd::Identity(M, M) - Eigen::MatrixXd::Constant(M, M, 1.0 / M);
  const Eigen::MatrixXd B = -0.5 * J * D.cwiseProduct(D) * J;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(B);
  Eigen::MatrixXd Y = Eigen::MatrixXd::Zero(M, dims);
  for (int k = 0; k < dims && k < M; ++k) {
    const Eigen::Index col = M - 1 - k;  // eigenvalues ascend
    const double lambda = std::max(eig.eigenvalues()(col), 0.0);
    Y.col(k) = eig.eigenvectors().col(col) * std::sqrt(lambda);
  }
  return Y;
}

double sammon_stress(const Eigen::MatrixXd& distances, const Eigen::MatrixXd& coords) {
  check_distances(distances);
  return stress_unchecked(distances, coords);
}

SammonResult sammon_embed(const Eigen::MatrixXd& D, const SammonConfig& config) {
  check_distances(D);
  const Eigen::Index M = D.rows();
  SammonResult r;
  if (M <= 1) {
    r.coords = Eigen::MatrixXd::Zero(M, 2);
    r.stress_trace.push_back(0.0);
    r.converged = true;
    return r;
  }

  Eigen::MatrixXd Y = classical_scaling(D, 2);
  // break coincident starting points so every planar distance is positive
  const double scale = D.maxCoeff();
  for (Eigen::Index i = 0; i < M; ++i)
    for (Eigen::Index j = i + 1; j < M; ++j)
      if ((Y.row(i) - Y.row(j)).norm() < 1e-9 * scale) {
        Y(j, 0) += 1e-6 * scale * std::cos(static_cast<double>(j));
        Y(j, 1) += 1e-6 * scale * std::sin(static_cast<double>(j));
      }
  Y.rowwise() -= Y.colwise().mean();

  double c = 0.0;
  for (Eigen::Index i = 0; i < M; ++i)
    for (Eigen::Index j = i + 1; j < M; ++j) c += D(i, j);

  double E = stress_unchecked(D, Y);
  r.stress_trace.push_back(E);
  Eigen::MatrixXd step(M, 2);
  for (std::size_t it = 0; it < config.max_iterations; ++it) {
    // diagonal Newton direction
    for (Eigen::Index p = 0; p < M; ++p) {
      for (int q = 0; q < 2; ++q) {
        double g = 0.0, h = 0.0;
        for (Eigen::Index j = 0; j < M; ++j) {
          if (j == p) continue;
          const double dstar = D(p, j);
          const double d = std::max((Y.row(p) - Y.row(j)).norm(), 1e-300);
          const double diff = Y(p, q) - Y(j, q);
          const double ratio = (dstar - d) / (dstar * d);
          g += ratio * diff;
          h += ((dstar - d) - (diff * diff / d) * (1.0 + (dstar - d) / d)) / (dstar * d);
        }
        g *= -2.0 / c;
        h *= -2.0 / c;
        step(p, q) = std::abs(h) > 0.0 ? g / std::abs(h) : 0.0;
      }
    }

    double factor = config.step_factor;
    bool accepted = false;
    Eigen::MatrixXd trial;
    double E_trial = E;
    for (std::size_t k = 0; k <= config.max_halvings; ++k, factor *= 0.5) {
      trial = Y - factor * step;
      E_trial = stress_unchecked(D, trial);
      if (E_trial < E) {
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      r.converged = true;
      break;
    }
    const double decrease = (E - E_trial) / std::max(E, 1e-300);
    Y = std::move(trial);
    E = E_trial;
    r.stress_trace.push_back(E);
    r.iterations = it + 1;
    if (decrease < config.tolerance || E == 0.0) {
      r.converged = true;
      break;
    }
  }
  Y.rowwise() -= Y.colwise().mean();
  r.coords = std::move(Y);
  r.stress = E;
  return r;
}

SammonResult embed_nodes(som::SomModel& model, const SammonConfig& config, Exec exec) {
  SammonResult r = sammon_embed(kernels::pairwise_distances(model.nodes, exec), config);
  model.planar = r.coords;
  return r;
}

std::size_t assign_cell(const Eigen::Vector2d& s, const Tessellation& tess) {
  return static_cast<std::size_t>(kernels::nearest_row(s.transpose(), tess.node_planar).first);
}

PlanarSeries make_series(const Eigen::MatrixXd& points, const Tessellation& tess, std::vector<Date> dates) {
  PlanarSeries s;
  s.points = points;
  s.node.resize(points.rows());
  for (Eigen::Index t = 0; t < points.rows(); ++t)
    s.node[t] = static_cast<int>(assign_cell(points.row(t).transpose(), tess));
  s.dates = std::move(dates);
  return s;
}

Projector::Projector(const som::SomModel& model, const ProjectionConfig& config) : model_(model) {
  if (config.resolution < 2) fail(ErrorCode::InvalidConfig, "projection grid needs at least 2 points per axis");
  lower_ = model.planar.colwise().minCoeff().transpose();
  upper_ = model.planar.colwise().maxCoeff().transpose();
  Eigen::Vector2d extent = upper_ - lower_;
  const double fallback = std::max({extent.maxCoeff(), 1.0});
  for (int k = 0; k < 2; ++k)
    if (extent(k) <= 0.0) extent(k) = fallback;
  lower_ -= config.padding * extent;
  upper_ += config.padding * extent;

  const std::size_t n = config.resolution;
  candidates_.resize(n * n, 2);
  for (std::size_t iy = 0; iy < n; ++iy)
    for (std::size_t ix = 0; ix < n; ++ix) {
      const auto k = iy * n + ix;
      candidates_(k, 0) = lower_(0) + (upper_(0) - lower_(0)) * static_cast<double>(ix) / static_cast<double>(n - 1);
      candidates_(k, 1) = lower_(1) + (upper_(1) - lower_(1)) * static_cast<double>(iy) / static_cast<double>(n - 1);
    }
}

std::vector<int> Projector::rank_order(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
  const std::size_t M = model_.size();
  std::vector<double> d2(M);
  for (std::size_t m = 0; m < M; ++m) d2[m] = (model_.nodes.row(m) - x).squaredNorm();
  std::vector<int> order(M);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return d2[a] < d2[b]; });
  return order;
}

Eigen::Vector2d Projector::project(const Eigen::Ref<const Eigen::RowVectorXd>& x, Exec exec) const {
  const auto order = rank_order(x);
  std::vector<double> keys(order.size());
  for (std::size_t k = 0; k < order.size(); ++k) keys[k] = (model_.nodes.row(order[k]) - x).squaredNorm();
  const auto score = kernels::score_candidates(candidates_, model_.planar, order, exec, keys);
  const int best = *std::max_element(score.begin(), score.end());
  if (best == 0) return model_.planar.row(order.front()).transpose();
  Eigen::Vector2d sum = Eigen::Vector2d::Zero();
  std::size_t count = 0;
  for (std::size_t k = 0; k < score.size(); ++k)
    if (score[k] == best) {
      sum += candidates_.row(k).transpose();
      ++count;
    }
  return sum / static_cast<double>(count);
}

Eigen::Vector2d project_point(const Eigen::Ref<const Eigen::RowVectorXd>& x, const som::SomModel& model,
                              const ProjectionConfig& config) {
  return Projector(model, config).project(x, Exec::parallel);
}

PlanarSeries project_series(const data::StateSeries& data, const som::SomModel& model,
                            const ProjectionConfig& config, Exec exec) {
  const Projector projector(model, config);
  const auto T = static_cast<Eigen::Index>(data.days());
  PlanarSeries out;
  out.points.resize(T, 2);
  out.node.resize(T);
  out.dates = data.dates;
  if (exec == Exec::parallel) {
#pragma omp parallel for schedule(dynamic, 4)
    for (Eigen::Index t = 0; t < T; ++t) {
      out.points.row(t) = projector.project(data.matrix.row(t), Exec::serial).transpose();
      out.node[t] = static_cast<int>(som::find_winner(data.matrix.row(t), model));
    }
  } else {
    for (Eigen::Index t = 0; t < T; ++t) {
      out.points.row(t) = projector.project(data.matrix.row(t), Exec::serial).transpose();
      out.node[t] = static_cast<int>(som::find_winner(data.matrix.row(t), model));
    }
  }
  return out;
}

}  // namespace stvar::projection
