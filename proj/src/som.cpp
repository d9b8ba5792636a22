#include "stvar/som.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>

#include "stvar/error.hpp"
#include "stvar/rng.hpp"

namespace stvar::som {

Eigen::MatrixXd lattice(std::size_t n_nodes) {
  const auto rows = std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(n_nodes)))));
  const std::size_t cols = (n_nodes + rows - 1) / rows;
  Eigen::MatrixXd p(n_nodes, 2);
  for (std::size_t m = 0; m < n_nodes; ++m) {
    p(m, 0) = static_cast<double>(m % cols);
    p(m, 1) = static_cast<double>(m / cols);
  }
  if (n_nodes > 0) p.rowwise() -= p.colwise().mean();
  return p;
}

SomConfig SomConfig::standard(std::size_t n_nodes, std::size_t n_train) {
  SomConfig c;
  c.n_nodes = n_nodes;
  const Eigen::MatrixXd grid = lattice(n_nodes);
  double diameter = 0.0;
  for (Eigen::Index i = 0; i < grid.rows(); ++i)
    for (Eigen::Index j = i + 1; j < grid.rows(); ++j) diameter = std::max(diameter, (grid.row(i) - grid.row(j)).norm());
  c.sigma1 = {std::max(0.5 * diameter, 1.0), 1.0};
  c.sigma2 = {1.0, 1.0};
  c.alpha1 = {0.5, 0.05};
  c.alpha2 = {0.05, 0.01};
  c.steps1 = 10 * n_train;
  c.steps2 = 40 * n_train;
  return c;
}

void SomConfig::validate() const {
  auto bad = [](const char* what) { fail(ErrorCode::InvalidConfig, what); };
  if (n_nodes < 1) bad("SOM needs at least one node");
  for (const Ramp* a : {&alpha1, &alpha2})
    if (!(a->start > 0.0 && a->start <= 1.0 && a->end > 0.0 && a->end <= 1.0)) bad("learning rates must lie in (0, 1]");
  for (const Ramp* s : {&sigma1, &sigma2})
    if (!(s->start > 0.0 && s->end > 0.0)) bad("neighborhood widths must be positive");
  if (!(convergence_tol >= 0.0)) bad("convergence tolerance must be non-negative");
  if (max_epochs < 1) bad("max_epochs must be at least 1");
}

std::string provenance_hash(const Eigen::MatrixXd& data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](const void* bytes, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(bytes);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= p[i];
      h *= 0x100000001b3ULL;
    }
  };
  const std::int64_t shape[2] = {data.rows(), data.cols()};
  mix(shape, sizeof shape);
  mix(data.data(), sizeof(double) * static_cast<std::size_t>(data.size()));
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

SomModel init_nodes(const data::StateSeries& data, const SomConfig& config) {
  if (config.n_nodes < 1 || data.days() < 1 || data.dim() < 1) fail(ErrorCode::EmptyData, "no data or no nodes");
  const Eigen::RowVectorXd lo = data.matrix.colwise().minCoeff();
  const Eigen::RowVectorXd hi = data.matrix.colwise().maxCoeff();
  Rng rng(config.seed);
  SomModel model;
  model.nodes.resize(config.n_nodes, data.dim());
  for (std::size_t m = 0; m < config.n_nodes; ++m)
    for (std::size_t j = 0; j < data.dim(); ++j) model.nodes(m, j) = lo(j) + (hi(j) - lo(j)) * rng.uniform();
  model.planar = lattice(config.n_nodes);
  model.config = config;
  model.provenance = provenance_hash(data.matrix);
  return model;
}

std::size_t find_winner(const Eigen::Ref<const Eigen::RowVectorXd>& x, const SomModel& model) {
  return static_cast<std::size_t>(kernels::nearest_row(x, model.nodes).first);
}

bool voronoi_neighbors(const Eigen::MatrixXd& points, std::size_t a, std::size_t b) {
  if (a == b) return false;
  const Eigen::RowVectorXd mid = 0.5 * (points.row(a) + points.row(b));
  const double r2 = (points.row(a) - mid).squaredNorm();
  for (Eigen::Index k = 0; k < points.rows(); ++k) {
    if (static_cast<std::size_t>(k) == a || static_cast<std::size_t>(k) == b) continue;
    if ((points.row(k) - mid).squaredNorm() <= r2) return false;
  }
  return true;
}

namespace {

const Eigen::MatrixXd& space_points(const SomModel& model, NeighborhoodSpace space) {
  return space == NeighborhoodSpace::map ? model.planar : model.nodes;
}

}  // namespace

double kernel_value(std::size_t m, std::size_t c, const SomModel& model, double sigma, Kernel kind,
                    NeighborhoodSpace space) {
  if (m == c) return 1.0;
  const Eigen::MatrixXd& pts = space_points(model, space);
  if (kind == Kernel::bubble) return voronoi_neighbors(pts, m, c) ? 1.0 : 0.0;
  const double d2 = (pts.row(m) - pts.row(c)).squaredNorm();
  return std::exp(-d2 / (2.0 * sigma * sigma));
}

Eigen::MatrixXd neighborhood(const SomModel& model, double sigma, Kernel kind, NeighborhoodSpace space) {
  const std::size_t M = model.size();
  Eigen::MatrixXd K(M, M);
  for (std::size_t m = 0; m < M; ++m)
    for (std::size_t c = 0; c < M; ++c) K(m, c) = kernel_value(m, c, model, sigma, kind, space);
  return K;
}

std::size_t online_step(SomModel& model, const Eigen::Ref<const Eigen::RowVectorXd>& x, double alpha,
                        double sigma) {
  const std::size_t c = find_winner(x, model);
  const auto& cfg = model.config;
  Eigen::VectorXd k(model.size());
  for (std::size_t m = 0; m < model.size(); ++m) k(m) = kernel_value(m, c, model, sigma, cfg.kernel, cfg.space);
  for (std::size_t m = 0; m < model.size(); ++m) {
    const double rate = alpha * k(m);
    if (rate != 0.0) model.nodes.row(m) += rate * (x - model.nodes.row(m));
  }
  return c;
}

TrainReport train_online(const data::StateSeries& data, const SomConfig& config) {
  config.validate();
  TrainReport report;
  report.model = init_nodes(data, config);
  SomModel& model = report.model;
  const std::size_t T = data.days();
  const std::size_t total = config.steps1 + config.steps2;
  Rng rng(derive_seed(config.seed, 1));
  report.sample_trace.reserve(total);

  Eigen::MatrixXd epoch_start = model.nodes;
  for (std::size_t step = 0; step < total; ++step) {
    const bool first = step < config.steps1;
    const std::size_t k = first ? step : step - config.steps1;
    const std::size_t n = first ? config.steps1 : config.steps2;
    const double alpha = (first ? config.alpha1 : config.alpha2).at(k, n);
    const double sigma = (first ? config.sigma1 : config.sigma2).at(k, n);
    const std::size_t i = rng.index(T);
    report.sample_trace.push_back(i);
    online_step(model, data.matrix.row(i), alpha, sigma);

    if ((step + 1) % T == 0 || step + 1 == total) {
      if (!model.nodes.allFinite()) fail(ErrorCode::NonFiniteUpdate, "online update produced a non-finite node");
      report.epoch_displacement.push_back((model.nodes - epoch_start).rowwise().norm().maxCoeff());
      epoch_start = model.nodes;
      ++report.epochs;
    }
  }
  report.converged = !report.epoch_displacement.empty() && report.epoch_displacement.back() < config.convergence_tol;
  return report;
}

TrainReport train_batch(const data::StateSeries& data, const SomConfig& config, Exec exec) {
  config.validate();
  TrainReport report;
  report.model = init_nodes(data, config);
  SomModel& model = report.model;
  const std::size_t e1 = config.batch_epochs1, e2 = config.batch_epochs2;

  for (std::size_t epoch = 0; epoch < config.max_epochs; ++epoch) {
    double alpha, sigma;
    if (epoch < e1) {
      alpha = config.alpha1.at(epoch, e1);
      sigma = config.sigma1.at(epoch, e1);
    } else if (epoch < e1 + e2) {
      alpha = config.alpha2.at(epoch - e1, e2);
      sigma = config.sigma2.at(epoch - e1, e2);
    } else {
      alpha = config.alpha2.end;
      sigma = config.sigma2.end;
    }

    const auto assign = kernels::assign_winners(data.matrix, model.nodes, exec);
    const Eigen::MatrixXd h = alpha * neighborhood(model, sigma, config.kernel, config.space);
    const auto sums = kernels::batch_sums(data.matrix, assign.winner, h, exec);

    report.empty_nodes.clear();
    Eigen::MatrixXd next = model.nodes;
    for (std::size_t m = 0; m < model.size(); ++m) {
      if (sums.denominator(m) > 0.0)
        next.row(m) = sums.numerator.row(m) / sums.denominator(m);
      else
        report.empty_nodes.push_back(m);
    }
    if (!next.allFinite()) fail(ErrorCode::NonFiniteUpdate, "batch update produced a non-finite node");
    const double moved = (next - model.nodes).rowwise().norm().maxCoeff();
    model.nodes = std::move(next);
    report.epoch_displacement.push_back(moved);
    report.epochs = epoch + 1;
    if (epoch + 1 >= e1 + e2 && moved < config.convergence_tol) {
      report.converged = true;
      break;
    }
  }
  return report;
}

QuantizationReport quantization_error(const data::StateSeries& data, const SomModel& model, Exec exec) {
  const auto assign = kernels::assign_winners(data.matrix, model.nodes, exec);
  QuantizationReport q;
  q.node_error = Eigen::VectorXd::Zero(model.size());
  q.counts.assign(model.size(), 0);
  double total = 0.0;
  for (std::size_t i = 0; i < assign.winner.size(); ++i) {
    const double dist = std::sqrt(assign.dist2[i]);
    total += dist;
    q.node_error(assign.winner[i]) += dist;
    ++q.counts[assign.winner[i]];
  }
  for (std::size_t m = 0; m < model.size(); ++m)
    if (q.counts[m] > 0) q.node_error(m) /= static_cast<double>(q.counts[m]);
  q.mean_error = assign.winner.empty() ? 0.0 : total / static_cast<double>(assign.winner.size());
  return q;
}

}  // namespace stvar::som
