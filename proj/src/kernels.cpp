#include "stvar/kernels.hpp"

#include <algorithm>
#include <limits>

namespace stvar::kernels {

std::pair<int, double> nearest_row(const Eigen::Ref<const Eigen::RowVectorXd>& x, const Eigen::MatrixXd& nodes) {
  int best = 0;
  double best_d2 = std::numeric_limits<double>::infinity();
  for (Eigen::Index m = 0; m < nodes.rows(); ++m) {
    const double d2 = (nodes.row(m) - x).squaredNorm();
    if (d2 < best_d2) {
      best_d2 = d2;
      best = static_cast<int>(m);
    }
  }
  return {best, best_d2};
}

Assignment assign_winners_serial(const Eigen::MatrixXd& data, const Eigen::MatrixXd& nodes) {
  Assignment a;
  a.winner.resize(data.rows());
  a.dist2.resize(data.rows());
  for (Eigen::Index i = 0; i < data.rows(); ++i) {
    auto [w, d2] = nearest_row(data.row(i), nodes);
    a.winner[i] = w;
    a.dist2[i] = d2;
  }
  return a;
}

Assignment assign_winners(const Eigen::MatrixXd& data, const Eigen::MatrixXd& nodes, Exec exec) {
  if (exec == Exec::serial) return assign_winners_serial(data, nodes);
  Assignment a;
  const Eigen::Index n = data.rows();
  a.winner.resize(n);
  a.dist2.resize(n);
#pragma omp parallel for schedule(static)
  for (Eigen::Index i = 0; i < n; ++i) {
    auto [w, d2] = nearest_row(data.row(i), nodes);
    a.winner[i] = w;
    a.dist2[i] = d2;
  }
  return a;
}

BatchSums batch_sums_serial(const Eigen::MatrixXd& data, std::span<const int> winner,
                            const Eigen::MatrixXd& weights) {
  const Eigen::Index M = weights.rows();
  BatchSums s{Eigen::MatrixXd::Zero(M, data.cols()), Eigen::VectorXd::Zero(M)};
  for (Eigen::Index i = 0; i < data.rows(); ++i) {
    const int c = winner[i];
    for (Eigen::Index m = 0; m < M; ++m) {
      const double h = weights(m, c);
      if (h == 0.0) continue;
      s.numerator.row(m) += h * data.row(i);
      s.denominator(m) += h;
    }
  }
  return s;
}

BatchSums batch_sums(const Eigen::MatrixXd& data, std::span<const int> winner, const Eigen::MatrixXd& weights,
                     Exec exec) {
  if (exec == Exec::serial) return batch_sums_serial(data, winner, weights);
  const Eigen::Index M = weights.rows(), d = data.cols(), n = data.rows();
  const std::size_t chunks = std::min<std::size_t>(kReductionChunks, std::max<Eigen::Index>(n, 1));

  // Per-chunk cluster sums; the neighborhood weighting is applied after the
  // fixed-order chunk reduction.
  std::vector<Eigen::MatrixXd> cluster_sum(chunks, Eigen::MatrixXd::Zero(M, d));
  std::vector<Eigen::VectorXd> cluster_count(chunks, Eigen::VectorXd::Zero(M));
#pragma omp parallel for schedule(static)
  for (std::size_t k = 0; k < chunks; ++k) {
    const Eigen::Index lo = n * k / chunks, hi = n * (k + 1) / chunks;
    for (Eigen::Index i = lo; i < hi; ++i) {
      cluster_sum[k].row(winner[i]) += data.row(i);
      cluster_count[k](winner[i]) += 1.0;
    }
  }
  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(M, d);
  Eigen::VectorXd count = Eigen::VectorXd::Zero(M);
  for (std::size_t k = 0; k < chunks; ++k) {
    sum += cluster_sum[k];
    count += cluster_count[k];
  }
  return {weights * sum, weights * count};
}

int rank_prefix(const Eigen::Vector2d& point, const Eigen::MatrixXd& planar, std::span<const int> order,
                std::span<const double> keys) {
  const std::size_t M = order.size();
  constexpr std::size_t kStack = 128;
  double stack_buf[2 * kStack];
  std::vector<double> heap_buf;
  double* dist = stack_buf;
  if (M > kStack) {
    heap_buf.resize(2 * M);
    dist = heap_buf.data();
  }
  double* suffix = dist + std::max(M, kStack);  // suffix[k] = min(dist[k..M-1])
  // planar distances listed in data-space rank order
  for (std::size_t k = 0; k < M; ++k) dist[k] = (planar.row(order[k]).transpose() - point).squaredNorm();
  for (std::size_t k = M; k-- > 0;) suffix[k] = (k + 1 < M) ? std::min(suffix[k + 1], dist[k]) : dist[k];
  // A prefix ending at a group boundary b holds iff every planar distance
  // before b is below every one after it; failure is monotone in b.
  int best = 0;
  double head_max = -1.0;
  for (std::size_t a = 0; a < M;) {
    std::size_t b = a + 1;
    if (!keys.empty())
      while (b < M && keys[b] == keys[a]) ++b;
    for (std::size_t k = a; k < b; ++k) head_max = std::max(head_max, dist[k]);
    if (b < M && !(head_max < suffix[b])) break;
    best = static_cast<int>(b);
    a = b;
  }
  return best;
}

std::vector<int> score_candidates_serial(const Eigen::MatrixXd& candidates, const Eigen::MatrixXd& planar,
                                         std::span<const int> order, std::span<const double> keys) {
  std::vector<int> score(candidates.rows());
  for (Eigen::Index k = 0; k < candidates.rows(); ++k)
    score[k] = rank_prefix(candidates.row(k).transpose(), planar, order, keys);
  return score;
}

std::vector<int> score_candidates(const Eigen::MatrixXd& candidates, const Eigen::MatrixXd& planar,
                                  std::span<const int> order, Exec exec, std::span<const double> keys) {
  if (exec == Exec::serial) return score_candidates_serial(candidates, planar, order, keys);
  std::vector<int> score(candidates.rows());
#pragma omp parallel for schedule(static)
  for (Eigen::Index k = 0; k < candidates.rows(); ++k)
    score[k] = rank_prefix(candidates.row(k).transpose(), planar, order, keys);
  return score;
}

Eigen::MatrixXd pairwise_distances_serial(const Eigen::MatrixXd& rows) {
  const Eigen::Index M = rows.rows();
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(M, M);
  for (Eigen::Index i = 0; i < M; ++i)
    for (Eigen::Index j = i + 1; j < M; ++j) D(i, j) = D(j, i) = (rows.row(i) - rows.row(j)).norm();
  return D;
}

Eigen::MatrixXd pairwise_distances(const Eigen::MatrixXd& rows, Exec exec) {
  if (exec == Exec::serial) return pairwise_distances_serial(rows);
  const Eigen::Index M = rows.rows();
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(M, M);
#pragma omp parallel for schedule(dynamic)
  for (Eigen::Index i = 0; i < M; ++i)
    for (Eigen::Index j = i + 1; j < M; ++j) D(i, j) = D(j, i) = (rows.row(i) - rows.row(j)).norm();
  return D;
}

}  // namespace stvar::kernels
