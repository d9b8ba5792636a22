#pragma once

// Data-parallel inner loops. Every kernel has an OpenMP path and a plain
// serial reference; both produce identical integer outputs, and floating
// sums agree to rounding. Parallel reductions use a fixed chunk layout that
// does not depend on the thread count, so results are reproducible.

#include <Eigen/Dense>
#include <span>
#include <vector>

namespace stvar {

enum class Exec { serial, parallel };

namespace kernels {

/// Number of fixed reduction chunks used by parallel sums.
inline constexpr std::size_t kReductionChunks = 64;

/// Index of the nearest row of `nodes` to `x` (ties to the smallest index)
/// and the squared distance.
std::pair<int, double> nearest_row(const Eigen::Ref<const Eigen::RowVectorXd>& x, const Eigen::MatrixXd& nodes);

struct Assignment {
  std::vector<int> winner;     // per data row
  std::vector<double> dist2;   // squared distance to the winner
};

Assignment assign_winners(const Eigen::MatrixXd& data, const Eigen::MatrixXd& nodes, Exec exec);
Assignment assign_winners_serial(const Eigen::MatrixXd& data, const Eigen::MatrixXd& nodes);

struct BatchSums {
  Eigen::MatrixXd numerator;    // M x d, sum_i h(m, c(i)) x_i
  Eigen::VectorXd denominator;  // M, sum_i h(m, c(i))
};

/// Neighborhood-weighted sums of one batch epoch; `weights(m, c)` is h_{m,c}.
BatchSums batch_sums(const Eigen::MatrixXd& data, std::span<const int> winner, const Eigen::MatrixXd& weights,
                     Exec exec);
BatchSums batch_sums_serial(const Eigen::MatrixXd& data, std::span<const int> winner,
                            const Eigen::MatrixXd& weights);

/// Longest prefix of `order` (node indices sorted by data-space distance)
/// reproduced by the planar distance ranking seen from `point`. `keys`, when
/// given, holds the data-space distance of each entry of `order`; entries
/// with equal keys form a tie group that may appear in any planar order, and
/// the prefix grows a whole group at a time.
int rank_prefix(const Eigen::Vector2d& point, const Eigen::MatrixXd& planar, std::span<const int> order,
                std::span<const double> keys = {});

/// rank_prefix for every candidate row of `candidates` (K x 2).
std::vector<int> score_candidates(const Eigen::MatrixXd& candidates, const Eigen::MatrixXd& planar,
                                  std::span<const int> order, Exec exec, std::span<const double> keys = {});
std::vector<int> score_candidates_serial(const Eigen::MatrixXd& candidates, const Eigen::MatrixXd& planar,
                                         std::span<const int> order, std::span<const double> keys = {});

/// Euclidean distances between rows (M x M).
Eigen::MatrixXd pairwise_distances(const Eigen::MatrixXd& rows, Exec exec);
Eigen::MatrixXd pairwise_distances_serial(const Eigen::MatrixXd& rows);

}  // namespace kernels
}  // namespace stvar
