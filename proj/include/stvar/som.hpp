#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "stvar/data_model.hpp"
#include "stvar/kernels.hpp"

namespace stvar::som {

enum class Kernel { gaussian, bubble };
enum class NeighborhoodSpace { map, data };

/// Linear ramp from `start` to `end` across a phase.
struct Ramp {
  double start = 1.0;
  double end = 1.0;

  double at(std::size_t step, std::size_t steps) const {
    if (steps <= 1) return start;
    return start + (end - start) * static_cast<double>(step) / static_cast<double>(steps - 1);
  }
};

/// Training configuration. Sigma is measured in lattice spacings for map-space
/// neighborhoods and in data units for data-space neighborhoods.
struct SomConfig {
  std::size_t n_nodes = 12;
  Kernel kernel = Kernel::gaussian;
  NeighborhoodSpace space = NeighborhoodSpace::map;
  Ramp alpha1{0.5, 0.05};
  Ramp alpha2{0.05, 0.01};
  Ramp sigma1{1.8, 1.0};
  Ramp sigma2{1.0, 1.0};
  std::size_t steps1 = 0;  // online steps, phase 1
  std::size_t steps2 = 0;  // online steps, phase 2
  std::size_t batch_epochs1 = 20;
  std::size_t batch_epochs2 = 20;
  std::uint64_t seed = 1;
  double convergence_tol = 1e-6;
  std::size_t max_epochs = 1000;

  /// Standard schedules for M nodes and T training vectors: alpha 0.5->0.05
  /// over 10T steps with sigma from half the lattice diameter to 1, then alpha
  /// 0.05->0.01 over 40T steps at sigma 1.
  static SomConfig standard(std::size_t n_nodes, std::size_t n_train);

  /// Throws InvalidConfig on out-of-range values.
  void validate() const;
};

struct SomModel {
  Eigen::MatrixXd nodes;   // M x d reference vectors
  Eigen::MatrixXd planar;  // M x 2 map coordinates
  SomConfig config;
  std::string provenance;  // hash of the training matrix

  std::size_t size() const { return static_cast<std::size_t>(nodes.rows()); }
  std::size_t dim() const { return static_cast<std::size_t>(nodes.cols()); }
};

struct TrainReport {
  SomModel model;
  std::vector<double> epoch_displacement;  // max node movement per epoch
  std::vector<std::size_t> sample_trace;   // online: training index drawn at each step
  std::vector<std::size_t> empty_nodes;    // batch: nodes frozen for lack of weight (final epoch)
  std::size_t epochs = 0;
  bool converged = false;
};

/// Near-square regular lattice with unit spacing, centered at the origin.
Eigen::MatrixXd lattice(std::size_t n_nodes);

/// FNV-1a hash of the matrix shape and bytes, hex encoded.
std::string provenance_hash(const Eigen::MatrixXd& data);

/// Uniform draws inside the componentwise data range; planar on the lattice.
SomModel init_nodes(const data::StateSeries& data, const SomConfig& config);

/// argmin_m ||w_m - x||, ties to the smallest index.
std::size_t find_winner(const Eigen::Ref<const Eigen::RowVectorXd>& x, const SomModel& model);

/// True when the Voronoi cells of points a and b share a face: the midpoint
/// of a and b is strictly closer to them than to any other point.
bool voronoi_neighbors(const Eigen::MatrixXd& points, std::size_t a, std::size_t b);

double kernel_value(std::size_t m, std::size_t c, const SomModel& model, double sigma, Kernel kind,
                    NeighborhoodSpace space);

/// K(m, c) for every node pair.
Eigen::MatrixXd neighborhood(const SomModel& model, double sigma, Kernel kind, NeighborhoodSpace space);

/// One Version-1 update: w_m += alpha K(m, c(x)) (x - w_m) for every node.
/// Returns the winner.
std::size_t online_step(SomModel& model, const Eigen::Ref<const Eigen::RowVectorXd>& x, double alpha,
                        double sigma);

TrainReport train_online(const data::StateSeries& data, const SomConfig& config);
TrainReport train_batch(const data::StateSeries& data, const SomConfig& config, Exec exec = Exec::parallel);

struct QuantizationReport {
  double mean_error = 0.0;            // mean Euclidean winner distance
  Eigen::VectorXd node_error;         // per-node mean distance (0 when unused)
  std::vector<std::size_t> counts;    // per-node assignment counts
};

QuantizationReport quantization_error(const data::StateSeries& data, const SomModel& model,
                                      Exec exec = Exec::parallel);

}  // namespace stvar::som
