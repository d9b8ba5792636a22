#pragma once

// Planar placement of SOM nodes (Sammon mapping), greedy rank-agreement
// projection of daily vectors, and the Voronoi tessellation of the plane.

#include <Eigen/Dense>
#include <vector>

#include "stvar/calendar.hpp"
#include "stvar/data_model.hpp"
#include "stvar/kernels.hpp"
#include "stvar/som.hpp"

namespace stvar::projection {

struct SammonConfig {
  double step_factor = 0.35;
  std::size_t max_iterations = 500;
  std::size_t max_halvings = 40;
  double tolerance = 1e-13;  // relative stress decrease that counts as converged
};

struct SammonResult {
  Eigen::MatrixXd coords;           // M x 2, centered
  double stress = 0.0;
  std::vector<double> stress_trace; // stress after each accepted iteration (first entry: start)
  std::size_t iterations = 0;
  bool converged = false;           // false: best-so-far after max_iterations
};

/// Top principal coordinates of classical scaling of a distance matrix.
Eigen::MatrixXd classical_scaling(const Eigen::MatrixXd& distances, int dims = 2);

/// Normalized Sammon stress. Throws DegenerateDistances for a zero
/// off-diagonal distance.
double sammon_stress(const Eigen::MatrixXd& distances, const Eigen::MatrixXd& coords);

SammonResult sammon_embed(const Eigen::MatrixXd& distances, const SammonConfig& config = {});

/// Replaces the model's planar coordinates with the Sammon embedding of its
/// reference-vector distances.
SammonResult embed_nodes(som::SomModel& model, const SammonConfig& config = {}, Exec exec = Exec::parallel);

struct Tessellation {
  Eigen::MatrixXd node_planar;  // M x 2

  std::size_t size() const { return static_cast<std::size_t>(node_planar.rows()); }
};

/// Nearest planar node, ties to the smallest index.
std::size_t assign_cell(const Eigen::Vector2d& s, const Tessellation& tess);

struct PlanarSeries {
  Eigen::MatrixXd points;        // T x 2
  std::vector<int> node;         // T node indices (0-based)
  std::vector<Date> dates;       // empty when unlabeled

  std::size_t size() const { return static_cast<std::size_t>(points.rows()); }
  Eigen::Vector2d at(std::size_t t) const { return points.row(t).transpose(); }
};

/// Builds a planar series from points, assigning each to its cell.
PlanarSeries make_series(const Eigen::MatrixXd& points, const Tessellation& tess, std::vector<Date> dates = {});

struct ProjectionConfig {
  double padding = 0.25;        // fraction of the node extent added per side
  std::size_t resolution = 201; // candidates per axis
};

/// Precomputed candidate grid for a trained model.
class Projector {
 public:
  Projector(const som::SomModel& model, const ProjectionConfig& config = {});

  /// Centroid of the grid candidates with maximal rank-prefix agreement.
  Eigen::Vector2d project(const Eigen::Ref<const Eigen::RowVectorXd>& x, Exec exec = Exec::serial) const;

  /// Node indices sorted by data-space distance to x (ties by index).
  std::vector<int> rank_order(const Eigen::Ref<const Eigen::RowVectorXd>& x) const;

  const Eigen::MatrixXd& candidates() const { return candidates_; }
  Eigen::Vector2d lower() const { return lower_; }
  Eigen::Vector2d upper() const { return upper_; }

 private:
  const som::SomModel& model_;
  Eigen::MatrixXd candidates_;
  Eigen::Vector2d lower_, upper_;
};

Eigen::Vector2d project_point(const Eigen::Ref<const Eigen::RowVectorXd>& x, const som::SomModel& model,
                              const ProjectionConfig& config = {});

PlanarSeries project_series(const data::StateSeries& data, const som::SomModel& model,
                            const ProjectionConfig& config = {}, Exec exec = Exec::parallel);

}  // namespace stvar::projection
