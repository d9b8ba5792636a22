#pragma once

// Ground-truth generators: forward simulation of any model spec with known
// parameters, and uniform point clouds for map-occupancy checks.

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <vector>

#include "stvar/calendar.hpp"
#include "stvar/data_model.hpp"
#include "stvar/model.hpp"

namespace stvar::synthetic {

using model::ModelSpec;
using model::PlanarSeries;
using model::Tessellation;

struct TruthBundle {
  ModelSpec spec;
  Tessellation tess;
  std::vector<int> years;       // annual blocks, ascending
  Eigen::MatrixXd phi;          // p x 2 in the design layout of `spec`
  Eigen::Matrix2d sigma = Eigen::Matrix2d::Identity();
  std::optional<model::SpatialAdjust> spatial;
  std::uint64_t seed = 1;
  bool stationary = true;       // requested; checked by simulate_var

  model::DesignLayout layout() const;
  /// Throws NonPDSigma / DimensionMismatch on inconsistent parts.
  void validate() const;
};

/// 12 nodes on a 4 x 3 lattice with spacing 10, centered at the origin.
Tessellation default_tessellation();

/// Innovation covariance used by the default truths.
Eigen::Matrix2d default_sigma();

/// A = rho R(angle).
Eigen::Matrix2d scaled_rotation(double rho, double angle);

/// Deterministic stationary truth for any ladder spec: every A block is a
/// scaled rotation with modulus in [0.5, 0.95], intercepts of size up to 3,
/// and (spatial) a knot field drawn from its prior with `seed`.
TruthBundle default_truth(const ModelSpec& spec, const Tessellation& tess = default_tessellation(),
                          std::vector<int> years = {}, std::uint64_t seed = 1);

struct Simulation {
  PlanarSeries series;
  bool explosive_warning = false;  // some A block has spectral radius >= 1
};

/// s_{t+1} = A(s_t, t) s_t + eta(s_t, t) + e_{t+1} from s_0 over `dates`
/// (T = dates.size()); with no dates, T locations are produced unlabeled.
Simulation simulate_var(const TruthBundle& truth, std::size_t T, const Eigen::Vector2d& s0 = Eigen::Vector2d::Zero(),
                        const std::vector<Date>& dates = {});

/// Largest spectral radius over the A blocks of `phi`.
double max_spectral_radius(const Eigen::MatrixXd& phi, std::size_t a_blocks);

/// n uniform draws in the box [lo, hi] (any dimension).
data::StateSeries simulate_uniform_cloud(std::size_t n, const Eigen::VectorXd& lo, const Eigen::VectorXd& hi,
                                         std::uint64_t seed);

}  // namespace stvar::synthetic
