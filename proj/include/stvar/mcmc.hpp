#pragma once

// Metropolis-within-Gibbs posterior sampling for every model spec, and
// composition sampling of one-step-ahead predictive draws.

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <vector>

#include "stvar/kernels.hpp"
#include "stvar/model.hpp"
#include "stvar/rng.hpp"

namespace stvar::mcmc {

using model::DesignPair;
using model::ModelSpec;
using model::SpatialState;

enum class SigmaMode { full_conditional, paper_literal };

const char* to_string(SigmaMode m);
SigmaMode parse_sigma_mode(const std::string& name);

struct QPrior {
  double diag_mean = 1.0;
  double diag_sd = 10.0;
  double offdiag_mean = 0.0;
  double offdiag_sd = 10.0;
};

struct McmcConfig {
  std::size_t n_iter = 10000;
  std::size_t burn_in = 2000;
  std::size_t thin = 1;
  std::uint64_t seed = 0;
  // Upper ends of the uniform theta priors; unset means 300 / domain diameter.
  std::optional<Eigen::Vector2d> theta_upper;
  double theta_step = 0.5;          // initial sd of the log-scale proposal
  double target_acceptance = 0.30;  // tuned toward during burn-in only
  std::size_t tune_window = 50;
  QPrior q_prior;
  SigmaMode sigma_mode = SigmaMode::full_conditional;
  std::size_t max_predictive_draws = 1000;
  double rhat_threshold = 1.1;

  void validate() const;
};

struct PosteriorDraw {
  Eigen::MatrixXd phi;  // p x 2 (identity for the random walk)
  Eigen::Matrix2d sigma;
  std::optional<SpatialState> spatial;
};

struct Chain {
  std::vector<PosteriorDraw> draws;
  Eigen::Vector2d theta_acceptance = Eigen::Vector2d::Zero();  // post burn-in
  Eigen::Vector2d theta_step = Eigen::Vector2d::Zero();        // frozen proposal sds
  Eigen::Vector2d theta_upper = Eigen::Vector2d::Zero();
  McmcConfig config;
  model::DesignLayout layout;
  std::size_t series_length = 0;
  double max_rhat = 1.0;
  bool nonconvergence_warning = false;

  const ModelSpec& spec() const { return layout.spec(); }
};

/// Inverse-Wishart draw (dimension 2) with E = scale / (df - 3).
/// NonPDScale for a scale that is not positive definite, InsufficientDf for df <= 1.
Eigen::Matrix2d inverse_wishart(const Eigen::Matrix2d& scale, double df, Rng& rng);

/// Sufficient statistics of the regression of `response` on X.
class Regression {
 public:
  Regression() = default;
  /// SingularDesign when X is rank deficient.
  explicit Regression(const Eigen::MatrixXd& X);

  void set_response(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y);

  const Eigen::MatrixXd& xtx() const { return xtx_; }
  const Eigen::MatrixXd& phi_hat() const { return phi_hat_; }
  /// (Y - X Phi)'(Y - X Phi) from the stored cross products.
  Eigen::Matrix2d cross(const Eigen::MatrixXd& phi) const;
  /// Phi_hat + L Z chol(Sigma)' with L L' = (X'X)^{-1}.
  Eigen::MatrixXd draw(const Eigen::Matrix2d& sigma, Rng& rng) const;

 private:
  Eigen::MatrixXd xtx_;
  Eigen::LLT<Eigen::MatrixXd> chol_;
  Eigen::MatrixXd xty_;
  Eigen::Matrix2d yty_ = Eigen::Matrix2d::Zero();
  Eigen::MatrixXd phi_hat_;
};

/// Phi | Sigma, Y ~ MN(Phi_hat, (X'X)^{-1}, Sigma). `eta` (optional) is
/// subtracted from Y first.
Eigen::MatrixXd gibbs_phi(const Eigen::Matrix2d& sigma, const DesignPair& design, Rng& rng,
                          const Eigen::MatrixXd& eta = {});

/// Inverse-Wishart update of Sigma under the selected convention.
Eigen::Matrix2d gibbs_sigma(const Eigen::MatrixXd& phi, const DesignPair& design, SigmaMode mode, Rng& rng,
                            const Eigen::MatrixXd& eta = {});

/// Degrees of freedom used by gibbs_sigma.
double sigma_df(const DesignPair& design, SigmaMode mode);

struct NormalConditional {
  double mean = 0.0;
  double sd = 1.0;
};

/// Gibbs state for one chain over a fixed design.
class Sampler {
 public:
  Sampler(const DesignPair& design, const McmcConfig& config);

  // -- state
  const Eigen::MatrixXd& phi() const { return phi_; }
  const Eigen::Matrix2d& sigma() const { return sigma_; }
  const SpatialState& spatial() const { return spatial_; }
  bool is_spatial() const { return spatial_on_; }
  void set_phi(const Eigen::MatrixXd& phi) { phi_ = phi; }
  void set_sigma(const Eigen::Matrix2d& sigma) { sigma_ = sigma; }
  void set_theta(int k, double theta);
  void set_q(const Eigen::Matrix2d& q);
  void set_wstar(const Eigen::MatrixXd& wstar);
  const Eigen::Vector2d& theta_upper() const { return theta_upper_; }
  Eigen::Vector2d& theta_step() { return step_; }

  /// eta at every conditioning location (n x 2); zero when not spatial.
  Eigen::MatrixXd eta() const;
  /// Parent-process values w~_k at the conditioning locations (n x 2).
  Eigen::MatrixXd wtilde() const;
  double log_likelihood() const;

  // -- updates
  void gibbs_phi(Rng& rng);
  void gibbs_sigma(Rng& rng);
  /// Returns whether the proposal was accepted.
  bool metropolis_theta(int k, Rng& rng);
  void update_q(Rng& rng);
  void update_wstar(Rng& rng);
  /// One full sweep; returns per-process theta acceptance flags.
  std::pair<bool, bool> sweep(Rng& rng);

  /// Full conditional of Q entry (0: q11, 1: q21, 2: q22) before truncation.
  NormalConditional q_conditional(int entry) const;
  /// Joint Gaussian full conditional of vec(w1*, w2*): mean and precision.
  std::pair<Eigen::VectorXd, Eigen::MatrixXd> wstar_conditional() const;

 private:
  struct Process {
    model::KnotProcess knot;
    Eigen::MatrixXd basis;      // n x m: c(s_t)' C*^{-1}
    Eigen::MatrixXd precision;  // C*^{-1}
  };
  Process make_process(double theta) const;
  Eigen::MatrixXd residual() const;  // Y - X Phi (without eta)
  double log_target_theta(int k, const Process& proc) const;
  void refresh_response();

  const DesignPair& design_;
  McmcConfig config_;
  Regression regression_;
  Eigen::MatrixXd phi_;
  Eigen::Matrix2d sigma_;
  bool spatial_on_ = false;
  SpatialState spatial_;
  Process proc_[2];
  Eigen::Vector2d theta_upper_ = Eigen::Vector2d::Zero();
  Eigen::Vector2d step_ = Eigen::Vector2d::Zero();
};

/// Runs one chain: Phi, Sigma (then theta, Q, w* for spatial specs), tuning
/// the theta proposals during burn-in and recording thinned draws after it.
Chain run_chain(const model::PlanarSeries& series, const model::Tessellation& tess, const ModelSpec& spec,
                const McmcConfig& config);
Chain run_chain(const DesignPair& design, const McmcConfig& config);

/// Split-chain potential scale reduction of one scalar trace.
double split_rhat(const std::vector<double>& trace);

/// Evenly spaced indices of the draws used for predictive summaries.
std::vector<std::size_t> predictive_subset(std::size_t n_draws, std::size_t cap);

/// Precomputed per-draw pieces for fast predictive composition.
class Predictor {
 public:
  explicit Predictor(const Chain& chain);

  std::size_t size() const { return index_.size(); }
  /// Conditional mean of draw b at (s, date).
  Eigen::Vector2d mean(std::size_t b, const Eigen::Vector2d& s, const Date* date) const;
  /// B x 2 predictive draws at (s, date).
  Eigen::MatrixXd draws(const Eigen::Vector2d& s, const Date* date, Rng& rng) const;
  /// Predictive draws for step t of a series use the stream derived from (seed, t).
  std::uint64_t step_seed(std::size_t t) const;

 private:
  const Chain& chain_;
  std::vector<std::size_t> index_;
  std::vector<Eigen::Matrix2d> chol_;
  std::vector<Eigen::MatrixXd> alpha_;  // m x 2: C*_k^{-1} w_k* per draw
};

/// predict_one_step for a single location.
Eigen::MatrixXd predict_one_step(const Eigen::Vector2d& s, const Date* date, const Chain& chain, Rng& rng);

}  // namespace stvar::mcmc
