#include "stvar/mcmc.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "stvar/error.hpp"

namespace stvar::mcmc {

const char* to_string(SigmaMode m) {
  return m == SigmaMode::full_conditional ? "full_conditional" : "paper_literal";
}

SigmaMode parse_sigma_mode(const std::string& name) {
  if (name == "full_conditional") return SigmaMode::full_conditional;
  if (name == "paper_literal") return SigmaMode::paper_literal;
  fail(ErrorCode::InvalidConfig, "unknown sigma_conditional_mode '" + name + "'");
}

void McmcConfig::validate() const {
  if (!(n_iter > burn_in)) fail(ErrorCode::InvalidConfig, "n_iter must exceed burn_in");
  if (thin < 1) fail(ErrorCode::InvalidConfig, "thin must be at least 1");
  if (!(theta_step > 0.0)) fail(ErrorCode::InvalidConfig, "theta_proposal_step must be positive");
  if (!(q_prior.diag_sd > 0.0 && q_prior.offdiag_sd > 0.0)) fail(ErrorCode::InvalidConfig, "Q prior sds must be positive");
  if (theta_upper && !((*theta_upper)(0) > 0.0 && (*theta_upper)(1) > 0.0))
    fail(ErrorCode::InvalidConfig, "theta prior upper bounds must be positive");
  if (!(target_acceptance > 0.0 && target_acceptance < 1.0)) fail(ErrorCode::InvalidConfig, "target acceptance in (0,1)");
  if (tune_window < 1 || max_predictive_draws < 1) fail(ErrorCode::InvalidConfig, "window and draw cap must be positive");
}

// ---------------------------------------------------------------------------

Eigen::Matrix2d inverse_wishart(const Eigen::Matrix2d& scale, double df, Rng& rng) {
  if (!(df > 1.0)) fail(ErrorCode::InsufficientDf, "inverse-Wishart degrees of freedom must exceed 1");
  if (!scale.allFinite()) fail(ErrorCode::NonPDScale, "scale matrix is not finite");
  const Eigen::Matrix2d sym = 0.5 * (scale + scale.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(sym, Eigen::EigenvaluesOnly);
  const double lo = eig.eigenvalues()(0), hi = eig.eigenvalues()(1);
  if (!(lo > 0.0) || lo <= 1e-14 * hi) fail(ErrorCode::NonPDScale, "scale matrix is not positive definite");

  // Sigma^{-1} ~ Wishart(scale^{-1}, df) by the Bartlett decomposition.
  const Eigen::Matrix2d inv = sym.inverse();
  const Eigen::Matrix2d L = Eigen::LLT<Eigen::Matrix2d>(0.5 * (inv + inv.transpose())).matrixL();
  Eigen::Matrix2d A = Eigen::Matrix2d::Zero();
  A(0, 0) = std::sqrt(rng.chi_squared(df));
  A(1, 1) = std::sqrt(rng.chi_squared(df - 1.0));
  A(1, 0) = rng.normal();
  const Eigen::Matrix2d LA = L * A;
  const Eigen::Matrix2d W = LA * LA.transpose();
  Eigen::Matrix2d sigma = W.inverse();
  return 0.5 * (sigma + sigma.transpose());
}

Regression::Regression(const Eigen::MatrixXd& X) {
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
  if (qr.rank() < X.cols()) fail(ErrorCode::SingularDesign, "X'X is singular");
  xtx_ = X.transpose() * X;
  chol_.compute(xtx_);
  if (chol_.info() != Eigen::Success) fail(ErrorCode::SingularDesign, "X'X is not positive definite");
}

void Regression::set_response(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y) {
  xty_ = X.transpose() * Y;
  yty_ = Y.transpose() * Y;
  phi_hat_ = chol_.solve(xty_);
}

Eigen::Matrix2d Regression::cross(const Eigen::MatrixXd& phi) const {
  const Eigen::Matrix2d pxy = phi.transpose() * xty_;
  Eigen::Matrix2d s = yty_ - pxy - pxy.transpose() + phi.transpose() * xtx_ * phi;
  return 0.5 * (s + s.transpose());
}

Eigen::MatrixXd Regression::draw(const Eigen::Matrix2d& sigma, Rng& rng) const {
  Eigen::LLT<Eigen::Matrix2d> ls(sigma);
  if (ls.info() != Eigen::Success) fail(ErrorCode::NonPDSigma, "Sigma is not positive definite");
  const Eigen::Index p = xtx_.rows();
  Eigen::MatrixXd Z(p, 2);
  for (Eigen::Index j = 0; j < 2; ++j)
    for (Eigen::Index i = 0; i < p; ++i) Z(i, j) = rng.normal();
  const Eigen::MatrixXd M = Z * Eigen::Matrix2d(ls.matrixL()).transpose();
  return phi_hat_ + chol_.matrixU().solve(M);
}

Eigen::MatrixXd gibbs_phi(const Eigen::Matrix2d& sigma, const DesignPair& design, Rng& rng,
                          const Eigen::MatrixXd& eta) {
  Regression reg(design.X);
  reg.set_response(design.X, eta.size() > 0 ? Eigen::MatrixXd(design.Y - eta) : design.Y);
  return reg.draw(sigma, rng);
}

double sigma_df(const DesignPair& design, SigmaMode mode) {
  const double n = static_cast<double>(design.rows());
  if (mode == SigmaMode::full_conditional) return n;
  const double p = design.layout.spec().random_walk() ? 0.0 : static_cast<double>(design.layout.columns());
  return n + 1.0 - p;
}

Eigen::Matrix2d gibbs_sigma(const Eigen::MatrixXd& phi, const DesignPair& design, SigmaMode mode, Rng& rng,
                            const Eigen::MatrixXd& eta) {
  Eigen::MatrixXd at = phi;
  if (mode == SigmaMode::paper_literal && !design.layout.spec().random_walk()) {
    Regression reg(design.X);
    reg.set_response(design.X, eta.size() > 0 ? Eigen::MatrixXd(design.Y - eta) : design.Y);
    at = reg.phi_hat();
  }
  return inverse_wishart(model::residual_cross(design, at, eta), sigma_df(design, mode), rng);
}

// ---------------------------------------------------------------------------

namespace {

double median_pairwise(const Eigen::MatrixXd& pts) {
  std::vector<double> d;
  for (Eigen::Index i = 0; i < pts.rows(); ++i)
    for (Eigen::Index j = i + 1; j < pts.rows(); ++j) d.push_back((pts.row(i) - pts.row(j)).norm());
  if (d.empty()) return 1.0;
  auto mid = d.begin() + static_cast<std::ptrdiff_t>(d.size() / 2);
  std::nth_element(d.begin(), mid, d.end());
  return *mid;
}

double gaussian_loglik(const Eigen::Matrix2d& sigma, const Eigen::Matrix2d& cross, double n) {
  Eigen::LLT<Eigen::Matrix2d> llt(sigma);
  if (llt.info() != Eigen::Success) fail(ErrorCode::NonPDSigma, "Sigma is not positive definite");
  const double log_det = 2.0 * std::log(llt.matrixL()(0, 0) * llt.matrixL()(1, 1));
  return -n * std::log(2.0 * std::numbers::pi) - 0.5 * n * log_det - 0.5 * llt.solve(cross).trace();
}

}  // namespace

Sampler::Sampler(const DesignPair& design, const McmcConfig& config) : design_(design), config_(config) {
  config_.validate();
  const auto& spec = design.layout.spec();
  if (!spec.random_walk()) {
    regression_ = Regression(design.X);
    regression_.set_response(design.X, design.Y);
  }
  const auto mle = model::mle_var(design);
  phi_ = mle.phi;
  sigma_ = mle.sigma;
  spatial_on_ = spec.spatial();
  if (spatial_on_) {
    const Eigen::MatrixXd& knots = design.layout.knots();
    const double diameter = (knots.colwise().maxCoeff() - knots.colwise().minCoeff()).norm();
    theta_upper_ = config_.theta_upper ? *config_.theta_upper : Eigen::Vector2d::Constant(300.0 / diameter);
    const double theta0 = 3.0 / median_pairwise(knots);
    spatial_.theta = Eigen::Vector2d(std::min(theta0, theta_upper_(0)), std::min(theta0, theta_upper_(1)));
    spatial_.q = Eigen::Matrix2d::Identity();
    spatial_.wstar = Eigen::MatrixXd::Zero(2, knots.rows());
    for (int k = 0; k < 2; ++k) proc_[k] = make_process(spatial_.theta(k));
    step_ = Eigen::Vector2d::Constant(config_.theta_step);
  }
}

Sampler::Process Sampler::make_process(double theta) const {
  Process p;
  p.knot = model::KnotProcess(design_.layout.knots(), theta, design_.layout.spec().jitter);
  p.basis = p.knot.weights(design_.origins);
  p.precision = p.knot.solve(Eigen::MatrixXd::Identity(p.knot.size(), p.knot.size()));
  p.precision = 0.5 * (p.precision + p.precision.transpose());
  return p;
}

void Sampler::set_theta(int k, double theta) {
  proc_[k] = make_process(theta);
  spatial_.theta(k) = theta;
}

void Sampler::set_q(const Eigen::Matrix2d& q) { spatial_.q = q; }
void Sampler::set_wstar(const Eigen::MatrixXd& wstar) { spatial_.wstar = wstar; }

Eigen::MatrixXd Sampler::residual() const { return design_.Y - design_.X * phi_; }

Eigen::MatrixXd Sampler::wtilde() const {
  Eigen::MatrixXd w(design_.rows(), 2);
  for (int k = 0; k < 2; ++k) w.col(k) = proc_[k].basis * spatial_.wstar.row(k).transpose();
  return w;
}

Eigen::MatrixXd Sampler::eta() const {
  if (!spatial_on_) return Eigen::MatrixXd::Zero(design_.rows(), 2);
  return wtilde() * spatial_.q.transpose();
}

double Sampler::log_likelihood() const {
  const double n = static_cast<double>(design_.rows());
  if (!spatial_on_ && !design_.layout.spec().random_walk())
    return gaussian_loglik(sigma_, regression_.cross(phi_), n);
  const Eigen::MatrixXd R = residual() - eta();
  return gaussian_loglik(sigma_, R.transpose() * R, n);
}

void Sampler::gibbs_phi(Rng& rng) {
  if (design_.layout.spec().random_walk()) return;
  if (spatial_on_) regression_.set_response(design_.X, design_.Y - eta());
  phi_ = regression_.draw(sigma_, rng);
}

void Sampler::gibbs_sigma(Rng& rng) {
  const bool rw = design_.layout.spec().random_walk();
  Eigen::Matrix2d scale;
  if (rw || spatial_on_) {
    const Eigen::MatrixXd R = residual() - eta();
    scale = R.transpose() * R;
    if (config_.sigma_mode == SigmaMode::paper_literal && !rw) scale = regression_.cross(regression_.phi_hat());
  } else {
    scale = regression_.cross(config_.sigma_mode == SigmaMode::paper_literal ? regression_.phi_hat() : phi_);
  }
  sigma_ = inverse_wishart(scale, sigma_df(design_, config_.sigma_mode), rng);
}

double Sampler::log_target_theta(int k, const Process& proc) const {
  const Eigen::VectorXd w = spatial_.wstar.row(k).transpose();
  const double prior = -0.5 * proc.knot.log_det() - 0.5 * w.dot(proc.knot.solve(w).col(0));
  Eigen::MatrixXd wt = wtilde();
  wt.col(k) = proc.basis * w;
  const Eigen::MatrixXd R = residual() - wt * spatial_.q.transpose();
  return prior + gaussian_loglik(sigma_, R.transpose() * R, static_cast<double>(design_.rows()));
}

bool Sampler::metropolis_theta(int k, Rng& rng) {
  const double current = spatial_.theta(k);
  const double proposal = current * std::exp(step_(k) * rng.normal());
  const double log_u = std::log(rng.uniform());
  if (!(proposal > 0.0) || proposal > theta_upper_(k)) return false;
  Process next;
  try {
    next = make_process(proposal);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::IllConditioned) return false;
    throw;
  }
  const double log_ratio = log_target_theta(k, next) - log_target_theta(k, proc_[k]) + std::log(proposal) -
                           std::log(current);
  if (!(log_u < log_ratio)) return false;
  proc_[k] = std::move(next);
  spatial_.theta(k) = proposal;
  return true;
}

NormalConditional Sampler::q_conditional(int entry) const {
  const Eigen::MatrixXd W = wtilde();
  const Eigen::MatrixXd R = residual();
  const Eigen::Matrix2d sinv = sigma_.inverse();
  const Eigen::Index n = W.rows();
  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(n, 2);
  double current = 0.0, mu0 = config_.q_prior.diag_mean, sd0 = config_.q_prior.diag_sd;
  switch (entry) {
    case 0: G.col(0) = W.col(0); current = spatial_.q(0, 0); break;
    case 1:
      G.col(1) = W.col(0);
      current = spatial_.q(1, 0);
      mu0 = config_.q_prior.offdiag_mean;
      sd0 = config_.q_prior.offdiag_sd;
      break;
    case 2: G.col(1) = W.col(1); current = spatial_.q(1, 1); break;
    default: fail(ErrorCode::InvalidConfig, "Q entry must be 0, 1 or 2");
  }
  // Residual left once this entry's contribution is removed from eta.
  const Eigen::MatrixXd rest = W * spatial_.q.transpose() - current * G;
  const Eigen::MatrixXd target = R - rest;
  const Eigen::MatrixXd GS = G * sinv;
  const double precision = GS.cwiseProduct(G).sum() + 1.0 / (sd0 * sd0);
  const double linear = GS.cwiseProduct(target).sum() + mu0 / (sd0 * sd0);
  return {linear / precision, 1.0 / std::sqrt(precision)};
}

void Sampler::update_q(Rng& rng) {
  for (int entry = 0; entry < 3; ++entry) {
    const auto c = q_conditional(entry);
    if (entry == 1) {
      spatial_.q(1, 0) = rng.normal(c.mean, c.sd);
    } else {
      const int i = entry == 0 ? 0 : 1;
      spatial_.q(i, i) = rng.truncated_normal_positive(c.mean, c.sd);
    }
  }
  spatial_.q(0, 1) = 0.0;
}

std::pair<Eigen::VectorXd, Eigen::MatrixXd> Sampler::wstar_conditional() const {
  const Eigen::Index m = spatial_.wstar.cols();
  const Eigen::Matrix2d sinv = sigma_.inverse();
  const Eigen::MatrixXd RS = residual() * sinv;  // n x 2
  Eigen::MatrixXd P = Eigen::MatrixXd::Zero(2 * m, 2 * m);
  Eigen::VectorXd b(2 * m);
  for (int k = 0; k < 2; ++k) {
    const Eigen::Vector2d qk = spatial_.q.col(k);
    P.block(k * m, k * m, m, m) += proc_[k].precision;
    b.segment(k * m, m) = proc_[k].basis.transpose() * (RS * qk);
    for (int l = 0; l < 2; ++l) {
      const double a = qk.dot(sinv * spatial_.q.col(l));
      if (a != 0.0) P.block(k * m, l * m, m, m) += a * (proc_[k].basis.transpose() * proc_[l].basis);
    }
  }
  P = 0.5 * (P + P.transpose());
  Eigen::LLT<Eigen::MatrixXd> llt(P);
  Eigen::VectorXd mean = llt.info() == Eigen::Success ? Eigen::VectorXd(llt.solve(b)) : Eigen::VectorXd();
  return {mean, P};
}

void Sampler::update_wstar(Rng& rng) {
  const Eigen::Index m = spatial_.wstar.cols();
  auto [mean, P] = wstar_conditional();
  Eigen::LLT<Eigen::MatrixXd> llt(P);
  if (llt.info() == Eigen::Success) {
    Eigen::VectorXd z(2 * m);
    for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = rng.normal();
    const Eigen::VectorXd w = mean + llt.matrixU().solve(z);
    spatial_.wstar.row(0) = w.head(m).transpose();
    spatial_.wstar.row(1) = w.tail(m).transpose();
    return;
  }
  // Per-process fallback: each w_k* given the other.
  const Eigen::Matrix2d sinv = sigma_.inverse();
  for (int k = 0; k < 2; ++k) {
    const int l = 1 - k;
    const Eigen::Vector2d qk = spatial_.q.col(k), ql = spatial_.q.col(l);
    const Eigen::MatrixXd R = residual() - proc_[l].basis * spatial_.wstar.row(l).transpose() * ql.transpose();
    Eigen::MatrixXd Pk = proc_[k].precision + qk.dot(sinv * qk) * (proc_[k].basis.transpose() * proc_[k].basis);
    Pk = 0.5 * (Pk + Pk.transpose());
    Eigen::LLT<Eigen::MatrixXd> lk(Pk);
    if (lk.info() != Eigen::Success) fail(ErrorCode::IllConditioned, "knot-value conditional is not positive definite");
    const Eigen::VectorXd bk = proc_[k].basis.transpose() * (R * (sinv * qk));
    Eigen::VectorXd z(m);
    for (Eigen::Index i = 0; i < m; ++i) z(i) = rng.normal();
    spatial_.wstar.row(k) = (lk.solve(bk) + lk.matrixU().solve(z)).transpose();
  }
}

std::pair<bool, bool> Sampler::sweep(Rng& rng) {
  gibbs_phi(rng);
  gibbs_sigma(rng);
  std::pair<bool, bool> acc{false, false};
  if (spatial_on_) {
    acc.first = metropolis_theta(0, rng);
    acc.second = metropolis_theta(1, rng);
    update_q(rng);
    update_wstar(rng);
  }
  if (!phi_.allFinite() || !sigma_.allFinite() || (spatial_on_ && !spatial_.wstar.allFinite()))
    fail(ErrorCode::NonFiniteUpdate, "sampler produced a non-finite value");
  return acc;
}

// ---------------------------------------------------------------------------

double split_rhat(const std::vector<double>& trace) {
  const std::size_t h = trace.size() / 2;
  if (h < 2) return 1.0;
  double mean[2], var[2];
  for (int c = 0; c < 2; ++c) {
    const std::size_t off = c == 0 ? 0 : trace.size() - h;
    double s = 0.0;
    for (std::size_t i = 0; i < h; ++i) s += trace[off + i];
    mean[c] = s / static_cast<double>(h);
    double ss = 0.0;
    for (std::size_t i = 0; i < h; ++i) ss += (trace[off + i] - mean[c]) * (trace[off + i] - mean[c]);
    var[c] = ss / static_cast<double>(h - 1);
  }
  const double W = 0.5 * (var[0] + var[1]);
  const double grand = 0.5 * (mean[0] + mean[1]);
  const double B = static_cast<double>(h) *
                   ((mean[0] - grand) * (mean[0] - grand) + (mean[1] - grand) * (mean[1] - grand));
  if (W <= 0.0) return B > 0.0 ? std::numeric_limits<double>::infinity() : 1.0;
  const double hd = static_cast<double>(h);
  return std::sqrt(((hd - 1.0) / hd * W + B / hd) / W);
}

Chain run_chain(const DesignPair& design, const McmcConfig& config) {
  Sampler sampler(design, config);
  Rng rng(derive_seed(config.seed, 0));
  Chain chain;
  chain.config = config;
  chain.layout = design.layout;
  chain.series_length = design.series_length();
  chain.draws.reserve((config.n_iter - config.burn_in) / config.thin);

  Eigen::Vector2d window = Eigen::Vector2d::Zero(), accepted = Eigen::Vector2d::Zero();
  std::size_t in_window = 0;
  for (std::size_t it = 0; it < config.n_iter; ++it) {
    const auto [a1, a2] = sampler.sweep(rng);
    const Eigen::Vector2d flags(a1 ? 1.0 : 0.0, a2 ? 1.0 : 0.0);
    if (it < config.burn_in) {
      if (sampler.is_spatial()) {
        window += flags;
        if (++in_window == config.tune_window) {
          for (int k = 0; k < 2; ++k) {
            const double rate = window(k) / static_cast<double>(in_window);
            double& step = sampler.theta_step()(k);
            step = std::clamp(step * std::exp(2.0 * (rate - config.target_acceptance)), 1e-4, 5.0);
          }
          window.setZero();
          in_window = 0;
        }
      }
      continue;
    }
    accepted += flags;
    if ((it - config.burn_in + 1) % config.thin != 0) continue;
    PosteriorDraw d{sampler.phi(), sampler.sigma(), std::nullopt};
    if (sampler.is_spatial()) d.spatial = sampler.spatial();
    chain.draws.push_back(std::move(d));
  }
  if (sampler.is_spatial()) {
    chain.theta_acceptance = accepted / static_cast<double>(config.n_iter - config.burn_in);
    chain.theta_step = sampler.theta_step();
    chain.theta_upper = sampler.theta_upper();
  }

  // Split-chain diagnostics over every scalar parameter.
  std::vector<std::vector<double>> traces;
  auto add = [&](auto getter) {
    std::vector<double> t;
    t.reserve(chain.draws.size());
    for (const auto& d : chain.draws) t.push_back(getter(d));
    traces.push_back(std::move(t));
  };
  if (!design.layout.spec().random_walk())
    for (Eigen::Index i = 0; i < sampler.phi().rows(); ++i)
      for (Eigen::Index j = 0; j < 2; ++j) add([=](const PosteriorDraw& d) { return d.phi(i, j); });
  add([](const PosteriorDraw& d) { return d.sigma(0, 0); });
  add([](const PosteriorDraw& d) { return d.sigma(1, 0); });
  add([](const PosteriorDraw& d) { return d.sigma(1, 1); });
  if (sampler.is_spatial())
    for (int k = 0; k < 2; ++k) add([=](const PosteriorDraw& d) { return d.spatial->theta(k); });
  for (const auto& t : traces) chain.max_rhat = std::max(chain.max_rhat, split_rhat(t));
  chain.nonconvergence_warning = chain.max_rhat > config.rhat_threshold;
  return chain;
}

Chain run_chain(const model::PlanarSeries& series, const model::Tessellation& tess, const ModelSpec& spec,
                const McmcConfig& config) {
  config.validate();
  const DesignPair design = model::build_design(series, tess, spec);
  return run_chain(design, config);
}

// ---------------------------------------------------------------------------

std::vector<std::size_t> predictive_subset(std::size_t n_draws, std::size_t cap) {
  std::vector<std::size_t> idx;
  if (n_draws <= cap) {
    for (std::size_t i = 0; i < n_draws; ++i) idx.push_back(i);
  } else {
    for (std::size_t i = 0; i < cap; ++i) idx.push_back(i * n_draws / cap);
  }
  return idx;
}

Predictor::Predictor(const Chain& chain) : chain_(chain) {
  if (chain.draws.empty()) fail(ErrorCode::EmptyData, "chain has no draws");
  index_ = predictive_subset(chain.draws.size(), chain.config.max_predictive_draws);
  for (std::size_t b : index_) {
    const auto& d = chain.draws[b];
    Eigen::LLT<Eigen::Matrix2d> llt(d.sigma);
    Eigen::Matrix2d L = Eigen::Matrix2d::Zero();
    if (llt.info() == Eigen::Success) {
      L = llt.matrixL();
    } else if (!d.sigma.isZero(0.0)) {
      fail(ErrorCode::NonPDSigma, "draw Sigma is not positive semidefinite");
    }
    chol_.push_back(L);
    if (d.spatial) {
      Eigen::MatrixXd alpha(chain.layout.knots().rows(), 2);
      for (int k = 0; k < 2; ++k) {
        const model::KnotProcess proc(chain.layout.knots(), d.spatial->theta(k), chain.spec().jitter);
        alpha.col(k) = proc.solve(d.spatial->wstar.row(k).transpose());
      }
      alpha_.push_back(std::move(alpha));
    }
  }
}

Eigen::Vector2d Predictor::mean(std::size_t b, const Eigen::Vector2d& s, const Date* date) const {
  const auto& d = chain_.draws[index_[b]];
  Eigen::Vector2d mu = (chain_.layout.row(s, date) * d.phi).transpose();
  if (d.spatial) {
    Eigen::Vector2d w;
    for (int k = 0; k < 2; ++k) {
      const Eigen::RowVectorXd c = model::exp_corr(s.transpose(), chain_.layout.knots(), d.spatial->theta(k));
      w(k) = c.dot(alpha_[b].col(k));
    }
    mu += d.spatial->q * w;
  }
  return mu;
}

Eigen::MatrixXd Predictor::draws(const Eigen::Vector2d& s, const Date* date, Rng& rng) const {
  Eigen::MatrixXd out(size(), 2);
  for (std::size_t b = 0; b < size(); ++b) {
    const Eigen::Vector2d z(rng.normal(), rng.normal());
    out.row(b) = (mean(b, s, date) + chol_[b] * z).transpose();
  }
  return out;
}

std::uint64_t Predictor::step_seed(std::size_t t) const {
  return derive_seed(derive_seed(chain_.config.seed, 0x5eed), t);
}

Eigen::MatrixXd predict_one_step(const Eigen::Vector2d& s, const Date* date, const Chain& chain, Rng& rng) {
  return Predictor(chain).draws(s, date, rng);
}

}  // namespace stvar::mcmc
