// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits nonzero when any criterion fails.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numbers>
#include <sstream>
#include <string>

#include "oracles.hpp"
#include "stvar/cli.hpp"
#include "stvar/evaluate.hpp"
#include "stvar/io.hpp"
#include "stvar/mcmc.hpp"
#include "stvar/model.hpp"
#include "stvar/projection.hpp"
#include "stvar/som.hpp"
#include "stvar/synthetic.hpp"

using namespace stvar;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

model::PlanarSeries simulate(const model::ModelSpec& spec, std::size_t T, std::uint64_t seed) {
  auto truth = synthetic::default_truth(spec);
  truth.seed = seed;
  return synthetic::simulate_var(truth, T).series;
}

// ---------------------------------------------------------------------------

Outcome occupancy() {
  Eigen::VectorXd lo(2), hi(2);
  lo << -2.0, -1.5;
  hi << 2.0, 1.5;
  const auto cloud = synthetic::simulate_uniform_cloud(10000, lo, hi, 101);
  // Equal occupancy is a property of the quantizer the map anneals into, so
  // the second phase narrows the neighborhood from one lattice spacing to 0.1.
  auto cfg = som::SomConfig::standard(12, cloud.days());
  cfg.sigma2 = {1.0, 0.1};
  cfg.seed = 5;
  bool pass = true;
  std::ostringstream detail;
  for (bool batch : {true, false}) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto report = batch ? som::train_batch(cloud, cfg) : som::train_online(cloud, cfg);
    const double secs = seconds_since(t0);
    const auto q = som::quantization_error(cloud, report.model);
    double lo_share = 1.0, hi_share = 0.0;
    for (auto c : q.counts) {
      const double share = static_cast<double>(c) / 10000.0;
      lo_share = std::min(lo_share, share);
      hi_share = std::max(hi_share, share);
    }
    pass = pass && lo_share >= 0.6 / 12 && hi_share <= 1.4 / 12 && secs < 60.0;
    detail << (batch ? "batch" : "online") << " shares [" << fmt("%.4f", lo_share) << ", " << fmt("%.4f", hi_share)
           << "] in " << fmt("%.1f", secs) << " s; ";
  }
  detail << "bounds [" << fmt("%.4f", 0.6 / 12) << ", " << fmt("%.4f", 1.4 / 12) << "]";
  return {pass, detail.str()};
}

Outcome centroid_fixed_point() {
  Rng rng(17);
  Eigen::MatrixXd pts(600, 3);
  for (Eigen::Index i = 0; i < pts.rows(); ++i) {
    const double cx = 4.0 * static_cast<double>(i % 5);
    pts.row(i) << cx + rng.normal(), rng.normal(), 0.5 * rng.normal();
  }
  const auto data = data::from_matrix(pts);
  som::SomConfig cfg;
  cfg.n_nodes = 8;
  cfg.kernel = som::Kernel::gaussian;
  cfg.sigma1 = {1e-6, 1e-6};
  cfg.sigma2 = {1e-6, 1e-6};
  cfg.alpha1 = {0.5, 0.5};
  cfg.alpha2 = {0.5, 0.5};
  cfg.batch_epochs1 = 0;
  cfg.batch_epochs2 = 500;
  cfg.convergence_tol = 1e-14;
  cfg.max_epochs = 500;
  cfg.seed = 3;
  const auto report = som::train_batch(data, cfg);
  const auto& nodes = report.model.nodes;
  double worst = 0.0;
  for (Eigen::Index m = 0; m < nodes.rows(); ++m) {
    Eigen::RowVectorXd sum = Eigen::RowVectorXd::Zero(pts.cols());
    int n = 0;
    for (Eigen::Index i = 0; i < pts.rows(); ++i)
      if (oracle::nearest(pts.row(i), nodes) == static_cast<std::size_t>(m)) {
        sum += pts.row(i);
        ++n;
      }
    if (n > 0) worst = std::max(worst, (nodes.row(m) - sum / n).cwiseAbs().maxCoeff());
  }
  return {report.converged && worst <= 1e-8,
          "max |node - cluster mean| = " + fmt("%.3g", worst) + (report.converged ? ", converged" : ", NOT converged")};
}

Outcome sammon() {
  bool pass = true;
  std::ostringstream detail;
  // Two and three points embed exactly.
  Eigen::MatrixXd d2(2, 2);
  d2 << 0, 5, 5, 0;
  Eigen::MatrixXd d3(3, 3);
  d3 << 0, 3, 4, 3, 0, 5.5, 4, 5.5, 0;
  const auto r2 = projection::sammon_embed(d2);
  const auto r3 = projection::sammon_embed(d3);
  pass = pass && r2.stress < 1e-6 && r3.stress < 1e-6;
  detail << "stress M=2 " << fmt("%.2g", r2.stress) << ", M=3 " << fmt("%.2g", r3.stress);

  // Twelve nodes scattered near a random plane through the 847-dimensional
  // space, like the reference vectors of a trained map, plus isotropic noise.
  bool monotone = true;
  double rel = 0.0;
  for (std::uint64_t rep = 0; rep < 5; ++rep) {
    Rng rng(rep);
    Eigen::MatrixXd latent(12, 2), plane(2, 847);
    for (Eigen::Index i = 0; i < latent.size(); ++i) latent.data()[i] = rng.uniform(-1.0, 1.0);
    for (Eigen::Index i = 0; i < plane.size(); ++i) plane.data()[i] = rng.normal();
    Eigen::MatrixXd nodes = latent * plane;
    for (Eigen::Index i = 0; i < nodes.size(); ++i) nodes.data()[i] += 0.1 * rng.normal();
    const Eigen::MatrixXd D = oracle::pairwise(nodes);
    const auto r = projection::sammon_embed(D);
    for (std::size_t i = 1; i < r.stress_trace.size(); ++i)
      monotone = monotone && r.stress_trace[i] <= r.stress_trace[i - 1];

    const Eigen::MatrixXd start = projection::classical_scaling(D, 2);
    auto objective = [&](const Eigen::VectorXd& v) {
      return oracle::stress(D, Eigen::Map<const Eigen::MatrixXd>(v.data(), 12, 2));
    };
    const auto opt = oracle::minimize(objective, Eigen::Map<const Eigen::VectorXd>(start.data(), start.size()), 1e-12);
    const Eigen::MatrixXd ref = oracle::pairwise(Eigen::Map<const Eigen::MatrixXd>(opt.x.data(), 12, 2));
    const Eigen::MatrixXd got = oracle::pairwise(r.coords);
    for (Eigen::Index i = 0; i < 12; ++i)
      for (Eigen::Index j = i + 1; j < 12; ++j) rel = std::max(rel, std::abs(got(i, j) - ref(i, j)) / ref(i, j));
  }
  pass = pass && monotone && rel <= 1e-4;
  detail << "; five M=12 d=847 node sets: stress " << (monotone ? "monotone" : "NOT monotone")
         << ", max relative distance gap to a generic minimizer " << fmt("%.2g", rel);
  return {pass, detail.str()};
}

Outcome greedy_projection() {
  Rng rng(4);
  Eigen::MatrixXd pts(3000, 6);
  for (Eigen::Index i = 0; i < pts.size(); ++i) pts.data()[i] = rng.uniform(-1.0, 1.0);
  const auto data = data::from_matrix(pts);
  auto cfg = som::SomConfig::standard(12, data.days());
  cfg.steps1 = 20000;
  cfg.steps2 = 40000;
  auto model = som::train_online(data, cfg).model;
  projection::embed_nodes(model);
  const projection::Tessellation tess{model.planar};
  const projection::Projector proj(model);
  int node_hits = 0;
  for (std::size_t m = 0; m < model.size(); ++m)
    node_hits += projection::assign_cell(proj.project(model.nodes.row(static_cast<Eigen::Index>(m))), tess) == m;
  int agree = 0;
  for (int i = 0; i < 1000; ++i) {
    Eigen::RowVectorXd x(6);
    for (Eigen::Index j = 0; j < 6; ++j) x(j) = rng.uniform(-1.2, 1.2);
    agree += projection::assign_cell(proj.project(x), tess) == som::find_winner(x, model);
  }
  return {node_hits == 12 && agree == 1000,
          "node vectors mapped to their own cell: " + std::to_string(node_hits) +
              "/12; winner agreement on random vectors: " + std::to_string(agree) + "/1000"};
}

Outcome mle() {
  const auto spec = model::ModelSpec::ladder(1);
  const auto truth = synthetic::default_truth(spec);
  const Eigen::MatrixXd A = truth.phi;
  const Eigen::Matrix2d S = truth.sigma;

  // Independent maximizer: vec(Phi) and the Cholesky factor of Sigma.
  const auto series = simulate(spec, 2000, 1);
  const auto design = model::build_design(series, {}, spec);
  const auto fit = model::mle_var(design);
  const double n = static_cast<double>(design.rows());
  auto unpack = [](const Eigen::VectorXd& v, Eigen::MatrixXd& phi, Eigen::Matrix2d& sig) {
    phi = Eigen::Map<const Eigen::MatrixXd>(v.data(), 2, 2);
    Eigen::Matrix2d L;
    L << std::exp(v(4)), 0.0, v(5), std::exp(v(6));
    sig = L * L.transpose();
  };
  auto negll = [&](const Eigen::VectorXd& v) {
    Eigen::MatrixXd phi;
    Eigen::Matrix2d sig;
    unpack(v, phi, sig);
    const Eigen::MatrixXd R = design.Y - design.X * phi;
    return std::log(sig.determinant()) / 2.0 + (sig.inverse() * (R.transpose() * R)).trace() / (2.0 * n);
  };
  Eigen::VectorXd x0(7);
  x0 << 0, 0, 0, 0, std::log(5.0), 0, std::log(5.0);
  const auto opt = oracle::minimize(negll, x0, 1e-11);
  Eigen::MatrixXd phi_o;
  Eigen::Matrix2d sig_o;
  unpack(opt.x, phi_o, sig_o);
  const double gap = std::max((phi_o - fit.phi).cwiseAbs().maxCoeff(), (sig_o - fit.sigma).cwiseAbs().maxCoeff());

  int covered = 0;
  for (int r = 0; r < 100; ++r) {
    const auto d = model::build_design(simulate(spec, 2000, 1000 + static_cast<std::uint64_t>(r)), {}, spec);
    const auto f = model::mle_var(d);
    const Eigen::MatrixXd xtx_inv = (d.X.transpose() * d.X).inverse();
    const double m = static_cast<double>(d.rows());
    bool all = true;
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) {
        all = all && std::abs(f.phi(i, j) - A(i, j)) <= 3.0 * std::sqrt(xtx_inv(i, i) * f.sigma(j, j));
        const double se = std::sqrt((f.sigma(i, j) * f.sigma(i, j) + f.sigma(i, i) * f.sigma(j, j)) / m);
        all = all && std::abs(f.sigma(i, j) - S(i, j)) <= 3.0 * se;
      }
    covered += all;
  }
  return {gap <= 1e-6 && covered >= 95, "max |closed form - numerical maximizer| = " + fmt("%.2g", gap) +
                                            "; replicates with every entry within 3 SE: " + std::to_string(covered) +
                                            "/100"};
}

Outcome conjugate() {
  std::ostringstream detail;
  Rng rng(6);
  const Eigen::Matrix2d target = synthetic::default_sigma();
  const double df = 20.0;
  const Eigen::Matrix2d scale = target * (df - 3.0);
  Eigen::Matrix2d sum = Eigen::Matrix2d::Zero();
  const int N = 50000;
  for (int i = 0; i < N; ++i) sum += mcmc::inverse_wishart(scale, df, rng);
  const Eigen::Matrix2d mean = sum / N;
  const double iw_rel = ((mean - target).array() / target.array()).abs().maxCoeff();
  detail << "IW mean max relative error " << fmt("%.4f", iw_rel);

  const auto spec = model::ModelSpec::ladder(1);
  const auto design = model::build_design(simulate(spec, 300, 9), {}, spec);
  const Eigen::Matrix2d sigma = synthetic::default_sigma();
  const Eigen::MatrixXd xtx_inv = (design.X.transpose() * design.X).inverse();
  const Eigen::MatrixXd phi_hat = xtx_inv * design.X.transpose() * design.Y;
  // Cov(vec Phi) = Sigma kron (X'X)^{-1}.
  Eigen::MatrixXd cov(4, 4);
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b) cov.block(2 * a, 2 * b, 2, 2) = sigma(a, b) * xtx_inv;
  const int B = 100000;
  Eigen::MatrixXd draws(B, 4);
  for (int i = 0; i < B; ++i) {
    const Eigen::MatrixXd phi = mcmc::gibbs_phi(sigma, design, rng);
    draws.row(i) = Eigen::Map<const Eigen::RowVectorXd>(phi.data(), 4);
  }
  const Eigen::RowVectorXd mu = draws.colwise().mean();
  const Eigen::MatrixXd c = draws.rowwise() - mu;
  const Eigen::MatrixXd emp = c.transpose() * c / (B - 1);
  double z = 0.0;
  for (int k = 0; k < 4; ++k)
    z = std::max(z, std::abs(mu(k) - phi_hat.data()[k]) / std::sqrt(cov(k, k) / B));
  const double frob = (emp - cov).norm() / cov.norm();
  detail << "; Phi draw mean max |z| " << fmt("%.2f", z) << ", covariance Frobenius error " << fmt("%.4f", frob);
  return {iw_rel <= 0.02 && z <= 4.0 && frob <= 0.05, detail.str()};
}

Outcome posterior_recovery() {
  const auto spec = model::ModelSpec::ladder(2);
  auto truth = synthetic::default_truth(spec);
  truth.seed = 22;
  const auto series = synthetic::simulate_var(truth, 5000).series;
  mcmc::McmcConfig cfg;
  cfg.n_iter = 10000;
  cfg.burn_in = 2000;
  cfg.seed = 23;
  const auto t0 = std::chrono::steady_clock::now();
  const auto chain = mcmc::run_chain(series, truth.tess, spec, cfg);
  const double secs = seconds_since(t0);
  const std::size_t B = chain.layout.a_blocks();
  int inside = 0, total = 0;
  for (std::size_t b = 0; b < B; ++b)
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) {
        std::vector<double> v;
        for (const auto& d : chain.draws) v.push_back(d.phi(static_cast<Eigen::Index>(2 * b) + i, j));
        const double lo = evaluate::quantile(v, 0.025), hi = evaluate::quantile(v, 0.975);
        const double t = truth.phi(static_cast<Eigen::Index>(2 * b) + i, j);
        inside += lo <= t && t <= hi;
        ++total;
      }
  const double frac = static_cast<double>(inside) / total;
  return {frac >= 0.90, std::to_string(inside) + "/" + std::to_string(total) +
                            " true A entries inside their central 95% intervals (" + fmt("%.1f", secs) + " s)"};
}

struct Fitted {
  mcmc::Chain chain;
  evaluate::ModelScore score;
};

Fitted fit_and_score(const model::PlanarSeries& series, const model::Tessellation& tess, int ladder,
                     std::uint64_t seed) {
  mcmc::McmcConfig cfg;
  cfg.seed = seed;
  Fitted f{mcmc::run_chain(series, tess, model::ModelSpec::ladder(ladder), cfg), {}};
  f.score = evaluate::score_model(f.chain, series);
  return f;
}

Outcome coverage() {
  const auto series = simulate(model::ModelSpec::ladder(1), 2000, 31);
  const auto f = fit_and_score(series, {}, 1, 32);
  return {f.score.coverage >= 0.93 && f.score.coverage <= 0.97, "r = " + fmt("%.4f", f.score.coverage)};
}

Outcome ladder() {
  const auto tess = synthetic::default_tessellation();
  const auto s2 = simulate(model::ModelSpec::ladder(2), 3000, 41);
  const auto m0 = fit_and_score(s2, tess, 0, 42).score;
  const auto m1 = fit_and_score(s2, tess, 1, 43).score;
  const auto m2 = fit_and_score(s2, tess, 2, 44).score;
  const bool order = m2.rmspe < m1.rmspe && m1.rmspe < m0.rmspe && m2.dic < m0.dic;

  const auto s0 = simulate(model::ModelSpec::ladder(0), 3000, 45);
  const auto r0 = fit_and_score(s0, tess, 0, 46).score;
  const auto r1 = fit_and_score(s0, tess, 1, 47).score;
  const double gap = std::abs(r1.dic - r0.dic);
  const double noise = 2.0 * std::max(r0.p_d, r1.p_d);
  std::ostringstream detail;
  detail << "model-2 data: RMSPE " << fmt("%.4f", m2.rmspe) << " < " << fmt("%.4f", m1.rmspe) << " < "
         << fmt("%.4f", m0.rmspe) << ", DIC(2) " << fmt("%.1f", m2.dic) << " vs DIC(0) " << fmt("%.1f", m0.dic)
         << "; random-walk data: |DIC(1) - DIC(0)| = " << fmt("%.2f", gap) << " (limit 2 p_D = " << fmt("%.2f", noise)
         << ")";
  return {order && gap <= noise, detail.str()};
}

Outcome effective_parameters() {
  const auto series = simulate(model::ModelSpec::ladder(1), 2000, 51);
  const auto f = fit_and_score(series, {}, 1, 52);
  return {f.score.p_d >= 5.0 && f.score.p_d <= 9.0, "p_D = " + fmt("%.3f", f.score.p_d)};
}

Outcome predictive_process() {
  Rng rng(61);
  bool pass = true;
  double worst_cov = 0.0, worst_interp = 0.0, max_diag = 0.0;
  for (int rep = 0; rep < 20; ++rep) {
    const int m = 3 + rep % 10, n = 15;
    Eigen::MatrixXd knots(m, 2), sites(n, 2);
    for (Eigen::Index i = 0; i < knots.size(); ++i) knots.data()[i] = rng.uniform(0.0, 10.0);
    for (Eigen::Index i = 0; i < sites.size(); ++i) sites.data()[i] = rng.uniform(-2.0, 12.0);
    const double theta = rng.uniform(0.2, 1.5);
    const model::KnotProcess proc(knots, theta, {});
    // Direct form: c*(s)' C*^{-1} c*(s') with an explicit inverse.
    Eigen::MatrixXd C(m, m), c(n, m);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j) C(i, j) = std::exp(-theta * (knots.row(i) - knots.row(j)).norm());
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < m; ++j) c(i, j) = std::exp(-theta * (sites.row(i) - knots.row(j)).norm());
    const Eigen::MatrixXd direct = c * C.fullPivLu().inverse() * c.transpose();
    worst_cov = std::max(worst_cov, (proc.induced_covariance(sites) - direct).cwiseAbs().maxCoeff());
    const Eigen::MatrixXd at_knots = proc.weights(knots);
    worst_interp = std::max(worst_interp, (at_knots - Eigen::MatrixXd::Identity(m, m)).cwiseAbs().maxCoeff());
    max_diag = std::max(max_diag, proc.induced_covariance(sites).diagonal().maxCoeff());
  }
  pass = worst_cov <= 1e-10 && worst_interp <= 1e-8 && max_diag <= 1.0 + 1e-12;
  return {pass, "max induced-covariance gap " + fmt("%.2g", worst_cov) + ", interpolation error " +
                    fmt("%.2g", worst_interp) + ", max C~(s,s) " + fmt("%.6f", max_diag)};
}

Outcome transitions() {
  // 11 assignments give 10 steps; tallied by hand:
  // 0->1, 1->1, 1->2, 2->0, 0->1, 1->2, 2->2, 2->0, 0->2, 2->1
  const std::vector<int> cells{0, 1, 1, 2, 0, 1, 2, 2, 0, 2, 1};
  Eigen::Matrix3d hand;
  hand << 0, 2, 1, 0, 1, 2, 2, 1, 1;
  const auto tm = evaluate::empirical_transitions(cells, 3);
  const bool counts_ok = tm.counts == Eigen::MatrixXd(hand);

  double worst_row = 0.0;
  auto check_rows = [&](const evaluate::TransitionMatrix& t) {
    for (std::size_t r = 0; r < t.size(); ++r)
      if (t.defined[r]) worst_row = std::max(worst_row, std::abs(t.probs.row(static_cast<Eigen::Index>(r)).sum() - 1.0));
  };
  check_rows(tm);

  const auto tess = synthetic::default_tessellation();
  const auto series = simulate(model::ModelSpec::ladder(2), 1500, 71);
  check_rows(evaluate::empirical_transitions(series, tess));
  mcmc::McmcConfig cfg;
  cfg.n_iter = 1500;
  cfg.burn_in = 500;
  cfg.seed = 72;
  check_rows(evaluate::model_transitions(mcmc::run_chain(series, tess, model::ModelSpec::ladder(2), cfg), series));

  // Sigma = 0, A = I: every predictive draw stays in its source cell.
  mcmc::Chain still;
  still.layout = model::DesignLayout(model::ModelSpec::ladder(1), tess, {});
  still.series_length = series.size();
  still.config.seed = 73;
  for (int b = 0; b < 200; ++b) still.draws.push_back({Eigen::MatrixXd::Identity(2, 2), Eigen::Matrix2d::Zero(), {}});
  const auto id = evaluate::model_transitions(still, series);
  check_rows(id);
  bool identity = true;
  for (std::size_t r = 0; r < id.size(); ++r)
    if (id.defined[r])
      identity = identity && id.probs.row(static_cast<Eigen::Index>(r)).isApprox(
                                 Eigen::MatrixXd::Identity(12, 12).row(static_cast<Eigen::Index>(r)), 0.0);
  return {counts_ok && worst_row <= 1e-12 && identity,
          std::string("hand counts ") + (counts_ok ? "match" : "DIFFER") + ", max row-sum error " +
              fmt("%.2g", worst_row) + ", Sigma=0/A=I " + (identity ? "gives the identity" : "is NOT the identity")};
}

// All files under `dir`; manifests lose their timestamp fields.
std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    std::ifstream in(e.path(), std::ios::binary);
    std::string bytes((std::istreambuf_iterator<char>(in)), {});
    const std::string name = e.path().lexically_relative(dir).string();
    if (name.size() > 14 && name.ends_with(".manifest.json")) {
      auto j = nlohmann::json::parse(bytes);
      j.erase("started_at");
      j.erase("wall_time_seconds");
      bytes = j.dump();
    }
    files[name] = bytes;
  }
  return files;
}

Outcome determinism() {
  const fs::path root = fs::temp_directory_path() / "stvar_acceptance_determinism";
  fs::remove_all(root);
  fs::create_directories(root);
  const std::vector<std::pair<std::string, std::string>> configs = {
      {"som", R"({"seed": 81, "stages": ["simulate","standardize","train-som","sammon","project","fit","predict",
                  "evaluate","transitions","frequencies","maps","lag-scan"],
                  "simulate": {"kind": "cloud", "n": 1200, "lo": [0, 0, 0, 0], "hi": [1, 2, 3, 4]},
                  "train-som": {"nodes": 12},
                  "fit": {"models": ["model0", "model1", "model2"], "mcmc": {"n_iter": 800, "burn_in": 200}},
                  "lag-scan": {"max_lag": 3}})"},
      {"var", R"({"seed": 82, "stages": ["simulate","fit","predict","evaluate","transitions","lag-scan"],
                  "simulate": {"kind": "var", "spec": "model11", "T": 500},
                  "fit": {"models": ["model0", "model3", "model11"], "mcmc": {"n_iter": 400, "burn_in": 100}},
                  "lag-scan": {"max_lag": 3}})"},
  };
  bool pass = true;
  std::ostringstream detail;
  for (const auto& [name, text] : configs) {
    auto cfg = nlohmann::json::parse(text);
    cfg["out"] = (root / name).string();
    const fs::path path = root / (name + ".json");
    std::ofstream(path) << cfg.dump(2);
    std::ostringstream out, err;
    const int rc1 = cli::pipeline(path, out, err);
    const auto first = snapshot(root / name);
    const int rc2 = cli::pipeline(path, out, err);
    const auto second = snapshot(root / name);
    const bool same = rc1 == 0 && rc2 == 0 && first == second;
    pass = pass && same;
    detail << name << " pipeline: " << first.size() << " files " << (same ? "identical" : "DIFFER") << "; ";
    if (rc1 != 0 || rc2 != 0) detail << "(exit " << rc1 << "/" << rc2 << ": " << err.str() << ") ";
  }
  fs::remove_all(root);
  return {pass, detail.str()};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"SOM uniform occupancy", occupancy},
      {"batch SOM centroid fixed point", centroid_fixed_point},
      {"Sammon exactness and monotonicity", sammon},
      {"greedy projection winner agreement", greedy_projection},
      {"closed-form MLE", mle},
      {"conjugate sampler moments", conjugate},
      {"posterior recovery (model 2)", posterior_recovery},
      {"coverage calibration", coverage},
      {"model ladder ordering", ladder},
      {"DIC effective parameters", effective_parameters},
      {"predictive process", predictive_process},
      {"transition machinery", transitions},
      {"pipeline determinism", determinism},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("criterion %2zu %s  %s: %s [%.1f s]\n", i + 1, o.pass ? "PASS" : "FAIL", criteria[i].first,
                o.detail.c_str(), seconds_since(t0));
    std::fflush(stdout);
  }
  std::printf("%zu/%zu criteria passed\n", criteria.size() - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
