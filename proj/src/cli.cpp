#include "stvar/cli.hpp"

#include <omp.h>

#include <chrono>
#include <ctime>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "stvar/error.hpp"
#include "stvar/evaluate.hpp"
#include "stvar/io.hpp"
#include "stvar/mcmc.hpp"
#include "stvar/projection.hpp"
#include "stvar/som.hpp"
#include "stvar/synthetic.hpp"

namespace stvar::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

// Paths flowing between stages, plus what the manifest records.
struct Workspace {
  fs::path out = ".";
  std::uint64_t seed = 0;
  int threads = 0;
  fs::path raw_series, state_series, planar, som, tess, truth;
  std::vector<fs::path> chains;
  std::vector<std::string> inputs, outputs;
  std::ostream* log = &std::cout;
  std::ostream* warn = &std::cerr;

  std::string rel(const fs::path& p) const {
    const fs::path r = p.lexically_relative(out);
    return (!r.empty() && r.native().rfind("..", 0) != 0) ? r.string() : p.string();
  }
  fs::path output(const std::string& name) {
    fs::path p = out / name;
    outputs.push_back(rel(p));
    return p;
  }
  const fs::path& input(const fs::path& p, const char* what) {
    if (p.empty()) fail(ErrorCode::MissingInput, std::string("no ") + what + " given");
    if (!fs::exists(p)) fail(ErrorCode::MissingInput, std::string(what) + " not found: " + p.string());
    inputs.push_back(rel(p));
    return p;
  }
};

// Rejects keys outside `allowed` (config files).
void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  if (j.is_null()) return;
  if (!j.is_object()) fail(ErrorCode::InvalidConfig, where + " must be a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || it.key() == a;
    if (!ok) fail(ErrorCode::InvalidConfig, "unknown key '" + it.key() + "' in " + where);
  }
}

template <class T>
T get_or(const json& j, const char* key, T fallback) {
  if (j.is_null() || !j.contains(key) || j.at(key).is_null()) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    fail(ErrorCode::InvalidConfig, std::string("bad value for '") + key + "': " + e.what());
  }
}

Date parse_date(const std::string& text) {
  auto d = Date::parse(text);
  if (!d) fail(ErrorCode::InvalidConfig, "bad date '" + text + "'");
  return *d;
}

model::ModelSpec spec_arg(const std::string& text) {
  if (text.rfind("model", 0) == 0) return model::ModelSpec::from_name(text);
  return io::spec_from_json(io::read_json(text));
}

model::Tessellation load_tessellation(Workspace& ws) {
  auto from = [&](const fs::path& p) {
    const json j = io::read_json(ws.input(p, "tessellation"));
    if (j.contains("planar") && j.contains("M")) return model::Tessellation{io::som_from_json(j).planar};
    if (j.contains("tessellation")) {
      model::Tessellation t{io::matrix_from_json(j.at("tessellation"))};
      if (t.node_planar.size() == 0) t.node_planar.resize(0, 2);
      return t;
    }
    fail(ErrorCode::MalformedHeader, p.string() + " holds no tessellation");
  };
  if (!ws.tess.empty()) return from(ws.tess);
  if (!ws.som.empty()) return from(ws.som);
  if (!ws.truth.empty()) return from(ws.truth);
  model::Tessellation empty;
  empty.node_planar.resize(0, 2);
  return empty;
}

std::string spec_file_name(const model::ModelSpec& spec) {
  std::string n = spec.name();
  for (char& c : n)
    if (c == '+') c = '_';
  return n;
}

// ---------------------------------------------------------------------------
// Stages. Each reads its inputs from the workspace and records its outputs.

void stage_simulate(Workspace& ws, const json& c) {
  check_keys(c, {"kind", "spec", "T", "start", "n", "lo", "hi", "truth", "s0"}, "simulate");
  const std::string kind = get_or<std::string>(c, "kind", "var");
  const Date start = parse_date(get_or<std::string>(c, "start", "2000-01-01"));
  if (kind == "cloud") {
    const auto n = get_or<std::size_t>(c, "n", 2000);
    const auto lo = get_or<std::vector<double>>(c, "lo", {0.0, 0.0});
    const auto hi = get_or<std::vector<double>>(c, "hi", {1.0, 1.0});
    const auto cloud = synthetic::simulate_uniform_cloud(n, Eigen::Map<const Eigen::VectorXd>(lo.data(), lo.size()),
                                                         Eigen::Map<const Eigen::VectorXd>(hi.data(), hi.size()),
                                                         derive_seed(ws.seed, 11));
    data::RawSeries raw;
    raw.grid = cloud.grid;
    raw.values = data::FieldArray(n, cloud.grid.n_vars(), 1);
    for (std::size_t t = 0; t < n; ++t)
      for (std::size_t v = 0; v < cloud.grid.n_vars(); ++v) raw.values(t, v, 0) = cloud.matrix(t, v);
    raw.dates = noleap_days(start, n);
    ws.raw_series = ws.output("cloud.series");
    io::save_series(raw, ws.raw_series);
    ws.outputs.push_back(ws.rel(io::sidecar_path(ws.raw_series)));
    return;
  }
  if (kind != "var") fail(ErrorCode::InvalidConfig, "simulate kind must be 'var' or 'cloud'");
  const auto T = get_or<std::size_t>(c, "T", 1000);
  const auto dates = noleap_days(start, T);
  synthetic::TruthBundle truth;
  if (c.contains("truth") && !c.at("truth").is_null()) {
    truth = io::truth_from_json(io::read_json(ws.input(c.at("truth").get<std::string>(), "truth bundle")));
  } else {
    const auto spec = spec_arg(get_or<std::string>(c, "spec", "model1"));
    std::vector<int> years;
    if (spec.needs_years())
      for (int y = dates.front().year; y <= dates.back().year; ++y) years.push_back(y);
    truth = synthetic::default_truth(spec, synthetic::default_tessellation(), years, derive_seed(ws.seed, 12));
  }
  truth.seed = derive_seed(ws.seed, 13);
  const auto s0v = get_or<std::vector<double>>(c, "s0", {0.0, 0.0});
  if (s0v.size() != 2) fail(ErrorCode::InvalidConfig, "s0 must have two entries");
  const auto sim = synthetic::simulate_var(truth, T, Eigen::Vector2d(s0v[0], s0v[1]), dates);
  if (sim.explosive_warning) *ws.warn << "warning: ExplosiveWarning: a true A block is not stable\n";
  ws.planar = ws.output("series.planar");
  io::save_planar(sim.series, ws.planar);
  ws.truth = ws.output("truth.json");
  io::write_json(io::truth_to_json(truth), ws.truth);
}

void stage_standardize(Workspace& ws, const json& c) {
  check_keys(c, {"mode"}, "standardize");
  const std::string mode = get_or<std::string>(c, "mode", "pooled");
  if (mode != "pooled" && mode != "per_cell") fail(ErrorCode::InvalidConfig, "mode must be pooled or per_cell");
  const auto raw = io::load_series(ws.input(ws.raw_series, "raw series"));
  const auto state =
      data::standardize(raw, mode == "pooled" ? data::StandardizeMode::pooled : data::StandardizeMode::per_cell);
  ws.state_series = ws.output("state.series");
  io::save_state(state, ws.state_series);
  ws.outputs.push_back(ws.rel(io::sidecar_path(ws.state_series)));
}

void stage_train_som(Workspace& ws, const json& c) {
  check_keys(c,
             {"nodes", "version", "kernel", "space", "batch_epochs1", "batch_epochs2", "alpha1", "alpha2", "sigma1",
              "sigma2", "steps1", "steps2", "convergence_tol", "max_epochs"},
             "train-som");
  const auto state = io::load_state(ws.input(ws.state_series, "state series"));
  auto cfg = som::SomConfig::standard(get_or<std::size_t>(c, "nodes", 12), state.days());
  const std::string version = get_or<std::string>(c, "version", "batch");
  const std::string kernel = get_or<std::string>(c, "kernel", "gaussian");
  const std::string space = get_or<std::string>(c, "space", "map");
  if (version != "batch" && version != "online") fail(ErrorCode::InvalidConfig, "version must be batch or online");
  if (kernel != "gaussian" && kernel != "bubble") fail(ErrorCode::InvalidConfig, "kernel must be gaussian or bubble");
  if (space != "map" && space != "data") fail(ErrorCode::InvalidConfig, "space must be map or data");
  cfg.kernel = kernel == "gaussian" ? som::Kernel::gaussian : som::Kernel::bubble;
  cfg.space = space == "map" ? som::NeighborhoodSpace::map : som::NeighborhoodSpace::data;
  cfg.batch_epochs1 = get_or(c, "batch_epochs1", cfg.batch_epochs1);
  cfg.batch_epochs2 = get_or(c, "batch_epochs2", cfg.batch_epochs2);
  cfg.steps1 = get_or(c, "steps1", cfg.steps1);
  cfg.steps2 = get_or(c, "steps2", cfg.steps2);
  cfg.convergence_tol = get_or(c, "convergence_tol", cfg.convergence_tol);
  cfg.max_epochs = get_or(c, "max_epochs", cfg.max_epochs);
  auto ramp = [&](const char* key, som::Ramp& r) {
    const auto v = get_or<std::vector<double>>(c, key, {r.start, r.end});
    if (v.size() != 2) fail(ErrorCode::InvalidConfig, std::string(key) + " must be [start, end]");
    r = {v[0], v[1]};
  };
  ramp("alpha1", cfg.alpha1);
  ramp("alpha2", cfg.alpha2);
  ramp("sigma1", cfg.sigma1);
  ramp("sigma2", cfg.sigma2);
  cfg.seed = derive_seed(ws.seed, 21);
  const auto report = version == "batch" ? som::train_batch(state, cfg) : som::train_online(state, cfg);
  ws.som = ws.output("som.json");
  io::save_som(report.model, ws.som);
  const auto q = som::quantization_error(state, report.model);
  json qj = {{"mean_error", q.mean_error},
             {"node_error", std::vector<double>(q.node_error.data(), q.node_error.data() + q.node_error.size())},
             {"counts", q.counts},
             {"epochs", report.epochs},
             {"converged", report.converged}};
  io::write_json(qj, ws.output("quantization.json"));
}

void stage_sammon(Workspace& ws, const json& c) {
  check_keys(c, {"step_factor", "max_iterations", "max_halvings", "tolerance"}, "sammon");
  auto model = io::load_som(ws.input(ws.som, "SOM model"));
  projection::SammonConfig cfg;
  cfg.step_factor = get_or(c, "step_factor", cfg.step_factor);
  cfg.max_iterations = get_or(c, "max_iterations", cfg.max_iterations);
  cfg.max_halvings = get_or(c, "max_halvings", cfg.max_halvings);
  cfg.tolerance = get_or(c, "tolerance", cfg.tolerance);
  const auto r = projection::embed_nodes(model, cfg);
  ws.som = ws.output("som_sammon.json");
  io::save_som(model, ws.som);
  io::write_json({{"stress", r.stress}, {"iterations", r.iterations}, {"converged", r.converged}},
                 ws.output("sammon.json"));
}

void stage_project(Workspace& ws, const json& c) {
  check_keys(c, {"padding", "resolution"}, "project");
  const auto model = io::load_som(ws.input(ws.som, "SOM model"));
  const auto state = io::load_state(ws.input(ws.state_series, "state series"));
  projection::ProjectionConfig cfg;
  cfg.padding = get_or(c, "padding", cfg.padding);
  cfg.resolution = get_or(c, "resolution", cfg.resolution);
  const auto series = projection::project_series(state, model, cfg);
  ws.planar = ws.output("series.planar");
  io::save_planar(series, ws.planar);
}

void stage_fit(Workspace& ws, const json& c) {
  check_keys(c, {"models", "mcmc"}, "fit");
  auto mcfg = c.contains("mcmc") ? io::mcmc_config_from_json(c.at("mcmc")) : mcmc::McmcConfig{};
  mcfg.seed = ws.seed;
  const auto series = io::load_planar(ws.input(ws.planar, "planar series"));
  const auto tess = load_tessellation(ws);
  json models = get_or<json>(c, "models", json::array({"model1"}));
  ws.chains.clear();
  for (const auto& m : models) {
    const auto spec = m.is_string() ? spec_arg(m.get<std::string>()) : io::spec_from_json(m);
    const auto design = model::build_design(series, tess, spec);
    if (design.rank_warning) *ws.warn << "warning: RankWarning: X'X is numerically singular for " << spec.name() << "\n";
    const auto chain = mcmc::run_chain(design, mcfg);
    if (chain.nonconvergence_warning)
      *ws.warn << "warning: NonConvergenceWarning: split R-hat " << io::sig(chain.max_rhat) << " for " << spec.name()
               << "\n";
    const fs::path p = ws.output("chain_" + spec_file_name(spec) + ".chain");
    io::save_chain(chain, p);
    ws.chains.push_back(p);
  }
}

void stage_predict(Workspace& ws, const json& c) {
  check_keys(c, {"at", "date"}, "predict");
  const auto series = io::load_planar(ws.input(ws.planar, "planar series"));
  for (const auto& cp : ws.chains) {
    const auto chain = io::load_chain(ws.input(cp, "chain"));
    const std::string name = spec_file_name(chain.spec());
    if (c.contains("at") && !c.at("at").is_null()) {
      const auto at = c.at("at").get<std::vector<double>>();
      if (at.size() != 2) fail(ErrorCode::InvalidConfig, "--at needs x,y");
      std::optional<Date> date;
      if (c.contains("date") && !c.at("date").is_null()) date = parse_date(c.at("date").get<std::string>());
      Rng rng(derive_seed(ws.seed, 31));
      const auto draws = mcmc::predict_one_step(Eigen::Vector2d(at[0], at[1]), date ? &*date : nullptr, chain, rng);
      std::ostringstream os;
      os << "x,y\n";
      for (Eigen::Index b = 0; b < draws.rows(); ++b) os << io::full(draws(b, 0)) << "," << io::full(draws(b, 1)) << "\n";
      io::write_text(os.str(), ws.output("predictive_draws_" + name + ".csv"));
      continue;
    }
    const auto summary = evaluate::predictive_summary(chain, series);
    std::ostringstream os;
    os << "t,mean_x,mean_y,actual_x,actual_y,inside\n";
    for (Eigen::Index t = 0; t < summary.means.rows(); ++t)
      os << t + 2 << "," << io::full(summary.means(t, 0)) << "," << io::full(summary.means(t, 1)) << ","
         << io::full(series.points(t + 1, 0)) << "," << io::full(series.points(t + 1, 1)) << ","
         << int(summary.inside[static_cast<std::size_t>(t)]) << "\n";
    io::write_text(os.str(), ws.output("predictions_" + name + ".csv"));
  }
}

void stage_evaluate(Workspace& ws, const json& c) {
  check_keys(c, {"level"}, "evaluate");
  const double level = get_or(c, "level", 0.95);
  const auto series = io::load_planar(ws.input(ws.planar, "planar series"));
  std::vector<evaluate::ModelScore> scores;
  for (const auto& cp : ws.chains) {
    const auto chain = io::load_chain(ws.input(cp, "chain"));
    scores.push_back(evaluate::score_model(chain, series, level));
  }
  if (scores.empty()) fail(ErrorCode::MissingInput, "no chains to evaluate");
  io::write_json(io::scores_to_json(scores), ws.output("scores.json"));
  const std::string table = io::scores_table(scores);
  io::write_text(table, ws.output("scores.txt"));
  *ws.log << table;
}

void stage_transitions(Workspace& ws, const json& c) {
  check_keys(c, {"year", "season"}, "transitions");
  const auto series = io::load_planar(ws.input(ws.planar, "planar series"));
  const auto tess = load_tessellation(ws);
  if (tess.size() == 0) fail(ErrorCode::MissingInput, "transitions need a tessellation");
  io::save_transitions_csv(evaluate::empirical_transitions(series, tess), ws.output("transitions_empirical.csv"));
  io::save_distances_csv(evaluate::transition_distances(series, tess), ws.output("distances_empirical.csv"));
  evaluate::BlockContext block;
  if (c.contains("year") && !c.at("year").is_null()) block.year = c.at("year").get<int>();
  if (c.contains("season") && !c.at("season").is_null()) block.season = c.at("season").get<int>();
  for (const auto& cp : ws.chains) {
    const auto chain = io::load_chain(ws.input(cp, "chain"));
    const std::string name = spec_file_name(chain.spec());
    io::save_transitions_csv(evaluate::model_transitions(chain, series, block), ws.output("transitions_" + name + ".csv"));
    io::save_distances_csv(evaluate::predictive_transition_distances(chain, series),
                           ws.output("distances_" + name + ".csv"));
  }
}

void stage_frequencies(Workspace& ws, const json& c) {
  check_keys(c, {"group", "ranges", "nodes"}, "frequencies");
  const auto series = io::load_planar(ws.input(ws.planar, "planar series"));
  if (series.node.empty()) fail(ErrorCode::MissingInput, "planar series carries no node labels");
  std::size_t nodes = get_or<std::size_t>(c, "nodes", 0);
  if (nodes == 0) nodes = static_cast<std::size_t>(*std::max_element(series.node.begin(), series.node.end()) + 1);
  evaluate::Grouping g;
  const std::string group = get_or<std::string>(c, "group", "all");
  if (group == "season") {
    g.kind = evaluate::GroupKind::season;
  } else if (group == "years") {
    g.kind = evaluate::GroupKind::year_range;
    g.year_ranges = get_or<std::vector<std::pair<int, int>>>(c, "ranges", {});
  } else if (group != "all") {
    fail(ErrorCode::InvalidConfig, "group must be all, season or years");
  }
  io::save_frequencies_csv(evaluate::node_frequencies(series.node, nodes, g, series.dates),
                           ws.output("frequencies.csv"));
}

void stage_maps(Workspace& ws, const json& c) {
  check_keys(c, {"variables", "mode"}, "maps");
  const auto model = io::load_som(ws.input(ws.som, "SOM model"));
  const auto state = io::load_state(ws.input(ws.state_series, "state series"));
  const std::string mode = get_or<std::string>(c, "mode", "anomaly");
  if (mode != "raw" && mode != "anomaly") fail(ErrorCode::InvalidConfig, "mode must be raw or anomaly");
  std::vector<std::string> vars = get_or<std::vector<std::string>>(c, "variables", state.grid.variables);
  for (const auto& v : vars) {
    const auto it = std::find(state.grid.variables.begin(), state.grid.variables.end(), v);
    if (it == state.grid.variables.end()) fail(ErrorCode::GridMismatch, "unknown variable '" + v + "'");
    const auto index = static_cast<std::size_t>(it - state.grid.variables.begin());
    const auto maps = evaluate::node_field_maps(model, state.grid, state.standardization, index,
                                                mode == "raw" ? evaluate::MapMode::raw : evaluate::MapMode::anomaly);
    for (std::size_t m = 0; m < maps.size(); ++m)
      io::save_grid_csv(maps[m], ws.output("maps/node" + std::to_string(m + 1) + "_" + v + "_" + mode + ".csv"));
  }
}

void stage_lag_scan(Workspace& ws, const json& c) {
  check_keys(c, {"max_lag"}, "lag-scan");
  const auto series = io::load_planar(ws.input(ws.planar, "planar series"));
  const auto scan = evaluate::var_lag_aic(series, get_or<std::size_t>(c, "max_lag", 4));
  io::write_json({{"aic", scan.aic}, {"best_lag", scan.best_lag}}, ws.output("lag_scan.json"));
  *ws.log << "best lag " << scan.best_lag << "\n";
}

using Stage = void (*)(Workspace&, const json&);

const std::map<std::string, Stage>& stages() {
  static const std::map<std::string, Stage> table = {
      {"simulate", stage_simulate},       {"standardize", stage_standardize}, {"train-som", stage_train_som},
      {"sammon", stage_sammon},           {"project", stage_project},         {"fit", stage_fit},
      {"predict", stage_predict},         {"evaluate", stage_evaluate},       {"transitions", stage_transitions},
      {"frequencies", stage_frequencies}, {"maps", stage_maps},               {"lag-scan", stage_lag_scan},
  };
  return table;
}

int exit_code(const Error& e) { return is_numerical(e.code()) ? kNumericalError : kDataError; }

std::string utc_now() {
  const std::time_t now = std::time(nullptr);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
  return buf;
}

// Runs `body`, then writes the run manifest whatever the outcome.
int run_with_manifest(Workspace& ws, const std::string& command, const json& config, std::ostream& err,
                      const std::function<void()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  const std::string started = utc_now();
  int code = kOk;
  std::string status = "ok";
  try {
    body();
  } catch (const Error& e) {
    code = exit_code(e);
    status = std::string(to_string(e.code())) + ": " + e.what();
    err << "error: " << status << "\n";
  } catch (const std::exception& e) {
    code = kDataError;
    status = e.what();
    err << "error: " << status << "\n";
  }
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  json manifest = {{"command", command},
                   {"tool_version", kToolVersion},
                   {"seed", ws.seed},
                   {"threads", ws.threads},
                   {"config", config},
                   {"inputs", ws.inputs},
                   {"outputs", ws.outputs},
                   {"status", status},
                   {"started_at", started},
                   {"wall_time_seconds", wall}};
  try {
    io::write_json(manifest, ws.out / (command + ".manifest.json"));
  } catch (const std::exception& e) {
    err << "error: cannot write manifest: " << e.what() << "\n";
    if (code == kOk) code = kDataError;
  }
  return code;
}

void apply_threads(int threads) {
  if (threads > 0) omp_set_num_threads(threads);
}

}  // namespace

// ---------------------------------------------------------------------------

int pipeline(const fs::path& config_path, std::ostream& out, std::ostream& err) {
  return dispatch({"stvar", "pipeline", "--config", config_path.string()}, out, err);
}

namespace {

int run_pipeline(const json& cfg, Workspace ws, std::ostream& err) {
  check_keys(cfg,
             {"seed", "threads", "out", "stages", "inputs", "simulate", "standardize", "train-som", "sammon", "project",
              "fit", "predict", "evaluate", "transitions", "frequencies", "maps", "lag-scan"},
             "pipeline config");
  const auto names = get_or<std::vector<std::string>>(cfg, "stages", {});
  for (const auto& n : names)
    if (!stages().count(n)) fail(ErrorCode::InvalidConfig, "unknown stage '" + n + "'");
  if (names.empty()) return kOk;
  const json inputs = get_or<json>(cfg, "inputs", json::object());
  check_keys(inputs, {"raw_series", "state_series", "planar_series", "som", "tessellation", "truth", "chains"},
             "pipeline inputs");
  ws.raw_series = get_or<std::string>(inputs, "raw_series", "");
  ws.state_series = get_or<std::string>(inputs, "state_series", "");
  ws.planar = get_or<std::string>(inputs, "planar_series", "");
  ws.som = get_or<std::string>(inputs, "som", "");
  ws.tess = get_or<std::string>(inputs, "tessellation", "");
  ws.truth = get_or<std::string>(inputs, "truth", "");
  for (const auto& c : get_or<std::vector<std::string>>(inputs, "chains", {})) ws.chains.emplace_back(c);
  fs::create_directories(ws.out);
  return run_with_manifest(ws, "pipeline", cfg, err, [&] {
    for (const auto& n : names) stages().at(n)(ws, get_or<json>(cfg, n.c_str(), json::object()));
  });
}

}  // namespace

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Spatio-temporal vector autoregression of synoptic states"};
  app.name("stvar");
  app.require_subcommand(1);
  app.fallthrough();

  std::uint64_t seed = 0;
  int threads = 0;
  std::string out_dir = ".", config_file;
  auto* seed_opt = app.add_option("--seed", seed, "Random seed");
  auto* threads_opt = app.add_option("--threads", threads, "OpenMP threads (0: runtime default)");
  auto* out_opt = app.add_option("--out", out_dir, "Output directory");
  app.add_option("--config", config_file, "JSON config file");

  // Per-command options; every value lands in the stage config object.
  std::string spec = "model1", truth, kind = "var", start = "2000-01-01", series, som_file, tess, mode, version = "batch",
              kernel = "gaussian", space = "map", group = "all", at, date;
  std::size_t T = 1000, n = 2000, nodes = 12, max_lag = 4, resolution = 201, tnodes = 0;
  double level = 0.95, padding = 0.25;
  std::vector<std::string> specs, chains, variables;
  std::vector<double> lo{0.0, 0.0}, hi{1.0, 1.0};
  std::optional<int> year, season;

  auto* simulate = app.add_subcommand("simulate", "Simulate a planar series (or a uniform cloud)");
  simulate->add_option("--spec", spec, "Model name or spec JSON file");
  simulate->add_option("--truth", truth, "Truth bundle JSON");
  simulate->add_option("--kind", kind, "var or cloud");
  simulate->add_option("--T", T, "Series length");
  simulate->add_option("--n", n, "Cloud size");
  simulate->add_option("--lo", lo, "Cloud box lower corner")->delimiter(',');
  simulate->add_option("--hi", hi, "Cloud box upper corner")->delimiter(',');
  simulate->add_option("--start", start, "First date (YYYY-MM-DD)");

  auto* standardize = app.add_subcommand("standardize", "Standardize a raw field series");
  standardize->add_option("--series", series, "Raw series file")->required();
  standardize->add_option("--mode", mode, "pooled or per_cell");

  auto* train = app.add_subcommand("train-som", "Train a self-organizing map");
  train->add_option("--series", series, "State series file")->required();
  train->add_option("--nodes", nodes, "Number of nodes");
  train->add_option("--version", version, "batch or online");
  train->add_option("--kernel", kernel, "gaussian or bubble");
  train->add_option("--space", space, "map or data");

  auto* sammon = app.add_subcommand("sammon", "Place SOM nodes in the plane by Sammon mapping");
  sammon->add_option("--som", som_file, "SOM model JSON")->required();

  auto* project = app.add_subcommand("project", "Project daily vectors onto the plane");
  project->add_option("--som", som_file, "SOM model JSON")->required();
  project->add_option("--series", series, "State series file")->required();
  project->add_option("--padding", padding, "Search box padding per side");
  project->add_option("--resolution", resolution, "Candidates per axis");

  auto* fit = app.add_subcommand("fit", "Sample the posterior of one or more model specs");
  fit->add_option("--spec", specs, "Model names or spec JSON files")->required();
  fit->add_option("--series", series, "Planar series file")->required();
  fit->add_option("--tess", tess, "Tessellation source (SOM model or truth JSON)");

  auto* predict = app.add_subcommand("predict", "One-step-ahead predictive draws");
  predict->add_option("--chain", chains, "Chain files")->required();
  predict->add_option("--series", series, "Planar series file")->required();
  predict->add_option("--at", at, "Predict from x,y instead of the whole series");
  predict->add_option("--date", date, "Date of the --at location");

  auto* evaluate_cmd = app.add_subcommand("evaluate", "RMSPE, DIC and coverage of fitted chains");
  evaluate_cmd->add_option("--chain", chains, "Chain files")->required();
  evaluate_cmd->add_option("--series", series, "Planar series file")->required();
  evaluate_cmd->add_option("--level", level, "Predictive region level");

  auto* transitions = app.add_subcommand("transitions", "Empirical and model transition matrices");
  transitions->add_option("--series", series, "Planar series file")->required();
  transitions->add_option("--tess", tess, "Tessellation source (SOM model or truth JSON)");
  transitions->add_option("--chain", chains, "Chain files");
  transitions->add_option("--year", year, "Restrict model transitions to one year");
  transitions->add_option("--season", season, "Restrict model transitions to one season (0-based)");

  auto* frequencies = app.add_subcommand("frequencies", "Node occurrence counts");
  frequencies->add_option("--series", series, "Planar series file")->required();
  frequencies->add_option("--group", group, "all, season or years");
  frequencies->add_option("--nodes", tnodes, "Number of nodes (default: largest label)");

  auto* maps = app.add_subcommand("maps", "Per-node field maps");
  maps->add_option("--som", som_file, "SOM model JSON")->required();
  maps->add_option("--series", series, "State series file (grid and constants)")->required();
  maps->add_option("--variable", variables, "Variables to map (default: all)");
  maps->add_option("--mode", mode, "raw or anomaly");

  auto* lag = app.add_subcommand("lag-scan", "AIC over VAR lag orders");
  lag->add_option("--series", series, "Planar series file")->required();
  lag->add_option("--max-lag", max_lag, "Largest lag");

  auto* pipe = app.add_subcommand("pipeline", "Run the stages of a pipeline config (--config)");

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n" << app.help();
    return kUsage;
  }

  Workspace ws;
  ws.seed = seed;
  ws.threads = threads;
  ws.out = out_dir;
  ws.log = &out;
  ws.warn = &err;

  try {
    json file_cfg = json::object();
    if (!config_file.empty()) file_cfg = io::read_json(ws.input(config_file, "config file"));
    ws.inputs.clear();

    if (pipe->parsed()) {
      if (config_file.empty()) {
        err << "error: pipeline needs --config\n";
        return kUsage;
      }
      if (!seed_opt->count()) ws.seed = get_or<std::uint64_t>(file_cfg, "seed", 0);
      if (!threads_opt->count()) ws.threads = get_or<int>(file_cfg, "threads", 0);
      if (!out_opt->count()) ws.out = get_or<std::string>(file_cfg, "out", ".");
      apply_threads(ws.threads);
      return run_pipeline(file_cfg, ws, err);
    }
    apply_threads(ws.threads);
    fs::create_directories(ws.out);

    std::string command;
    json c = json::object();
    auto opt = [](CLI::App* sub, const char* flag) { return sub->get_option(flag)->count() > 0; };
    if (simulate->parsed()) {
      command = "simulate";
      c = {{"kind", kind}, {"T", T}, {"n", n}, {"lo", lo}, {"hi", hi}, {"start", start}, {"spec", spec}};
      if (!truth.empty()) c["truth"] = truth;
    } else if (standardize->parsed()) {
      command = "standardize";
      ws.raw_series = series;
      if (opt(standardize, "--mode")) c["mode"] = mode;
    } else if (train->parsed()) {
      command = "train-som";
      ws.state_series = series;
      c = file_cfg;
      c["nodes"] = nodes;
      c["version"] = version;
      c["kernel"] = kernel;
      c["space"] = space;
    } else if (sammon->parsed()) {
      command = "sammon";
      ws.som = som_file;
      c = file_cfg;
    } else if (project->parsed()) {
      command = "project";
      ws.som = som_file;
      ws.state_series = series;
      c = {{"padding", padding}, {"resolution", resolution}};
    } else if (fit->parsed()) {
      command = "fit";
      ws.planar = series;
      ws.tess = tess;
      c = {{"models", specs}, {"mcmc", file_cfg}};
    } else if (predict->parsed()) {
      command = "predict";
      ws.planar = series;
      for (const auto& ch : chains) ws.chains.emplace_back(ch);
      if (!at.empty()) {
        std::vector<double> xy;
        std::istringstream is(at);
        for (std::string part; std::getline(is, part, ',');) xy.push_back(std::stod(part));
        c["at"] = xy;
        if (!date.empty()) c["date"] = date;
      }
    } else if (evaluate_cmd->parsed()) {
      command = "evaluate";
      ws.planar = series;
      for (const auto& ch : chains) ws.chains.emplace_back(ch);
      c = {{"level", level}};
    } else if (transitions->parsed()) {
      command = "transitions";
      ws.planar = series;
      ws.tess = tess;
      for (const auto& ch : chains) ws.chains.emplace_back(ch);
      if (year) c["year"] = *year;
      if (season) c["season"] = *season;
    } else if (frequencies->parsed()) {
      command = "frequencies";
      ws.planar = series;
      c = {{"group", group}, {"nodes", tnodes}};
      if (file_cfg.contains("ranges")) c["ranges"] = file_cfg.at("ranges");
    } else if (maps->parsed()) {
      command = "maps";
      ws.som = som_file;
      ws.state_series = series;
      if (!variables.empty()) c["variables"] = variables;
      if (opt(maps, "--mode")) c["mode"] = mode;
    } else if (lag->parsed()) {
      command = "lag-scan";
      ws.planar = series;
      c = {{"max_lag", max_lag}};
    }
    return run_with_manifest(ws, command, c, err, [&] { stages().at(command)(ws, c); });
  } catch (const Error& e) {
    err << "error: " << to_string(e.code()) << ": " << e.what() << "\n";
    return exit_code(e);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kDataError;
  }
}

int dispatch(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return dispatch(args, std::cout, std::cerr);
}

}  // namespace stvar::cli
