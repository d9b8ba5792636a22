#include "stvar/io.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "stvar/error.hpp"

namespace stvar::io {

namespace {

std::ofstream open_out(const fs::path& path, std::ios::openmode mode = std::ios::out) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, mode);
  if (!out) fail(ErrorCode::MissingInput, "cannot write " + path.string());
  return out;
}

std::ifstream open_in(const fs::path& path, std::ios::openmode mode = std::ios::in) {
  std::ifstream in(path, mode);
  if (!in) fail(ErrorCode::MissingInput, "cannot open " + path.string());
  return in;
}

std::uint64_t to_little(std::uint64_t v) {
  if constexpr (std::endian::native == std::endian::little) return v;
  std::uint64_t r = 0;
  for (int i = 0; i < 8; ++i) r |= ((v >> (8 * i)) & 0xffu) << (8 * (7 - i));
  return r;
}

// Parses "KEY=<int>".
std::size_t header_field(const std::string& token, const std::string& key) {
  if (token.rfind(key + "=", 0) != 0) fail(ErrorCode::MalformedHeader, "expected " + key + "= in header");
  std::size_t v = 0;
  const char* b = token.data() + key.size() + 1;
  const char* e = token.data() + token.size();
  auto [ptr, ec] = std::from_chars(b, e, v);
  if (ec != std::errc() || ptr != e) fail(ErrorCode::MalformedHeader, "bad value in header field " + key);
  return v;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, sep)) out.push_back(cur);
  return out;
}

json dates_to_json(const std::vector<Date>& dates) {
  json a = json::array();
  for (const auto& d : dates) a.push_back(d.str());
  return a;
}

std::vector<Date> dates_from_json(const json& a) {
  std::vector<Date> dates;
  for (const auto& v : a) {
    auto d = Date::parse(v.get<std::string>());
    if (!d) fail(ErrorCode::MalformedHeader, "bad date '" + v.get<std::string>() + "'");
    dates.push_back(*d);
  }
  return dates;
}

json grid_to_json(const data::GridSpec& g) {
  return {{"n_rows", g.n_rows}, {"n_cols", g.n_cols}, {"variables", g.variables}};
}

void write_binary(const data::GridSpec& grid, std::size_t T, const double* values, const fs::path& path) {
  auto out = open_out(path, std::ios::out | std::ios::binary);
  out << "STVAR-SERIES v1 T=" << T << " V=" << grid.n_vars() << " R=" << grid.n_rows << " C=" << grid.n_cols << "\n";
  for (std::size_t v = 0; v < grid.n_vars(); ++v) out << (v ? "," : "") << grid.variables[v];
  out << "\n";
  const std::size_t n = T * grid.dim();
  std::vector<char> buf(n * 8);
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint64_t bits = to_little(std::bit_cast<std::uint64_t>(values[i]));
    std::memcpy(buf.data() + 8 * i, &bits, 8);
  }
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) fail(ErrorCode::MissingInput, "failed writing " + path.string());
}

struct BinaryPayload {
  data::GridSpec grid;
  std::size_t T = 0;
  std::vector<double> values;
};

BinaryPayload read_binary(const fs::path& path) {
  auto in = open_in(path, std::ios::in | std::ios::binary);
  std::string header, names;
  if (!std::getline(in, header)) fail(ErrorCode::MalformedHeader, "empty series file");
  std::istringstream hs(header);
  std::string magic, version, t, v, r, c, extra;
  hs >> magic >> version >> t >> v >> r >> c;
  if (magic != "STVAR-SERIES" || version != "v1") fail(ErrorCode::MalformedHeader, "not a v1 series file");
  if (hs >> extra) fail(ErrorCode::MalformedHeader, "trailing header fields");
  BinaryPayload p;
  p.T = header_field(t, "T");
  const std::size_t V = header_field(v, "V");
  p.grid.n_rows = header_field(r, "R");
  p.grid.n_cols = header_field(c, "C");
  if (!std::getline(in, names)) fail(ErrorCode::MalformedHeader, "missing variable names line");
  p.grid.variables = split(names, ',');
  if (p.grid.variables.size() != V) fail(ErrorCode::DimensionMismatch, "variable names do not match V");
  p.grid.validate();
  const std::size_t n = p.T * p.grid.dim();
  std::vector<char> buf(n * 8);
  in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (static_cast<std::size_t>(in.gcount()) != buf.size())
    fail(ErrorCode::ShortRead, "series file holds fewer values than its header declares");
  p.values.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::uint64_t bits;
    std::memcpy(&bits, buf.data() + 8 * i, 8);
    p.values[i] = std::bit_cast<double>(to_little(bits));
  }
  return p;
}

json std_to_json(const data::Standardization& s) {
  return {{"mode", s.mode == data::StandardizeMode::pooled ? "pooled" : "per_cell"},
          {"mean", matrix_to_json(s.mean)},
          {"sd", matrix_to_json(s.sd)},
          {"cell_mean", matrix_to_json(s.cell_mean)},
          {"cell_sd", matrix_to_json(s.cell_sd)}};
}

data::Standardization std_from_json(const json& j) {
  data::Standardization s;
  const std::string mode = j.at("mode").get<std::string>();
  if (mode != "pooled" && mode != "per_cell") fail(ErrorCode::MalformedHeader, "unknown standardization mode");
  s.mode = mode == "pooled" ? data::StandardizeMode::pooled : data::StandardizeMode::per_cell;
  s.mean = matrix_from_json(j.at("mean"));
  s.sd = matrix_from_json(j.at("sd"));
  s.cell_mean = matrix_from_json(j.at("cell_mean"));
  s.cell_sd = matrix_from_json(j.at("cell_sd"));
  return s;
}

// Rejects keys of `j` outside `allowed`.
void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!j.is_object()) fail(ErrorCode::InvalidConfig, where + " must be a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || it.key() == a;
    if (!ok) fail(ErrorCode::InvalidConfig, "unknown key '" + it.key() + "' in " + where);
  }
}

}  // namespace

std::string full(double value) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

std::string sig(double value, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, value);
  return buf;
}

json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const json& j) {
  if (!j.is_array()) fail(ErrorCode::MalformedHeader, "matrix must be an array of rows");
  const auto R = static_cast<Eigen::Index>(j.size());
  const auto C = R == 0 ? Eigen::Index{0} : static_cast<Eigen::Index>(j[0].size());
  Eigen::MatrixXd m(R, C);
  for (Eigen::Index i = 0; i < R; ++i) {
    if (static_cast<Eigen::Index>(j[i].size()) != C) fail(ErrorCode::DimensionMismatch, "ragged matrix");
    for (Eigen::Index k = 0; k < C; ++k) m(i, k) = j[i][k].get<double>();
  }
  return m;
}

json read_json(const fs::path& path) {
  auto in = open_in(path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    fail(ErrorCode::MalformedHeader, path.string() + ": " + e.what());
  }
}

void write_json(const json& j, const fs::path& path) {
  auto out = open_out(path);
  out << j.dump(2) << "\n";
}

void write_text(const std::string& text, const fs::path& path) {
  auto out = open_out(path);
  out << text;
}

fs::path sidecar_path(const fs::path& series) { return fs::path(series.string() + ".json"); }

// ---------------------------------------------------------------------------

void save_series(const data::RawSeries& series, const fs::path& path) {
  series.validate();
  write_binary(series.grid, series.days(), series.values.raw().data(), path);
  write_json({{"kind", "raw"}, {"grid", grid_to_json(series.grid)}, {"dates", dates_to_json(series.dates)}},
             sidecar_path(path));
}

data::RawSeries load_series(const fs::path& path) {
  auto p = read_binary(path);
  data::RawSeries s;
  s.grid = p.grid;
  s.values = data::FieldArray(p.T, p.grid.n_vars(), p.grid.n_cells());
  s.values.raw() = std::move(p.values);
  if (fs::exists(sidecar_path(path))) {
    const json side = read_json(sidecar_path(path));
    if (side.contains("dates")) s.dates = dates_from_json(side.at("dates"));
  }
  s.validate();
  return s;
}

void save_state(const data::StateSeries& series, const fs::path& path) {
  // Row-major T x d is the day-major, variable-major, cell-major layout.
  const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm = series.matrix;
  if (static_cast<std::size_t>(rm.cols()) != series.grid.dim())
    fail(ErrorCode::DimensionMismatch, "state matrix width does not match its grid");
  write_binary(series.grid, series.days(), rm.data(), path);
  write_json({{"kind", "state"},
              {"grid", grid_to_json(series.grid)},
              {"dates", dates_to_json(series.dates)},
              {"standardization", std_to_json(series.standardization)}},
             sidecar_path(path));
}

data::StateSeries load_state(const fs::path& path) {
  auto p = read_binary(path);
  data::StateSeries s;
  s.grid = p.grid;
  const auto T = static_cast<Eigen::Index>(p.T), d = static_cast<Eigen::Index>(p.grid.dim());
  s.matrix = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(p.values.data(), T, d);
  if (!fs::exists(sidecar_path(path))) fail(ErrorCode::MissingInput, "state series needs its sidecar");
  const json side = read_json(sidecar_path(path));
  if (side.value("kind", "") != "state") fail(ErrorCode::MalformedHeader, "sidecar does not describe a state series");
  s.dates = dates_from_json(side.at("dates"));
  s.standardization = std_from_json(side.at("standardization"));
  return s;
}

// ---------------------------------------------------------------------------

void save_planar(const model::PlanarSeries& series, const fs::path& path) {
  auto out = open_out(path);
  out << "STVAR-PLANAR v1 T=" << series.size() << "\n";
  for (std::size_t t = 0; t < series.size(); ++t) {
    out << full(series.points(t, 0)) << " " << full(series.points(t, 1)) << " "
        << (series.node.empty() ? 0 : series.node[t] + 1);
    if (!series.dates.empty()) out << " " << series.dates[t].str();
    out << "\n";
  }
}

model::PlanarSeries load_planar(const fs::path& path) {
  auto in = open_in(path);
  std::string header;
  if (!std::getline(in, header)) fail(ErrorCode::MalformedHeader, "empty planar file");
  std::istringstream hs(header);
  std::string magic, version, t;
  hs >> magic >> version >> t;
  if (magic != "STVAR-PLANAR" || version != "v1") fail(ErrorCode::MalformedHeader, "not a v1 planar file");
  const std::size_t T = header_field(t, "T");
  model::PlanarSeries s;
  s.points.resize(static_cast<Eigen::Index>(T), 2);
  s.node.resize(T);
  std::string line;
  for (std::size_t i = 0; i < T; ++i) {
    if (!std::getline(in, line)) fail(ErrorCode::ShortRead, "planar file holds fewer rows than declared");
    std::istringstream ls(line);
    double x, y;
    long node;
    if (!(ls >> x >> y >> node)) fail(ErrorCode::MalformedHeader, "bad planar row " + std::to_string(i + 1));
    s.points(static_cast<Eigen::Index>(i), 0) = x;
    s.points(static_cast<Eigen::Index>(i), 1) = y;
    s.node[i] = static_cast<int>(node) - 1;
    std::string date;
    if (ls >> date) {
      auto d = Date::parse(date);
      if (!d) fail(ErrorCode::MalformedHeader, "bad date in planar row " + std::to_string(i + 1));
      if (s.dates.size() != i) fail(ErrorCode::MalformedHeader, "dates must be given on every row or none");
      s.dates.push_back(*d);
    }
  }
  if (!s.dates.empty() && s.dates.size() != T) fail(ErrorCode::MalformedHeader, "dates must be given on every row or none");
  if (std::all_of(s.node.begin(), s.node.end(), [](int n) { return n < 0; })) s.node.clear();
  return s;
}

// ---------------------------------------------------------------------------

json som_to_json(const som::SomModel& m) {
  const auto& c = m.config;
  json nodes = json::array(), planar = json::array();
  for (Eigen::Index i = 0; i < m.nodes.rows(); ++i)
    for (Eigen::Index j = 0; j < m.nodes.cols(); ++j) nodes.push_back(m.nodes(i, j));
  for (Eigen::Index i = 0; i < m.planar.rows(); ++i)
    for (Eigen::Index j = 0; j < 2; ++j) planar.push_back(m.planar(i, j));
  return {{"version", 1},
          {"M", m.size()},
          {"d", m.dim()},
          {"kernel", c.kernel == som::Kernel::gaussian ? "gaussian" : "bubble"},
          {"neighborhood_space", c.space == som::NeighborhoodSpace::map ? "map" : "data"},
          {"schedules",
           {{"alpha1", {c.alpha1.start, c.alpha1.end}},
            {"alpha2", {c.alpha2.start, c.alpha2.end}},
            {"sigma1", {c.sigma1.start, c.sigma1.end}},
            {"sigma2", {c.sigma2.start, c.sigma2.end}},
            {"steps1", c.steps1},
            {"steps2", c.steps2},
            {"batch_epochs1", c.batch_epochs1},
            {"batch_epochs2", c.batch_epochs2},
            {"convergence_tol", c.convergence_tol},
            {"max_epochs", c.max_epochs}}},
          {"seed", c.seed},
          {"nodes", nodes},
          {"planar", planar},
          {"provenance", m.provenance}};
}

som::SomModel som_from_json(const json& j) {
  try {
    if (j.at("version").get<int>() != 1) fail(ErrorCode::MalformedHeader, "unsupported SOM model version");
    som::SomModel m;
    const auto M = j.at("M").get<std::size_t>(), d = j.at("d").get<std::size_t>();
    const auto& nodes = j.at("nodes");
    const auto& planar = j.at("planar");
    if (nodes.size() != M * d || planar.size() != 2 * M) fail(ErrorCode::DimensionMismatch, "SOM arrays do not match M and d");
    m.nodes.resize(static_cast<Eigen::Index>(M), static_cast<Eigen::Index>(d));
    m.planar.resize(static_cast<Eigen::Index>(M), 2);
    for (std::size_t i = 0; i < M; ++i) {
      for (std::size_t k = 0; k < d; ++k) m.nodes(i, k) = nodes[i * d + k].get<double>();
      for (std::size_t k = 0; k < 2; ++k) m.planar(i, k) = planar[i * 2 + k].get<double>();
    }
    auto& c = m.config;
    c.n_nodes = M;
    const std::string kernel = j.at("kernel").get<std::string>();
    const std::string space = j.at("neighborhood_space").get<std::string>();
    if ((kernel != "gaussian" && kernel != "bubble") || (space != "map" && space != "data"))
      fail(ErrorCode::MalformedHeader, "unknown kernel or neighborhood space");
    c.kernel = kernel == "gaussian" ? som::Kernel::gaussian : som::Kernel::bubble;
    c.space = space == "map" ? som::NeighborhoodSpace::map : som::NeighborhoodSpace::data;
    const auto& s = j.at("schedules");
    auto ramp = [&](const char* k) { return som::Ramp{s.at(k)[0].get<double>(), s.at(k)[1].get<double>()}; };
    c.alpha1 = ramp("alpha1");
    c.alpha2 = ramp("alpha2");
    c.sigma1 = ramp("sigma1");
    c.sigma2 = ramp("sigma2");
    c.steps1 = s.at("steps1").get<std::size_t>();
    c.steps2 = s.at("steps2").get<std::size_t>();
    c.batch_epochs1 = s.at("batch_epochs1").get<std::size_t>();
    c.batch_epochs2 = s.at("batch_epochs2").get<std::size_t>();
    c.convergence_tol = s.at("convergence_tol").get<double>();
    c.max_epochs = s.at("max_epochs").get<std::size_t>();
    c.seed = j.at("seed").get<std::uint64_t>();
    m.provenance = j.at("provenance").get<std::string>();
    return m;
  } catch (const json::exception& e) {
    fail(ErrorCode::MalformedHeader, std::string("SOM model: ") + e.what());
  }
}

void save_som(const som::SomModel& model, const fs::path& path) { write_json(som_to_json(model), path); }
som::SomModel load_som(const fs::path& path) { return som_from_json(read_json(path)); }

// ---------------------------------------------------------------------------

json spec_to_json(const model::ModelSpec& s) {
  json j = {{"a_structure", model::to_string(s.a)},
            {"eta_structure", model::to_string(s.eta)},
            {"season_calendar", {{"season_of_month", s.seasons.season_of_month}, {"names", s.seasons.names}}},
            {"knot_grid", {{"per_axis", s.knots.per_axis}, {"padding", s.knots.padding}}},
            {"jitter_policy", {{"initial", s.jitter.initial}, {"max", s.jitter.max}, {"growth", s.jitter.growth}}}};
  if (auto i = s.ladder_index()) j["name"] = "model" + std::to_string(*i);
  return j;
}

model::ModelSpec spec_from_json(const json& j) {
  if (j.is_string()) return model::ModelSpec::from_name(j.get<std::string>());
  try {
    check_keys(j, {"name", "a_structure", "eta_structure", "season_calendar", "knot_grid", "jitter_policy"}, "model spec");
  } catch (const Error& e) {
    fail(ErrorCode::InvalidSpec, e.what());
  }
  try {
    model::ModelSpec s;
    if (j.contains("name")) s = model::ModelSpec::from_name(j.at("name").get<std::string>());
    if (j.contains("a_structure")) s.a = model::parse_a_structure(j.at("a_structure").get<std::string>());
    if (j.contains("eta_structure")) s.eta = model::parse_eta_structure(j.at("eta_structure").get<std::string>());
    if (j.contains("season_calendar")) {
      const auto& c = j.at("season_calendar");
      s.seasons.season_of_month = c.at("season_of_month").get<std::array<int, 12>>();
      s.seasons.names = c.at("names").get<std::vector<std::string>>();
    }
    if (j.contains("knot_grid")) {
      s.knots.per_axis = j.at("knot_grid").at("per_axis").get<std::size_t>();
      s.knots.padding = j.at("knot_grid").at("padding").get<double>();
    }
    if (j.contains("jitter_policy")) {
      const auto& p = j.at("jitter_policy");
      s.jitter = {p.at("initial").get<double>(), p.at("max").get<double>(), p.at("growth").get<double>()};
    }
    s.validate();
    return s;
  } catch (const json::exception& e) {
    fail(ErrorCode::InvalidSpec, std::string("model spec: ") + e.what());
  }
}

json mcmc_config_to_json(const mcmc::McmcConfig& c) {
  json upper = nullptr;
  if (c.theta_upper) upper = {(*c.theta_upper)(0), (*c.theta_upper)(1)};
  return {{"n_iter", c.n_iter},
          {"burn_in", c.burn_in},
          {"thin", c.thin},
          {"seed", c.seed},
          {"theta_prior_upper", upper},
          {"theta_proposal_step", c.theta_step},
          {"target_acceptance", c.target_acceptance},
          {"tune_window", c.tune_window},
          {"q_prior",
           {{"diag_mean", c.q_prior.diag_mean},
            {"diag_sd", c.q_prior.diag_sd},
            {"offdiag_mean", c.q_prior.offdiag_mean},
            {"offdiag_sd", c.q_prior.offdiag_sd}}},
          {"sigma_conditional_mode", mcmc::to_string(c.sigma_mode)},
          {"max_predictive_draws", c.max_predictive_draws},
          {"rhat_threshold", c.rhat_threshold}};
}

mcmc::McmcConfig mcmc_config_from_json(const json& j) {
  check_keys(j,
             {"n_iter", "burn_in", "thin", "seed", "theta_prior_upper", "theta_proposal_step", "target_acceptance",
              "tune_window", "q_prior", "sigma_conditional_mode", "max_predictive_draws", "rhat_threshold"},
             "sampler config");
  try {
    mcmc::McmcConfig c;
    c.n_iter = j.value("n_iter", c.n_iter);
    c.burn_in = j.value("burn_in", c.burn_in);
    c.thin = j.value("thin", c.thin);
    c.seed = j.value("seed", c.seed);
    if (j.contains("theta_prior_upper") && !j.at("theta_prior_upper").is_null()) {
      const auto& u = j.at("theta_prior_upper");
      c.theta_upper = Eigen::Vector2d(u.at(0).get<double>(), u.at(1).get<double>());
    }
    c.theta_step = j.value("theta_proposal_step", c.theta_step);
    c.target_acceptance = j.value("target_acceptance", c.target_acceptance);
    c.tune_window = j.value("tune_window", c.tune_window);
    if (j.contains("q_prior")) {
      const auto& q = j.at("q_prior");
      check_keys(q, {"diag_mean", "diag_sd", "offdiag_mean", "offdiag_sd"}, "q_prior");
      c.q_prior.diag_mean = q.value("diag_mean", c.q_prior.diag_mean);
      c.q_prior.diag_sd = q.value("diag_sd", c.q_prior.diag_sd);
      c.q_prior.offdiag_mean = q.value("offdiag_mean", c.q_prior.offdiag_mean);
      c.q_prior.offdiag_sd = q.value("offdiag_sd", c.q_prior.offdiag_sd);
    }
    if (j.contains("sigma_conditional_mode"))
      c.sigma_mode = mcmc::parse_sigma_mode(j.at("sigma_conditional_mode").get<std::string>());
    c.max_predictive_draws = j.value("max_predictive_draws", c.max_predictive_draws);
    c.rhat_threshold = j.value("rhat_threshold", c.rhat_threshold);
    c.validate();
    return c;
  } catch (const json::exception& e) {
    fail(ErrorCode::InvalidConfig, std::string("sampler config: ") + e.what());
  }
}

json truth_to_json(const synthetic::TruthBundle& t) {
  json j = {{"spec", spec_to_json(t.spec)},
            {"tessellation", matrix_to_json(t.tess.node_planar)},
            {"years", t.years},
            {"phi", matrix_to_json(t.phi)},
            {"sigma", matrix_to_json(t.sigma)},
            {"seed", t.seed},
            {"stationary", t.stationary},
            {"spatial", nullptr}};
  if (t.spatial) {
    const auto& s = t.spatial->state;
    j["spatial"] = {{"knots", matrix_to_json(t.spatial->knots)},
                    {"theta", {s.theta(0), s.theta(1)}},
                    {"q", matrix_to_json(s.q)},
                    {"wstar", matrix_to_json(s.wstar)}};
  }
  return j;
}

synthetic::TruthBundle truth_from_json(const json& j) {
  try {
    synthetic::TruthBundle t;
    t.spec = spec_from_json(j.at("spec"));
    t.tess.node_planar = matrix_from_json(j.at("tessellation"));
    if (t.tess.node_planar.size() == 0) t.tess.node_planar.resize(0, 2);
    t.years = j.at("years").get<std::vector<int>>();
    t.phi = matrix_from_json(j.at("phi"));
    t.sigma = matrix_from_json(j.at("sigma"));
    t.seed = j.at("seed").get<std::uint64_t>();
    t.stationary = j.value("stationary", true);
    if (!j.at("spatial").is_null()) {
      const auto& s = j.at("spatial");
      model::SpatialAdjust adj;
      adj.knots = matrix_from_json(s.at("knots"));
      adj.state.theta = Eigen::Vector2d(s.at("theta")[0].get<double>(), s.at("theta")[1].get<double>());
      adj.state.q = matrix_from_json(s.at("q"));
      adj.state.wstar = matrix_from_json(s.at("wstar"));
      t.spatial = adj;
    }
    t.validate();
    return t;
  } catch (const json::exception& e) {
    fail(ErrorCode::MalformedHeader, std::string("truth bundle: ") + e.what());
  }
}

// ---------------------------------------------------------------------------

std::vector<std::string> chain_labels(const mcmc::Chain& chain) {
  std::vector<std::string> labels;
  const auto& spec = chain.spec();
  if (!spec.random_walk()) {
    const auto cols = chain.layout.column_labels();
    for (const auto& c : cols) {
      labels.push_back("phi." + c + ".x");
      labels.push_back("phi." + c + ".y");
    }
  }
  labels.insert(labels.end(), {"sigma.xx", "sigma.xy", "sigma.yy"});
  if (spec.spatial()) {
    labels.insert(labels.end(), {"theta1", "theta2", "q11", "q21", "q22"});
    for (int k = 1; k <= 2; ++k)
      for (Eigen::Index i = 0; i < chain.layout.knots().rows(); ++i)
        labels.push_back("wstar" + std::to_string(k) + "." + std::to_string(i + 1));
  }
  return labels;
}

void save_chain(const mcmc::Chain& chain, const fs::path& path) {
  json meta = {{"spec", spec_to_json(chain.spec())},
               {"config", mcmc_config_to_json(chain.config)},
               {"acceptance", {chain.theta_acceptance(0), chain.theta_acceptance(1)}},
               {"theta_step", {chain.theta_step(0), chain.theta_step(1)}},
               {"theta_upper", {chain.theta_upper(0), chain.theta_upper(1)}},
               {"series_length", chain.series_length},
               {"tessellation", matrix_to_json(chain.layout.tessellation().node_planar)},
               {"years", chain.layout.years()},
               {"knots", matrix_to_json(chain.layout.knots())},
               {"max_rhat", chain.max_rhat},
               {"nonconvergence_warning", chain.nonconvergence_warning},
               {"n_draws", chain.draws.size()}};
  auto out = open_out(path);
  out << "STVAR-CHAIN v1\n" << meta.dump() << "\n";
  const auto labels = chain_labels(chain);
  for (std::size_t i = 0; i < labels.size(); ++i) out << (i ? " " : "") << labels[i];
  out << "\n";
  const bool rw = chain.spec().random_walk();
  for (const auto& d : chain.draws) {
    std::string line;
    auto put = [&](double v) {
      if (!line.empty()) line += ' ';
      line += full(v);
    };
    if (!rw)
      for (Eigen::Index r = 0; r < d.phi.rows(); ++r) {
        put(d.phi(r, 0));
        put(d.phi(r, 1));
      }
    put(d.sigma(0, 0));
    put(d.sigma(1, 0));
    put(d.sigma(1, 1));
    if (d.spatial) {
      const auto& s = *d.spatial;
      put(s.theta(0));
      put(s.theta(1));
      put(s.q(0, 0));
      put(s.q(1, 0));
      put(s.q(1, 1));
      for (int k = 0; k < 2; ++k)
        for (Eigen::Index i = 0; i < s.wstar.cols(); ++i) put(s.wstar(k, i));
    }
    out << line << "\n";
  }
}

mcmc::Chain load_chain(const fs::path& path) {
  auto in = open_in(path);
  std::string magic, meta_line, label_line;
  if (!std::getline(in, magic) || magic != "STVAR-CHAIN v1") fail(ErrorCode::MalformedHeader, "not a v1 chain file");
  if (!std::getline(in, meta_line)) fail(ErrorCode::MalformedHeader, "missing chain metadata");
  json meta;
  try {
    meta = json::parse(meta_line);
  } catch (const json::exception& e) {
    fail(ErrorCode::MalformedHeader, std::string("chain metadata: ") + e.what());
  }
  mcmc::Chain chain;
  try {
    const auto spec = spec_from_json(meta.at("spec"));
    chain.config = mcmc_config_from_json(meta.at("config"));
    model::Tessellation tess{matrix_from_json(meta.at("tessellation"))};
    if (tess.node_planar.size() == 0) tess.node_planar.resize(0, 2);
    Eigen::MatrixXd knots = matrix_from_json(meta.at("knots"));
    chain.layout = model::DesignLayout::restore(spec, tess, meta.at("years").get<std::vector<int>>(), knots);
    chain.series_length = meta.at("series_length").get<std::size_t>();
    auto vec2 = [&](const char* k) { return Eigen::Vector2d(meta.at(k)[0].get<double>(), meta.at(k)[1].get<double>()); };
    chain.theta_acceptance = vec2("acceptance");
    chain.theta_step = vec2("theta_step");
    chain.theta_upper = vec2("theta_upper");
    chain.max_rhat = meta.at("max_rhat").get<double>();
    chain.nonconvergence_warning = meta.at("nonconvergence_warning").get<bool>();
  } catch (const json::exception& e) {
    fail(ErrorCode::MalformedHeader, std::string("chain metadata: ") + e.what());
  }
  if (!std::getline(in, label_line)) fail(ErrorCode::MalformedHeader, "missing chain labels");
  const auto labels = chain_labels(chain);
  if (split(label_line, ' ') != labels) fail(ErrorCode::MalformedHeader, "chain labels do not match its spec");

  const bool rw = chain.spec().random_walk();
  const auto p = static_cast<Eigen::Index>(chain.layout.columns());
  const Eigen::Index m = chain.layout.knots().rows();
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::vector<double> v;
    for (double x; ls >> x;) v.push_back(x);
    if (v.size() != labels.size()) fail(ErrorCode::ShortRead, "chain line has the wrong number of values");
    std::size_t k = 0;
    mcmc::PosteriorDraw d;
    if (rw) {
      d.phi = Eigen::MatrixXd::Identity(2, 2);
    } else {
      d.phi.resize(p, 2);
      for (Eigen::Index r = 0; r < p; ++r) {
        d.phi(r, 0) = v[k++];
        d.phi(r, 1) = v[k++];
      }
    }
    d.sigma(0, 0) = v[k++];
    d.sigma(1, 0) = d.sigma(0, 1) = v[k++];
    d.sigma(1, 1) = v[k++];
    if (chain.spec().spatial()) {
      model::SpatialState s;
      s.theta = Eigen::Vector2d(v[k], v[k + 1]);
      k += 2;
      s.q << v[k], 0.0, v[k + 1], v[k + 2];
      k += 3;
      s.wstar.resize(2, m);
      for (int r = 0; r < 2; ++r)
        for (Eigen::Index i = 0; i < m; ++i) s.wstar(r, i) = v[k++];
      d.spatial = s;
    }
    chain.draws.push_back(std::move(d));
  }
  return chain;
}

// ---------------------------------------------------------------------------

json scores_to_json(const std::vector<evaluate::ModelScore>& scores) {
  json a = json::array();
  for (const auto& s : scores)
    a.push_back({{"model", s.model}, {"rmspe", s.rmspe}, {"dic", s.dic}, {"p_d", s.p_d}, {"coverage", s.coverage}});
  return {{"models", a}};
}

std::string scores_table(const std::vector<evaluate::ModelScore>& scores) {
  std::ostringstream os;
  os << std::left << std::setw(10) << "model" << std::setw(14) << "RMSPE" << std::setw(14) << "DIC" << std::setw(14)
     << "p_D" << "coverage\n";
  for (const auto& s : scores)
    os << std::left << std::setw(10) << s.model << std::setw(14) << sig(s.rmspe) << std::setw(14) << sig(s.dic)
       << std::setw(14) << sig(s.p_d) << sig(s.coverage) << "\n";
  return os.str();
}

void save_transitions_csv(const evaluate::TransitionMatrix& tm, const fs::path& path) {
  auto out = open_out(path);
  out << "from\\to";
  for (std::size_t j = 0; j < tm.size(); ++j) out << ",cell" << j + 1;
  out << "\n";
  for (std::size_t i = 0; i < tm.size(); ++i) {
    out << "cell" << i + 1;
    for (std::size_t j = 0; j < tm.size(); ++j)
      out << "," << (tm.defined[i] ? full(tm.probs(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j))) : "NA");
    out << "\n";
  }
}

void save_distances_csv(const std::vector<std::vector<double>>& per_cell, const fs::path& path) {
  auto out = open_out(path);
  out << "cell,count,mean,q05,q25,median,q75,q95\n";
  for (std::size_t c = 0; c < per_cell.size(); ++c) {
    const auto s = evaluate::summarize(per_cell[c]);
    out << "cell" << c + 1 << "," << s.count;
    if (s.count == 0) {
      out << ",NA,NA,NA,NA,NA,NA\n";
      continue;
    }
    for (double v : {s.mean, s.q05, s.q25, s.median, s.q75, s.q95}) out << "," << full(v);
    out << "\n";
  }
}

void save_frequencies_csv(const evaluate::FrequencyTable& table, const fs::path& path) {
  auto out = open_out(path);
  out << "group";
  for (Eigen::Index j = 0; j < table.counts.cols(); ++j) out << ",node" << j + 1;
  out << "\n";
  for (std::size_t g = 0; g < table.groups.size(); ++g) {
    out << table.groups[g];
    for (Eigen::Index j = 0; j < table.counts.cols(); ++j) out << "," << table.counts(static_cast<Eigen::Index>(g), j);
    out << "\n";
  }
}

void save_grid_csv(const Eigen::MatrixXd& grid, const fs::path& path) {
  auto out = open_out(path);
  for (Eigen::Index r = 0; r < grid.rows(); ++r) {
    for (Eigen::Index c = 0; c < grid.cols(); ++c) out << (c ? "," : "") << full(grid(r, c));
    out << "\n";
  }
}

}  // namespace stvar::io
