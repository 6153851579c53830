// Command-line front end for the bridge-simulation shared library.
//
// Subcommands: simulate, compare, figure, mh, tables.  Experiment settings
// come from a flat key=value config file (--config) with every key also
// exposed as a flag; flags win.  Exit codes: 0 success, 2 configuration
// error, 1 numerical failure.

#include <algorithm>
#include <cinttypes>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "bridgesim.h"

namespace fs = std::filesystem;

namespace {

constexpr int kExitNumeric = 1;
constexpr int kExitConfig = 2;

[[noreturn]] void die(int code, const std::string& message) {
  std::fprintf(stderr, "error: %s\n", message.c_str());
  std::exit(code);
}

// Library status codes already match the CLI exit codes.
void check(int status) {
  if (status != BS_OK) die(status, bs_last_error());
}

template <typename T>
T* check_ptr(T* p) {
  if (p == nullptr) die(kExitConfig, bs_last_error());
  return p;
}

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

double parse_double(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const double x = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument("");
    return x;
  } catch (...) {
    die(kExitConfig, "config key '" + key + "': '" + value + "' is not a number");
  }
}

std::uint64_t parse_u64(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const unsigned long long x = std::stoull(value, &used);
    if (used != value.size()) throw std::invalid_argument("");
    return x;
  } catch (...) {
    die(kExitConfig, "config key '" + key + "': '" + value + "' is not a non-negative integer");
  }
}

std::vector<double> parse_list(const std::string& key, const std::string& value) {
  std::vector<double> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_double(key, trim(item)));
  if (out.empty()) die(kExitConfig, "config key '" + key + "': empty list");
  return out;
}

std::vector<std::string> parse_names(const std::string& value) {
  std::vector<std::string> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

struct Settings {
  std::string model = "ou";
  double alpha = 2.0;
  double sigma = 0.1;
  double u = 0.1;
  double v = 1.0;
  double T = 3.0;
  double h = 1e-3;
  std::size_t paths = 5;
  std::uint64_t seed = 1;
  int threads = 1;
  std::string proposal = "guided";
  std::vector<std::string> proposals;  // compare
  std::string aux = "simple51";
  std::string sigma_policy = "constant-end";
  double t0 = -1.0;  // unset
  std::string out = ".";
  double eps = -1.0;  // unset: sigma sqrt(T) / 20
  std::size_t iterations = 1000;
  std::size_t thin = 0;  // 0: iterations/100
  std::size_t oracle_paths = 200;
  std::vector<double> aux_B, aux_beta, aux_sigma;
};

void apply_kv(Settings& s, const std::string& key, const std::string& value) {
  if (key == "model") s.model = value;
  else if (key == "alpha") s.alpha = parse_double(key, value);
  else if (key == "sigma") s.sigma = parse_double(key, value);
  else if (key == "u") s.u = parse_double(key, value);
  else if (key == "v") s.v = parse_double(key, value);
  else if (key == "T") s.T = parse_double(key, value);
  else if (key == "h") s.h = parse_double(key, value);
  else if (key == "paths") s.paths = parse_u64(key, value);
  else if (key == "seed") s.seed = parse_u64(key, value);
  else if (key == "threads") s.threads = static_cast<int>(parse_u64(key, value));
  else if (key == "proposal") s.proposal = value;
  else if (key == "proposals") s.proposals = parse_names(value);
  else if (key == "aux") s.aux = value;
  else if (key == "sigma_policy") s.sigma_policy = value;
  else if (key == "t0") s.t0 = parse_double(key, value);
  else if (key == "out") s.out = value;
  else if (key == "eps") s.eps = parse_double(key, value);
  else if (key == "iterations") s.iterations = parse_u64(key, value);
  else if (key == "thin") s.thin = parse_u64(key, value);
  else if (key == "oracle_paths") s.oracle_paths = parse_u64(key, value);
  else if (key == "aux_B") s.aux_B = parse_list(key, value);
  else if (key == "aux_beta") s.aux_beta = parse_list(key, value);
  else if (key == "aux_sigma") s.aux_sigma = parse_list(key, value);
  else die(kExitConfig, "unknown config key '" + key + "'");
}

void load_config(Settings& s, const std::string& path) {
  std::ifstream is(path);
  if (!is) die(kExitConfig, "cannot open config file '" + path + "'");
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const std::string stripped = trim(line);
    if (stripped.empty() || stripped[0] == '#') continue;
    const auto eq = stripped.find('=');
    if (eq == std::string::npos)
      die(kExitConfig, path + ":" + std::to_string(lineno) + ": expected key=value");
    apply_kv(s, trim(stripped.substr(0, eq)), trim(stripped.substr(eq + 1)));
  }
}

// ---- flag plumbing ---------------------------------------------------------

struct Flags {
  std::string config;
  std::uint64_t seed = 0;
  double h = 0.0;
  std::size_t paths = 0;
  std::vector<std::string> proposal;
  std::string aux;
  std::string sigma_policy;
  double t0 = 0.0;
  std::string out;
  int threads = 0;
  std::size_t iterations = 0;
  std::size_t thin = 0;
  double eps = 0.0;

  CLI::Option* o_config = nullptr;
  CLI::Option* o_seed = nullptr;
  CLI::Option* o_h = nullptr;
  CLI::Option* o_paths = nullptr;
  CLI::Option* o_proposal = nullptr;
  CLI::Option* o_aux = nullptr;
  CLI::Option* o_policy = nullptr;
  CLI::Option* o_t0 = nullptr;
  CLI::Option* o_out = nullptr;
  CLI::Option* o_threads = nullptr;
  CLI::Option* o_iterations = nullptr;
  CLI::Option* o_thin = nullptr;
  CLI::Option* o_eps = nullptr;
};

void add_common_flags(CLI::App* cmd, Flags& f) {
  f.o_config = cmd->add_option("--config", f.config, "key=value config file");
  f.o_seed = cmd->add_option("--seed", f.seed, "random seed");
  f.o_h = cmd->add_option("--h", f.h, "time step");
  f.o_paths = cmd->add_option("--paths", f.paths, "number of paths");
  f.o_proposal = cmd->add_option("--proposal", f.proposal,
                                 "proposal family (repeatable for 'compare')");
  f.o_aux = cmd->add_option("--aux", f.aux, "auxiliary: simple51|lna|brownian|custom");
  f.o_policy = cmd->add_option("--sigma-policy", f.sigma_policy,
                               "auxiliary dispersion policy: constant-end|interpolate");
  f.o_t0 = cmd->add_option("--t0", f.t0, "switch time for --sigma-policy interpolate");
  f.o_out = cmd->add_option("--out", f.out, "output directory");
  f.o_threads = cmd->add_option("--threads", f.threads, "worker threads");
  f.o_iterations = cmd->add_option("--iterations", f.iterations, "MH iterations");
  f.o_thin = cmd->add_option("--thin", f.thin, "store every thin-th MH state");
  f.o_eps = cmd->add_option("--eps", f.eps, "endpoint tolerance of the rejection oracle");
}

void apply_flags(Settings& s, const Flags& f, bool single_proposal) {
  if (f.o_config->count()) load_config(s, f.config);
  if (f.o_seed->count()) s.seed = f.seed;
  if (f.o_h->count()) s.h = f.h;
  if (f.o_paths->count()) s.paths = f.paths;
  if (f.o_proposal->count()) {
    if (single_proposal && f.proposal.size() > 1)
      die(kExitConfig, "this subcommand accepts a single --proposal");
    if (single_proposal)
      s.proposal = f.proposal.back();
    else
      s.proposals = f.proposal;
  }
  if (f.o_aux->count()) s.aux = f.aux;
  if (f.o_policy->count()) s.sigma_policy = f.sigma_policy;
  if (f.o_t0->count()) s.t0 = f.t0;
  if (f.o_out->count()) s.out = f.out;
  if (f.o_threads->count()) s.threads = f.threads;
  if (f.o_iterations->count()) s.iterations = f.iterations;
  if (f.o_thin->count()) s.thin = f.thin;
  if (f.o_eps->count()) s.eps = f.eps;
}

// ---- handles ---------------------------------------------------------------

struct ModelHandle {
  bs_model* p = nullptr;
  ~ModelHandle() { bs_model_free(p); }
};
struct GridHandle {
  bs_grid* p = nullptr;
  ~GridHandle() { bs_grid_free(p); }
};
struct BatchHandle {
  bs_batch* p = nullptr;
  ~BatchHandle() { bs_batch_free(p); }
};
struct TableHandle {
  bs_table* p = nullptr;
  ~TableHandle() { bs_table_free(p); }
};
struct MhHandle {
  bs_mh* p = nullptr;
  ~MhHandle() { bs_mh_free(p); }
};

bs_model* make_model(const Settings& s) {
  if (s.model == "ou") return check_ptr(bs_model_ou(s.alpha, s.sigma));
  if (s.model == "sine") return check_ptr(bs_model_sine(s.sigma));
  if (s.model == "ou-sine") return check_ptr(bs_model_ou_sine(s.sigma));
  die(kExitConfig, "unknown model '" + s.model + "' (expected ou, sine or ou-sine)");
}

bs_grid* make_grid(const Settings& s) {
  if (!(s.h > 0.0)) die(kExitConfig, "h must be positive");
  if (!(s.T > 0.0)) die(kExitConfig, "T must be positive");
  const long long n = std::llround(s.T / s.h);
  if (n < 1) die(kExitConfig, "h is larger than the horizon T");
  return check_ptr(bs_grid_uniform(s.T, static_cast<std::size_t>(n)));
}

bs_sim_opts make_opts(const Settings& s) {
  bs_sim_opts o = bs_sim_opts_default();
  o.proposal = s.proposal.c_str();
  o.aux = s.aux.c_str();
  o.sigma_policy = s.sigma_policy.c_str();
  o.t0 = s.t0;
  o.seed = s.seed;
  o.n_paths = s.paths;
  o.threads = s.threads;
  if (s.aux == "custom") {
    if (s.aux_B.empty() || s.aux_beta.empty() || s.aux_sigma.empty())
      die(kExitConfig, "aux 'custom' requires config keys aux_B, aux_beta and aux_sigma");
    o.aux_B = s.aux_B.data();
    o.aux_beta = s.aux_beta.data();
    o.aux_sigma = s.aux_sigma.data();
    o.aux_sigma_cols = static_cast<int>(s.aux_sigma.size());  // built-ins are 1-D
  }
  return o;
}

fs::path ensure_outdir(const Settings& s) {
  fs::path dir(s.out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) die(kExitConfig, "cannot create output directory '" + s.out + "': " + ec.message());
  return dir;
}

double default_eps(const Settings& s) {
  return s.eps > 0.0 ? s.eps : s.sigma * std::sqrt(s.T) / 20.0;
}

// ---- SVG -------------------------------------------------------------------

struct Series {
  std::string color;
  double opacity = 1.0;
  double width = 1.0;
  std::vector<std::pair<double, double>> pts;  // (t, x)
};

struct LegendEntry {
  std::string label;
  std::string color;
};

struct Panel {
  std::string title;
  std::vector<Series> series;
  std::vector<LegendEntry> legend;
};

std::string fmt_coord(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

void render_panel(std::string& svg, const Panel& panel, double ox, double oy) {
  constexpr double W = 600, H = 400, ml = 52, mr = 12, mt = 26, mb = 34;
  const double pw = W - ml - mr, ph = H - mt - mb;
  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  for (const Series& s : panel.series)
    for (const auto& [t, x] : s.pts) {
      xmin = std::min(xmin, t);
      xmax = std::max(xmax, t);
      ymin = std::min(ymin, x);
      ymax = std::max(ymax, x);
    }
  if (!(xmax > xmin)) xmax = xmin + 1.0;
  const double pad = (ymax > ymin) ? 0.05 * (ymax - ymin) : 0.5;
  ymin -= pad;
  ymax += pad;
  const auto px = [&](double t) { return ox + ml + (t - xmin) / (xmax - xmin) * pw; };
  const auto py = [&](double x) { return oy + mt + (1.0 - (x - ymin) / (ymax - ymin)) * ph; };

  svg += "<rect x=\"" + fmt_coord(ox + ml) + "\" y=\"" + fmt_coord(oy + mt) + "\" width=\"" +
         fmt_coord(pw) + "\" height=\"" + fmt_coord(ph) +
         "\" fill=\"none\" stroke=\"#333\" stroke-width=\"1\"/>\n";
  svg += "<text x=\"" + fmt_coord(ox + ml) + "\" y=\"" + fmt_coord(oy + mt - 8) +
         "\" font-family=\"sans-serif\" font-size=\"13\">" + panel.title + "</text>\n";
  // axis extremes
  svg += "<text x=\"" + fmt_coord(ox + ml) + "\" y=\"" + fmt_coord(oy + H - 12) +
         "\" font-family=\"sans-serif\" font-size=\"11\">t = " + fmt_coord(xmin) + "</text>\n";
  svg += "<text x=\"" + fmt_coord(ox + W - mr) + "\" y=\"" + fmt_coord(oy + H - 12) +
         "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">t = " +
         fmt_coord(xmax) + "</text>\n";
  svg += "<text x=\"" + fmt_coord(ox + ml - 6) + "\" y=\"" + fmt_coord(oy + mt + 10) +
         "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" +
         fmt_coord(ymax) + "</text>\n";
  svg += "<text x=\"" + fmt_coord(ox + ml - 6) + "\" y=\"" + fmt_coord(oy + mt + ph) +
         "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" +
         fmt_coord(ymin) + "</text>\n";

  for (const Series& s : panel.series) {
    // one point per horizontal pixel is plenty
    const std::size_t n = s.pts.size();
    const std::size_t stride = std::max<std::size_t>(1, n / 600);
    svg += "<polyline fill=\"none\" stroke=\"" + s.color + "\" stroke-width=\"" +
           fmt_coord(s.width) + "\" stroke-opacity=\"" + fmt_coord(s.opacity) + "\" points=\"";
    for (std::size_t i = 0; i < n; i += stride) {
      svg += fmt_coord(px(s.pts[i].first)) + "," + fmt_coord(py(s.pts[i].second)) + " ";
    }
    if ((n - 1) % stride != 0)
      svg += fmt_coord(px(s.pts[n - 1].first)) + "," + fmt_coord(py(s.pts[n - 1].second));
    svg += "\"/>\n";
  }

  double ly = oy + mt + 16;
  for (const LegendEntry& e : panel.legend) {
    const double lx = ox + W - mr - 110;
    svg += "<line x1=\"" + fmt_coord(lx) + "\" y1=\"" + fmt_coord(ly - 4) + "\" x2=\"" +
           fmt_coord(lx + 24) + "\" y2=\"" + fmt_coord(ly - 4) + "\" stroke=\"" + e.color +
           "\" stroke-width=\"2\"/>\n";
    svg += "<text x=\"" + fmt_coord(lx + 30) + "\" y=\"" + fmt_coord(ly) +
           "\" font-family=\"sans-serif\" font-size=\"11\">" + e.label + "</text>\n";
    ly += 15;
  }
}

void write_svg(const fs::path& file, int cols, int rows, const std::vector<Panel>& panels) {
  const int W = 600 * cols, H = 400 * rows;
  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(W) +
         "\" height=\"" + std::to_string(H) + "\" viewBox=\"0 0 " + std::to_string(W) + " " +
         std::to_string(H) + "\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  for (std::size_t k = 0; k < panels.size(); ++k) {
    const double ox = 600.0 * static_cast<double>(k % cols);
    const double oy = 400.0 * static_cast<double>(k / cols);
    render_panel(svg, panels[k], ox, oy);
  }
  svg += "</svg>\n";
  std::ofstream os(file);
  if (!os) die(kExitConfig, "cannot open '" + file.string() + "' for writing");
  os << svg;
}

// ---- shared data pulls -------------------------------------------------------

std::vector<double> grid_nodes(bs_grid* grid) {
  const std::size_t n = bs_grid_steps(grid);
  std::vector<double> t(n + 1);
  for (std::size_t i = 0; i <= n; ++i) t[i] = bs_grid_node(grid, i);
  return t;
}

// All CLI models are one-dimensional, so a path is one value per node.
std::vector<std::vector<double>> batch_paths(bs_batch* batch) {
  const std::size_t n = bs_batch_size(batch), nodes = bs_batch_nodes(batch);
  std::vector<std::vector<double>> out(n, std::vector<double>(nodes));
  for (std::size_t j = 0; j < n; ++j) check(bs_batch_path(batch, j, out[j].data()));
  return out;
}

Series to_series(const std::vector<double>& t, const std::vector<double>& x,
                 const std::string& color, double opacity, double width) {
  Series s;
  s.color = color;
  s.opacity = opacity;
  s.width = width;
  s.pts.reserve(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) s.pts.emplace_back(t[i], x[i]);
  return s;
}

void write_curve_csv(const fs::path& file, const std::vector<double>& t,
                     const std::vector<double>& x) {
  std::ofstream os(file);
  if (!os) die(kExitConfig, "cannot open '" + file.string() + "' for writing");
  os << "t,x_0\n";
  char buf[96];
  for (std::size_t i = 0; i < t.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.15g,%.15g\n", t[i], x[i]);
    os << buf;
  }
}

std::size_t node_nearest(const std::vector<double>& t, double target) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < t.size(); ++i)
    if (std::fabs(t[i] - target) < std::fabs(t[best] - target)) best = i;
  return best;
}

// ---- subcommands -------------------------------------------------------------

int cmd_simulate(const Settings& s) {
  if (s.paths < 1) die(kExitConfig, "paths must be at least 1");
  ModelHandle model{make_model(s)};
  GridHandle grid{make_grid(s)};
  const bs_sim_opts opts = make_opts(s);
  BatchHandle batch;
  check(bs_simulate(model.p, &s.u, &s.v, s.T, grid.p, &opts, &batch.p));
  const fs::path dir = ensure_outdir(s);
  const fs::path paths_csv = dir / "paths.csv", weights_csv = dir / "weights.csv";
  check(bs_batch_write_paths_csv(batch.p, paths_csv.string().c_str()));
  check(bs_batch_write_weights_csv(batch.p, weights_csv.string().c_str()));
  if (bs_batch_has_weights(batch.p)) {
    double e = 0.0;
    check(bs_batch_ess(batch.p, &e));
    std::printf("ess = %.6g of %zu paths\n", e, s.paths);
  } else {
    std::printf("proposal '%s' carries no importance weight; weights.csv has empty columns\n",
                s.proposal.c_str());
  }
  std::printf("wrote %s\nwrote %s\n", paths_csv.string().c_str(), weights_csv.string().c_str());
  return 0;
}

int cmd_tables(const Settings& s) {
  ModelHandle model{make_model(s)};
  GridHandle grid{make_grid(s)};
  const bs_sim_opts opts = make_opts(s);
  TableHandle table;
  check(bs_table_build(model.p, &s.u, &s.v, s.T, grid.p, &opts, &table.p));
  const fs::path dir = ensure_outdir(s);
  const fs::path file = dir / "table.csv";
  check(bs_table_write_csv(table.p, file.string().c_str()));
  std::printf("wrote %s\n", file.string().c_str());
  return 0;
}

int cmd_mh(const Settings& s) {
  ModelHandle model{make_model(s)};
  GridHandle grid{make_grid(s)};
  const bs_sim_opts opts = make_opts(s);
  if (s.iterations == 0) die(kExitConfig, "iterations must be at least 1");
  const std::size_t thin = s.thin > 0 ? s.thin : std::max<std::size_t>(1, s.iterations / 100);
  MhHandle mh;
  check(bs_mh_run(model.p, &s.u, &s.v, s.T, grid.p, &opts, s.iterations, thin, &mh.p));

  const fs::path dir = ensure_outdir(s);
  const std::size_t n = bs_mh_iterations(mh.p);
  std::vector<double> lw(n);
  std::vector<int> acc(n);
  check(bs_mh_trace(mh.p, lw.data(), acc.data()));
  const fs::path trace_csv = dir / "mh_trace.csv";
  {
    std::ofstream os(trace_csv);
    if (!os) die(kExitConfig, "cannot open '" + trace_csv.string() + "' for writing");
    os << "iteration,log_weight,accepted\n";
    char buf[96];
    for (std::size_t i = 0; i < n; ++i) {
      std::snprintf(buf, sizeof buf, "%zu,%.15g,%d\n", i + 1, lw[i], acc[i]);
      os << buf;
    }
  }
  const fs::path paths_csv = dir / "mh_paths.csv";
  {
    std::ofstream os(paths_csv);
    if (!os) die(kExitConfig, "cannot open '" + paths_csv.string() + "' for writing");
    os << "iteration,t,x_0\n";
    const std::vector<double> t = grid_nodes(grid.p);
    std::vector<double> x(t.size());
    char buf[96];
    for (std::size_t k = 0; k < bs_mh_stored(mh.p); ++k) {
      std::size_t iter = 0;
      check(bs_mh_stored_path(mh.p, k, &iter, x.data()));
      for (std::size_t i = 0; i < t.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%zu,%.15g,%.15g\n", iter, t[i], x[i]);
        os << buf;
      }
    }
  }
  std::printf("acceptance rate = %.6g over %zu iterations\n", bs_mh_acceptance_rate(mh.p), n);
  std::printf("wrote %s\nwrote %s\n", trace_csv.string().c_str(), paths_csv.string().c_str());
  return 0;
}

int cmd_compare(const Settings& s) {
  std::vector<std::string> names = s.proposals;
  if (names.size() < 2)
    die(kExitConfig,
        "compare requires at least two proposals (config key 'proposals' or repeated "
        "--proposal flags)");
  {
    std::set<std::string> distinct(names.begin(), names.end());
    if (distinct.size() != names.size())
      die(kExitConfig, "compare requires distinct proposals");
  }
  for (const std::string& name : names)
    if (name == "delyon-hu-1" || name == "lna-residual")
      die(kExitConfig, "proposal '" + name + "' carries no importance weight, so it cannot "
                       "be compared");
  if (s.paths < 2) die(kExitConfig, "compare needs at least 2 paths per proposal");

  ModelHandle model{make_model(s)};
  GridHandle grid{make_grid(s)};
  const std::vector<double> t = grid_nodes(grid.p);
  const std::size_t half = node_nearest(t, s.T / 2.0);

  // Reference mean curve: closed form for the linear model, otherwise the
  // unweighted mean of rejection-oracle bridges.
  std::vector<double> ref(t.size());
  if (s.model == "ou") {
    for (std::size_t i = 0; i < t.size(); ++i)
      check(bs_ou_bridge_mean(s.alpha, s.sigma, &s.u, &s.v, 1, s.T, t[i], &ref[i]));
  } else {
    BatchHandle oracle;
    double rate = 0.0;
    check(bs_rejection_oracle(model.p, &s.u, &s.v, s.T, grid.p, default_eps(s),
                              s.oracle_paths, s.seed, 0, s.threads, &oracle.p, &rate));
    std::printf("oracle acceptance rate = %.6g\n", rate);
    check(bs_batch_mean_path(oracle.p, ref.data()));
  }

  const fs::path dir = ensure_outdir(s);
  const fs::path file = dir / "compare.csv";
  std::ofstream os(file);
  if (!os) die(kExitConfig, "cannot open '" + file.string() + "' for writing");
  os << "proposal,paths,ess,mean_half,se_mean_half,mean2_half,se_mean2_half,sup_dist\n";

  for (const std::string& name : names) {
    Settings sp = s;
    sp.proposal = name;
    const bs_sim_opts opts = make_opts(sp);
    BatchHandle batch;
    check(bs_simulate(model.p, &s.u, &s.v, s.T, grid.p, &opts, &batch.p));
    double e = 0.0, m1 = 0.0, se1 = 0.0, m2 = 0.0, se2 = 0.0;
    check(bs_batch_ess(batch.p, &e));
    check(bs_batch_is_estimate(batch.p, half, 0, 1, &m1, &se1));
    check(bs_batch_is_estimate(batch.p, half, 0, 2, &m2, &se2));
    std::vector<double> mean(t.size());
    check(bs_batch_mean_path(batch.p, mean.data()));
    double sup = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i)
      sup = std::max(sup, std::fabs(mean[i] - ref[i]));
    char buf[256];
    std::snprintf(buf, sizeof buf, "%s,%zu,%.15g,%.15g,%.15g,%.15g,%.15g,%.15g\n",
                  name.c_str(), s.paths, e, m1, se1, m2, se2, sup);
    os << buf;
    std::printf("%-14s ess = %8.1f   E[x(T/2)] = %.6g (se %.3g)   sup-dist = %.6g\n",
                name.c_str(), e, m1, se1, sup);
  }
  std::printf("wrote %s\n", file.string().c_str());
  return 0;
}

int cmd_figure(const Settings& s, const std::string& name) {
  ModelHandle model{make_model(s)};
  GridHandle grid{make_grid(s)};
  const std::vector<double> t = grid_nodes(grid.p);
  const fs::path dir = ensure_outdir(s);

  std::vector<double> flow(t.size());
  check(bs_flow(model.p, &s.u, grid.p, flow.data()));
  write_curve_csv(dir / "flow.csv", t, flow);

  const auto dump_family = [&](const char* proposal, std::uint64_t seed, const char* csv) {
    Settings sp = s;
    sp.proposal = proposal;
    sp.seed = seed;
    const bs_sim_opts opts = make_opts(sp);
    BatchHandle batch;
    check(bs_simulate(model.p, &s.u, &s.v, s.T, grid.p, &opts, &batch.p));
    check(bs_batch_write_paths_csv(batch.p, (dir / csv).string().c_str()));
    return batch_paths(batch.p);
  };

  if (name == "ou") {
    if (s.model != "ou") die(kExitConfig, "figure 'ou' requires the ou model");
    BatchHandle exact;
    check(bs_ou_bridge_exact(s.alpha, s.sigma, &s.u, &s.v, 1, grid.p, s.seed, s.paths,
                             &exact.p));
    check(bs_batch_write_paths_csv(exact.p, (dir / "true.csv").string().c_str()));
    const auto truth = batch_paths(exact.p);
    const auto guided = dump_family("guided", s.seed + 1, "guided.csv");
    const auto resid = dump_family("residual", s.seed + 2, "residual.csv");

    Panel panel;
    panel.title = "bridges from u to v: flow, true, guided, residual";
    panel.series.push_back(to_series(t, flow, "#444444", 1.0, 2.0));
    for (const auto& x : truth) panel.series.push_back(to_series(t, x, "#1f77b4", 0.75, 1.0));
    for (const auto& x : guided) panel.series.push_back(to_series(t, x, "#2ca02c", 0.75, 1.0));
    for (const auto& x : resid) panel.series.push_back(to_series(t, x, "#d62728", 0.75, 1.0));
    panel.legend = {{"flow", "#444444"},
                    {"true", "#1f77b4"},
                    {"guided", "#2ca02c"},
                    {"residual", "#d62728"}};
    write_svg(dir / "ou.svg", 1, 1, {panel});
    std::printf("wrote %s\n", (dir / "ou.svg").string().c_str());
    return 0;
  }

  if (name == "sine-well") {
    const auto guided = dump_family("guided", s.seed + 1, "guided.csv");
    const auto resid = dump_family("residual", s.seed + 2, "residual.csv");
    BatchHandle oracle;
    double rate = 0.0;
    check(bs_rejection_oracle(model.p, &s.u, &s.v, s.T, grid.p, default_eps(s), s.paths,
                              s.seed, 0, s.threads, &oracle.p, &rate));
    check(bs_batch_write_paths_csv(oracle.p, (dir / "oracle.csv").string().c_str()));
    const auto orc = batch_paths(oracle.p);
    std::printf("oracle acceptance rate = %.6g\n", rate);

    Panel p_flow;
    p_flow.title = "deterministic flow";
    p_flow.series.push_back(to_series(t, flow, "#444444", 1.0, 2.0));
    Panel p_guided;
    p_guided.title = "guided proposals";
    for (const auto& x : guided)
      p_guided.series.push_back(to_series(t, x, "#2ca02c", 0.6, 1.0));
    Panel p_resid;
    p_resid.title = "residual proposals";
    for (const auto& x : resid) p_resid.series.push_back(to_series(t, x, "#d62728", 0.6, 1.0));
    Panel p_oracle;
    p_oracle.title = "rejection-oracle bridges";
    for (const auto& x : orc) p_oracle.series.push_back(to_series(t, x, "#9467bd", 0.6, 1.0));
    write_svg(dir / "sine-well.svg", 2, 2, {p_flow, p_guided, p_resid, p_oracle});
    std::printf("wrote %s\n", (dir / "sine-well.svg").string().c_str());
    return 0;
  }

  die(kExitConfig, "unknown figure '" + name + "' (expected ou or sine-well)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"diffusion bridge proposals: simulation, weighting and comparison"};
  app.require_subcommand(1);
  // `--h` is the step-size flag, so help must not claim the short name `-h`.
  app.set_help_flag("--help", "print help and exit");

  Flags f_sim, f_cmp, f_fig, f_mh, f_tab;
  CLI::App* c_sim = app.add_subcommand("simulate", "simulate bridge proposals, write CSVs");
  CLI::App* c_cmp = app.add_subcommand("compare", "run several proposals, summarize quality");
  CLI::App* c_fig = app.add_subcommand("figure", "reproduce a named figure (ou | sine-well)");
  CLI::App* c_mh = app.add_subcommand("mh", "independence Metropolis-Hastings over bridges");
  CLI::App* c_tab = app.add_subcommand("tables", "dump the backward guiding tables");
  for (CLI::App* sub : {c_sim, c_cmp, c_fig, c_mh, c_tab})
    sub->set_help_flag("--help", "print help and exit");
  add_common_flags(c_sim, f_sim);
  add_common_flags(c_cmp, f_cmp);
  add_common_flags(c_fig, f_fig);
  add_common_flags(c_mh, f_mh);
  add_common_flags(c_tab, f_tab);
  std::string figure_name;
  c_fig->add_option("name", figure_name, "figure name: ou | sine-well")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (c_sim->parsed()) {
      Settings s;
      apply_flags(s, f_sim, true);
      return cmd_simulate(s);
    }
    if (c_cmp->parsed()) {
      Settings s;
      apply_flags(s, f_cmp, false);
      return cmd_compare(s);
    }
    if (c_fig->parsed()) {
      Settings s;
      if (figure_name == "ou") {
        s.model = "ou";
        s.alpha = 2.0;
        s.sigma = 0.1;
        s.u = 0.1;
        s.v = 1.0;
        s.T = 3.0;
        s.paths = 5;
      } else if (figure_name == "sine-well") {
        s.model = "ou-sine";
        s.sigma = 0.15;
        s.u = 5.0;
        s.v = 2.0;
        s.T = 5.0;
        s.paths = 25;
      }
      apply_flags(s, f_fig, true);
      return cmd_figure(s, figure_name);
    }
    if (c_mh->parsed()) {
      Settings s;
      apply_flags(s, f_mh, true);
      return cmd_mh(s);
    }
    if (c_tab->parsed()) {
      Settings s;
      apply_flags(s, f_tab, true);
      return cmd_tables(s);
    }
  } catch (const std::exception& e) {
    die(kExitNumeric, e.what());
  }
  return kExitConfig;
}
