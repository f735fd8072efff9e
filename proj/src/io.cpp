#include "fluxrec/io.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>

#include "fluxrec/problems.hpp"

namespace fluxrec {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string fmt_double(double v) {
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17e", v);
  return buf;
}

std::string fmt_shortest(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double parse_double(const std::string& key, const std::string& value) {
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(value.c_str(), &end);
  // ERANGE on underflow still yields the correctly rounded subnormal.
  if (value.empty() || end != value.c_str() + value.size() || (errno == ERANGE && std::isinf(v))) {
    throw std::invalid_argument(key + ": expected a number, got '" + value + "'");
  }
  return v;
}

long long parse_integer(const std::string& key, const std::string& value) {
  errno = 0;
  char* end = nullptr;
  const long long v = std::strtoll(value.c_str(), &end, 10);
  if (value.empty() || end != value.c_str() + value.size() || errno == ERANGE) {
    throw std::invalid_argument(key + ": expected an integer, got '" + value + "'");
  }
  return v;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw std::invalid_argument(key + ": expected true or false, got '" + value + "'");
}

void require(bool ok, const std::string& key, const std::string& rule) {
  if (!ok) throw std::invalid_argument(key + ": " + rule);
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  return os;
}

void close_output(std::ofstream& os, const std::filesystem::path& path) {
  os.close();
  if (!os) throw std::runtime_error("write failed for " + path.string());
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot read " + path.string());
  return is;
}

using Setter = std::function<void(RunConfig&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"problem", [](RunConfig& c, const std::string& v) { c.problem = v; }},
      {"strategy", [](RunConfig& c, const std::string& v) { c.strategy = parse_marking_strategy(v); }},
      {"theta", [](RunConfig& c, const std::string& v) { c.theta = parse_double("theta", v); }},
      {"tol", [](RunConfig& c, const std::string& v) { c.tol = parse_double("tol", v); }},
      {"beta",
       [](RunConfig& c, const std::string& v) {
         if (v == "default") {
           c.beta.reset();
         } else {
           c.beta = parse_double("beta", v);
         }
       }},
      {"noise", [](RunConfig& c, const std::string& v) { c.noise = parse_double("noise", v); }},
      {"seed",
       [](RunConfig& c, const std::string& v) {
         const long long s = parse_integer("seed", v);
         require(s >= 0, "seed", "must be non-negative");
         c.seed = static_cast<std::uint64_t>(s);
       }},
      {"max_iters", [](RunConfig& c, const std::string& v) { c.max_iters = static_cast<int>(parse_integer("max_iters", v)); }},
      {"max_triangles",
       [](RunConfig& c, const std::string& v) {
         const long long n = parse_integer("max_triangles", v);
         require(n >= 1, "max_triangles", "must be positive");
         c.max_triangles = static_cast<std::size_t>(n);
       }},
      {"cg_tol", [](RunConfig& c, const std::string& v) { c.cg_tol = parse_double("cg_tol", v); }},
      {"cg_max_iters",
       [](RunConfig& c, const std::string& v) { c.cg_max_iters = static_cast<int>(parse_integer("cg_max_iters", v)); }},
      {"inner_solver",
       [](RunConfig& c, const std::string& v) {
         if (v == "direct") {
           c.inner_solver = InnerSolver::Direct;
         } else if (v == "cg") {
           c.inner_solver = InnerSolver::Cg;
         } else {
           throw std::invalid_argument("inner_solver: expected direct or cg, got '" + v + "'");
         }
       }},
      {"measurement_levels",
       [](RunConfig& c, const std::string& v) {
         c.measurement_levels = static_cast<int>(parse_integer("measurement_levels", v));
       }},
      {"record_errors", [](RunConfig& c, const std::string& v) { c.record_errors = parse_bool("record_errors", v); }},
      {"refinement",
       [](RunConfig& c, const std::string& v) {
         if (v == "adaptive") {
           c.refinement = RefinementMode::Adaptive;
         } else if (v == "uniform") {
           c.refinement = RefinementMode::Uniform;
         } else {
           throw std::invalid_argument("refinement: expected adaptive or uniform, got '" + v + "'");
         }
       }},
      {"output_dir", [](RunConfig& c, const std::string& v) { c.output_dir = v; }},
  };
  return table;
}

void validate(const RunConfig& c) {
  const auto names = builtin_problem_names();
  require(std::find(names.begin(), names.end(), c.problem) != names.end(), "problem",
          "unknown problem '" + c.problem + "'");
  require(c.theta >= 0.0 && c.theta <= 1.0, "theta", "must lie in [0,1]");
  require(c.tol > 0.0, "tol", "must be positive");
  require(!c.beta || *c.beta > 0.0, "beta", "must be positive");
  require(c.noise >= 0.0 && c.noise <= 1.0, "noise", "must lie in [0,1]");
  require(c.max_iters >= 1, "max_iters", "must be at least 1");
  require(c.cg_tol > 0.0 && c.cg_tol < 1.0, "cg_tol", "must lie in (0,1)");
  require(c.cg_max_iters >= 1, "cg_max_iters", "must be at least 1");
  require(c.measurement_levels >= 2, "measurement_levels", "must be at least 2");
  require(!c.output_dir.empty(), "output_dir", "must not be empty");
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) cells.push_back(trim(cell));
  return cells;
}

constexpr const char* kHistoryHeader = "iter,n_vertices,n_triangles,n_flux_dofs,eta,eta1,eta2,osc,objective,err_q,err_u,err_p";

// -- CLI -----------------------------------------------------------------------

int run_command(const std::string& config_path, const std::string& out_dir, std::ostream& out) {
  RunConfig config = load_config(config_path);
  if (!out_dir.empty()) config.output_dir = out_dir;

  const InverseProblem problem = make_inverse_problem(config.problem_spec(), config.measurement_levels);
  const LoopConfig loop = config.loop_config();
  const std::filesystem::path dir(config.output_dir);
  std::filesystem::create_directories(dir);

  AdaptiveHistory history;
  try {
    history = config.refinement == RefinementMode::Uniform ? run_uniform(problem, loop) : run_adaptive(problem, loop);
  } catch (const AdaptiveRunError& e) {
    if (!e.partial_history().records.empty()) export_history_csv(e.partial_history(), dir / "history.csv");
    throw;
  }

  export_history_csv(history, dir / "history.csv");
  const OptimalTriplet& t = history.final_triplet;
  export_vtk(*history.final_mesh, {{"u", t.u}, {"p", t.p}, {"q", extend_trace(t.q)}}, dir / "final.vtk");
  export_flux(t.q, dir / "flux.txt");

  const IterationRecord& last = history.records.back();
  out << "problem " << config.problem << ", strategy " << to_string(config.strategy) << "\n"
      << "iterations " << history.records.size() << ", stop " << to_string(history.stop_reason) << "\n"
      << "triangles " << last.n_triangles << ", eta " << fmt_double(last.eta) << "\n"
      << "wrote " << (dir / "history.csv").string() << ", " << (dir / "final.vtk").string() << ", "
      << (dir / "flux.txt").string() << "\n";
  return 0;
}

int forward_command(const std::string& problem_name, double noise, std::uint64_t seed, int levels,
                    const std::string& out_path, std::ostream& out) {
  ProblemSpec spec = builtin_problem(problem_name);
  spec.noise = noise;
  spec.seed = seed;
  const Measurement m = generate_measurement(spec, levels);
  write_measurement(m, out_path);
  out << "wrote " << m.sample_count() << " samples to " << out_path << "\n";
  return 0;
}

int report_command(const std::string& path, std::ostream& out) {
  const std::vector<IterationRecord> records = read_history_csv(path);
  char line[256];
  std::snprintf(line, sizeof line, "%4s %9s %9s %6s %12s %12s %12s %12s %12s\n", "iter", "vertices", "triangles",
                "dofs", "eta", "osc", "objective", "err_q", "err_u");
  out << line;
  for (const IterationRecord& r : records) {
    std::snprintf(line, sizeof line, "%4d %9zu %9zu %6zu %12.5e %12.5e %12.5e %12.5e %12.5e\n", r.iter, r.n_vertices,
                  r.n_triangles, r.n_flux_dofs, r.eta, r.osc, r.objective, r.errors.q, r.errors.u);
    out << line;
  }
  if (!records.empty()) {
    std::snprintf(line, sizeof line, "eta reduction %.4e over %zu iterations\n",
                  records.back().eta / records.front().eta, records.size());
    out << line;
  }
  return 0;
}

}  // namespace

LoopConfig RunConfig::loop_config() const {
  LoopConfig loop;
  loop.strategy = strategy;
  loop.theta = theta;
  loop.tol = tol;
  loop.max_iters = max_iters;
  loop.max_triangles = max_triangles;
  loop.solver.cg_tol = cg_tol;
  loop.solver.cg_max_iters = cg_max_iters;
  loop.solver.inner_solver = inner_solver;
  loop.record_errors = record_errors;
  return loop;
}

ProblemSpec RunConfig::problem_spec() const {
  ProblemSpec spec = builtin_problem(problem);
  if (beta) spec.coeffs.beta = *beta;
  spec.noise = noise;
  spec.seed = seed;
  return spec;
}

RunConfig parse_config(const std::string& text) {
  RunConfig config;
  std::istringstream is(text);
  std::string raw;
  int line_no = 0;
  while (std::getline(is, raw)) {
    ++line_no;
    const std::string line = trim(raw.substr(0, raw.find('#')));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const auto it = setters().find(key);
    if (it == setters().end()) {
      throw std::invalid_argument("line " + std::to_string(line_no) + ": unknown key '" + key + "'");
    }
    if (value.empty()) throw std::invalid_argument("line " + std::to_string(line_no) + ": missing value for " + key);
    it->second(config, value);
  }
  validate(config);
  return config;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream is = open_input(path);
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_config(ss.str());
}

std::string serialize_config(const RunConfig& c) {
  std::ostringstream os;
  os << "problem = " << c.problem << "\n"
     << "strategy = " << to_string(c.strategy) << "\n"
     << "theta = " << fmt_shortest(c.theta) << "\n"
     << "tol = " << fmt_shortest(c.tol) << "\n"
     << "beta = " << (c.beta ? fmt_shortest(*c.beta) : std::string("default")) << "\n"
     << "noise = " << fmt_shortest(c.noise) << "\n"
     << "seed = " << c.seed << "\n"
     << "max_iters = " << c.max_iters << "\n"
     << "max_triangles = " << c.max_triangles << "\n"
     << "cg_tol = " << fmt_shortest(c.cg_tol) << "\n"
     << "cg_max_iters = " << c.cg_max_iters << "\n"
     << "inner_solver = " << (c.inner_solver == InnerSolver::Direct ? "direct" : "cg") << "\n"
     << "measurement_levels = " << c.measurement_levels << "\n"
     << "record_errors = " << (c.record_errors ? "true" : "false") << "\n"
     << "refinement = " << (c.refinement == RefinementMode::Adaptive ? "adaptive" : "uniform") << "\n"
     << "output_dir = " << c.output_dir << "\n";
  return os.str();
}

void export_history_csv(const AdaptiveHistory& history, const std::filesystem::path& path) {
  if (history.records.empty()) throw std::invalid_argument("export_history_csv: empty history");
  std::ofstream os = open_output(path);
  os << kHistoryHeader << "\n";
  for (const IterationRecord& r : history.records) {
    os << r.iter << ',' << r.n_vertices << ',' << r.n_triangles << ',' << r.n_flux_dofs << ',' << fmt_double(r.eta)
       << ',' << fmt_double(r.eta1) << ',' << fmt_double(r.eta2) << ',' << fmt_double(r.osc) << ','
       << fmt_double(r.objective) << ',' << fmt_double(r.errors.q) << ',' << fmt_double(r.errors.u) << ','
       << fmt_double(r.errors.p) << "\n";
  }
  close_output(os, path);
}

std::vector<IterationRecord> read_history_csv(const std::filesystem::path& path) {
  std::ifstream is = open_input(path);
  std::string line;
  if (!std::getline(is, line) || trim(line) != kHistoryHeader) {
    throw std::runtime_error(path.string() + ": not a history file (header mismatch)");
  }
  std::vector<IterationRecord> records;
  int line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cells = split_csv(line);
    if (cells.size() != 12) {
      throw std::runtime_error(path.string() + ":" + std::to_string(line_no) + ": expected 12 columns");
    }
    const std::string where = path.string() + ":" + std::to_string(line_no);
    IterationRecord r;
    try {
      r.iter = static_cast<int>(parse_integer("iter", cells[0]));
      r.n_vertices = static_cast<std::size_t>(parse_integer("n_vertices", cells[1]));
      r.n_triangles = static_cast<std::size_t>(parse_integer("n_triangles", cells[2]));
      r.n_flux_dofs = static_cast<std::size_t>(parse_integer("n_flux_dofs", cells[3]));
      r.eta = parse_double("eta", cells[4]);
      r.eta1 = parse_double("eta1", cells[5]);
      r.eta2 = parse_double("eta2", cells[6]);
      r.osc = parse_double("osc", cells[7]);
      r.objective = parse_double("objective", cells[8]);
      r.errors.q = parse_double("err_q", cells[9]);
      r.errors.u = parse_double("err_u", cells[10]);
      r.errors.p = parse_double("err_p", cells[11]);
    } catch (const std::invalid_argument& e) {
      throw std::runtime_error(where + ": " + e.what());
    }
    records.push_back(r);
  }
  return records;
}

void export_vtk(const Mesh& mesh, const std::map<std::string, FeFunction>& fields, const std::filesystem::path& path) {
  for (const auto& [name, f] : fields) {
    if (f.values.size() != mesh.vertex_count()) {
      throw std::invalid_argument("export_vtk: field '" + name + "' does not match the mesh");
    }
    if (name.empty() || name.find_first_of(" \t\n") != std::string::npos) {
      throw std::invalid_argument("export_vtk: invalid field name '" + name + "'");
    }
  }
  std::ofstream os = open_output(path);
  os << "# vtk DataFile Version 3.0\nfluxrec\nASCII\nDATASET UNSTRUCTURED_GRID\n";
  os << "POINTS " << mesh.vertex_count() << " double\n";
  for (const Point& p : mesh.vertices()) os << fmt_shortest(p.x) << ' ' << fmt_shortest(p.y) << " 0\n";
  const std::size_t n = mesh.triangle_count();
  os << "CELLS " << n << ' ' << 4 * n << "\n";
  for (const Triangle& t : mesh.triangles()) os << "3 " << t.v[0] << ' ' << t.v[1] << ' ' << t.v[2] << "\n";
  os << "CELL_TYPES " << n << "\n";
  for (std::size_t i = 0; i < n; ++i) os << "5\n";
  if (!fields.empty()) os << "POINT_DATA " << mesh.vertex_count() << "\n";
  for (const auto& [name, f] : fields) {
    os << "SCALARS " << name << " double 1\nLOOKUP_TABLE default\n";
    for (double v : f.values) os << fmt_shortest(v) << "\n";
  }
  close_output(os, path);
}

void export_flux(const TraceFunction& q, const std::filesystem::path& path) {
  const Mesh& mesh = *q.space->mesh();
  std::ofstream os = open_output(path);
  bool first = true;
  for (const auto& chain : boundary_chains(mesh, BoundaryTag::GammaI)) {
    if (!first) os << "\n";
    first = false;
    double s = 0.0;
    for (std::size_t k = 0; k < chain.size(); ++k) {
      if (k > 0) s += norm(mesh.vertex(chain[k]) - mesh.vertex(chain[k - 1]));
      const double v = q.values[static_cast<std::size_t>(q.space->index_of(chain[k]))];
      os << fmt_double(s) << ' ' << fmt_double(v) << "\n";
    }
  }
  close_output(os, path);
}

void write_measurement(const Measurement& m, const std::filesystem::path& path) {
  std::ofstream os = open_output(path);
  bool first = true;
  for (const auto& chain : m.chains()) {
    if (!first) os << "\n";
    first = false;
    for (const MeasurementSample& s : chain) {
      os << fmt_double(s.x) << ' ' << fmt_double(s.y) << ' ' << fmt_double(s.value) << "\n";
    }
  }
  close_output(os, path);
}

Measurement read_measurement(const std::filesystem::path& path) {
  std::ifstream is = open_input(path);
  std::vector<std::vector<MeasurementSample>> chains(1);
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (trim(line).empty()) {
      if (!chains.back().empty()) chains.emplace_back();
      continue;
    }
    std::istringstream ls(line);
    MeasurementSample s;
    std::string extra;
    if (!(ls >> s.x >> s.y >> s.value) || (ls >> extra)) {
      throw std::runtime_error(path.string() + ":" + std::to_string(line_no) + ": expected 'x y value'");
    }
    chains.back().push_back(s);
  }
  if (chains.back().empty()) chains.pop_back();
  return Measurement(std::move(chains));
}

int cli_main(std::span<const std::string> args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Adaptive finite element reconstruction of an inaccessible boundary flux", "fluxrec"};
  app.require_subcommand(1);

  std::string config_path, out_dir;
  auto* run = app.add_subcommand("run", "Run the adaptive pipeline from a config file");
  run->add_option("--config", config_path, "Configuration file")->required();
  run->add_option("--out", out_dir, "Output directory (overrides output_dir)");

  std::string problem = "square_smooth", measurement_out;
  double noise = 0.0;
  std::uint64_t seed = 0;
  int levels = 12;
  auto* forward = app.add_subcommand("forward", "Generate a synthetic measurement");
  forward->add_option("--problem", problem, "Built-in problem")->capture_default_str();
  forward->add_option("--noise", noise, "Relative noise level in [0,1]")->check(CLI::Range(0.0, 1.0))->capture_default_str();
  forward->add_option("--seed", seed, "Noise seed")->capture_default_str();
  forward->add_option("--levels", levels, "Uniform refinement sweeps of the generation mesh")
      ->check(CLI::Range(2, 30))
      ->capture_default_str();
  forward->add_option("--out", measurement_out, "Measurement file")->required();

  std::string history_path;
  auto* report = app.add_subcommand("report", "Summarize a history CSV");
  report->add_option("--history", history_path, "History CSV")->required();

  std::vector<std::string> argv_storage{"fluxrec"};
  argv_storage.insert(argv_storage.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  for (const auto& a : argv_storage) argv.push_back(a.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n" << app.help();
    return 1;
  }

  try {
    if (*run) return run_command(config_path, out_dir, out);
    if (*forward) return forward_command(problem, noise, seed, levels, measurement_out, out);
    return report_command(history_path, out);
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace fluxrec
