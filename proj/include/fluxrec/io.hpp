#pragma once

// Plain-text run configuration, exporters and the command-line front end.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fluxrec/driver.hpp"
#include "fluxrec/fem.hpp"

namespace fluxrec {

enum class RefinementMode { Adaptive, Uniform };

struct RunConfig {
  std::string problem = "square_smooth";
  MarkingStrategy strategy = MarkingStrategy::Maximum;
  double theta = 0.5;
  double tol = 1e-3;
  std::optional<double> beta;  // overrides the benchmark value
  double noise = 0.0;
  std::uint64_t seed = 0;
  int max_iters = 20;
  std::size_t max_triangles = 50000;
  double cg_tol = 1e-10;
  int cg_max_iters = 1000;
  InnerSolver inner_solver = InnerSolver::Direct;
  int measurement_levels = 12;
  bool record_errors = false;
  RefinementMode refinement = RefinementMode::Adaptive;
  std::string output_dir = "out";

  bool operator==(const RunConfig&) const = default;

  LoopConfig loop_config() const;
  ProblemSpec problem_spec() const;
};

/// Parses "key = value" lines; '#' starts a comment. Throws
/// std::invalid_argument naming the line (syntax) or the key (range).
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::filesystem::path& path);
std::string serialize_config(const RunConfig& config);

void export_history_csv(const AdaptiveHistory& history, const std::filesystem::path& path);
std::vector<IterationRecord> read_history_csv(const std::filesystem::path& path);

/// Legacy ASCII VTK unstructured grid with one SCALARS block per field.
void export_vtk(const Mesh& mesh, const std::map<std::string, FeFunction>& fields, const std::filesystem::path& path);

/// Two columns "arclength value" along the Gamma_i chains, a blank line between chains.
void export_flux(const TraceFunction& q, const std::filesystem::path& path);

/// One "x y value" line per sample, a blank line between chains.
void write_measurement(const Measurement& m, const std::filesystem::path& path);
Measurement read_measurement(const std::filesystem::path& path);

/// Subcommands run, forward and report. Exit 0 on success, 1 on usage
/// errors, 2 on runtime failures. `args` excludes the program name.
int cli_main(std::span<const std::string> args, std::ostream& out, std::ostream& err);

}  // namespace fluxrec
