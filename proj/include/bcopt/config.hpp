#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "bcopt/control.hpp"
#include "bcopt/diagnostics.hpp"

namespace bcopt {

struct SourceConfig {
  std::string kind = "constant";  // constant | manufactured
  double value = 0.0;
  double control = 1.0;    // manufactured: constant control the forcing is built for
  double amplitude = 1.0;  // manufactured: amplitude of sin(pi x) sin(pi y)
};

struct ControlGroupsConfig {
  std::string kind = "cells";  // cells | blocks
  int nx = 1;
  int ny = 1;
};

struct DiagnosticsConfig {
  std::vector<int> levels{8, 16, 32, 64};
  std::string manufactured_case = "cubic";
  std::vector<double> eps{1e-1, 1e-2, 1e-3, 1e-4, 1e-5};
  int pairs = 1;
  std::vector<double> radii{0.2, 0.1, 0.05};
  std::vector<int> regularity_levels{16, 32, 64};
  std::vector<double> decay_radii{0.2, 0.1, 0.05};
  int samples = 200;
  double tau = 0.0;  // 0 selects 10 stop_tol
};

/// Parsed and validated problem description.
struct ProblemConfig {
  std::optional<Rectangle> rectangle = Rectangle{};
  std::string mesh_file;  // resolved path, used when rectangle is empty
  int mesh_n = 16;
  std::string nonlinearity = "cubic";
  double nonlinearity_c = 0.0;
  SourceConfig source;
  TrackingData tracking;
  double alpha = 1e-2;
  Bounds bounds{0.0, 1.0};
  NewtonSettings newton;
  LinearSolverSettings linear;
  OptimizerConfig optimizer;
  ControlGroupsConfig control_groups;
  std::optional<double> control;  // constant control for solve-state / solve-adjoint
  DiagnosticsConfig diagnostics;
};

/// Reads and validates a JSON configuration. Relative mesh paths resolve
/// against the directory of the file. Throws IoError when the file cannot
/// be read and ValidationError listing every problem otherwise.
ProblemConfig parse_config(const std::string& path);
/// Same for JSON text; relative paths resolve against `base_dir`.
ProblemConfig parse_config_text(const std::string& text, const std::string& base_dir = ".");

/// Every violated invariant of an already populated config, one message each.
std::vector<std::string> validation_errors(const ProblemConfig& config);

/// The mesh described by the config (structured or imported).
std::shared_ptr<const Mesh> build_mesh(const ProblemConfig& config);
ControlProblem build_problem(const ProblemConfig& config);
ControlProblem build_problem(const ProblemConfig& config, std::shared_ptr<const Mesh> mesh);

}  // namespace bcopt
