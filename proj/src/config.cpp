#include "bcopt/config.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "bcopt/error.hpp"
#include "bcopt/io.hpp"
#include "json.hpp"

namespace bcopt {

namespace {

using nlohmann::json;

// Collects type and range problems while reading; reading never stops at
// the first error.
class Reader {
 public:
  explicit Reader(std::vector<std::string>& errors) : errors_(errors) {}

  void keys(const json& obj, const std::string& path, std::initializer_list<const char*> allowed) {
    std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& [key, value] : obj.items()) {
      if (!ok.count(key)) errors_.push_back(where(path, key) + ": unknown key");
    }
  }

  bool object(const json& obj, const std::string& path) {
    if (obj.is_object()) return true;
    errors_.push_back(path + ": expected an object");
    return false;
  }

  template <class T>
  void number(const json& obj, const std::string& path, const char* key, T& out) {
    if (!obj.contains(key)) return;
    const json& v = obj.at(key);
    if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer()) {
        errors_.push_back(where(path, key) + ": expected an integer");
        return;
      }
      if constexpr (std::is_unsigned_v<T>) {
        if (v.is_number_unsigned() || v.get<long long>() >= 0) {
          out = v.get<T>();
        } else {
          errors_.push_back(where(path, key) + ": expected a non-negative integer");
        }
      } else {
        out = v.get<T>();
      }
    } else {
      if (!v.is_number()) {
        errors_.push_back(where(path, key) + ": expected a number");
        return;
      }
      out = v.get<T>();
    }
  }

  void string(const json& obj, const std::string& path, const char* key, std::string& out) {
    if (!obj.contains(key)) return;
    if (!obj.at(key).is_string()) {
      errors_.push_back(where(path, key) + ": expected a string");
      return;
    }
    out = obj.at(key).get<std::string>();
  }

  template <class T>
  void list(const json& obj, const std::string& path, const char* key, std::vector<T>& out) {
    if (!obj.contains(key)) return;
    const json& v = obj.at(key);
    bool good = v.is_array();
    for (const json& e : v) {
      if (!good) break;
      good = std::is_integral_v<T> ? e.is_number_integer() : e.is_number();
    }
    if (!good) {
      errors_.push_back(where(path, key) +
                        (std::is_integral_v<T> ? ": expected a list of integers" : ": expected a list of numbers"));
      return;
    }
    out = v.get<std::vector<T>>();
  }

  bool pair(const json& v, const std::string& path, double& a, double& b) {
    if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) {
      errors_.push_back(path + ": expected a pair of numbers");
      return false;
    }
    a = v[0].get<double>();
    b = v[1].get<double>();
    return true;
  }

  static std::string where(const std::string& path, const std::string& key) {
    return path.empty() ? key : path + "." + key;
  }

 private:
  std::vector<std::string>& errors_;
};

ProblemConfig from_json(const json& root, const std::string& base_dir, std::vector<std::string>& errors) {
  ProblemConfig c;
  Reader r(errors);
  if (!r.object(root, "config")) return c;
  r.keys(root, "", {"domain", "mesh_n", "nonlinearity", "source", "tracking", "alpha", "bounds", "newton",
                    "linear_solver", "optimizer", "control_groups", "control", "diagnostics"});

  if (root.contains("domain") && r.object(root["domain"], "domain")) {
    const json& d = root["domain"];
    r.keys(d, "domain", {"rectangle", "mesh_file"});
    if (d.contains("rectangle") && d.contains("mesh_file")) {
      errors.push_back("domain: give either rectangle or mesh_file, not both");
    } else if (d.contains("mesh_file")) {
      std::string file;
      r.string(d, "domain", "mesh_file", file);
      if (!file.empty()) {
        std::filesystem::path p(file);
        if (p.is_relative()) p = std::filesystem::path(base_dir) / p;
        c.mesh_file = p.string();
        c.rectangle.reset();
      }
    } else if (d.contains("rectangle")) {
      const json& rect = d["rectangle"];
      if (!rect.is_array() || rect.size() != 4 ||
          !std::all_of(rect.begin(), rect.end(), [](const json& e) { return e.is_number(); })) {
        errors.push_back("domain.rectangle: expected [x0, y0, x1, y1]");
      } else {
        c.rectangle = Rectangle{rect[0].get<double>(), rect[1].get<double>(), rect[2].get<double>(),
                                rect[3].get<double>()};
      }
    }
  }
  r.number(root, "", "mesh_n", c.mesh_n);

  if (root.contains("nonlinearity")) {
    const json& nl = root["nonlinearity"];
    if (nl.is_string()) {
      c.nonlinearity = nl.get<std::string>();
    } else if (r.object(nl, "nonlinearity")) {
      r.keys(nl, "nonlinearity", {"label", "c"});
      r.string(nl, "nonlinearity", "label", c.nonlinearity);
      r.number(nl, "nonlinearity", "c", c.nonlinearity_c);
    }
  }

  if (root.contains("source") && r.object(root["source"], "source")) {
    const json& s = root["source"];
    r.keys(s, "source", {"kind", "value", "control", "amplitude"});
    r.string(s, "source", "kind", c.source.kind);
    r.number(s, "source", "value", c.source.value);
    r.number(s, "source", "control", c.source.control);
    r.number(s, "source", "amplitude", c.source.amplitude);
  }

  if (root.contains("tracking")) {
    const json& t = root["tracking"];
    if (!t.is_array()) {
      errors.push_back("tracking: expected a list of {point, target}");
    } else {
      for (std::size_t k = 0; k < t.size(); ++k) {
        const std::string path = "tracking[" + std::to_string(k) + "]";
        if (!r.object(t[k], path)) continue;
        r.keys(t[k], path, {"point", "target"});
        Point p;
        double target = 0.0;
        bool ok = true;
        if (!t[k].contains("point")) {
          errors.push_back(path + ".point: missing");
          ok = false;
        } else {
          ok = r.pair(t[k]["point"], path + ".point", p.x, p.y);
        }
        if (!t[k].contains("target")) {
          errors.push_back(path + ".target: missing");
          ok = false;
        } else if (!t[k]["target"].is_number()) {
          errors.push_back(path + ".target: expected a number");
          ok = false;
        } else {
          target = t[k]["target"].get<double>();
        }
        if (ok) {
          c.tracking.points.push_back(p);
          c.tracking.targets.push_back(target);
        }
      }
    }
  }

  r.number(root, "", "alpha", c.alpha);
  if (root.contains("bounds")) r.pair(root["bounds"], "bounds", c.bounds.lower, c.bounds.upper);

  if (root.contains("newton") && r.object(root["newton"], "newton")) {
    r.keys(root["newton"], "newton", {"tol", "max_iter", "max_halvings"});
    r.number(root["newton"], "newton", "tol", c.newton.tol);
    r.number(root["newton"], "newton", "max_iter", c.newton.max_iter);
    r.number(root["newton"], "newton", "max_halvings", c.newton.max_halvings);
  }
  if (root.contains("linear_solver") && r.object(root["linear_solver"], "linear_solver")) {
    r.keys(root["linear_solver"], "linear_solver", {"tol", "max_iter"});
    r.number(root["linear_solver"], "linear_solver", "tol", c.linear.tol);
    r.number(root["linear_solver"], "linear_solver", "max_iter", c.linear.max_iter);
  }
  if (root.contains("optimizer") && r.object(root["optimizer"], "optimizer")) {
    const json& o = root["optimizer"];
    r.keys(o, "optimizer", {"initial_step", "armijo", "backtrack", "max_backtracks", "stop_tol", "max_outer",
                            "multistart", "seed"});
    r.number(o, "optimizer", "initial_step", c.optimizer.initial_step);
    r.number(o, "optimizer", "armijo", c.optimizer.armijo);
    r.number(o, "optimizer", "backtrack", c.optimizer.backtrack);
    r.number(o, "optimizer", "max_backtracks", c.optimizer.max_backtracks);
    r.number(o, "optimizer", "stop_tol", c.optimizer.stop_tol);
    r.number(o, "optimizer", "max_outer", c.optimizer.max_outer);
    r.number(o, "optimizer", "multistart", c.optimizer.multistart);
    r.number(o, "optimizer", "seed", c.optimizer.seed);
  }
  if (root.contains("control_groups") && r.object(root["control_groups"], "control_groups")) {
    const json& g = root["control_groups"];
    r.keys(g, "control_groups", {"kind", "nx", "ny"});
    r.string(g, "control_groups", "kind", c.control_groups.kind);
    r.number(g, "control_groups", "nx", c.control_groups.nx);
    r.number(g, "control_groups", "ny", c.control_groups.ny);
  }
  if (root.contains("control")) {
    double v = 0.0;
    r.number(root, "", "control", v);
    if (root["control"].is_number()) c.control = v;
  }
  if (root.contains("diagnostics") && r.object(root["diagnostics"], "diagnostics")) {
    const json& d = root["diagnostics"];
    DiagnosticsConfig& dc = c.diagnostics;
    r.keys(d, "diagnostics", {"levels", "case", "eps", "pairs", "radii", "regularity_levels", "decay_radii",
                              "samples", "tau"});
    r.list(d, "diagnostics", "levels", dc.levels);
    r.string(d, "diagnostics", "case", dc.manufactured_case);
    r.list(d, "diagnostics", "eps", dc.eps);
    r.number(d, "diagnostics", "pairs", dc.pairs);
    r.list(d, "diagnostics", "radii", dc.radii);
    r.list(d, "diagnostics", "regularity_levels", dc.regularity_levels);
    r.list(d, "diagnostics", "decay_radii", dc.decay_radii);
    r.number(d, "diagnostics", "samples", dc.samples);
    r.number(d, "diagnostics", "tau", dc.tau);
  }
  return c;
}

std::string format(double v) {
  std::ostringstream s;
  s << v;
  return s.str();
}

bool doubling(const std::vector<int>& levels) {
  for (std::size_t k = 0; k + 1 < levels.size(); ++k) {
    if (levels[k + 1] != 2 * levels[k]) return false;
  }
  return true;
}

bool strictly_decreasing_positive(const std::vector<double>& v) {
  for (std::size_t k = 0; k < v.size(); ++k) {
    if (!(v[k] > 0.0) || (k > 0 && !(v[k] < v[k - 1]))) return false;
  }
  return true;
}

// Fields that failed to read keep their (valid) defaults, so type errors and
// semantic violations never report the same field twice.
ProblemConfig finish(ProblemConfig c, std::vector<std::string> errors) {
  for (std::string& m : validation_errors(c)) errors.push_back(std::move(m));
  if (!errors.empty()) throw ValidationError(std::move(errors));
  return c;
}

}  // namespace

std::vector<std::string> validation_errors(const ProblemConfig& c) {
  std::vector<std::string> e;

  std::shared_ptr<const Mesh> mesh;
  if (c.rectangle) {
    const Rectangle& r = *c.rectangle;
    if (!(r.x1 > r.x0) || !(r.y1 > r.y0)) e.push_back("domain.rectangle: side lengths must be positive");
    if (c.mesh_n < 1) e.push_back("mesh_n: must be >= 1 (got " + std::to_string(c.mesh_n) + ")");
  } else {
    try {
      mesh = std::make_shared<Mesh>(read_mesh_file(c.mesh_file));
    } catch (const InvalidArgument& ex) {
      e.push_back(std::string("domain.mesh_file: invalid mesh: ") + ex.what());
    }
  }

  const bool known_label = c.nonlinearity == "zero" || c.nonlinearity == "cubic" || c.nonlinearity == "atan" ||
                           c.nonlinearity == "linear_shift";
  std::optional<Nonlinearity> nl;
  if (!known_label) {
    e.push_back("nonlinearity.label: unknown '" + c.nonlinearity + "' (expected zero, cubic, atan or linear_shift)");
  } else {
    nl = Nonlinearity::from_label(c.nonlinearity, c.nonlinearity_c);
    std::vector<Point> samples;
    if (c.rectangle) {
      for (int i = 0; i <= 4; ++i)
        for (int j = 0; j <= 4; ++j) {
          samples.push_back({c.rectangle->x0 + (c.rectangle->x1 - c.rectangle->x0) * i / 4.0,
                             c.rectangle->y0 + (c.rectangle->y1 - c.rectangle->y0) * j / 4.0});
        }
    } else if (mesh) {
      samples = mesh->vertices();
    }
    for (const std::string& m : check_nonlinearity(*nl, samples)) e.push_back("nonlinearity: " + m);
    double worst = std::numeric_limits<double>::infinity();
    for (const Point& x : samples) worst = std::min(worst, nl->a0(x) + c.bounds.lower);
    if (!samples.empty() && worst < 0.0) {
      e.push_back("bounds: a0 + a >= 0 is violated (a = " + format(c.bounds.lower) + ", min a0 + a = " +
                  format(worst) + " for nonlinearity " + c.nonlinearity + ")");
    }
  }

  if (c.source.kind == "manufactured") {
    if (!c.rectangle || c.rectangle->x0 != 0.0 || c.rectangle->y0 != 0.0 || c.rectangle->x1 != 1.0 ||
        c.rectangle->y1 != 1.0) {
      e.push_back("source: the manufactured forcing is defined on the unit square only");
    }
  } else if (c.source.kind != "constant") {
    e.push_back("source.kind: unknown '" + c.source.kind + "' (expected constant or manufactured)");
  }

  if (!(c.alpha > 0.0)) e.push_back("alpha: must be positive (got " + format(c.alpha) + ")");
  if (!(c.bounds.lower < c.bounds.upper)) {
    e.push_back("bounds: a < b is required (got [" + format(c.bounds.lower) + ", " + format(c.bounds.upper) + "])");
  }

  for (std::size_t k = 0; k < c.tracking.size(); ++k) {
    const Point p = c.tracking.points[k];
    const std::string path = "tracking[" + std::to_string(k) + "].point";
    bool interior = false;
    if (c.rectangle) {
      const Rectangle& r = *c.rectangle;
      interior = p.x > r.x0 && p.x < r.x1 && p.y > r.y0 && p.y < r.y1;
    } else if (mesh) {
      try {
        locate_point(*mesh, p);
        interior = distance_to_boundary(*mesh, p) > 1e-12 * mesh->h_max();
      } catch (const PointOutsideDomain&) {
        interior = false;
      }
    } else {
      interior = true;  // no mesh to check against; the mesh error is already reported
    }
    if (!interior) {
      e.push_back(path + ": (" + format(p.x) + ", " + format(p.y) + ") is not strictly inside the domain");
    }
    for (std::size_t j = 0; j < k; ++j) {
      if (c.tracking.points[j].x == p.x && c.tracking.points[j].y == p.y) {
        e.push_back(path + ": duplicates tracking[" + std::to_string(j) + "].point");
      }
    }
    if (!std::isfinite(c.tracking.targets[k])) e.push_back("tracking[" + std::to_string(k) + "].target: not finite");
  }

  if (!(c.newton.tol > 0.0)) e.push_back("newton.tol: must be positive");
  if (c.newton.max_iter < 1) e.push_back("newton.max_iter: must be >= 1");
  if (c.newton.max_halvings < 0) e.push_back("newton.max_halvings: must be >= 0");
  if (!(c.linear.tol > 0.0)) e.push_back("linear_solver.tol: must be positive");
  if (c.linear.max_iter < 1) e.push_back("linear_solver.max_iter: must be >= 1");
  try {
    validate(c.optimizer);
  } catch (const ValidationError& v) {
    for (const auto& m : v.violations()) e.push_back(m);
  }

  if (c.control_groups.kind == "blocks") {
    if (c.control_groups.nx < 1 || c.control_groups.ny < 1) e.push_back("control_groups: nx and ny must be >= 1");
  } else if (c.control_groups.kind != "cells") {
    e.push_back("control_groups.kind: unknown '" + c.control_groups.kind + "' (expected cells or blocks)");
  }

  if (c.control) {
    const double v = *c.control;
    if (v < c.bounds.lower || v > c.bounds.upper) {
      e.push_back("control: " + format(v) + " lies outside [" + format(c.bounds.lower) + ", " +
                  format(c.bounds.upper) + "]");
    }
  }

  const DiagnosticsConfig& d = c.diagnostics;
  if (d.levels.size() < 3 || !doubling(d.levels) || d.levels.front() < 1) {
    e.push_back("diagnostics.levels: need at least 3 levels, each doubling the previous");
  }
  if (d.manufactured_case != "cubic" && d.manufactured_case != "linear" && d.manufactured_case != "zero") {
    e.push_back("diagnostics.case: unknown '" + d.manufactured_case + "' (expected cubic, linear or zero)");
  }
  if (d.eps.empty() || !strictly_decreasing_positive(d.eps)) {
    e.push_back("diagnostics.eps: must be positive and strictly decreasing");
  }
  if (d.pairs < 1) e.push_back("diagnostics.pairs: must be >= 1");
  if (d.radii.size() < 2 || !strictly_decreasing_positive(d.radii)) {
    e.push_back("diagnostics.radii: need at least two positive, strictly decreasing radii");
  }
  if (d.regularity_levels.empty() || d.regularity_levels.front() < 1) {
    e.push_back("diagnostics.regularity_levels: need at least one level >= 1");
  }
  if (!strictly_decreasing_positive(d.decay_radii)) {
    e.push_back("diagnostics.decay_radii: must be positive and strictly decreasing");
  }
  if (d.samples < 1) e.push_back("diagnostics.samples: must be >= 1");
  if (d.tau < 0.0) e.push_back("diagnostics.tau: must be >= 0");
  return e;
}

ProblemConfig parse_config_text(const std::string& text, const std::string& base_dir) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& ex) {
    std::size_t line = 1, column = 1;
    const std::size_t end = std::min<std::size_t>(ex.byte == 0 ? 0 : ex.byte - 1, text.size());
    for (std::size_t i = 0; i < end; ++i) {
      if (text[i] == '\n') {
        ++line;
        column = 1;
      } else {
        ++column;
      }
    }
    std::string what = ex.what();
    const auto pos = what.find("parse error");
    if (pos != std::string::npos) what = what.substr(pos);
    throw ValidationError({"JSON parse error at line " + std::to_string(line) + ", column " +
                           std::to_string(column) + ": " + what});
  }
  std::vector<std::string> errors;
  ProblemConfig c = from_json(root, base_dir, errors);
  return finish(std::move(c), std::move(errors));
}

ProblemConfig parse_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file '" + path + "'");
  std::ostringstream text;
  text << in.rdbuf();
  const std::filesystem::path dir = std::filesystem::path(path).parent_path();
  return parse_config_text(text.str(), dir.empty() ? "." : dir.string());
}

std::shared_ptr<const Mesh> build_mesh(const ProblemConfig& c) {
  if (c.rectangle) return std::make_shared<Mesh>(build_structured_mesh(c.mesh_n, *c.rectangle));
  return std::make_shared<Mesh>(read_mesh_file(c.mesh_file));
}

ControlProblem build_problem(const ProblemConfig& c) { return build_problem(c, build_mesh(c)); }

ControlProblem build_problem(const ProblemConfig& c, std::shared_ptr<const Mesh> mesh) {
  const Nonlinearity nl = Nonlinearity::from_label(c.nonlinearity, c.nonlinearity_c);
  const Source f = c.source.kind == "manufactured" ? Source::manufactured(nl, c.source.control, c.source.amplitude)
                                                   : Source::constant(c.source.value);
  ControlProblem p;
  p.pde = std::make_shared<PdeSystem>(mesh, nl, f, c.newton, c.linear);
  p.tracking = c.tracking;
  p.alpha = c.alpha;
  p.bounds = c.bounds;
  if (c.control_groups.kind == "blocks") {
    p.space = std::make_shared<ControlSpace>(ControlSpace::blocks(*mesh, c.control_groups.nx, c.control_groups.ny));
  } else {
    p.space = std::make_shared<ControlSpace>(*mesh);
  }
  return p;
}

}  // namespace bcopt
