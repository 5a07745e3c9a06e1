#include "bcopt/bcopt.h"

#include <algorithm>
#include <iostream>
#include <optional>
#include <string>

#include "bcopt/config.hpp"
#include "bcopt/pipeline.hpp"

struct bcopt_problem {
  bcopt::ProblemConfig config;
  bcopt::ControlProblem problem;
  std::optional<std::uint64_t> seed;
};

namespace {

thread_local std::string last_error;

bcopt_status status_for(bcopt::ErrorCode code) {
  switch (code) {
    case bcopt::ErrorCode::invalid_argument: return BCOPT_INVALID_ARGUMENT;
    case bcopt::ErrorCode::validation: return BCOPT_VALIDATION;
    case bcopt::ErrorCode::no_convergence: return BCOPT_NO_CONVERGENCE;
    case bcopt::ErrorCode::io: return BCOPT_IO;
    case bcopt::ErrorCode::point_outside_domain: return BCOPT_POINT_OUTSIDE;
    case bcopt::ErrorCode::singular_matrix: return BCOPT_SINGULAR;
    case bcopt::ErrorCode::nonlinearity_evaluation: return BCOPT_NONLINEARITY;
  }
  return BCOPT_INTERNAL;
}

template <class F>
bcopt_status guarded(F&& f) {
  try {
    f();
    last_error.clear();
    return BCOPT_OK;
  } catch (const bcopt::Error& e) {
    last_error = e.what();
    return status_for(e.code());
  } catch (const std::exception& e) {
    last_error = std::string("internal error: ") + e.what();
    return BCOPT_INTERNAL;
  } catch (...) {
    last_error = "internal error";
    return BCOPT_INTERNAL;
  }
}

void require(bool ok, const char* what) {
  if (!ok) throw bcopt::InvalidArgument(what);
}

bcopt::CellVector cells(const bcopt_problem* p, const double* u) {
  return bcopt::CellVector(u, u + p->problem.mesh().num_triangles());
}

void copy_out(const std::vector<double>& v, double* out) {
  if (out) std::copy(v.begin(), v.end(), out);
}

bcopt_status make(bcopt::ProblemConfig config, bcopt_problem** out) {
  auto* p = new bcopt_problem{std::move(config), {}, std::nullopt};
  const bcopt_status s = guarded([&] { p->problem = bcopt::build_problem(p->config); });
  if (s != BCOPT_OK) {
    delete p;
    return s;
  }
  *out = p;
  return BCOPT_OK;
}

}  // namespace

extern "C" {

const char* bcopt_last_error(void) { return last_error.c_str(); }

const char* bcopt_version(void) { return "1.0.0"; }

bcopt_status bcopt_problem_from_file(const char* path, bcopt_problem** out) {
  bcopt::ProblemConfig config;
  const bcopt_status s = guarded([&] {
    require(path && out, "bcopt_problem_from_file: null argument");
    *out = nullptr;
    config = bcopt::parse_config(path);
  });
  return s == BCOPT_OK ? make(std::move(config), out) : s;
}

bcopt_status bcopt_problem_from_json(const char* json, const char* base_dir, bcopt_problem** out) {
  bcopt::ProblemConfig config;
  const bcopt_status s = guarded([&] {
    require(json && out, "bcopt_problem_from_json: null argument");
    *out = nullptr;
    config = bcopt::parse_config_text(json, base_dir ? base_dir : ".");
  });
  return s == BCOPT_OK ? make(std::move(config), out) : s;
}

void bcopt_problem_destroy(bcopt_problem* problem) { delete problem; }

bcopt_status bcopt_set_seed(bcopt_problem* problem, uint64_t seed) {
  return guarded([&] {
    require(problem, "bcopt_set_seed: null problem");
    problem->seed = seed;
  });
}

bcopt_status bcopt_sizes(const bcopt_problem* problem, size_t* num_vertices, size_t* num_triangles,
                         size_t* num_groups) {
  return guarded([&] {
    require(problem, "bcopt_sizes: null problem");
    if (num_vertices) *num_vertices = problem->problem.mesh().num_vertices();
    if (num_triangles) *num_triangles = problem->problem.mesh().num_triangles();
    if (num_groups) *num_groups = problem->problem.space->size();
  });
}

bcopt_status bcopt_initial_control(const bcopt_problem* problem, double* u) {
  return guarded([&] {
    require(problem && u, "bcopt_initial_control: null argument");
    copy_out(problem->problem.space->expand(bcopt::default_initial_control(problem->problem)), u);
  });
}

bcopt_status bcopt_solve_state(const bcopt_problem* problem, const double* u, double* y, int* newton_iterations) {
  return guarded([&] {
    require(problem && u, "bcopt_solve_state: null argument");
    const bcopt::StateSolution s = problem->problem.pde->solve_state(cells(problem, u));
    copy_out(s.y, y);
    if (newton_iterations) *newton_iterations = s.iterations;
  });
}

bcopt_status bcopt_solve_adjoint(const bcopt_problem* problem, const double* u, double* y, double* p) {
  return guarded([&] {
    require(problem && u, "bcopt_solve_adjoint: null argument");
    const auto e = bcopt::ReducedFunctional(problem->problem).evaluate(cells(problem, u));
    copy_out(e.triple.y, y);
    copy_out(e.triple.p, p);
  });
}

bcopt_status bcopt_eval_cost(const bcopt_problem* problem, const double* u, double* cost) {
  return guarded([&] {
    require(problem && u && cost, "bcopt_eval_cost: null argument");
    *cost = bcopt::ReducedFunctional(problem->problem).cost(cells(problem, u));
  });
}

bcopt_status bcopt_reduced_gradient(const bcopt_problem* problem, const double* u, double* pbar) {
  return guarded([&] {
    require(problem && u && pbar, "bcopt_reduced_gradient: null argument");
    copy_out(bcopt::ReducedFunctional(problem->problem).evaluate(cells(problem, u)).triple.pbar, pbar);
  });
}

bcopt_status bcopt_hessian_pair(const bcopt_problem* problem, const double* u, const double* h1, const double* h2,
                                double* value) {
  return guarded([&] {
    require(problem && u && h1 && h2 && value, "bcopt_hessian_pair: null argument");
    *value = bcopt::ReducedFunctional(problem->problem)
                 .hessian_pair(cells(problem, u), cells(problem, h1), cells(problem, h2));
  });
}

bcopt_status bcopt_project_box(const bcopt_problem* problem, const double* v, size_t n, double* out) {
  return guarded([&] {
    require(problem && (n == 0 || (v && out)), "bcopt_project_box: null argument");
    copy_out(bcopt::project_box(std::vector<double>(v, v + n), problem->problem.bounds), out);
  });
}

int bcopt_run(const bcopt_problem* problem, const char* subcommand, const char* out_dir, int quiet) {
  if (!problem || !subcommand || !out_dir) {
    last_error = "bcopt_run: null argument";
    return bcopt::exit_validation;
  }
  bcopt::RunOptions options;
  options.seed = problem->seed;
  options.log = quiet ? nullptr : &std::cout;
  const bcopt::RunResult r = bcopt::run(subcommand, problem->config, out_dir, options);
  last_error = r.message;
  return r.exit_code;
}

}  // extern "C"
