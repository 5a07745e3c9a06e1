#ifndef BCOPT_BCOPT_H
#define BCOPT_BCOPT_H

#include <stddef.h>
#include <stdint.h>

#if defined(BCOPT_BUILDING_LIBRARY)
#define BCOPT_API __attribute__((visibility("default")))
#else
#define BCOPT_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum bcopt_status {
  BCOPT_OK = 0,
  BCOPT_INVALID_ARGUMENT = 1,
  BCOPT_VALIDATION = 2,
  BCOPT_NO_CONVERGENCE = 3,
  BCOPT_IO = 4,
  BCOPT_POINT_OUTSIDE = 5,
  BCOPT_SINGULAR = 6,
  BCOPT_NONLINEARITY = 7,
  BCOPT_INTERNAL = 8
} bcopt_status;

typedef struct bcopt_problem bcopt_problem;

/* Message of the last failed call on this thread ("" after success). */
BCOPT_API const char* bcopt_last_error(void);
BCOPT_API const char* bcopt_version(void);

BCOPT_API bcopt_status bcopt_problem_from_file(const char* path, bcopt_problem** out);
/* Relative mesh paths resolve against base_dir (NULL means "."). */
BCOPT_API bcopt_status bcopt_problem_from_json(const char* json, const char* base_dir, bcopt_problem** out);
BCOPT_API void bcopt_problem_destroy(bcopt_problem* problem);

BCOPT_API bcopt_status bcopt_set_seed(bcopt_problem* problem, uint64_t seed);

/* Vertex, triangle and control-group counts. Any pointer may be NULL. */
BCOPT_API bcopt_status bcopt_sizes(const bcopt_problem* problem, size_t* num_vertices, size_t* num_triangles,
                                   size_t* num_groups);

/* Controls and pbar are cellwise arrays of length num_triangles; states and
 * adjoints are nodal arrays of length num_vertices. */
BCOPT_API bcopt_status bcopt_initial_control(const bcopt_problem* problem, double* u);
BCOPT_API bcopt_status bcopt_solve_state(const bcopt_problem* problem, const double* u, double* y,
                                         int* newton_iterations);
BCOPT_API bcopt_status bcopt_solve_adjoint(const bcopt_problem* problem, const double* u, double* y, double* p);
BCOPT_API bcopt_status bcopt_eval_cost(const bcopt_problem* problem, const double* u, double* cost);
BCOPT_API bcopt_status bcopt_reduced_gradient(const bcopt_problem* problem, const double* u, double* pbar);
BCOPT_API bcopt_status bcopt_hessian_pair(const bcopt_problem* problem, const double* u, const double* h1,
                                          const double* h2, double* value);
BCOPT_API bcopt_status bcopt_project_box(const bcopt_problem* problem, const double* v, size_t n, double* out);

/* Runs a CLI subcommand, writing its artifacts to out_dir. Returns the
 * process exit code (0 ok, 1 validation, 2 no convergence, 3 io). */
BCOPT_API int bcopt_run(const bcopt_problem* problem, const char* subcommand, const char* out_dir, int quiet);

#ifdef __cplusplus
}
#endif

#endif
