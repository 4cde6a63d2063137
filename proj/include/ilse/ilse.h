#ifndef ILSE_ILSE_H
#define ILSE_ILSE_H

/*
 * C interface to the ILSE solver and backward-error library.
 *
 * Every function returns an ilse_status; on failure the message is available
 * from ilse_last_error() on the same thread. Strings returned through char**
 * are owned by the caller and released with ilse_string_free(). Matrices are
 * passed column-major.
 */

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(_WIN32)
#define ILSE_API __declspec(dllexport)
#else
#define ILSE_API __attribute__((visibility("default")))
#endif

typedef enum ilse_status {
  ILSE_OK = 0,
  ILSE_ERR_INVALID_ARGUMENT = 1,
  ILSE_ERR_DIMENSION_MISMATCH = 2,
  ILSE_ERR_INVALID_WEIGHT = 3,
  ILSE_ERR_NOT_WELL_POSED = 4,
  ILSE_ERR_PRECONDITION = 5,
  ILSE_ERR_RANK_DEFICIENT = 6,
  ILSE_ERR_INFINITE_TAU = 7,
  ILSE_ERR_IO = 8,
  ILSE_ERR_PROPERTY_FAILURE = 9,
  ILSE_ERR_INTERNAL = 10
} ilse_status;

typedef struct ilse_problem ilse_problem;
typedef struct ilse_solution ilse_solution;

typedef struct ilse_gen_params {
  int64_t m, n, s, p, q;
  double kappa_A;
  double kappa_B;
  uint64_t seed;
  double hyper_bound;
} ilse_gen_params;

typedef struct ilse_weights {
  double theta1, theta2, theta3;
} ilse_weights;

ILSE_API const char* ilse_last_error(void);
ILSE_API const char* ilse_status_name(ilse_status status);
ILSE_API void ilse_string_free(char* str);

/* Problems ---------------------------------------------------------------- */

/* A is m x n, B is s x n, both column-major; sig = diag(I_p, -I_q), p + q = m. */
ILSE_API ilse_status ilse_problem_create(const double* A, const double* b, const double* B, const double* d,
                                         int64_t m, int64_t n, int64_t s, int64_t p, int64_t q,
                                         ilse_problem** out);
ILSE_API void ilse_problem_free(ilse_problem* problem);
ILSE_API ilse_status ilse_problem_dims(const ilse_problem* problem, int64_t* m, int64_t* n, int64_t* s,
                                       int64_t* p, int64_t* q);
ILSE_API ilse_status ilse_problem_load(const char* dir, ilse_problem** out);
ILSE_API ilse_status ilse_problem_save(const ilse_problem* problem, const char* dir);

/* Fills in the defaults: 100 x 50 with 20 constraints, p = 60, q = 40. */
ILSE_API void ilse_gen_params_default(ilse_gen_params* params);
/* achieved_kappa_A may be NULL. */
ILSE_API ilse_status ilse_generate(const ilse_gen_params* params, ilse_problem** out, double* achieved_kappa_A);
/* (A + E, b + f, B + F, d + g) with a seeded Gaussian perturbation of size eps. */
ILSE_API ilse_status ilse_problem_perturb(const ilse_problem* problem, double eps, uint64_t seed,
                                          ilse_problem** out);

/* Well-posedness as JSON: rank_ok, projected_pd_ok, min_projected_eig. */
ILSE_API ilse_status ilse_check_well_posedness(const ilse_problem* problem, char** json_out);

/* Solving ---------------------------------------------------------------- */

/* Fails with ILSE_ERR_PRECONDITION if the problem is not well posed. */
ILSE_API ilse_status ilse_solve(const ilse_problem* problem, ilse_solution** out);
/* The augmented solve without the well-posedness check. */
ILSE_API ilse_status ilse_solve_augmented(const ilse_problem* problem, ilse_solution** out);
ILSE_API void ilse_solution_free(ilse_solution* solution);
/* Copy x (length n) or xi (length s) into a caller buffer of length len. */
ILSE_API ilse_status ilse_solution_x(const ilse_solution* solution, double* x, int64_t len);
ILSE_API ilse_status ilse_solution_xi(const ilse_solution* solution, double* xi, int64_t len);
/* Relative augmented residual and the two normal-equation residual norms. */
ILSE_API ilse_status ilse_solution_residuals(const ilse_problem* problem, const ilse_solution* solution,
                                             double* gamma, double* r1_norm, double* r2_norm);

/* Backward error ---------------------------------------------------------- */

/* Report for candidate y (length n) as JSON. xi0 (length s) and weights may
 * be NULL; NULL weights select theta = (1, 1, 1). */
ILSE_API ilse_status ilse_backward_error(const ilse_problem* problem, const double* y, int64_t n,
                                         const double* xi0, int64_t s, const ilse_weights* weights,
                                         char** json_out);

/* Experiments ------------------------------------------------------------- */

/* Runs an experiment described by a JSON config and returns the formatted
 * table. failed_rows may be NULL. If every row failed the table is still
 * returned, together with ILSE_ERR_NOT_WELL_POSED. */
ILSE_API ilse_status ilse_experiment_run(const char* config_json, char** table_out, int* failed_rows);

/* Runs the property suite. format is "text" or "json". all_ok may be NULL; a
 * failing suite returns ILSE_ERR_PROPERTY_FAILURE with the report filled in. */
ILSE_API ilse_status ilse_verify(int instances, uint64_t seed, int inject_fault, const char* format,
                                 char** report_out, int* all_ok);

#ifdef __cplusplus
}
#endif

#endif
