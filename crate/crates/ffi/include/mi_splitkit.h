#ifndef MI_SPLITKIT_H
#define MI_SPLITKIT_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stddef.h>
#include <stdint.h>

// Status codes. The solver outcomes share their values with the CLI exit codes.
typedef enum MiStatus {
  MI_STATUS_OK = 0,
  // Budget, nonconvergence, line-search stall or stagnation.
  MI_STATUS_FAILED = 2,
  MI_STATUS_DIVERGED = 3,
  // Unknown problem, malformed problem JSON or invalid solver parameters.
  MI_STATUS_CONFIG_ERROR = 4,
  // Null pointer, bad length or non-UTF-8 string.
  MI_STATUS_INVALID_ARGUMENT = 5,
  // A Rust panic was caught at the boundary.
  MI_STATUS_PANIC = 6,
} MiStatus;

typedef enum MiAlgo {
  // Perturbation outer loop; works for merely monotone problems.
  MI_ALGO_PDE = 0,
  // Requires a strong monotonicity modulus `mu > 0`.
  MI_ALGO_PDE_STRONG = 1,
  MI_ALGO_FBS = 2,
  MI_ALGO_FRBS = 3,
} MiAlgo;

// Opaque problem handle.
typedef struct MiProblem MiProblem;

// Opaque result handle.
typedef struct MiResult MiResult;

// Writes `F(x)` into `out`; both arrays have length `dim`. Return 0 on
// success and anything else when `x` is outside the domain.
typedef int (*MiOperatorFn)(void *user, const double *x, double *out, size_t dim);

// Solver parameters. Start from [`mi_params_default`] and override fields.
//
// Non-positive values of `gamma0`, `delta`, `nu`, `xi`, `rho0`, `tau0`,
// `zeta` and `sigma` select the library default. `kappa < 0` selects the
// largest admissible constant, `mu <= 0` uses the problem's modulus, and a
// zero `max_iters` / `max_f_evals` leaves the default cap in place.
typedef struct MiSolverParams {
  enum MiAlgo algo;
  double eps;
  double gamma0;
  double delta;
  double nu;
  double xi;
  double kappa;
  double mu;
  double rho0;
  double tau0;
  double zeta;
  double sigma;
  // Fixed step for `fbs` / `frbs`; must be positive there.
  double step;
  uint64_t max_iters;
  uint64_t max_f_evals;
} MiSolverParams;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string.
const char *mi_version(void);

// Message for the last failed call on this thread; empty after a success.
// The pointer stays valid until the next call into the library on this thread.
const char *mi_last_error_message(void);

// Creates a handle for a built-in problem such as `"cubic_a1"`.
//
// # Safety
// `name` must be a NUL-terminated string and `out` a valid pointer.
enum MiStatus mi_problem_builtin(const char *name, struct MiProblem **out);

// Creates a handle from the JSON problem format accepted by the CLI.
//
// # Safety
// `json` must be a NUL-terminated string and `out` a valid pointer.
enum MiStatus mi_problem_from_json(const char *json, struct MiProblem **out);

// Creates a problem `0 ∈ F(x) + N_C(x)` with `F` supplied by a callback and
// `C = {lo ≤ x ≤ hi}`. Pass null for both bounds to take `C = ℝⁿ`; infinite
// entries are allowed. `mu` is the strong monotonicity modulus (0 if none).
//
// # Safety
// `x0` (and `lo`, `hi` when non-null) must point to `dim` doubles. `eval`
// must stay callable with `user` until the problem is freed.
enum MiStatus mi_problem_from_callback(size_t dim,
                                       MiOperatorFn eval,
                                       void *user,
                                       const double *lo,
                                       const double *hi,
                                       double mu,
                                       const double *x0,
                                       struct MiProblem **out);

// # Safety
// `problem` must be null or a handle not yet freed.
void mi_problem_free(struct MiProblem *problem);

// Dimension of the problem, 0 for a null handle.
//
// # Safety
// `problem` must be null or a live handle.
size_t mi_problem_dim(const struct MiProblem *problem);

struct MiSolverParams mi_params_default(enum MiAlgo algo);

// Solves `problem`. A result handle is produced whenever the parameters are
// valid, including runs that fail to converge; the return value then
// matches [`mi_result_status`]. Configuration errors produce no handle.
//
// # Safety
// `problem` must be a live handle, `params` and `out` valid pointers.
enum MiStatus mi_solve(const struct MiProblem *problem,
                       const struct MiSolverParams *params,
                       struct MiResult **out);

// # Safety
// `result` must be null or a handle not yet freed.
void mi_result_free(struct MiResult *result);

// # Safety
// `result` must be a live handle.
enum MiStatus mi_result_status(const struct MiResult *result);

// Residual `‖v‖` of the final (or best) certificate; NaN when there is none.
//
// # Safety
// `result` must be null or a live handle.
double mi_result_residual(const struct MiResult *result);

// Length of the certificate vectors, 0 when there is no certificate.
//
// # Safety
// `result` must be null or a live handle.
size_t mi_result_dim(const struct MiResult *result);

// Copies the certificate point `x` into `buf` (at least [`mi_result_dim`] values).
//
// # Safety
// `buf` must be writable for `len` doubles.
enum MiStatus mi_result_x(const struct MiResult *result, double *buf, size_t len);

// Copies the certificate vector `v ∈ (F+B)(x)` into `buf`.
//
// # Safety
// `buf` must be writable for `len` doubles.
enum MiStatus mi_result_v(const struct MiResult *result, double *buf, size_t len);

// Accepted steps, or outer iterations for `pde`.
//
// # Safety
// `result` must be null or a live handle.
uint64_t mi_result_iterations(const struct MiResult *result);

// # Safety
// `result` must be null or a live handle.
uint64_t mi_result_f_evals(const struct MiResult *result);

// # Safety
// `result` must be null or a live handle.
uint64_t mi_result_resolvent_evals(const struct MiResult *result);

// Trace in the CLI's CSV format. Owned by the result handle.
//
// # Safety
// `result` must be null or a live handle.
const char *mi_result_trace_csv(const struct MiResult *result);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MI_SPLITKIT_H */
