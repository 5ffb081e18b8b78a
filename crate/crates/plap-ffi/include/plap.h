/* C interface to the radial p-Laplace shooting solver. */

#ifndef PLAP_H
#define PLAP_H

/* Generated by cbindgen from the plap-ffi crate; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status of one audited hypothesis in a [`PlapReport`].
 */
typedef enum PlapCheckStatus {
  /**
   * The hypothesis holds (verified exactly where possible).
   */
  PlapCheckStatus_Pass = 0,
  /**
   * The hypothesis fails; the entry carries a witness when one exists.
   */
  PlapCheckStatus_Fail = 1,
  /**
   * The hypothesis does not apply to this problem family.
   */
  PlapCheckStatus_NotApplicable = 2,
} PlapCheckStatus;

/**
 * Outcome of a library call. `Ok` is zero; every other value signals a
 * failure whose description `plap_last_error` returns.
 */
typedef enum PlapStatus {
  /**
   * The call succeeded.
   */
  PlapStatus_Ok = 0,
  /**
   * A pointer was null, a length was inconsistent, or a scalar argument
   * was out of its documented range.
   */
  PlapStatus_InvalidArgument = 1,
  /**
   * The problem description was rejected (exponent range, coefficient
   * sign structure, growth restrictions).
   */
  PlapStatus_Model = 2,
  /**
   * The shooting iteration failed to produce a solution.
   */
  PlapStatus_Solver = 3,
  /**
   * The time-map quadrature was unavailable or did not converge.
   */
  PlapStatus_TimeMap = 4,
  /**
   * An internal invariant failed; the library caught the panic.
   */
  PlapStatus_Panic = 5,
} PlapStatus;

/**
 * Opaque problem description: exponents, nonlinearity, and the parameter
 * lambda. Create with one of the `plap_problem_*` constructors and destroy
 * with `plap_problem_free`.
 */
typedef struct PlapProblem PlapProblem;

/**
 * Opaque hypothesis-audit report. Create with `plap_check` and destroy
 * with `plap_report_free`.
 */
typedef struct PlapReport PlapReport;

/**
 * Opaque solved boundary-value problem. Create with `plap_solve` or
 * `plap_solve_bracketed` and destroy with `plap_solution_free`.
 */
typedef struct PlapSolution PlapSolution;

/**
 * Interpolated solution state at one radius.
 */
typedef struct PlapSample {
  /**
   * Radius the state was evaluated at (clamped to the computed domain).
   */
  double r;
  /**
   * Solution value u(r).
   */
  double u;
  /**
   * Radial derivative u'(r).
   */
  double u_prime;
  /**
   * Divergence variable v = r^{n-1} phi(u').
   */
  double v;
  /**
   * Linearized solution w(r).
   */
  double w;
  /**
   * Radial derivative w'(r).
   */
  double w_prime;
} PlapSample;

/**
 * Read-only view of one entry of a [`PlapReport`]. The `name` and `detail`
 * pointers reference NUL-terminated strings owned by the report and are
 * valid until `plap_report_free` is called on it.
 */
typedef struct PlapCheckEntry {
  /**
   * Stable identifier of the audited hypothesis.
   */
  const char *name;
  /**
   * Pass / fail / not-applicable.
   */
  enum PlapCheckStatus status;
  /**
   * True when `witness_location` / `witness_value` are meaningful.
   */
  bool has_witness;
  /**
   * Location at which a failing hypothesis was witnessed (NaN if none).
   */
  double witness_location;
  /**
   * Witnessed value at that location (NaN if none).
   */
  double witness_value;
  /**
   * Human-readable explanation of the verdict.
   */
  const char *detail;
} PlapCheckEntry;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Returns the library version as a static NUL-terminated string.
 */
const char *plap_version(void);

/**
 * Returns the thread-local message describing the most recent failure on
 * this thread, or null if no call on this thread has failed yet. The
 * pointer stays valid until the next failing call on the same thread.
 */
const char *plap_last_error(void);

/**
 * Creates a problem with autonomous polynomial nonlinearity
 * f(u) = coeffs[0] + coeffs[1] u + ... (ascending degree).
 *
 * # Safety
 * `coeffs` must point to `n_coeffs` readable doubles (or be unused with
 * `n_coeffs == 0`), and `out_problem` must be valid for writing one
 * pointer. The returned handle must be released with `plap_problem_free`.
 */
enum PlapStatus plap_problem_autonomous(double p,
                                        uint32_t n,
                                        const double *coeffs,
                                        size_t n_coeffs,
                                        double lambda,
                                        struct PlapProblem **out_problem);

/**
 * Creates a problem with separable nonlinearity f(r, u) = b(r)^{b_power} u^q,
 * where b is the polynomial with the given ascending coefficients and
 * `b_power` lies in [0, 1].
 *
 * # Safety
 * `b_coeffs` must point to `n_b` readable doubles (or be unused with
 * `n_b == 0`), and `out_problem` must be valid for writing one pointer.
 * The returned handle must be released with `plap_problem_free`.
 */
enum PlapStatus plap_problem_pure_b(double p,
                                    uint32_t n,
                                    const double *b_coeffs,
                                    size_t n_b,
                                    double q,
                                    double b_power,
                                    double lambda,
                                    struct PlapProblem **out_problem);

/**
 * Creates a problem with nonlinearity
 * f(r, u) = -a_weight a(r) u^{p-1} + b(r) u^q, with polynomials a and b
 * given by ascending coefficients and `a_weight` in [0, 1].
 *
 * # Safety
 * `a_coeffs` / `b_coeffs` must point to `n_a` / `n_b` readable doubles
 * respectively (or be unused with length 0), and `out_problem` must be
 * valid for writing one pointer. The returned handle must be released with
 * `plap_problem_free`.
 */
enum PlapStatus plap_problem_model_ab(double p,
                                      uint32_t n,
                                      const double *a_coeffs,
                                      size_t n_a,
                                      const double *b_coeffs,
                                      size_t n_b,
                                      double q,
                                      double a_weight,
                                      double lambda,
                                      struct PlapProblem **out_problem);

/**
 * Creates a problem with the linear test nonlinearity f(u) = u, whose
 * eigenvalue/eigenfunction pair is known in closed form for p = 2.
 *
 * # Safety
 * `out_problem` must be valid for writing one pointer. The returned handle
 * must be released with `plap_problem_free`.
 */
enum PlapStatus plap_problem_linear_test(double p,
                                         uint32_t n,
                                         double lambda,
                                         struct PlapProblem **out_problem);

/**
 * Releases a problem handle. A null pointer is ignored.
 *
 * # Safety
 * `problem` must be null or a handle produced by a `plap_problem_*`
 * constructor that has not been freed yet; it must not be used afterwards.
 */
void plap_problem_free(struct PlapProblem *problem);

/**
 * Shoots for the positive solution of the problem at its lambda, with the
 * amplitude bracket chosen automatically.
 *
 * # Safety
 * `problem` must be a live problem handle and `out_solution` valid for
 * writing one pointer. The returned handle must be released with
 * `plap_solution_free`.
 */
enum PlapStatus plap_solve(const struct PlapProblem *problem, struct PlapSolution **out_solution);

/**
 * Shoots for the positive solution with an explicit initial-amplitude
 * bracket `[alpha_lo, alpha_hi]`, which must straddle the solution.
 *
 * # Safety
 * `problem` must be a live problem handle and `out_solution` valid for
 * writing one pointer. The returned handle must be released with
 * `plap_solution_free`.
 */
enum PlapStatus plap_solve_bracketed(const struct PlapProblem *problem,
                                     double alpha_lo,
                                     double alpha_hi,
                                     struct PlapSolution **out_solution);

/**
 * Releases a solution handle. A null pointer is ignored.
 *
 * # Safety
 * `solution` must be null or a handle produced by `plap_solve` /
 * `plap_solve_bracketed` that has not been freed yet; it must not be used
 * afterwards.
 */
void plap_solution_free(struct PlapSolution *solution);

/**
 * Initial amplitude u(0) of the solved problem; NaN for a null handle.
 *
 * # Safety
 * `solution` must be null or a live solution handle.
 */
double plap_solution_alpha(const struct PlapSolution *solution);

/**
 * Parameter lambda the problem was solved at; NaN for a null handle.
 *
 * # Safety
 * `solution` must be null or a live solution handle.
 */
double plap_solution_lambda(const struct PlapSolution *solution);

/**
 * Boundary slope u'(1); NaN for a null handle.
 *
 * # Safety
 * `solution` must be null or a live solution handle.
 */
double plap_solution_u_prime_at_one(const struct PlapSolution *solution);

/**
 * Residual |u(1)| of the Dirichlet condition; NaN for a null handle.
 *
 * # Safety
 * `solution` must be null or a live solution handle.
 */
double plap_solution_boundary_residual(const struct PlapSolution *solution);

/**
 * Value w(1) of the linearized solution: zero exactly at a degenerate
 * solution, so its distance from zero measures non-degeneracy. NaN for a
 * null handle.
 *
 * # Safety
 * `solution` must be null or a live solution handle.
 */
double plap_solution_degeneracy_margin(const struct PlapSolution *solution);

/**
 * Evaluates the solution and its linearization at radius `r` in [0, 1]
 * (clamped to the computed domain) and writes the state to `out_sample`.
 *
 * # Safety
 * `solution` must be a live solution handle and `out_sample` valid for
 * writing one `PlapSample`.
 */
enum PlapStatus plap_solution_sample(const struct PlapSolution *solution,
                                     double r,
                                     struct PlapSample *out_sample);

/**
 * Inverts the one-dimensional time map: computes the lambda at which the
 * problem's autonomous nonlinearity admits the positive solution with
 * amplitude `alpha`, writing it to `out_lambda` and (when non-null) the
 * propagated quadrature error estimate to `out_error_estimate`. Fails with
 * `TimeMap` status when the nonlinearity is not an autonomous polynomial
 * or the amplitude is outside the admissible range.
 *
 * # Safety
 * `problem` must be a live problem handle, `out_lambda` valid for writing
 * one double, and `out_error_estimate` null or valid for writing one
 * double.
 */
enum PlapStatus plap_time_map(const struct PlapProblem *problem,
                              double alpha,
                              double *out_lambda,
                              double *out_error_estimate);

/**
 * Audits the structural hypotheses of the problem family (sign structure,
 * monotonicity, growth restrictions) and returns the report as a handle.
 * Supercritical problems are accepted here: the audit is exactly the tool
 * that reports which hypothesis fails.
 *
 * # Safety
 * `problem` must be a live problem handle and `out_report` valid for
 * writing one pointer. The returned handle must be released with
 * `plap_report_free`.
 */
enum PlapStatus plap_check(const struct PlapProblem *problem, struct PlapReport **out_report);

/**
 * True when every applicable hypothesis in the report passed; false for a
 * null handle.
 *
 * # Safety
 * `report` must be null or a live report handle.
 */
bool plap_report_passed(const struct PlapReport *report);

/**
 * Number of entries in the report; zero for a null handle.
 *
 * # Safety
 * `report` must be null or a live report handle.
 */
size_t plap_report_len(const struct PlapReport *report);

/**
 * Writes a read-only view of entry `index` to `out_entry`. The view's
 * string pointers stay valid until the report is freed.
 *
 * # Safety
 * `report` must be a live report handle and `out_entry` valid for writing
 * one `PlapCheckEntry`.
 */
enum PlapStatus plap_report_entry(const struct PlapReport *report,
                                  size_t index,
                                  struct PlapCheckEntry *out_entry);

/**
 * Releases a report handle and every string it owns. A null pointer is
 * ignored.
 *
 * # Safety
 * `report` must be null or a handle produced by `plap_check` that has not
 * been freed yet; neither it nor any `PlapCheckEntry` view into it may be
 * used afterwards.
 */
void plap_report_free(struct PlapReport *report);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PLAP_H */
