//! C ABI for the radial p-Laplace shooting solver.
//!
//! Conventions, mirrored in the generated `include/plap.h`:
//!
//! - Every fallible entry point returns a [`PlapStatus`]; `Ok` is zero.
//!   After a failing call, [`plap_last_error`] returns a NUL-terminated,
//!   thread-local message describing the failure. The message stays valid
//!   until the next failing call on the same thread.
//! - Handles ([`PlapProblem`], [`PlapSolution`], [`PlapReport`]) are opaque.
//!   They are created and destroyed exclusively by this library; pass each
//!   one to its matching `_free` function exactly once. Strings returned
//!   through a [`PlapCheckEntry`] point into the report and die with it.
//! - Every entry point catches panics and converts them into
//!   `PlapStatus::Panic`, so no unwinding ever crosses the C boundary.
//! - The library holds no global mutable state besides the thread-local
//!   error slot; handles are independent and may be used from different
//!   threads (one thread per handle at a time).

#![warn(unsafe_op_in_unsafe_fn)]

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use plap_core::diagnostics::{check_model_hypotheses, CheckStatus, HypothesisWitness};
use plap_core::model::{CoefficientFn, ModelError, Nonlinearity, ProblemSpec};
use plap_core::shoot::{solve_at_lambda, RadialSolution, ShootOptions};
use plap_core::timemap::time_map_lambda;

/// Outcome of a library call. `Ok` is zero; every other value signals a
/// failure whose description `plap_last_error` returns.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PlapStatus {
    /// The call succeeded.
    Ok = 0,
    /// A pointer was null, a length was inconsistent, or a scalar argument
    /// was out of its documented range.
    InvalidArgument = 1,
    /// The problem description was rejected (exponent range, coefficient
    /// sign structure, growth restrictions).
    Model = 2,
    /// The shooting iteration failed to produce a solution.
    Solver = 3,
    /// The time-map quadrature was unavailable or did not converge.
    TimeMap = 4,
    /// An internal invariant failed; the library caught the panic.
    Panic = 5,
}

/// Status of one audited hypothesis in a [`PlapReport`].
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PlapCheckStatus {
    /// The hypothesis holds (verified exactly where possible).
    Pass = 0,
    /// The hypothesis fails; the entry carries a witness when one exists.
    Fail = 1,
    /// The hypothesis does not apply to this problem family.
    NotApplicable = 2,
}

/// Interpolated solution state at one radius.
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct PlapSample {
    /// Radius the state was evaluated at (clamped to the computed domain).
    pub r: f64,
    /// Solution value u(r).
    pub u: f64,
    /// Radial derivative u'(r).
    pub u_prime: f64,
    /// Divergence variable v = r^{n-1} phi(u').
    pub v: f64,
    /// Linearized solution w(r).
    pub w: f64,
    /// Radial derivative w'(r).
    pub w_prime: f64,
}

/// Read-only view of one entry of a [`PlapReport`]. The `name` and `detail`
/// pointers reference NUL-terminated strings owned by the report and are
/// valid until `plap_report_free` is called on it.
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct PlapCheckEntry {
    /// Stable identifier of the audited hypothesis.
    pub name: *const c_char,
    /// Pass / fail / not-applicable.
    pub status: PlapCheckStatus,
    /// True when `witness_location` / `witness_value` are meaningful.
    pub has_witness: bool,
    /// Location at which a failing hypothesis was witnessed (NaN if none).
    pub witness_location: f64,
    /// Witnessed value at that location (NaN if none).
    pub witness_value: f64,
    /// Human-readable explanation of the verdict.
    pub detail: *const c_char,
}

/// Opaque problem description: exponents, nonlinearity, and the parameter
/// lambda. Create with one of the `plap_problem_*` constructors and destroy
/// with `plap_problem_free`.
pub struct PlapProblem {
    spec: ProblemSpec,
}

/// Opaque solved boundary-value problem. Create with `plap_solve` or
/// `plap_solve_bracketed` and destroy with `plap_solution_free`.
pub struct PlapSolution {
    inner: RadialSolution,
}

struct ReportEntry {
    name: CString,
    status: CheckStatus,
    witness: Option<HypothesisWitness>,
    detail: CString,
}

/// Opaque hypothesis-audit report. Create with `plap_check` and destroy
/// with `plap_report_free`.
pub struct PlapReport {
    passed: bool,
    entries: Vec<ReportEntry>,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: String) {
    let stored = CString::new(message)
        .unwrap_or_else(|_| CString::new("error message contained an interior NUL").unwrap());
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(stored));
}

fn invalid(message: impl Into<String>) -> PlapStatus {
    set_error(message.into());
    PlapStatus::InvalidArgument
}

fn model_error(err: ModelError) -> PlapStatus {
    set_error(err.to_string());
    PlapStatus::Model
}

/// Runs a library body, converting any panic into `PlapStatus::Panic` so
/// unwinding never crosses the C boundary.
fn guarded(body: impl FnOnce() -> PlapStatus) -> PlapStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(status) => status,
        Err(payload) => {
            let message = payload
                .downcast_ref::<&str>()
                .map(|s| (*s).to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic payload".to_string());
            set_error(format!("internal panic: {message}"));
            PlapStatus::Panic
        }
    }
}

/// Boxes `value` and writes the handle through `out`.
///
/// # Safety
/// `out`, when non-null, must be valid for writing one pointer.
unsafe fn write_handle<T>(out: *mut *mut T, value: T) -> PlapStatus {
    if out.is_null() {
        return invalid("output pointer is null");
    }
    unsafe { out.write(Box::into_raw(Box::new(value))) };
    PlapStatus::Ok
}

/// Reads a coefficient array. A zero length yields the empty slice without
/// touching the pointer.
///
/// # Safety
/// When `len > 0`, `data` must point to `len` readable f64 values that
/// outlive the returned slice.
unsafe fn coeff_slice<'a>(data: *const f64, len: usize, what: &str) -> Result<&'a [f64], PlapStatus> {
    if len == 0 {
        return Ok(&[]);
    }
    if data.is_null() {
        return Err(invalid(format!("{what} pointer is null but its length is {len}")));
    }
    Ok(unsafe { slice::from_raw_parts(data, len) })
}

unsafe fn finish_problem(
    spec: Result<ProblemSpec, ModelError>,
    out_problem: *mut *mut PlapProblem,
) -> PlapStatus {
    match spec {
        Ok(spec) => unsafe { write_handle(out_problem, PlapProblem { spec }) },
        Err(err) => model_error(err),
    }
}

/// Returns the library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn plap_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Returns the thread-local message describing the most recent failure on
/// this thread, or null if no call on this thread has failed yet. The
/// pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn plap_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |msg| msg.as_ptr()))
}

/// Creates a problem with autonomous polynomial nonlinearity
/// f(u) = coeffs[0] + coeffs[1] u + ... (ascending degree).
///
/// # Safety
/// `coeffs` must point to `n_coeffs` readable doubles (or be unused with
/// `n_coeffs == 0`), and `out_problem` must be valid for writing one
/// pointer. The returned handle must be released with `plap_problem_free`.
#[no_mangle]
pub unsafe extern "C" fn plap_problem_autonomous(
    p: f64,
    n: u32,
    coeffs: *const f64,
    n_coeffs: usize,
    lambda: f64,
    out_problem: *mut *mut PlapProblem,
) -> PlapStatus {
    guarded(|| {
        let coeffs = match unsafe { coeff_slice(coeffs, n_coeffs, "coefficient") } {
            Ok(c) => c,
            Err(status) => return status,
        };
        let spec = Nonlinearity::autonomous(coeffs)
            .and_then(|nl| ProblemSpec::new(p, n, nl, lambda));
        unsafe { finish_problem(spec, out_problem) }
    })
}

/// Creates a problem with separable nonlinearity f(r, u) = b(r)^{b_power} u^q,
/// where b is the polynomial with the given ascending coefficients and
/// `b_power` lies in [0, 1].
///
/// # Safety
/// `b_coeffs` must point to `n_b` readable doubles (or be unused with
/// `n_b == 0`), and `out_problem` must be valid for writing one pointer.
/// The returned handle must be released with `plap_problem_free`.
#[no_mangle]
pub unsafe extern "C" fn plap_problem_pure_b(
    p: f64,
    n: u32,
    b_coeffs: *const f64,
    n_b: usize,
    q: f64,
    b_power: f64,
    lambda: f64,
    out_problem: *mut *mut PlapProblem,
) -> PlapStatus {
    guarded(|| {
        let b = match unsafe { coeff_slice(b_coeffs, n_b, "b coefficient") } {
            Ok(c) => c,
            Err(status) => return status,
        };
        let spec = CoefficientFn::from_coeffs(b)
            .and_then(|b| Nonlinearity::pure_b_powered(b, q, b_power))
            .and_then(|nl| ProblemSpec::new(p, n, nl, lambda));
        unsafe { finish_problem(spec, out_problem) }
    })
}

/// Creates a problem with nonlinearity
/// f(r, u) = -a_weight a(r) u^{p-1} + b(r) u^q, with polynomials a and b
/// given by ascending coefficients and `a_weight` in [0, 1].
///
/// # Safety
/// `a_coeffs` / `b_coeffs` must point to `n_a` / `n_b` readable doubles
/// respectively (or be unused with length 0), and `out_problem` must be
/// valid for writing one pointer. The returned handle must be released with
/// `plap_problem_free`.
#[no_mangle]
pub unsafe extern "C" fn plap_problem_model_ab(
    p: f64,
    n: u32,
    a_coeffs: *const f64,
    n_a: usize,
    b_coeffs: *const f64,
    n_b: usize,
    q: f64,
    a_weight: f64,
    lambda: f64,
    out_problem: *mut *mut PlapProblem,
) -> PlapStatus {
    guarded(|| {
        let a = match unsafe { coeff_slice(a_coeffs, n_a, "a coefficient") } {
            Ok(c) => c,
            Err(status) => return status,
        };
        let b = match unsafe { coeff_slice(b_coeffs, n_b, "b coefficient") } {
            Ok(c) => c,
            Err(status) => return status,
        };
        let spec = CoefficientFn::from_coeffs(a).and_then(|a| {
            let b = CoefficientFn::from_coeffs(b)?;
            let nl = Nonlinearity::model_ab_weighted(a, b, q, a_weight)?;
            ProblemSpec::new(p, n, nl, lambda)
        });
        unsafe { finish_problem(spec, out_problem) }
    })
}

/// Creates a problem with the linear test nonlinearity f(u) = u, whose
/// eigenvalue/eigenfunction pair is known in closed form for p = 2.
///
/// # Safety
/// `out_problem` must be valid for writing one pointer. The returned handle
/// must be released with `plap_problem_free`.
#[no_mangle]
pub unsafe extern "C" fn plap_problem_linear_test(
    p: f64,
    n: u32,
    lambda: f64,
    out_problem: *mut *mut PlapProblem,
) -> PlapStatus {
    guarded(|| {
        let spec = ProblemSpec::new(p, n, Nonlinearity::linear_test(), lambda);
        unsafe { finish_problem(spec, out_problem) }
    })
}

/// Releases a problem handle. A null pointer is ignored.
///
/// # Safety
/// `problem` must be null or a handle produced by a `plap_problem_*`
/// constructor that has not been freed yet; it must not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn plap_problem_free(problem: *mut PlapProblem) {
    if !problem.is_null() {
        drop(unsafe { Box::from_raw(problem) });
    }
}

fn solve_impl(
    problem: *const PlapProblem,
    bracket: Option<(f64, f64)>,
    out_solution: *mut *mut PlapSolution,
) -> PlapStatus {
    let Some(problem) = (unsafe { problem.as_ref() }) else {
        return invalid("problem handle is null");
    };
    if let Err(err) = problem.spec.assert_admissible() {
        return model_error(err);
    }
    match solve_at_lambda(&problem.spec, problem.spec.lambda(), bracket, &ShootOptions::default()) {
        Ok(solution) => unsafe { write_handle(out_solution, PlapSolution { inner: solution }) },
        Err(err) => {
            set_error(err.to_string());
            PlapStatus::Solver
        }
    }
}

/// Shoots for the positive solution of the problem at its lambda, with the
/// amplitude bracket chosen automatically.
///
/// # Safety
/// `problem` must be a live problem handle and `out_solution` valid for
/// writing one pointer. The returned handle must be released with
/// `plap_solution_free`.
#[no_mangle]
pub unsafe extern "C" fn plap_solve(
    problem: *const PlapProblem,
    out_solution: *mut *mut PlapSolution,
) -> PlapStatus {
    guarded(|| solve_impl(problem, None, out_solution))
}

/// Shoots for the positive solution with an explicit initial-amplitude
/// bracket `[alpha_lo, alpha_hi]`, which must straddle the solution.
///
/// # Safety
/// `problem` must be a live problem handle and `out_solution` valid for
/// writing one pointer. The returned handle must be released with
/// `plap_solution_free`.
#[no_mangle]
pub unsafe extern "C" fn plap_solve_bracketed(
    problem: *const PlapProblem,
    alpha_lo: f64,
    alpha_hi: f64,
    out_solution: *mut *mut PlapSolution,
) -> PlapStatus {
    guarded(|| {
        if !alpha_lo.is_finite() || !alpha_hi.is_finite() || alpha_lo >= alpha_hi {
            return invalid(format!(
                "amplitude bracket [{alpha_lo}, {alpha_hi}] is not a finite increasing pair"
            ));
        }
        solve_impl(problem, Some((alpha_lo, alpha_hi)), out_solution)
    })
}

/// Releases a solution handle. A null pointer is ignored.
///
/// # Safety
/// `solution` must be null or a handle produced by `plap_solve` /
/// `plap_solve_bracketed` that has not been freed yet; it must not be used
/// afterwards.
#[no_mangle]
pub unsafe extern "C" fn plap_solution_free(solution: *mut PlapSolution) {
    if !solution.is_null() {
        drop(unsafe { Box::from_raw(solution) });
    }
}

/// Initial amplitude u(0) of the solved problem; NaN for a null handle.
///
/// # Safety
/// `solution` must be null or a live solution handle.
#[no_mangle]
pub unsafe extern "C" fn plap_solution_alpha(solution: *const PlapSolution) -> f64 {
    unsafe { solution.as_ref() }.map_or(f64::NAN, |s| s.inner.alpha())
}

/// Parameter lambda the problem was solved at; NaN for a null handle.
///
/// # Safety
/// `solution` must be null or a live solution handle.
#[no_mangle]
pub unsafe extern "C" fn plap_solution_lambda(solution: *const PlapSolution) -> f64 {
    unsafe { solution.as_ref() }.map_or(f64::NAN, |s| s.inner.lambda())
}

/// Boundary slope u'(1); NaN for a null handle.
///
/// # Safety
/// `solution` must be null or a live solution handle.
#[no_mangle]
pub unsafe extern "C" fn plap_solution_u_prime_at_one(solution: *const PlapSolution) -> f64 {
    unsafe { solution.as_ref() }.map_or(f64::NAN, |s| s.inner.u_prime_at_one())
}

/// Residual |u(1)| of the Dirichlet condition; NaN for a null handle.
///
/// # Safety
/// `solution` must be null or a live solution handle.
#[no_mangle]
pub unsafe extern "C" fn plap_solution_boundary_residual(solution: *const PlapSolution) -> f64 {
    unsafe { solution.as_ref() }.map_or(f64::NAN, |s| s.inner.boundary_residual())
}

/// Value w(1) of the linearized solution: zero exactly at a degenerate
/// solution, so its distance from zero measures non-degeneracy. NaN for a
/// null handle.
///
/// # Safety
/// `solution` must be null or a live solution handle.
#[no_mangle]
pub unsafe extern "C" fn plap_solution_degeneracy_margin(solution: *const PlapSolution) -> f64 {
    unsafe { solution.as_ref() }.map_or(f64::NAN, |s| s.inner.degeneracy_margin())
}

/// Evaluates the solution and its linearization at radius `r` in [0, 1]
/// (clamped to the computed domain) and writes the state to `out_sample`.
///
/// # Safety
/// `solution` must be a live solution handle and `out_sample` valid for
/// writing one `PlapSample`.
#[no_mangle]
pub unsafe extern "C" fn plap_solution_sample(
    solution: *const PlapSolution,
    r: f64,
    out_sample: *mut PlapSample,
) -> PlapStatus {
    guarded(|| {
        let Some(solution) = (unsafe { solution.as_ref() }) else {
            return invalid("solution handle is null");
        };
        if out_sample.is_null() {
            return invalid("output pointer is null");
        }
        if !r.is_finite() || !(0.0..=1.0).contains(&r) {
            return invalid(format!("radius {r} is outside [0, 1]"));
        }
        let trajectory = solution.inner.trajectory();
        let clamped = r.min(trajectory.final_r());
        let state = trajectory.sample(clamped);
        let linearized = solution.inner.linearized().sample(clamped);
        unsafe {
            out_sample.write(PlapSample {
                r: clamped,
                u: state.u,
                u_prime: state.u_prime,
                v: state.v,
                w: linearized.w,
                w_prime: linearized.w_prime,
            });
        }
        PlapStatus::Ok
    })
}

/// Inverts the one-dimensional time map: computes the lambda at which the
/// problem's autonomous nonlinearity admits the positive solution with
/// amplitude `alpha`, writing it to `out_lambda` and (when non-null) the
/// propagated quadrature error estimate to `out_error_estimate`. Fails with
/// `TimeMap` status when the nonlinearity is not an autonomous polynomial
/// or the amplitude is outside the admissible range.
///
/// # Safety
/// `problem` must be a live problem handle, `out_lambda` valid for writing
/// one double, and `out_error_estimate` null or valid for writing one
/// double.
#[no_mangle]
pub unsafe extern "C" fn plap_time_map(
    problem: *const PlapProblem,
    alpha: f64,
    out_lambda: *mut f64,
    out_error_estimate: *mut f64,
) -> PlapStatus {
    guarded(|| {
        let Some(problem) = (unsafe { problem.as_ref() }) else {
            return invalid("problem handle is null");
        };
        if out_lambda.is_null() {
            return invalid("output pointer is null");
        }
        match time_map_lambda(problem.spec.nonlinearity(), problem.spec.p(), alpha) {
            Ok(result) => {
                unsafe {
                    out_lambda.write(result.lambda);
                    if !out_error_estimate.is_null() {
                        out_error_estimate.write(result.quadrature_error_estimate);
                    }
                }
                PlapStatus::Ok
            }
            Err(err) => {
                set_error(err.to_string());
                PlapStatus::TimeMap
            }
        }
    })
}

/// Audits the structural hypotheses of the problem family (sign structure,
/// monotonicity, growth restrictions) and returns the report as a handle.
/// Supercritical problems are accepted here: the audit is exactly the tool
/// that reports which hypothesis fails.
///
/// # Safety
/// `problem` must be a live problem handle and `out_report` valid for
/// writing one pointer. The returned handle must be released with
/// `plap_report_free`.
#[no_mangle]
pub unsafe extern "C" fn plap_check(
    problem: *const PlapProblem,
    out_report: *mut *mut PlapReport,
) -> PlapStatus {
    guarded(|| {
        let Some(problem) = (unsafe { problem.as_ref() }) else {
            return invalid("problem handle is null");
        };
        let report = check_model_hypotheses(&problem.spec);
        let entries = report
            .entries()
            .iter()
            .map(|entry| ReportEntry {
                name: CString::new(entry.name).unwrap_or_default(),
                status: entry.status,
                witness: entry.witness,
                detail: CString::new(entry.detail.as_str()).unwrap_or_default(),
            })
            .collect();
        unsafe { write_handle(out_report, PlapReport { passed: report.passed(), entries }) }
    })
}

/// True when every applicable hypothesis in the report passed; false for a
/// null handle.
///
/// # Safety
/// `report` must be null or a live report handle.
#[no_mangle]
pub unsafe extern "C" fn plap_report_passed(report: *const PlapReport) -> bool {
    unsafe { report.as_ref() }.is_some_and(|r| r.passed)
}

/// Number of entries in the report; zero for a null handle.
///
/// # Safety
/// `report` must be null or a live report handle.
#[no_mangle]
pub unsafe extern "C" fn plap_report_len(report: *const PlapReport) -> usize {
    unsafe { report.as_ref() }.map_or(0, |r| r.entries.len())
}

/// Writes a read-only view of entry `index` to `out_entry`. The view's
/// string pointers stay valid until the report is freed.
///
/// # Safety
/// `report` must be a live report handle and `out_entry` valid for writing
/// one `PlapCheckEntry`.
#[no_mangle]
pub unsafe extern "C" fn plap_report_entry(
    report: *const PlapReport,
    index: usize,
    out_entry: *mut PlapCheckEntry,
) -> PlapStatus {
    guarded(|| {
        let Some(report) = (unsafe { report.as_ref() }) else {
            return invalid("report handle is null");
        };
        if out_entry.is_null() {
            return invalid("output pointer is null");
        }
        let Some(entry) = report.entries.get(index) else {
            return invalid(format!(
                "entry index {index} is out of range for a report with {} entries",
                report.entries.len()
            ));
        };
        let status = match entry.status {
            CheckStatus::Pass => PlapCheckStatus::Pass,
            CheckStatus::Fail => PlapCheckStatus::Fail,
            CheckStatus::NotApplicable => PlapCheckStatus::NotApplicable,
        };
        unsafe {
            out_entry.write(PlapCheckEntry {
                name: entry.name.as_ptr(),
                status,
                has_witness: entry.witness.is_some(),
                witness_location: entry.witness.map_or(f64::NAN, |w| w.location),
                witness_value: entry.witness.map_or(f64::NAN, |w| w.value),
                detail: entry.detail.as_ptr(),
            });
        }
        PlapStatus::Ok
    })
}

/// Releases a report handle and every string it owns. A null pointer is
/// ignored.
///
/// # Safety
/// `report` must be null or a handle produced by `plap_check` that has not
/// been freed yet; neither it nor any `PlapCheckEntry` view into it may be
/// used afterwards.
#[no_mangle]
pub unsafe extern "C" fn plap_report_free(report: *mut PlapReport) {
    if !report.is_null() {
        drop(unsafe { Box::from_raw(report) });
    }
}
