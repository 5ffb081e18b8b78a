//! Exercises the C ABI exactly as a foreign caller would: raw pointers in,
//! status codes out, explicit frees, and error strings through
//! `plap_last_error`.

use std::ffi::CStr;
use std::ptr;

use plap_core::model::{Nonlinearity, ProblemSpec};
use plap_core::shoot::{solve_at_lambda, ShootOptions};
use plap_core::timemap::time_map_lambda;
use plap_ffi::{
    plap_check, plap_last_error, plap_problem_autonomous, plap_problem_free,
    plap_problem_linear_test, plap_problem_pure_b, plap_report_entry, plap_report_free,
    plap_report_len, plap_report_passed, plap_solution_alpha, plap_solution_boundary_residual,
    plap_solution_degeneracy_margin, plap_solution_free, plap_solution_lambda,
    plap_solution_sample, plap_solution_u_prime_at_one, plap_solve, plap_solve_bracketed,
    plap_time_map, plap_version, PlapCheckEntry, PlapCheckStatus, PlapProblem, PlapSample,
    PlapSolution, PlapStatus,
};

/// f(u) = u^3 - u, the bistable cubic every suite solves at lambda = 2.
const CUBIC: [f64; 4] = [0.0, -1.0, 0.0, 1.0];

fn last_error() -> String {
    let ptr = plap_last_error();
    assert!(!ptr.is_null(), "expected an error message after a failing call");
    unsafe { CStr::from_ptr(ptr) }.to_str().expect("error messages are UTF-8").to_string()
}

fn cubic_problem(lambda: f64) -> *mut PlapProblem {
    let mut problem: *mut PlapProblem = ptr::null_mut();
    let status = unsafe {
        plap_problem_autonomous(2.0, 1, CUBIC.as_ptr(), CUBIC.len(), lambda, &mut problem)
    };
    assert_eq!(status, PlapStatus::Ok);
    assert!(!problem.is_null());
    problem
}

#[test]
fn solve_round_trip_matches_the_native_api() {
    let problem = cubic_problem(2.0);
    let mut solution: *mut PlapSolution = ptr::null_mut();
    let status = unsafe { plap_solve(problem, &mut solution) };
    assert_eq!(status, PlapStatus::Ok);

    let nl = Nonlinearity::autonomous(&CUBIC).unwrap();
    let spec = ProblemSpec::new(2.0, 1, nl, 2.0).unwrap();
    let native = solve_at_lambda(&spec, 2.0, None, &ShootOptions::default()).unwrap();

    unsafe {
        assert_eq!(plap_solution_lambda(solution), 2.0);
        let alpha = plap_solution_alpha(solution);
        assert!((alpha - native.alpha()).abs() <= 1e-12 * native.alpha());
        assert!(plap_solution_boundary_residual(solution) < 1e-9);
        let slope = plap_solution_u_prime_at_one(solution);
        assert!((slope - native.u_prime_at_one()).abs() <= 1e-12 * slope.abs());
        assert!(plap_solution_degeneracy_margin(solution).abs() > 0.0);

        let mut sample = PlapSample { r: 0.0, u: 0.0, u_prime: 0.0, v: 0.0, w: 0.0, w_prime: 0.0 };
        assert_eq!(plap_solution_sample(solution, 0.5, &mut sample), PlapStatus::Ok);
        let native_state = native.trajectory().sample(0.5);
        let native_lin = native.linearized().sample(0.5);
        assert!((sample.u - native_state.u).abs() <= 1e-12 * native_state.u.abs());
        assert!((sample.u_prime - native_state.u_prime).abs() <= 1e-12);
        assert!((sample.v - native_state.v).abs() <= 1e-12);
        assert!((sample.w - native_lin.w).abs() <= 1e-12 * native_lin.w.abs().max(1.0));
        assert!((sample.w_prime - native_lin.w_prime).abs() <= 1e-10);

        // The origin is served by the startup series, the boundary by dense
        // output; both must answer.
        assert_eq!(plap_solution_sample(solution, 0.0, &mut sample), PlapStatus::Ok);
        assert!((sample.u - native.alpha()).abs() <= 1e-9 * native.alpha());
        assert!(sample.u_prime.abs() <= 1e-9);
        assert_eq!(plap_solution_sample(solution, 1.0, &mut sample), PlapStatus::Ok);
        assert!(sample.u.abs() < 1e-8);

        plap_solution_free(solution);
        plap_problem_free(problem);
    }
}

#[test]
fn bracketed_solve_accepts_a_straddling_bracket_and_rejects_a_bad_one() {
    let problem = cubic_problem(2.0);
    let nl = Nonlinearity::autonomous(&CUBIC).unwrap();
    let spec = ProblemSpec::new(2.0, 1, nl, 2.0).unwrap();
    let native = solve_at_lambda(&spec, 2.0, None, &ShootOptions::default()).unwrap();

    let mut solution: *mut PlapSolution = ptr::null_mut();
    let status = unsafe {
        plap_solve_bracketed(problem, 0.5 * native.alpha(), 2.0 * native.alpha(), &mut solution)
    };
    assert_eq!(status, PlapStatus::Ok);
    unsafe {
        let alpha = plap_solution_alpha(solution);
        assert!((alpha - native.alpha()).abs() <= 1e-9 * native.alpha());
        plap_solution_free(solution);
    }

    let mut rejected: *mut PlapSolution = ptr::null_mut();
    let status = unsafe { plap_solve_bracketed(problem, 2.0, 1.0, &mut rejected) };
    assert_eq!(status, PlapStatus::InvalidArgument);
    assert!(rejected.is_null());
    assert!(last_error().contains("bracket"));

    unsafe { plap_problem_free(problem) };
}

#[test]
fn invalid_exponent_reports_a_model_error() {
    let mut problem: *mut PlapProblem = ptr::null_mut();
    let status = unsafe {
        plap_problem_autonomous(0.5, 1, CUBIC.as_ptr(), CUBIC.len(), 2.0, &mut problem)
    };
    assert_eq!(status, PlapStatus::Model);
    assert!(problem.is_null());
    assert!(last_error().contains('p'), "message should name the exponent: {}", last_error());
}

#[test]
fn null_pointers_are_invalid_arguments_not_crashes() {
    // Null output handle.
    let status = unsafe {
        plap_problem_autonomous(2.0, 1, CUBIC.as_ptr(), CUBIC.len(), 2.0, ptr::null_mut())
    };
    assert_eq!(status, PlapStatus::InvalidArgument);
    assert!(last_error().contains("null"));

    // Null coefficients with a nonzero length.
    let mut problem: *mut PlapProblem = ptr::null_mut();
    let status = unsafe { plap_problem_autonomous(2.0, 1, ptr::null(), 3, 2.0, &mut problem) };
    assert_eq!(status, PlapStatus::InvalidArgument);
    assert!(last_error().contains("length"));

    // Null problem handles.
    let mut solution: *mut PlapSolution = ptr::null_mut();
    assert_eq!(unsafe { plap_solve(ptr::null(), &mut solution) }, PlapStatus::InvalidArgument);
    let mut lambda = 0.0;
    assert_eq!(
        unsafe { plap_time_map(ptr::null(), 1.0, &mut lambda, ptr::null_mut()) },
        PlapStatus::InvalidArgument
    );

    // Scalar getters answer NaN instead of crashing.
    assert!(unsafe { plap_solution_alpha(ptr::null()) }.is_nan());
    assert!(unsafe { plap_solution_degeneracy_margin(ptr::null()) }.is_nan());

    // Frees ignore null.
    unsafe {
        plap_problem_free(ptr::null_mut());
        plap_solution_free(ptr::null_mut());
        plap_report_free(ptr::null_mut());
    }
}

#[test]
fn sampling_outside_the_unit_interval_is_rejected() {
    let problem = cubic_problem(2.0);
    let mut solution: *mut PlapSolution = ptr::null_mut();
    assert_eq!(unsafe { plap_solve(problem, &mut solution) }, PlapStatus::Ok);

    let mut sample = PlapSample { r: 0.0, u: 0.0, u_prime: 0.0, v: 0.0, w: 0.0, w_prime: 0.0 };
    for bad in [-0.1, 1.5, f64::NAN, f64::INFINITY] {
        let status = unsafe { plap_solution_sample(solution, bad, &mut sample) };
        assert_eq!(status, PlapStatus::InvalidArgument, "radius {bad} must be rejected");
    }

    unsafe {
        plap_solution_free(solution);
        plap_problem_free(problem);
    }
}

#[test]
fn supercritical_problem_fails_the_audit_but_still_builds() {
    // q = 7 sits above the critical exponent 5 for p = 2, n = 3: the handle
    // builds (auditing such problems is the point), the audit names the
    // failing hypothesis, and solving refuses with a model error.
    let b = [2.0, 0.0, -1.0];
    let mut problem: *mut PlapProblem = ptr::null_mut();
    let status = unsafe {
        plap_problem_pure_b(2.0, 3, b.as_ptr(), b.len(), 7.0, 1.0, 5.0, &mut problem)
    };
    assert_eq!(status, PlapStatus::Ok);

    let mut report = ptr::null_mut();
    assert_eq!(unsafe { plap_check(problem, &mut report) }, PlapStatus::Ok);
    assert!(!unsafe { plap_report_passed(report) });

    let len = unsafe { plap_report_len(report) };
    assert!(len >= 3, "expected several audited hypotheses, got {len}");
    let mut found = false;
    for index in 0..len {
        let mut entry = PlapCheckEntry {
            name: ptr::null(),
            status: PlapCheckStatus::Pass,
            has_witness: false,
            witness_location: 0.0,
            witness_value: 0.0,
            detail: ptr::null(),
        };
        assert_eq!(unsafe { plap_report_entry(report, index, &mut entry) }, PlapStatus::Ok);
        let name = unsafe { CStr::from_ptr(entry.name) }.to_str().unwrap();
        let detail = unsafe { CStr::from_ptr(entry.detail) }.to_str().unwrap();
        assert!(!name.is_empty());
        if name == "subcritical-growth" {
            assert_eq!(entry.status, PlapCheckStatus::Fail);
            assert!(detail.contains("critical"), "detail should explain the bound: {detail}");
            found = true;
        }
    }
    assert!(found, "the growth hypothesis must appear in the report");

    // Out-of-range entry index.
    let mut entry = PlapCheckEntry {
        name: ptr::null(),
        status: PlapCheckStatus::Pass,
        has_witness: false,
        witness_location: 0.0,
        witness_value: 0.0,
        detail: ptr::null(),
    };
    assert_eq!(
        unsafe { plap_report_entry(report, len, &mut entry) },
        PlapStatus::InvalidArgument
    );
    assert!(last_error().contains("out of range"));

    // Solving the same problem is refused up front.
    let mut solution: *mut PlapSolution = ptr::null_mut();
    assert_eq!(unsafe { plap_solve(problem, &mut solution) }, PlapStatus::Model);
    assert!(solution.is_null());
    assert!(last_error().contains("critical"));

    unsafe {
        plap_report_free(report);
        plap_problem_free(problem);
    }
}

#[test]
fn audit_passes_for_the_unit_coefficient_model() {
    let a = [1.0];
    let b = [1.0];
    let mut problem: *mut PlapProblem = ptr::null_mut();
    let status = unsafe {
        plap_ffi::plap_problem_model_ab(
            2.0,
            3,
            a.as_ptr(),
            a.len(),
            b.as_ptr(),
            b.len(),
            3.0,
            1.0,
            30.0,
            &mut problem,
        )
    };
    assert_eq!(status, PlapStatus::Ok);

    let mut report = ptr::null_mut();
    assert_eq!(unsafe { plap_check(problem, &mut report) }, PlapStatus::Ok);
    assert!(unsafe { plap_report_passed(report) });

    unsafe {
        plap_report_free(report);
        plap_problem_free(problem);
    }
}

#[test]
fn time_map_agrees_with_the_native_quadrature() {
    let problem = cubic_problem(2.0);
    let nl = Nonlinearity::autonomous(&CUBIC).unwrap();
    let native = time_map_lambda(&nl, 2.0, 1.5).unwrap();

    let mut lambda = 0.0;
    let mut estimate = 0.0;
    let status = unsafe { plap_time_map(problem, 1.5, &mut lambda, &mut estimate) };
    assert_eq!(status, PlapStatus::Ok);
    assert_eq!(lambda, native.lambda);
    assert_eq!(estimate, native.quadrature_error_estimate);

    unsafe { plap_problem_free(problem) };
}

#[test]
fn time_map_refuses_radially_dependent_nonlinearities() {
    let b = [2.0, 0.0, -1.0];
    let mut problem: *mut PlapProblem = ptr::null_mut();
    let status = unsafe {
        plap_problem_pure_b(2.0, 3, b.as_ptr(), b.len(), 3.0, 1.0, 40.0, &mut problem)
    };
    assert_eq!(status, PlapStatus::Ok);

    let mut lambda = 0.0;
    let status = unsafe { plap_time_map(problem, 1.0, &mut lambda, ptr::null_mut()) };
    assert_eq!(status, PlapStatus::TimeMap);
    assert!(!last_error().is_empty());

    unsafe { plap_problem_free(problem) };
}

#[test]
fn solver_failure_reports_through_the_status_code() {
    // Past the extinction point of f(u) = u^3 - 1 no positive solution
    // exists; the failure must surface as a Solver status, not a crash.
    let coeffs = [-1.0, 0.0, 0.0, 1.0];
    let mut problem: *mut PlapProblem = ptr::null_mut();
    let status = unsafe {
        plap_problem_autonomous(2.0, 1, coeffs.as_ptr(), coeffs.len(), 50.0, &mut problem)
    };
    assert_eq!(status, PlapStatus::Ok);

    let mut solution: *mut PlapSolution = ptr::null_mut();
    assert_eq!(unsafe { plap_solve(problem, &mut solution) }, PlapStatus::Solver);
    assert!(solution.is_null());
    assert!(!last_error().is_empty());

    unsafe { plap_problem_free(problem) };
}

#[test]
fn linear_test_solution_matches_the_closed_form() {
    // At lambda = pi^2/4 on the interval, f(u) = u has the eigenfunction
    // cos(pi r / 2); any amplitude solves, and shooting pins the boundary.
    let lambda = std::f64::consts::PI * std::f64::consts::PI / 4.0;
    let mut problem: *mut PlapProblem = ptr::null_mut();
    let status = unsafe { plap_problem_linear_test(2.0, 1, lambda, &mut problem) };
    assert_eq!(status, PlapStatus::Ok);

    let mut solution: *mut PlapSolution = ptr::null_mut();
    assert_eq!(unsafe { plap_solve(problem, &mut solution) }, PlapStatus::Ok);

    let mut sample = PlapSample { r: 0.0, u: 0.0, u_prime: 0.0, v: 0.0, w: 0.0, w_prime: 0.0 };
    unsafe {
        let alpha = plap_solution_alpha(solution);
        assert_eq!(plap_solution_sample(solution, 0.5, &mut sample), PlapStatus::Ok);
        let expected = alpha * (std::f64::consts::PI * 0.25).cos();
        assert!(
            (sample.u - expected).abs() <= 1e-7 * alpha,
            "u(1/2) = {} vs closed form {expected}",
            sample.u
        );
        plap_solution_free(solution);
        plap_problem_free(problem);
    }
}

#[test]
fn version_matches_the_crate_and_header_declares_the_surface() {
    let version = unsafe { CStr::from_ptr(plap_version()) }.to_str().unwrap();
    assert_eq!(version, env!("CARGO_PKG_VERSION"));

    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/plap.h"))
        .expect("the build script generates include/plap.h");
    for needle in [
        "#ifndef PLAP_H",
        "typedef enum PlapStatus",
        "typedef struct PlapProblem PlapProblem",
        "typedef struct PlapSample",
        "plap_problem_autonomous",
        "plap_solve",
        "plap_solution_sample",
        "plap_time_map",
        "plap_check",
        "plap_report_entry",
        "plap_last_error",
    ] {
        assert!(header.contains(needle), "header is missing `{needle}`");
    }
}
