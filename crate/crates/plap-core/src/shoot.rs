//! Shooting solver for the radial boundary value problem on the unit ball.
//!
//! The solver adjusts the center amplitude alpha = u(0) until the trajectory
//! lands on u(1) = 0 with u' < 0 throughout. The miss function is
//!
//! ```text
//!   miss(alpha) = u(1)            if u stays positive on (0, 1),
//!   miss(alpha) = -(1 - r_zero)   if u first vanishes at r_zero < 1,
//! ```
//!
//! which is continuous across the boundary case and changes sign exactly at
//! a solution. Bisection narrows a sign-changing bracket, then secant steps
//! finish to the boundary tolerance. For autonomous nonlinearities there is
//! a quadrature-free alternative: integrate once at lambda = 1 out to the
//! first zero R and rescale, which realizes the same solution at
//! lambda = R^p without any root finding.

use crate::ivp::{
    self, integrate_linearized, integrate_radial, EventKind, IvpError, IvpOptions,
    LinearizedTrajectory, RadialTrajectory,
};
use crate::model::{ModelError, ProblemSpec};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ShootError {
    #[error(transparent)]
    Ivp(#[from] IvpError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("the scaling solver requires an autonomous nonlinearity")]
    NotAutonomous,
    #[error(
        "amplitude {alpha} is not above the zero-energy threshold {theta}; \
         the trajectory cannot reach u = 0"
    )]
    AmplitudeNotAboveThreshold { alpha: f64, theta: f64 },
    #[error("trajectory from alpha = {alpha} has no zero within r <= {r_cap}")]
    NoZeroWithinRadius { alpha: f64, r_cap: f64 },
    #[error(
        "no sign change of the miss function on the bracket [{alpha_lo}, {alpha_hi}] \
         (miss {miss_lo:e} and {miss_hi:e}); no solution detected at lambda = {lambda}"
    )]
    BracketNotSignChanging {
        lambda: f64,
        alpha_lo: f64,
        alpha_hi: f64,
        miss_lo: f64,
        miss_hi: f64,
    },
    #[error(
        "shooting did not converge at lambda = {lambda}: bracket [{alpha_lo}, {alpha_hi}], {reason}"
    )]
    NoConvergence {
        lambda: f64,
        alpha_lo: f64,
        alpha_hi: f64,
        reason: &'static str,
    },
}

/// Shooting configuration on top of the integrator tolerances.
#[derive(Clone, Copy, Debug)]
pub struct ShootOptions {
    pub ivp: IvpOptions,
    /// |u(1)| threshold accepted as a boundary hit.
    pub boundary_tol: f64,
    /// Relative amplitude-bracket width below which the root search gives up.
    pub root_tol: f64,
    pub max_iterations: usize,
}

impl Default for ShootOptions {
    fn default() -> Self {
        ShootOptions {
            ivp: IvpOptions::default(),
            boundary_tol: 1e-9,
            root_tol: 1e-12,
            max_iterations: 200,
        }
    }
}

/// A positive radial solution together with its linearization.
#[derive(Clone, Debug)]
pub struct RadialSolution {
    trajectory: RadialTrajectory,
    linearized: LinearizedTrajectory,
    boundary_residual: f64,
    monotone_violation: bool,
    multiple_crossings: bool,
}

impl RadialSolution {
    pub fn trajectory(&self) -> &RadialTrajectory {
        &self.trajectory
    }

    pub fn linearized(&self) -> &LinearizedTrajectory {
        &self.linearized
    }

    pub fn lambda(&self) -> f64 {
        self.trajectory.lambda()
    }

    pub fn alpha(&self) -> f64 {
        self.trajectory.alpha()
    }

    pub fn u_prime_at_one(&self) -> f64 {
        self.trajectory.final_u_prime()
    }

    /// |u(1)| of the accepted trajectory.
    pub fn boundary_residual(&self) -> f64 {
        self.boundary_residual
    }

    /// w(1) of the linearization with w(0) = 1: zero means degenerate.
    pub fn degeneracy_margin(&self) -> f64 {
        self.linearized.margin()
    }

    /// True if u' had a zero strictly inside the positivity interval.
    pub fn monotone_violation(&self) -> bool {
        self.monotone_violation
    }

    /// True if u crossed zero more than once before r = 1 (the trajectory
    /// is then not the positive solution it was mistaken for).
    pub fn multiple_crossings(&self) -> bool {
        self.multiple_crossings
    }
}

/// Degeneracy test, normalization-invariant: |w(1)| < tol * sup |w|.
pub fn is_degenerate(solution: &RadialSolution, tol: f64) -> bool {
    solution.degeneracy_margin().abs() < tol * solution.linearized().w_sup()
}

/// Default shooting bracket: just above the zero-energy threshold theta when
/// the nonlinearity has a negative part, a wide generic bracket otherwise.
pub fn default_alpha_bracket(spec: &ProblemSpec) -> Result<(f64, f64), ShootError> {
    let (_, theta) = spec.critical_amplitudes()?;
    if theta > 0.0 {
        Ok((theta * (1.0 + 1e-3), 50.0 * theta))
    } else {
        Ok((1e-3, 50.0))
    }
}

/// Signed boundary miss of the trial trajectory.
fn miss_of(trajectory: &RadialTrajectory) -> f64 {
    match trajectory.first_zero() {
        Some(r_zero) => -(1.0 - r_zero),
        None => trajectory.final_u(),
    }
}

fn trial(
    spec: &ProblemSpec,
    lambda: f64,
    alpha: f64,
    opts: &ShootOptions,
) -> Result<f64, ShootError> {
    let mut ivp_opts = opts.ivp;
    ivp_opts.stop_at_first_zero = true;
    let traj = integrate_radial(spec, lambda, alpha, 1.0, &ivp_opts)?;
    Ok(miss_of(&traj))
}

/// Assemble the accepted solution: re-integrate at the converged amplitude
/// without the zero stop so the trajectory reaches exactly r = 1, then ride
/// the linearization along it.
fn assemble(
    spec: &ProblemSpec,
    lambda: f64,
    alpha: f64,
    opts: &ShootOptions,
) -> Result<RadialSolution, ShootError> {
    let mut ivp_opts = opts.ivp;
    ivp_opts.stop_at_first_zero = false;
    let trajectory = integrate_radial(spec, lambda, alpha, 1.0, &ivp_opts)?;
    finish_solution(spec, lambda, trajectory, opts)
}

fn finish_solution(
    spec: &ProblemSpec,
    lambda: f64,
    trajectory: RadialTrajectory,
    opts: &ShootOptions,
) -> Result<RadialSolution, ShootError> {
    let first_zero = trajectory.first_zero().unwrap_or(f64::INFINITY);
    let monotone_violation = trajectory
        .events()
        .iter()
        .any(|e| e.kind == EventKind::ZeroOfUPrime && e.r < first_zero);
    let crossings = trajectory
        .events()
        .iter()
        .filter(|e| e.kind == EventKind::FirstZeroOfU)
        .count();
    let boundary_residual = trajectory.final_u().abs();
    let linearized = integrate_linearized(spec, lambda, &trajectory, &opts.ivp)?;
    Ok(RadialSolution {
        trajectory,
        linearized,
        boundary_residual,
        monotone_violation,
        multiple_crossings: crossings > 1,
    })
}

/// Shoot for the positive solution at a fixed lambda. `bracket` overrides
/// the default amplitude bracket; it must straddle the solution.
pub fn solve_at_lambda(
    spec: &ProblemSpec,
    lambda: f64,
    bracket: Option<(f64, f64)>,
    opts: &ShootOptions,
) -> Result<RadialSolution, ShootError> {
    spec.assert_admissible()?;
    let (mut lo, mut hi) = match bracket {
        Some(b) => b,
        None => default_alpha_bracket(spec)?,
    };
    let mut miss_lo = trial(spec, lambda, lo, opts)?;
    let mut miss_hi = trial(spec, lambda, hi, opts)?;
    if miss_lo.abs() <= opts.boundary_tol {
        return assemble(spec, lambda, lo, opts);
    }
    if miss_hi.abs() <= opts.boundary_tol {
        return assemble(spec, lambda, hi, opts);
    }

    // Expand upward a few times if both ends land short (u(1) > 0): a
    // larger amplitude may still drive the zero inside.
    let mut expansions = 0;
    while miss_lo > 0.0 && miss_hi > 0.0 && expansions < 6 {
        hi *= 4.0;
        miss_hi = trial(spec, lambda, hi, opts)?;
        expansions += 1;
    }
    if miss_lo * miss_hi > 0.0 {
        return Err(ShootError::BracketNotSignChanging {
            lambda,
            alpha_lo: lo,
            alpha_hi: hi,
            miss_lo,
            miss_hi,
        });
    }

    // Bisection until the bracket is narrow, then secant acceleration.
    let mut iterations = 0usize;
    while hi - lo > 1e-3 * hi.max(1.0) {
        if iterations >= opts.max_iterations {
            return Err(ShootError::NoConvergence {
                lambda,
                alpha_lo: lo,
                alpha_hi: hi,
                reason: "bisection iteration budget exhausted",
            });
        }
        iterations += 1;
        let mid = 0.5 * (lo + hi);
        let miss_mid = trial(spec, lambda, mid, opts)?;
        if miss_mid.abs() <= opts.boundary_tol {
            return assemble(spec, lambda, mid, opts);
        }
        if miss_lo * miss_mid < 0.0 {
            hi = mid;
            miss_hi = miss_mid;
        } else {
            lo = mid;
            miss_lo = miss_mid;
        }
    }

    let (mut a0, mut m0, mut a1, mut m1) = (lo, miss_lo, hi, miss_hi);
    while iterations < opts.max_iterations {
        iterations += 1;
        let denom = m1 - m0;
        let mut next = if denom.abs() > f64::MIN_POSITIVE {
            a1 - m1 * (a1 - a0) / denom
        } else {
            0.5 * (lo + hi)
        };
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        let miss_next = trial(spec, lambda, next, opts)?;
        if miss_next.abs() <= opts.boundary_tol {
            return assemble(spec, lambda, next, opts);
        }
        if miss_lo * miss_next < 0.0 {
            hi = next;
        } else {
            lo = next;
            miss_lo = miss_next;
        }
        a0 = a1;
        m0 = m1;
        a1 = next;
        m1 = miss_next;
        if hi - lo < opts.root_tol * hi.max(1.0) {
            // The bracket collapsed onto a jump of the miss function: the
            // trajectory family switches from an interior zero to a
            // turnaround without ever landing on u(1) = 0.
            return Err(ShootError::NoConvergence {
                lambda,
                alpha_lo: lo,
                alpha_hi: hi,
                reason: "bracket collapsed without reaching the boundary tolerance",
            });
        }
    }
    Err(ShootError::NoConvergence {
        lambda,
        alpha_lo: lo,
        alpha_hi: hi,
        reason: "iteration budget exhausted",
    })
}

/// Largest radius the unit-lambda run is allowed to search for a zero.
const SCALING_R_CAP: f64 = 1e4;

/// Solve an autonomous problem by scaling instead of shooting: integrate at
/// lambda = 1 from the given amplitude to the first zero R, then map the run
/// onto the unit ball. The amplitude is exact and lambda = R^p comes out.
pub fn solve_autonomous_by_scaling(
    spec: &ProblemSpec,
    alpha: f64,
    opts: &ShootOptions,
) -> Result<RadialSolution, ShootError> {
    spec.assert_admissible()?;
    if !spec.nonlinearity().is_autonomous() {
        return Err(ShootError::NotAutonomous);
    }
    let (_, theta) = spec.critical_amplitudes()?;
    if theta > 0.0 && alpha <= theta * (1.0 + 1e-9) {
        return Err(ShootError::AmplitudeNotAboveThreshold { alpha, theta });
    }
    let mut ivp_opts = opts.ivp;
    ivp_opts.stop_at_first_zero = true;
    let base = ivp::integrate_radial_free(spec, 1.0, alpha, SCALING_R_CAP, &ivp_opts)?;
    let big_r = match base.first_zero() {
        Some(r) => r,
        None => {
            return Err(ShootError::NoZeroWithinRadius { alpha, r_cap: SCALING_R_CAP })
        }
    };
    let lambda = big_r.powf(spec.p());
    let trajectory = base.rescaled_to_unit(lambda)?;
    finish_solution(spec, lambda, trajectory, opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Nonlinearity;
    use crate::timemap;

    fn cubic_spec(p: f64, n: u32) -> ProblemSpec {
        ProblemSpec::new(
            p,
            n,
            Nonlinearity::autonomous(&[0.0, -1.0, 0.0, 1.0]).unwrap(),
            1.0,
        )
        .unwrap()
    }

    fn pure_cubic_spec(p: f64, n: u32) -> ProblemSpec {
        ProblemSpec::new(
            p,
            n,
            Nonlinearity::autonomous(&[0.0, 0.0, 0.0, 1.0]).unwrap(),
            1.0,
        )
        .unwrap()
    }

    #[test]
    fn shooting_round_trips_the_time_map() {
        // lambda from the time map at alpha = 2 must shoot back to alpha = 2.
        let nl = Nonlinearity::autonomous(&[0.0, -1.0, 0.0, 1.0]).unwrap();
        let lambda = timemap::time_map_lambda(&nl, 2.0, 2.0).unwrap().lambda;
        let spec = cubic_spec(2.0, 1);
        let opts = ShootOptions::default();
        let sol = solve_at_lambda(&spec, lambda, None, &opts).unwrap();
        assert!((sol.alpha() - 2.0).abs() < 1e-6 * 2.0, "alpha = {}", sol.alpha());
        assert!(sol.boundary_residual() < 2.0 * opts.boundary_tol);
        assert!(sol.u_prime_at_one() < -1e-10, "Hopf sign failed: {}", sol.u_prime_at_one());
        assert!(!sol.monotone_violation());
        assert!(!sol.multiple_crossings());
    }

    #[test]
    fn pure_power_amplitude_scales_with_lambda() {
        // For f = u^3, p = 2: alpha(lambda) ~ lambda^{-1/2}, so
        // alpha(16 lambda) = alpha(lambda)/4.
        let spec = pure_cubic_spec(2.0, 2);
        let opts = ShootOptions::default();
        let a1 = solve_at_lambda(&spec, 5.0, None, &opts).unwrap().alpha();
        let a16 = solve_at_lambda(&spec, 80.0, None, &opts).unwrap().alpha();
        assert!(
            (a1 / a16 - 4.0).abs() < 1e-6 * 4.0,
            "alpha(5) = {a1}, alpha(80) = {a16}"
        );
    }

    #[test]
    fn scaling_solver_satisfies_amplitude_power_law() {
        // lambda(alpha) * alpha^{q-p+1} is constant for pure powers.
        let spec = pure_cubic_spec(2.0, 3);
        let opts = ShootOptions::default();
        let mut products = Vec::new();
        for alpha in [0.5, 1.0, 2.0, 4.0] {
            let sol = solve_autonomous_by_scaling(&spec, alpha, &opts).unwrap();
            products.push(sol.lambda() * alpha * alpha);
            assert!(sol.boundary_residual() < 1e-7);
        }
        let first = products[0];
        for prod in &products {
            assert!(
                (prod - first).abs() < 1e-5 * first.abs(),
                "products {products:?}"
            );
        }
    }

    #[test]
    fn scaling_and_direct_shooting_agree() {
        let spec = pure_cubic_spec(2.0, 3);
        let opts = ShootOptions::default();
        let by_scaling = solve_autonomous_by_scaling(&spec, 1.0, &opts).unwrap();
        let direct =
            solve_at_lambda(&spec, by_scaling.lambda(), None, &opts).unwrap();
        assert!(
            (direct.alpha() - 1.0).abs() < 1e-6,
            "direct alpha = {}",
            direct.alpha()
        );
        assert!(
            (direct.u_prime_at_one() - by_scaling.u_prime_at_one()).abs()
                < 1e-6 * by_scaling.u_prime_at_one().abs(),
            "u'(1): {} vs {}",
            direct.u_prime_at_one(),
            by_scaling.u_prime_at_one()
        );
    }

    #[test]
    fn scaling_attaches_consistent_linearization() {
        let spec = cubic_spec(2.0, 1);
        let opts = ShootOptions::default();
        let sol = solve_autonomous_by_scaling(&spec, 2.0, &opts).unwrap();
        // Same solution through the direct route.
        let direct = solve_at_lambda(&spec, sol.lambda(), None, &opts).unwrap();
        assert!(
            (sol.degeneracy_margin() - direct.degeneracy_margin()).abs()
                < 1e-6 * direct.degeneracy_margin().abs(),
            "margins {} vs {}",
            sol.degeneracy_margin(),
            direct.degeneracy_margin()
        );
        assert!(!is_degenerate(&sol, 1e-6));
    }

    #[test]
    fn scaling_refuses_amplitudes_at_or_below_threshold() {
        let spec = cubic_spec(2.0, 1);
        let opts = ShootOptions::default();
        let theta = 2.0f64.sqrt();
        assert!(matches!(
            solve_autonomous_by_scaling(&spec, theta, &opts),
            Err(ShootError::AmplitudeNotAboveThreshold { .. })
        ));
        assert!(matches!(
            solve_autonomous_by_scaling(&spec, 0.8, &opts),
            Err(ShootError::AmplitudeNotAboveThreshold { .. })
        ));
    }

    #[test]
    fn shooting_fails_honestly_past_the_extinction_point() {
        // f = u^3 - 1 stops having positive solutions beyond a finite
        // lambda; far past it the miss function jumps across zero without
        // attaining it, and the solver must say so rather than return junk.
        let spec = ProblemSpec::new(
            2.0,
            1,
            Nonlinearity::autonomous(&[-1.0, 0.0, 0.0, 1.0]).unwrap(),
            1.0,
        )
        .unwrap();
        let opts = ShootOptions::default();
        let err = solve_at_lambda(&spec, 50.0, None, &opts).unwrap_err();
        assert!(
            matches!(
                err,
                ShootError::NoConvergence { .. } | ShootError::BracketNotSignChanging { .. }
            ),
            "unexpected outcome: {err}"
        );
    }

    #[test]
    fn default_bracket_tracks_the_threshold() {
        let spec = cubic_spec(2.0, 1);
        let (lo, hi) = default_alpha_bracket(&spec).unwrap();
        let theta = 2.0f64.sqrt();
        assert!(lo > theta && lo < 1.01 * theta);
        assert!(hi > 10.0 * theta);
        let pure = pure_cubic_spec(2.0, 2);
        let (plo, phi) = default_alpha_bracket(&pure).unwrap();
        assert!(plo > 0.0 && phi > 1.0);
    }
}
