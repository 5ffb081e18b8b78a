//! Quadrature time map for the one-dimensional autonomous problem.
//!
//! Energy conservation turns the boundary value problem into a quadrature:
//!
//! ```text
//!   lambda^{1/p} = int_0^alpha [ (p/(p-1)) (F(alpha) - F(s)) ]^{-1/p} ds,
//! ```
//!
//! which gives lambda as a function of the amplitude alpha without any ODE
//! integration — an independent oracle for the shooting solver. The
//! (alpha - s)^{-1/p} endpoint singularity is removed by the substitution
//! alpha - s = sigma^{p'} with p' = p/(p-1), and the catastrophic
//! cancellation in F(alpha) - F(s) near s = alpha is avoided by evaluating
//! the exact difference polynomial D(d) = F(alpha) - F(alpha - d) through
//! rational Taylor coefficients at alpha.

use crate::model::{ModelError, Nonlinearity, ProblemSpec};
use crate::poly::{self, Poly};
use crate::quad::{self, QuadError};
use num_rational::BigRational;
use num_traits::{FromPrimitive, Signed, ToPrimitive, Zero};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TimeMapError {
    #[error("the time map needs an autonomous polynomial nonlinearity")]
    NotAutonomousPolynomial,
    #[error("invalid exponent p = {0} (must exceed 1)")]
    InvalidP(f64),
    #[error("invalid amplitude alpha = {0} (must be positive)")]
    InvalidAlpha(f64),
    #[error(
        "amplitude alpha = {alpha} is not admissible: F(alpha) - F(s) is not \
         positive on [0, alpha); offending s = {witness}, value = {value:e}"
    )]
    NotAdmissible { alpha: f64, witness: f64, value: f64 },
    #[error("flat endpoint: f(alpha) = 0 at alpha = {alpha}; the time map is singular there")]
    FlatEndpoint { alpha: f64 },
    #[error(
        "alpha = {alpha} is within {band:e} of theta = {theta}; \
         the time map diverges as alpha approaches theta from above"
    )]
    TooCloseToTheta { alpha: f64, theta: f64, band: f64 },
    #[error(transparent)]
    SignPattern(#[from] ModelError),
    #[error(transparent)]
    Quadrature(#[from] QuadError),
}

/// Refusal band around theta: the map diverges as alpha -> theta+ and f64
/// evaluation of F(alpha) loses all digits in that band.
pub const THETA_REFUSAL_BAND: f64 = 1e-9;

#[derive(Clone, Debug)]
pub struct TimeMapResult {
    pub alpha: f64,
    pub lambda: f64,
    /// Relative error estimate on lambda propagated from the quadrature.
    pub quadrature_error_estimate: f64,
    /// Diagnostic samples (sigma, integrand) across the substituted range.
    pub integrand_samples: Vec<(f64, f64)>,
}

/// Sign-change point gamma of f and the root theta of F above it, both to
/// 1e-12, with the single-sign-change shape verified by exact isolation.
pub fn critical_points(nonlinearity: &Nonlinearity) -> Result<(f64, f64), TimeMapError> {
    if nonlinearity.autonomous_poly().is_none() {
        return Err(TimeMapError::NotAutonomousPolynomial);
    }
    // Exponents are irrelevant for gamma/theta; any valid spec works.
    let spec = ProblemSpec::new(2.0, 1, nonlinearity.clone(), 1.0)?;
    Ok(spec.critical_amplitudes()?)
}

/// lambda(alpha) by quadrature, with admissibility verified exactly.
pub fn time_map_lambda(
    nonlinearity: &Nonlinearity,
    p: f64,
    alpha: f64,
) -> Result<TimeMapResult, TimeMapError> {
    let f_poly = nonlinearity
        .autonomous_poly()
        .ok_or(TimeMapError::NotAutonomousPolynomial)?
        .clone();
    if !(p > 1.0) || !p.is_finite() {
        return Err(TimeMapError::InvalidP(p));
    }
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(TimeMapError::InvalidAlpha(alpha));
    }
    let (_, theta) = critical_points(nonlinearity)?;
    if theta > 0.0 && (alpha - theta).abs() < THETA_REFUSAL_BAND {
        return Err(TimeMapError::TooCloseToTheta {
            alpha,
            theta,
            band: THETA_REFUSAL_BAND,
        });
    }
    let alpha_rat = BigRational::from_f64(alpha).expect("finite alpha");
    let big_f = f_poly.integral();

    // Exact admissibility: G(s) = F(alpha) - F(s) must be positive on
    // [0, alpha). G(alpha) = 0 is expected; a zero anywhere else (including
    // s = 0) makes the integrand non-integrable.
    let g_poly = Poly::constant(big_f.eval_exact(&alpha_rat)).sub(&big_f);
    let zero = BigRational::zero();
    let g_at_zero = g_poly.eval_exact(&zero);
    if !g_at_zero.is_positive() {
        return Err(TimeMapError::NotAdmissible {
            alpha,
            witness: 0.0,
            value: g_at_zero.to_f64().unwrap_or(f64::NAN),
        });
    }
    if let poly::SignVerdict::Fails { witness, value } =
        poly::positive_on_open(&g_poly, &zero, &alpha_rat)
    {
        return Err(TimeMapError::NotAdmissible { alpha, witness, value });
    }

    // Flat endpoint f(alpha) = 0 makes the substituted integrand singular.
    if f_poly.eval_exact(&alpha_rat).is_zero() {
        return Err(TimeMapError::FlatEndpoint { alpha });
    }

    let integrand = SubstitutedIntegrand::new(&big_f, &alpha_rat, p);
    let sigma_end = integrand.sigma_end(alpha);
    let result = quad::integrate(|sigma| integrand.eval(sigma), 0.0, sigma_end, 1e-12, 1e-14)?;
    let lambda = result.value.powf(p);
    let relative = p * result.error_estimate / result.value.abs().max(f64::MIN_POSITIVE);

    let samples = (0..=32)
        .map(|i| {
            let sigma = sigma_end * i as f64 / 32.0;
            (sigma, integrand.eval(sigma))
        })
        .collect();

    Ok(TimeMapResult {
        alpha,
        lambda,
        quadrature_error_estimate: relative,
        integrand_samples: samples,
    })
}

/// The endpoint-substituted time-map integrand
///
/// ```text
///   g(sigma) = p' sigma^{p'-1} [ (p/(p-1)) D(sigma^{p'}) ]^{-1/p},
/// ```
///
/// bounded at sigma = 0 with limit p' [(p/(p-1)) f(alpha)]^{-1/p}, where
/// D(d) = F(alpha) - F(alpha - d) is evaluated through its exact Taylor
/// coefficients d_k = (-1)^{k+1} F^{(k)}(alpha)/k! so that no digits are
/// lost to cancellation as d -> 0.
struct SubstitutedIntegrand {
    d_coeffs: Vec<f64>,
    p: f64,
    p_prime: f64,
}

impl SubstitutedIntegrand {
    fn new(big_f: &Poly, alpha_rat: &BigRational, p: f64) -> Self {
        let mut d_coeffs = vec![0.0f64];
        let mut deriv = big_f.clone();
        let mut factorial = BigRational::from_f64(1.0).unwrap();
        let mut k = 1.0f64;
        let mut sign = 1.0f64;
        loop {
            deriv = deriv.derivative();
            if deriv.is_zero() {
                break;
            }
            factorial *= BigRational::from_f64(k).unwrap();
            let coefficient = deriv.eval_exact(alpha_rat) / &factorial;
            d_coeffs.push(sign * coefficient.to_f64().unwrap_or(f64::NAN));
            sign = -sign;
            k += 1.0;
        }
        SubstitutedIntegrand { d_coeffs, p, p_prime: p / (p - 1.0) }
    }

    fn sigma_end(&self, alpha: f64) -> f64 {
        alpha.powf(1.0 / self.p_prime)
    }

    fn eval(&self, sigma: f64) -> f64 {
        let delta = sigma.powf(self.p_prime);
        let mut d = 0.0;
        for c in self.d_coeffs.iter().rev() {
            d = d * delta + c;
        }
        if d <= 0.0 {
            return f64::INFINITY;
        }
        let factor = self.p / (self.p - 1.0);
        self.p_prime * sigma.powf(self.p_prime - 1.0) * (factor * d).powf(-1.0 / self.p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn autonomous(coeffs: &[f64]) -> Nonlinearity {
        Nonlinearity::autonomous(coeffs).unwrap()
    }

    #[test]
    fn linear_f_reproduces_the_principal_eigenvalue() {
        // f = u, p = 2, alpha = 1: int_0^1 (s^2-range) gives pi/2, so
        // lambda = pi^2/4.
        let result = time_map_lambda(&autonomous(&[0.0, 1.0]), 2.0, 1.0).unwrap();
        let exact = PI * PI / 4.0;
        assert!(
            (result.lambda - exact).abs() < 1e-9 * exact,
            "lambda = {}, exact = {exact}",
            result.lambda
        );
        assert!(result.quadrature_error_estimate < 1e-9);
    }

    #[test]
    fn homogeneous_f_makes_lambda_amplitude_invariant() {
        // f = u^{p-1} scales away the amplitude entirely.
        for (p, coeffs) in [
            (2.0, vec![0.0, 1.0]),
            (3.0, vec![0.0, 0.0, 1.0]),
            (4.0, vec![0.0, 0.0, 0.0, 1.0]),
        ] {
            let nl = autonomous(&coeffs);
            let lambdas: Vec<f64> = [0.5, 1.0, 2.0]
                .iter()
                .map(|&a| time_map_lambda(&nl, p, a).unwrap().lambda)
                .collect();
            for l in &lambdas[1..] {
                assert!(
                    (l - lambdas[0]).abs() < 1e-8 * lambdas[0],
                    "p = {p}: lambdas = {lambdas:?}"
                );
            }
        }
    }

    #[test]
    fn amplitude_at_theta_is_refused() {
        // theta = sqrt(2) for f = -u + u^3; f64 alpha lands inside the
        // refusal band around the exact theta.
        let nl = autonomous(&[0.0, -1.0, 0.0, 1.0]);
        match time_map_lambda(&nl, 2.0, 2.0_f64.sqrt()) {
            Err(TimeMapError::TooCloseToTheta { .. }) => {}
            other => panic!("expected theta refusal, got {other:?}"),
        }
    }

    #[test]
    fn amplitude_below_theta_is_not_admissible() {
        let nl = autonomous(&[0.0, -1.0, 0.0, 1.0]);
        match time_map_lambda(&nl, 2.0, 1.2) {
            Err(TimeMapError::NotAdmissible { witness, .. }) => {
                assert!((0.0..1.2).contains(&witness));
            }
            other => panic!("expected admissibility failure, got {other:?}"),
        }
    }

    #[test]
    fn flat_endpoint_is_refused() {
        // f = u(u-1)^2 >= 0 keeps F strictly increasing, but f(1) = 0 makes
        // the endpoint flat.
        let nl = autonomous(&[0.0, 1.0, -2.0, 1.0]);
        match time_map_lambda(&nl, 2.0, 1.0) {
            Err(TimeMapError::FlatEndpoint { alpha }) => assert_eq!(alpha, 1.0),
            other => panic!("expected flat-endpoint refusal, got {other:?}"),
        }
    }

    #[test]
    fn lambda_blows_up_toward_theta() {
        // f(0) = 0 case: lambda(theta + 10^{-k}) increases with k. The
        // growth is (log 1/(alpha-theta))^2 — slow but strictly monotone.
        let nl = autonomous(&[0.0, -1.0, 0.0, 1.0]);
        let theta = 2.0_f64.sqrt();
        let mut previous = 0.0;
        for k in 1..=6 {
            let alpha = theta + 10f64.powi(-k);
            let lambda = time_map_lambda(&nl, 2.0, alpha).unwrap().lambda;
            assert!(lambda > previous, "k = {k}: {lambda} <= {previous}");
            previous = lambda;
        }
        assert!(previous > 30.0);
    }

    #[test]
    fn quadrature_value_is_stable_under_interval_splitting() {
        // Recompute with the range pre-split at the midpoint; agreement at
        // 1e-9 relative shows the substitution leaves a regular integrand.
        let nl = autonomous(&[0.0, -1.0, 0.0, 1.0]);
        let p = 2.0;
        let alpha = 2.0;
        let whole = time_map_lambda(&nl, p, alpha).unwrap();
        // Manual split: integrate the same substituted integrand in halves.
        let big_f = nl.autonomous_poly().unwrap().integral();
        let alpha_rat = BigRational::from_f64(alpha).unwrap();
        let integrand = SubstitutedIntegrand::new(&big_f, &alpha_rat, p);
        let end = integrand.sigma_end(alpha);
        let g = |sigma: f64| integrand.eval(sigma);
        let left = quad::integrate(g, 0.0, 0.5 * end, 1e-12, 1e-14).unwrap();
        let right = quad::integrate(g, 0.5 * end, end, 1e-12, 1e-14).unwrap();
        let lambda_split = (left.value + right.value).powf(p);
        assert!(
            (lambda_split - whole.lambda).abs() < 1e-9 * whole.lambda,
            "split {lambda_split} vs whole {}",
            whole.lambda
        );
    }

    #[test]
    fn critical_points_closed_forms() {
        let (g, t) = critical_points(&autonomous(&[0.0, -1.0, 0.0, 1.0])).unwrap();
        assert!((g - 1.0).abs() < 1e-12 && (t - 2.0_f64.sqrt()).abs() < 1e-12);
        let (g, t) = critical_points(&autonomous(&[0.0, -2.0, 0.0, 1.0])).unwrap();
        assert!((g - 2.0_f64.sqrt()).abs() < 1e-12 && (t - 2.0).abs() < 1e-12);
        let (g, t) = critical_points(&autonomous(&[0.0, 0.0, 0.0, 1.0])).unwrap();
        assert_eq!((g, t), (0.0, 0.0));
    }
}
