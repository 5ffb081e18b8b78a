//! Problem data for the radial p-Laplace boundary value problem
//!
//! ```text
//!   (phi(u'))' + ((n-1)/r) phi(u') + lambda f(r, u) = 0,   phi(t) = t|t|^{p-2},
//! ```
//!
//! on the unit ball: the phi-calculus, exponent bookkeeping, and the
//! nonlinearity families with exact partial derivatives and primitives.
//! Coefficient functions are polynomials in r so that f_r, F_r, and all
//! hypothesis audits are exact rather than numerically differentiated.

use crate::poly::{self, Poly, PolyError, SturmChain};
use num_rational::BigRational;
use num_traits::{FromPrimitive, Signed, ToPrimitive, Zero};
use thiserror::Error;

/// Largest supported polynomial degree for coefficient functions and
/// autonomous nonlinearities.
pub const MAX_COEFFICIENT_DEGREE: usize = 8;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("exponent p must exceed 1, got {0}")]
    InvalidP(f64),
    #[error("dimension n must be at least 1, got {0}")]
    InvalidN(i64),
    #[error("lambda must be positive and finite, got {0}")]
    InvalidLambda(f64),
    #[error("growth exponent q must exceed min(1, p-1) = {min}, got {q}")]
    SubminimalGrowth { q: f64, min: f64 },
    #[error(
        "growth exponent q = {q} is supercritical: for n = {n}, p = {p} \
         the critical exponent is {critical}"
    )]
    SupercriticalGrowth { q: f64, n: u32, p: f64, critical: f64 },
    #[error("nonlinearity evaluation requires u >= 0, got {0}")]
    NegativeAmplitude(f64),
    #[error("phi'(0) diverges for p = {0} < 2")]
    PhiDerivativePole(f64),
    #[error("polynomial degree {degree} exceeds the supported bound {max}")]
    DegreeTooHigh { degree: usize, max: usize },
    #[error(transparent)]
    Coefficient(#[from] PolyError),
    #[error("autonomous nonlinearity lacks the single-sign-change shape: {reason}")]
    SignPattern { reason: String },
    #[error("homotopy weight must lie in [0, 1], got {0}")]
    InvalidWeight(f64),
}

/// phi(t) = t |t|^{p-2}: odd, strictly increasing, phi(0) = 0 by continuity.
pub fn phi(t: f64, p: f64) -> f64 {
    if t == 0.0 {
        0.0
    } else {
        t * t.abs().powf(p - 2.0)
    }
}

/// phi'(t) = (p-1) |t|^{p-2}; diverges at t = 0 when p < 2.
pub fn phi_derivative(t: f64, p: f64) -> Result<f64, ModelError> {
    if t == 0.0 {
        if p < 2.0 {
            Err(ModelError::PhiDerivativePole(p))
        } else if p == 2.0 {
            Ok(1.0)
        } else {
            Ok(0.0)
        }
    } else {
        Ok((p - 1.0) * t.abs().powf(p - 2.0))
    }
}

/// phi^{-1}(s) = sign(s) |s|^{1/(p-1)}.
pub fn phi_inverse(s: f64, p: f64) -> f64 {
    if s == 0.0 {
        0.0
    } else {
        s.signum() * s.abs().powf(1.0 / (p - 1.0))
    }
}

/// Critical Sobolev-type exponent (np - n + p)/(n - p), defined for n > p.
pub fn critical_exponent(p: f64, n: u32) -> Option<f64> {
    let nf = n as f64;
    if nf > p {
        Some((nf * p - nf + p) / (nf - p))
    } else {
        None
    }
}

/// Exponent bookkeeping: p > 1, n >= 1, and the growth exponent q when the
/// family is power-type.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Exponents {
    p: f64,
    n: u32,
    q: Option<f64>,
}

impl Exponents {
    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn q(&self) -> Option<f64> {
        self.q
    }
}

/// Polynomial coefficient function of r on [0, 1] with exact derivatives.
#[derive(Clone, Debug, PartialEq)]
pub struct CoefficientFn {
    poly: Poly,
    deriv: Poly,
    second: Poly,
    coeffs: Vec<f64>,
    deriv_coeffs: Vec<f64>,
    second_coeffs: Vec<f64>,
}

impl CoefficientFn {
    pub fn from_poly(poly: Poly) -> Result<Self, ModelError> {
        if let Some(degree) = poly.degree() {
            if degree > MAX_COEFFICIENT_DEGREE {
                return Err(ModelError::DegreeTooHigh { degree, max: MAX_COEFFICIENT_DEGREE });
            }
        }
        let deriv = poly.derivative();
        let second = deriv.derivative();
        let coeffs = poly.coeffs_f64();
        let deriv_coeffs = deriv.coeffs_f64();
        let second_coeffs = second.coeffs_f64();
        Ok(CoefficientFn { poly, deriv, second, coeffs, deriv_coeffs, second_coeffs })
    }

    /// Coefficients in ascending degree order, converted exactly.
    pub fn from_coeffs(coeffs: &[f64]) -> Result<Self, ModelError> {
        Self::from_poly(Poly::from_f64s(coeffs)?)
    }

    pub fn constant(c: f64) -> Result<Self, ModelError> {
        Self::from_coeffs(&[c])
    }

    pub fn eval(&self, r: f64) -> f64 {
        horner(&self.coeffs, r)
    }

    pub fn eval_deriv(&self, r: f64) -> f64 {
        horner(&self.deriv_coeffs, r)
    }

    pub fn eval_second(&self, r: f64) -> f64 {
        horner(&self.second_coeffs, r)
    }

    pub fn poly(&self) -> &Poly {
        &self.poly
    }

    pub fn deriv_poly(&self) -> &Poly {
        &self.deriv
    }

    pub fn second_poly(&self) -> &Poly {
        &self.second
    }

    pub fn is_constant(&self) -> bool {
        self.poly.degree().is_none_or(|d| d == 0)
    }
}

fn horner(coeffs: &[f64], x: f64) -> f64 {
    let mut acc = 0.0;
    for c in coeffs.iter().rev() {
        acc = acc * x + c;
    }
    acc
}

/// f, its exact partials, and its primitive F(r, u) = int_0^u f(r, t) dt.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FValues {
    pub f: f64,
    pub f_u: f64,
    pub f_r: f64,
    pub big_f: f64,
    pub big_f_r: f64,
}

/// Nonlinearity families. The first two carry a homotopy weight used by the
/// continuation module: `a_weight` scales the -a(r)u^{p-1} term and
/// `b_power` exponentiates b(r); both default to 1.
#[derive(Clone, Debug, PartialEq)]
pub enum Nonlinearity {
    /// f(r, u) = -a_weight * a(r) u^{p-1} + b(r) u^q.
    ModelAb { a: CoefficientFn, b: CoefficientFn, q: f64, a_weight: f64 },
    /// f(r, u) = b(r)^{b_power} u^q.
    PureB { b: CoefficientFn, q: f64, b_power: f64 },
    /// f(u) = polynomial with exact rational coefficients (1D theory).
    Autonomous1d {
        f_poly: Poly,
        f_coeffs: Vec<f64>,
        df_coeffs: Vec<f64>,
        big_f_coeffs: Vec<f64>,
    },
    /// f(r, u) = u: oracle family for eigenfunction tests. Linear, hence
    /// u f_u - (p-1) f vanishes identically at p = 2 (degenerate by design).
    LinearTest,
}

impl Nonlinearity {
    pub fn model_ab(a: CoefficientFn, b: CoefficientFn, q: f64) -> Self {
        Nonlinearity::ModelAb { a, b, q, a_weight: 1.0 }
    }

    pub fn model_ab_weighted(
        a: CoefficientFn,
        b: CoefficientFn,
        q: f64,
        a_weight: f64,
    ) -> Result<Self, ModelError> {
        if !(0.0..=1.0).contains(&a_weight) || !a_weight.is_finite() {
            return Err(ModelError::InvalidWeight(a_weight));
        }
        Ok(Nonlinearity::ModelAb { a, b, q, a_weight })
    }

    pub fn pure_b(b: CoefficientFn, q: f64) -> Self {
        Nonlinearity::PureB { b, q, b_power: 1.0 }
    }

    pub fn pure_b_powered(b: CoefficientFn, q: f64, b_power: f64) -> Result<Self, ModelError> {
        if !(0.0..=1.0).contains(&b_power) || !b_power.is_finite() {
            return Err(ModelError::InvalidWeight(b_power));
        }
        Ok(Nonlinearity::PureB { b, q, b_power })
    }

    /// Autonomous polynomial f(u), coefficients ascending in u.
    pub fn autonomous(coeffs: &[f64]) -> Result<Self, ModelError> {
        let f_poly = Poly::from_f64s(coeffs)?;
        if let Some(degree) = f_poly.degree() {
            if degree > MAX_COEFFICIENT_DEGREE {
                return Err(ModelError::DegreeTooHigh { degree, max: MAX_COEFFICIENT_DEGREE });
            }
        }
        let f_coeffs = f_poly.coeffs_f64();
        let df_coeffs = f_poly.derivative().coeffs_f64();
        let big_f_coeffs = f_poly.integral().coeffs_f64();
        Ok(Nonlinearity::Autonomous1d { f_poly, f_coeffs, df_coeffs, big_f_coeffs })
    }

    pub fn linear_test() -> Self {
        Nonlinearity::LinearTest
    }

    pub fn is_autonomous(&self) -> bool {
        match self {
            Nonlinearity::Autonomous1d { .. } | Nonlinearity::LinearTest => true,
            Nonlinearity::ModelAb { a, b, .. } => a.is_constant() && b.is_constant(),
            Nonlinearity::PureB { b, .. } => b.is_constant(),
        }
    }

    pub fn growth_exponent(&self) -> Option<f64> {
        match self {
            Nonlinearity::ModelAb { q, .. } | Nonlinearity::PureB { q, .. } => Some(*q),
            _ => None,
        }
    }

    /// Exact polynomial of the autonomous family, if this is one.
    pub fn autonomous_poly(&self) -> Option<&Poly> {
        match self {
            Nonlinearity::Autonomous1d { f_poly, .. } => Some(f_poly),
            _ => None,
        }
    }

    /// True when f(r, u) < 0 for small u > 0 (so amplitudes must clear a
    /// positive threshold before trajectories can reach zero).
    pub fn has_negative_part(&self) -> bool {
        match self {
            Nonlinearity::ModelAb { a_weight, .. } => *a_weight > 0.0,
            Nonlinearity::PureB { .. } | Nonlinearity::LinearTest => false,
            Nonlinearity::Autonomous1d { f_coeffs, .. } => {
                // Sign of f just above u = 0: first nonzero coefficient.
                f_coeffs.iter().find(|c| **c != 0.0).is_some_and(|c| *c < 0.0)
            }
        }
    }
}

/// Full problem description: exponents, nonlinearity, and the scale
/// parameter lambda (a reference value; solver entry points that sweep
/// lambda take it explicitly).
#[derive(Clone, Debug, PartialEq)]
pub struct ProblemSpec {
    exponents: Exponents,
    nonlinearity: Nonlinearity,
    lambda: f64,
}

impl ProblemSpec {
    pub fn new(p: f64, n: u32, nonlinearity: Nonlinearity, lambda: f64) -> Result<Self, ModelError> {
        if !(p > 1.0) || !p.is_finite() {
            return Err(ModelError::InvalidP(p));
        }
        if n < 1 {
            return Err(ModelError::InvalidN(n as i64));
        }
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(ModelError::InvalidLambda(lambda));
        }
        let q = nonlinearity.growth_exponent();
        if let Some(q) = q {
            let min = 1.0_f64.min(p - 1.0);
            if !(q > min) || !q.is_finite() {
                return Err(ModelError::SubminimalGrowth { q, min });
            }
        }
        Ok(ProblemSpec { exponents: Exponents { p, n, q }, nonlinearity, lambda })
    }

    pub fn p(&self) -> f64 {
        self.exponents.p
    }

    pub fn n(&self) -> u32 {
        self.exponents.n
    }

    pub fn exponents(&self) -> Exponents {
        self.exponents
    }

    pub fn nonlinearity(&self) -> &Nonlinearity {
        &self.nonlinearity
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn with_lambda(&self, lambda: f64) -> Result<Self, ModelError> {
        ProblemSpec::new(self.exponents.p, self.exponents.n, self.nonlinearity.clone(), lambda)
    }

    pub fn with_nonlinearity(&self, nonlinearity: Nonlinearity) -> Result<Self, ModelError> {
        ProblemSpec::new(self.exponents.p, self.exponents.n, nonlinearity, self.lambda)
    }

    /// Subcriticality gate for power-type families: when n > p the growth
    /// exponent must stay below (np - n + p)/(n - p). Called by the solver
    /// entry points; the hypothesis auditor deliberately runs without it so
    /// that supercritical specs can still be audited and reported.
    pub fn assert_admissible(&self) -> Result<(), ModelError> {
        if let (Some(q), Some(critical)) =
            (self.exponents.q, critical_exponent(self.exponents.p, self.exponents.n))
        {
            if q >= critical {
                return Err(ModelError::SupercriticalGrowth {
                    q,
                    n: self.exponents.n,
                    p: self.exponents.p,
                    critical,
                });
            }
        }
        Ok(())
    }

    /// Evaluate f and its exact partials at (r, u), u >= 0.
    pub fn values(&self, r: f64, u: f64) -> Result<FValues, ModelError> {
        if u < 0.0 {
            return Err(ModelError::NegativeAmplitude(u));
        }
        Ok(self.values_signed(r, u))
    }

    /// Internal evaluation with the odd extension f(r, -s) = -f(r, s):
    /// f_u and F and F_r become even in u, f_r odd. The integrator needs
    /// this for trial trajectories that overshoot below zero, and it keeps
    /// fractional powers real.
    pub(crate) fn values_signed(&self, r: f64, u: f64) -> FValues {
        let s = u.abs();
        let sign = if u < 0.0 { -1.0 } else { 1.0 };
        let raw = self.values_nonneg(r, s);
        FValues {
            f: sign * raw.f,
            f_u: raw.f_u,
            f_r: sign * raw.f_r,
            big_f: raw.big_f,
            big_f_r: raw.big_f_r,
        }
    }

    fn values_nonneg(&self, r: f64, u: f64) -> FValues {
        let p = self.exponents.p;
        match &self.nonlinearity {
            Nonlinearity::ModelAb { a, b, q, a_weight } => {
                let (av, ad) = (a_weight * a.eval(r), a_weight * a.eval_deriv(r));
                let (bv, bd) = (b.eval(r), b.eval_deriv(r));
                let q = *q;
                let up1 = pow_nonneg(u, p - 1.0);
                let up2 = pow_nonneg(u, p - 2.0);
                let uq = pow_nonneg(u, q);
                let uq1 = pow_nonneg(u, q - 1.0);
                let up = pow_nonneg(u, p);
                let uq_plus = pow_nonneg(u, q + 1.0);
                FValues {
                    f: -av * up1 + bv * uq,
                    f_u: -av * (p - 1.0) * up2 + bv * q * uq1,
                    f_r: -ad * up1 + bd * uq,
                    big_f: -av * up / p + bv * uq_plus / (q + 1.0),
                    big_f_r: -ad * up / p + bd * uq_plus / (q + 1.0),
                }
            }
            Nonlinearity::PureB { b, q, b_power } => {
                let bv = b.eval(r);
                let bd = b.eval_deriv(r);
                let t = *b_power;
                let bt = pow_nonneg(bv, t);
                // d/dr b^t = t b^{t-1} b'.
                let bt_r = if t == 0.0 { 0.0 } else { t * pow_nonneg(bv, t - 1.0) * bd };
                let q = *q;
                let uq = pow_nonneg(u, q);
                let uq1 = pow_nonneg(u, q - 1.0);
                let uq_plus = pow_nonneg(u, q + 1.0);
                FValues {
                    f: bt * uq,
                    f_u: bt * q * uq1,
                    f_r: bt_r * uq,
                    big_f: bt * uq_plus / (q + 1.0),
                    big_f_r: bt_r * uq_plus / (q + 1.0),
                }
            }
            Nonlinearity::Autonomous1d { f_coeffs, df_coeffs, big_f_coeffs, .. } => FValues {
                f: horner(f_coeffs, u),
                f_u: horner(df_coeffs, u),
                f_r: 0.0,
                big_f: horner(big_f_coeffs, u),
                big_f_r: 0.0,
            },
            Nonlinearity::LinearTest => {
                FValues { f: u, f_u: 1.0, f_r: 0.0, big_f: 0.5 * u * u, big_f_r: 0.0 }
            }
        }
    }

    /// Sign-change point gamma of u -> f(0, u) and the root theta of
    /// u -> F(0, u) above it, both to 1e-12. Returns (0, 0) for families
    /// that are nonnegative from u = 0 on.
    pub fn critical_amplitudes(&self) -> Result<(f64, f64), ModelError> {
        let p = self.exponents.p;
        match &self.nonlinearity {
            Nonlinearity::ModelAb { a, b, q, a_weight } => {
                let a0 = a_weight * a.eval(0.0);
                let b0 = b.eval(0.0);
                if a0 <= 0.0 {
                    return Ok((0.0, 0.0));
                }
                if b0 <= 0.0 {
                    return Err(ModelError::SignPattern {
                        reason: format!("b(0) = {b0} must be positive"),
                    });
                }
                // gamma: a0 u^{p-1} = b0 u^q; theta: a0 u^p / p = b0 u^{q+1}/(q+1).
                let gamma = (a0 / b0).powf(1.0 / (q - p + 1.0));
                let theta = (a0 * (q + 1.0) / (b0 * p)).powf(1.0 / (q + 1.0 - p));
                Ok((gamma, theta))
            }
            Nonlinearity::PureB { .. } | Nonlinearity::LinearTest => Ok((0.0, 0.0)),
            Nonlinearity::Autonomous1d { f_poly, .. } => autonomous_critical_amplitudes(f_poly),
        }
    }
}

/// u^e for u >= 0 with the continuity conventions phi uses: 0^0 = 1,
/// 0^{e>0} = 0, and 0^{e<0} = +infinity (the honest limit; adaptive steps
/// reject it rather than silently regularizing).
fn pow_nonneg(u: f64, e: f64) -> f64 {
    if u == 0.0 {
        if e > 0.0 {
            0.0
        } else if e == 0.0 {
            1.0
        } else {
            f64::INFINITY
        }
    } else {
        u.powf(e)
    }
}

/// gamma = unique positive sign-change root of f, theta = unique root of
/// F above gamma, computed by exact root isolation on the polynomial.
///
/// The sign pattern of f on (0, infinity) is read off exact evaluations in
/// the root-free gaps between tightly shrunken root enclosures: the only
/// admissible shapes are "nonnegative throughout" (gamma = theta = 0) and
/// "one change, - to +" (gamma = that root).
fn autonomous_critical_amplitudes(f_poly: &Poly) -> Result<(f64, f64), ModelError> {
    if f_poly.is_zero() {
        return Err(ModelError::SignPattern { reason: "f is identically zero".into() });
    }
    let zero = BigRational::zero();
    let two = BigRational::from_f64(2.0).unwrap();
    let bound = f_poly.root_bound();
    let chain = SturmChain::new(f_poly);
    let mut enclosures = Vec::new();
    for (a, b) in poly::isolate_roots(&chain, &zero, &bound) {
        enclosures.push(poly::shrink_enclosure(&chain, &a, &b, 1e-13));
    }
    // One exact sample per root-free gap; the Cauchy bound is strict, so
    // f(bound) itself is a valid final sample.
    let mut samples = Vec::new();
    let mut prev_end = zero.clone();
    for (a, _) in &enclosures {
        if a <= &prev_end {
            return Err(ModelError::SignPattern {
                reason: "roots of f too close to separate at 1e-13 resolution".into(),
            });
        }
        samples.push((&prev_end + a) / &two);
        prev_end = enclosures[samples.len() - 1].1.clone();
    }
    samples.push(if prev_end < bound { bound.clone() } else { &prev_end + BigRational::from_f64(1.0).unwrap() });
    let signs: Vec<i8> = samples
        .iter()
        .map(|s| {
            let v = f_poly.eval_exact(s);
            if v.is_positive() {
                1
            } else if v.is_negative() {
                -1
            } else {
                0
            }
        })
        .collect();
    if signs.contains(&0) {
        return Err(ModelError::SignPattern { reason: "sample landed on a root of f".into() });
    }
    let changes: Vec<usize> =
        (1..signs.len()).filter(|&i| signs[i] != signs[i - 1]).collect();
    let gamma = match changes.len() {
        0 => {
            if signs[0] < 0 {
                return Err(ModelError::SignPattern {
                    reason: "f is negative for all u > 0".into(),
                });
            }
            return Ok((0.0, 0.0));
        }
        1 => {
            let i = changes[0];
            if signs[i - 1] > 0 {
                let at = samples[i - 1].to_f64().unwrap_or(f64::NAN);
                return Err(ModelError::SignPattern {
                    reason: format!("f changes sign from + to - above u = {at}"),
                });
            }
            // The change sits at the root enclosed between the two samples.
            let (a, b) = &enclosures[i - 1];
            poly::refine_root(&chain, a, b, 1e-13)
        }
        m => {
            return Err(ModelError::SignPattern {
                reason: format!("f changes sign {m} times for u > 0"),
            });
        }
    };
    // theta: unique root of F = int f above gamma. F decreases on
    // (0, gamma) and increases afterwards, so the root is simple.
    let big_f = f_poly.integral();
    let gamma_hi = {
        let i = changes[0];
        enclosures[i - 1].1.clone()
    };
    let big_bound = {
        let fb = big_f.root_bound();
        if fb > bound {
            fb
        } else {
            bound.clone()
        }
    };
    if big_bound <= gamma_hi {
        return Err(ModelError::SignPattern {
            reason: "primitive F has no root above gamma".into(),
        });
    }
    let f_chain = SturmChain::new(&big_f);
    let theta_roots = poly::isolate_roots(&f_chain, &gamma_hi, &big_bound);
    let (ta, tb) = theta_roots.first().ok_or_else(|| ModelError::SignPattern {
        reason: "primitive F stays below zero above gamma".into(),
    })?;
    let theta = poly::refine_root(&f_chain, ta, tb, 1e-13);
    Ok((gamma, theta))
}
