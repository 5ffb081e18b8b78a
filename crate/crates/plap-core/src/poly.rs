//! Exact univariate polynomials over the rationals.
//!
//! Coefficient-function audits (positivity, monotonicity) and critical-point
//! extraction must not depend on floating-point sampling luck, so the checks
//! in this crate run on exact rational polynomials: Sturm sequences count
//! distinct real roots on an interval, bisection on Sturm counts isolates and
//! refines them, and sign verdicts sample exactly between isolated roots.
//! Floating-point coefficients entering from configs are converted exactly
//! (every finite `f64` is a binary rational).

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, One, Signed, ToPrimitive, Zero};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PolyError {
    #[error("polynomial coefficient {index} is not finite: {value}")]
    NonFiniteCoefficient { index: usize, value: f64 },
}

/// Polynomial with exact rational coefficients, ascending degree order.
#[derive(Clone, Debug, PartialEq)]
pub struct Poly {
    coeffs: Vec<BigRational>,
}

impl Poly {
    pub fn new(mut coeffs: Vec<BigRational>) -> Self {
        while coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        Poly { coeffs }
    }

    pub fn zero() -> Self {
        Poly { coeffs: Vec::new() }
    }

    pub fn constant(c: BigRational) -> Self {
        Poly::new(vec![c])
    }

    pub fn from_i64s(coeffs: &[i64]) -> Self {
        Poly::new(
            coeffs
                .iter()
                .map(|&c| BigRational::from_integer(BigInt::from(c)))
                .collect(),
        )
    }

    /// Exact conversion: every finite f64 is a binary rational.
    pub fn from_f64s(coeffs: &[f64]) -> Result<Self, PolyError> {
        let mut out = Vec::with_capacity(coeffs.len());
        for (index, &value) in coeffs.iter().enumerate() {
            let c = BigRational::from_f64(value)
                .ok_or(PolyError::NonFiniteCoefficient { index, value })?;
            out.push(c);
        }
        Ok(Poly::new(out))
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree, or None for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        if self.coeffs.is_empty() {
            None
        } else {
            Some(self.coeffs.len() - 1)
        }
    }

    pub fn coeffs(&self) -> &[BigRational] {
        &self.coeffs
    }

    pub fn coeffs_f64(&self) -> Vec<f64> {
        self.coeffs.iter().map(|c| c.to_f64().unwrap_or(f64::NAN)).collect()
    }

    pub fn eval_exact(&self, x: &BigRational) -> BigRational {
        let mut acc = BigRational::zero();
        for c in self.coeffs.iter().rev() {
            acc = acc * x + c;
        }
        acc
    }

    /// Horner evaluation after lossy coefficient conversion; fine for
    /// diagnostics output, not for sign decisions.
    pub fn eval_f64(&self, x: f64) -> f64 {
        let mut acc = 0.0;
        for c in self.coeffs.iter().rev() {
            acc = acc * x + c.to_f64().unwrap_or(f64::NAN);
        }
        acc
    }

    pub fn derivative(&self) -> Poly {
        if self.coeffs.len() <= 1 {
            return Poly::zero();
        }
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, c)| c * BigRational::from_integer(BigInt::from(k)))
            .collect();
        Poly::new(coeffs)
    }

    /// Multiply by the monomial x.
    pub fn mul_x(&self) -> Poly {
        if self.is_zero() {
            return Poly::zero();
        }
        let mut coeffs = Vec::with_capacity(self.coeffs.len() + 1);
        coeffs.push(BigRational::zero());
        coeffs.extend(self.coeffs.iter().cloned());
        Poly::new(coeffs)
    }

    pub fn scale(&self, s: &BigRational) -> Poly {
        Poly::new(self.coeffs.iter().map(|c| c * s).collect())
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let n = self.coeffs.len().max(other.coeffs.len());
        let mut coeffs = Vec::with_capacity(n);
        for k in 0..n {
            let a = self.coeffs.get(k).cloned().unwrap_or_else(BigRational::zero);
            let b = other.coeffs.get(k).cloned().unwrap_or_else(BigRational::zero);
            coeffs.push(a + b);
        }
        Poly::new(coeffs)
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        self.add(&other.scale(&-BigRational::one()))
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        if self.is_zero() || other.is_zero() {
            return Poly::zero();
        }
        let mut coeffs = vec![BigRational::zero(); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                coeffs[i + j] += a * b;
            }
        }
        Poly::new(coeffs)
    }

    /// Antiderivative with zero constant term.
    pub fn integral(&self) -> Poly {
        if self.is_zero() {
            return Poly::zero();
        }
        let mut coeffs = Vec::with_capacity(self.coeffs.len() + 1);
        coeffs.push(BigRational::zero());
        for (k, c) in self.coeffs.iter().enumerate() {
            coeffs.push(c / BigRational::from_integer(BigInt::from(k + 1)));
        }
        Poly::new(coeffs)
    }

    fn leading(&self) -> &BigRational {
        self.coeffs.last().expect("leading coefficient of zero polynomial")
    }

    /// Rescale so the largest |coefficient| is 1; any positive factor keeps
    /// every pointwise sign, which is all Sturm chains need.
    fn sign_normalized(&self) -> Poly {
        if self.is_zero() {
            return Poly::zero();
        }
        let max = self
            .coeffs
            .iter()
            .map(|c| c.abs())
            .max()
            .expect("nonempty coefficients");
        self.scale(&max.recip())
    }

    /// Remainder of self / divisor over the rationals.
    fn rem(&self, divisor: &Poly) -> Poly {
        let dd = divisor.degree().expect("division by zero polynomial");
        let mut r = self.clone();
        while let Some(rd) = r.degree() {
            if rd < dd {
                break;
            }
            let factor = r.leading() / divisor.leading();
            let shift = rd - dd;
            let mut sub = vec![BigRational::zero(); shift];
            sub.extend(divisor.coeffs.iter().map(|c| c * &factor));
            r = r.sub(&Poly::new(sub));
            // Guard against a stale leading term from inexact cancellation
            // (cannot happen over exact rationals, but keep the loop total).
            if r.degree().is_some_and(|d| d >= rd && d >= dd) {
                r.coeffs.truncate(rd);
                r = Poly::new(r.coeffs);
            }
        }
        r
    }

    /// Cauchy bound: every real root lies in (-bound, bound).
    pub fn root_bound(&self) -> BigRational {
        let lead = self.leading().abs();
        let max_rest = self.coeffs[..self.coeffs.len() - 1]
            .iter()
            .map(|c| c.abs())
            .max()
            .unwrap_or_else(BigRational::zero);
        BigRational::one() + max_rest / lead
    }
}

/// Sturm chain of a nonzero polynomial, sign-normalized at every stage.
pub struct SturmChain {
    seq: Vec<Poly>,
}

impl SturmChain {
    pub fn new(p: &Poly) -> SturmChain {
        assert!(!p.is_zero(), "Sturm chain of the zero polynomial");
        let mut seq = vec![p.sign_normalized()];
        let dp = p.derivative();
        if !dp.is_zero() {
            seq.push(dp.sign_normalized());
            loop {
                let r = seq[seq.len() - 2].rem(&seq[seq.len() - 1]);
                if r.is_zero() {
                    break;
                }
                seq.push(r.scale(&-BigRational::one()).sign_normalized());
            }
        }
        SturmChain { seq }
    }

    fn variations_at(&self, x: &BigRational) -> usize {
        let mut count = 0;
        let mut last: Option<bool> = None;
        for p in &self.seq {
            let v = p.eval_exact(x);
            if v.is_zero() {
                continue;
            }
            let pos = v.is_positive();
            if let Some(prev) = last {
                if prev != pos {
                    count += 1;
                }
            }
            last = Some(pos);
        }
        count
    }

    /// Number of distinct real roots in the half-open interval (a, b].
    pub fn roots_in_half_open(&self, a: &BigRational, b: &BigRational) -> usize {
        assert!(a < b);
        let va = self.variations_at(a);
        let vb = self.variations_at(b);
        va.saturating_sub(vb)
    }

    /// Number of distinct real roots in the open interval (a, b).
    pub fn roots_in_open(&self, a: &BigRational, b: &BigRational) -> usize {
        let n = self.roots_in_half_open(a, b);
        if self.seq[0].eval_exact(b).is_zero() {
            n.saturating_sub(1)
        } else {
            n
        }
    }
}

fn midpoint(a: &BigRational, b: &BigRational) -> BigRational {
    (a + b) / BigRational::from_integer(BigInt::from(2))
}

/// Disjoint intervals (a, b], each holding exactly one distinct root of p in
/// (lo, hi], in increasing order.
pub fn isolate_roots(
    chain: &SturmChain,
    lo: &BigRational,
    hi: &BigRational,
) -> Vec<(BigRational, BigRational)> {
    let mut out = Vec::new();
    let mut stack = vec![(lo.clone(), hi.clone())];
    while let Some((a, b)) = stack.pop() {
        match chain.roots_in_half_open(&a, &b) {
            0 => {}
            1 => out.push((a, b)),
            _ => {
                let m = midpoint(&a, &b);
                stack.push((m.clone(), b));
                stack.push((a, m));
            }
        }
    }
    out.sort_by(|x, y| x.0.cmp(&y.0));
    out
}

/// Shrink an isolating interval (a, b] by Sturm-count bisection until its
/// width is below `tol`. Robust for roots of any multiplicity because no
/// sign change is assumed.
pub fn shrink_enclosure(
    chain: &SturmChain,
    a: &BigRational,
    b: &BigRational,
    tol: f64,
) -> (BigRational, BigRational) {
    let tol = BigRational::from_f64(tol).expect("finite tolerance");
    let mut a = a.clone();
    let mut b = b.clone();
    for _ in 0..256 {
        if &b - &a <= tol {
            break;
        }
        let m = midpoint(&a, &b);
        if chain.roots_in_half_open(&a, &m) >= 1 {
            b = m;
        } else {
            a = m;
        }
    }
    (a, b)
}

/// Midpoint of the shrunken enclosure of the root in (a, b].
pub fn refine_root(chain: &SturmChain, a: &BigRational, b: &BigRational, tol: f64) -> f64 {
    let (a, b) = shrink_enclosure(chain, a, b, tol);
    midpoint(&a, &b).to_f64().expect("root within f64 range")
}

/// Outcome of an exact sign audit on an interval.
#[derive(Clone, Debug, PartialEq)]
pub enum SignVerdict {
    Holds,
    /// Fails at the witness point with the given polynomial value.
    Fails { witness: f64, value: f64 },
}

impl SignVerdict {
    pub fn holds(&self) -> bool {
        matches!(self, SignVerdict::Holds)
    }
}

fn rational(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

/// Sample points that interleave the distinct roots of p on [lo, hi]:
/// both endpoints plus a midpoint between consecutive isolating intervals.
/// The polynomial has constant sign between consecutive distinct roots, so
/// checking these samples decides any `>= 0` / `<= 0` claim on the interval.
fn interleaving_samples(p: &Poly, lo: &BigRational, hi: &BigRational) -> Vec<BigRational> {
    let chain = SturmChain::new(p);
    let roots = isolate_roots(&chain, lo, hi);
    let mut cuts = vec![lo.clone()];
    for (a, b) in &roots {
        // Shrink so the cut cleanly separates this root from its neighbors.
        let mut a = a.clone();
        let mut b = b.clone();
        for _ in 0..8 {
            let m = midpoint(&a, &b);
            if chain.roots_in_half_open(&a, &m) >= 1 {
                b = m;
            } else {
                a = m;
            }
        }
        cuts.push(a);
        cuts.push(b);
    }
    cuts.push(hi.clone());
    let mut samples = Vec::new();
    for w in cuts.windows(2) {
        if w[0] < w[1] {
            samples.push(midpoint(&w[0], &w[1]));
        }
    }
    samples.push(lo.clone());
    samples.push(hi.clone());
    samples
}

/// Exact check that p <= 0 everywhere on [lo, hi].
pub fn nonpositive_on(p: &Poly, lo: &BigRational, hi: &BigRational) -> SignVerdict {
    if p.is_zero() {
        return SignVerdict::Holds;
    }
    for x in interleaving_samples(p, lo, hi) {
        let v = p.eval_exact(&x);
        if v.is_positive() {
            return SignVerdict::Fails {
                witness: x.to_f64().unwrap_or(f64::NAN),
                value: v.to_f64().unwrap_or(f64::NAN),
            };
        }
    }
    SignVerdict::Holds
}

/// Exact check that p >= 0 everywhere on [lo, hi].
pub fn nonnegative_on(p: &Poly, lo: &BigRational, hi: &BigRational) -> SignVerdict {
    match nonpositive_on(&p.scale(&-BigRational::one()), lo, hi) {
        SignVerdict::Holds => SignVerdict::Holds,
        SignVerdict::Fails { witness, value } => SignVerdict::Fails { witness, value: -value },
    }
}

/// Exact check that p > 0 everywhere on the open interval (lo, hi): no root
/// strictly inside and a positive sample. Roots at the endpoints are allowed.
pub fn positive_on_open(p: &Poly, lo: &BigRational, hi: &BigRational) -> SignVerdict {
    if p.is_zero() {
        return SignVerdict::Fails { witness: midpoint(lo, hi).to_f64().unwrap(), value: 0.0 };
    }
    let chain = SturmChain::new(p);
    if chain.roots_in_open(lo, hi) > 0 {
        let roots = isolate_roots(&chain, lo, hi);
        // Bisection never moves the right edge, so when p(hi) = 0 the
        // endpoint root sits in the last interval; every earlier interval
        // isolates a strictly interior root.
        let (a, b) = &roots[0];
        let interior_count =
            if p.eval_exact(hi).is_zero() { roots.len() - 1 } else { roots.len() };
        debug_assert!(interior_count >= 1);
        let w = refine_root(&chain, a, b, 1e-12);
        return SignVerdict::Fails { witness: w, value: p.eval_f64(w) };
    }
    let mid = midpoint(lo, hi);
    let v = p.eval_exact(&mid);
    if v.is_positive() {
        SignVerdict::Holds
    } else {
        SignVerdict::Fails {
            witness: mid.to_f64().unwrap_or(f64::NAN),
            value: v.to_f64().unwrap_or(f64::NAN),
        }
    }
}

/// Exact check that p < 0 everywhere on the open interval (lo, hi).
pub fn negative_on_open(p: &Poly, lo: &BigRational, hi: &BigRational) -> SignVerdict {
    match positive_on_open(&p.scale(&-BigRational::one()), lo, hi) {
        SignVerdict::Holds => SignVerdict::Holds,
        SignVerdict::Fails { witness, value } => SignVerdict::Fails { witness, value: -value },
    }
}

/// Unit interval [0, 1] endpoints as rationals.
pub fn unit_interval() -> (BigRational, BigRational) {
    (rational(0, 1), rational(1, 1))
}
