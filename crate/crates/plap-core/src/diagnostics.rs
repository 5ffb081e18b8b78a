//! Identity profiles, residual checks, and hypothesis audits.
//!
//! A computed solution is only trusted after it survives independent
//! cross-examination. Three exact differential identities link the
//! solution, its linearization, and the nonlinearity:
//!
//! ```text
//!   pairing          xi = (p-1) v w - u z
//!                    xi' = lambda r^{n-1} [u f_u - (p-1) f] w
//!   linearized flux  T  = r (p-1) v w' + lambda r^n f w + (n-p) v w
//!                    T' = lambda r^{n-1} [p f + r f_r] w
//!   energy flux      P  = r (p-1) v u' + p lambda r^n F + (n-p) v u
//!                    P' = r^{n-1} I,
//!                    I  = lambda [n p F - (n-p) u f + p r F_r]
//! ```
//!
//! The residual suite differentiates the computed profiles numerically
//! (five-point stencils on dense output) and compares against the analytic
//! right-hand sides; the residuals must sit at integration-error level and
//! shrink when tolerances tighten. Separately, the hypothesis auditor
//! certifies the structural conditions on the coefficient polynomials with
//! exact rational arithmetic - no sampling, no tolerance.

use crate::ivp::EventKind;
use crate::model::{
    phi, phi_derivative, CoefficientFn, ModelError, Nonlinearity, ProblemSpec,
};
use crate::poly::{self, Poly, SignVerdict};
use crate::shoot::RadialSolution;
use num_rational::BigRational;
use num_traits::{FromPrimitive, One, Signed, Zero};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DiagnosticsError {
    #[error("one-dimensional identities require n = 1 (got n = {0})")]
    NotOneDimensional(u32),
    #[error("one-dimensional identities require an autonomous nonlinearity")]
    NotAutonomous,
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Identity profiles along a solution, sampled on the trajectory grid.
#[derive(Clone, Debug)]
pub struct IdentityProfiles {
    grid: Vec<f64>,
    pairing: Vec<f64>,
    linearized_flux: Vec<f64>,
    solution_flux: Vec<f64>,
    energy_flux: Vec<f64>,
    energy_source: Vec<f64>,
    amplitude_ratio: Vec<f64>,
    guarded_nodes: usize,
    boundary_flux_reference: f64,
}

impl IdentityProfiles {
    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    /// xi = (p-1) v w - u z.
    pub fn pairing(&self) -> &[f64] {
        &self.pairing
    }

    /// T = r (p-1) v w' + lambda r^n f w + (n-p) v w.
    pub fn linearized_flux(&self) -> &[f64] {
        &self.linearized_flux
    }

    /// Q = r (p-1) v u' + lambda r^n u f + (n-p) v u.
    pub fn solution_flux(&self) -> &[f64] {
        &self.solution_flux
    }

    /// P = r (p-1) v u' + p lambda r^n F + (n-p) v u.
    pub fn energy_flux(&self) -> &[f64] {
        &self.energy_flux
    }

    /// I = lambda [n p F - (n-p) u f + p r F_r].
    pub fn energy_source(&self) -> &[f64] {
        &self.energy_source
    }

    /// (p f + r f_r) / (u f_u - (p-1) f); NaN where the denominator is
    /// too small to divide by.
    pub fn amplitude_ratio(&self) -> &[f64] {
        &self.amplitude_ratio
    }

    /// Number of grid nodes where the amplitude-ratio denominator was
    /// guarded out.
    pub fn guarded_nodes(&self) -> usize {
        self.guarded_nodes
    }

    /// (p-1) |u'(1)|^p: the value both flux profiles must attain at r = 1
    /// on an exact solution (u(1) = 0 collapses the other terms).
    pub fn boundary_flux_reference(&self) -> f64 {
        self.boundary_flux_reference
    }
}

/// Compute the identity profiles at the trajectory grid nodes. Solution
/// quantities (u, u', v) come from the primary trajectory; linearized ones
/// (w, w', z) from the coupled re-integration resampled onto the same grid.
pub fn identity_profiles(solution: &RadialSolution) -> IdentityProfiles {
    let traj = solution.trajectory();
    let lin = solution.linearized();
    let spec = traj.spec();
    let p = spec.p();
    let n = spec.n() as f64;
    let n_int = spec.n() as i32;
    let lambda = traj.lambda();

    let m = traj.grid().len();
    let mut pairing = Vec::with_capacity(m);
    let mut linearized_flux = Vec::with_capacity(m);
    let mut solution_flux = Vec::with_capacity(m);
    let mut energy_flux = Vec::with_capacity(m);
    let mut energy_source = Vec::with_capacity(m);
    let mut denominators = Vec::with_capacity(m);
    let mut numerators = Vec::with_capacity(m);

    for i in 0..m {
        let r = traj.grid()[i];
        let u = traj.u()[i];
        let up = traj.u_prime()[i];
        let v = traj.v()[i];
        let w = lin.w()[i];
        let wp = lin.w_prime()[i];
        let z = lin.z()[i];
        let vals = spec.values_signed(r, u);
        let rn = r.powi(n_int);

        pairing.push((p - 1.0) * v * w - u * z);
        linearized_flux
            .push(r * (p - 1.0) * v * wp + lambda * rn * vals.f * w + (n - p) * v * w);
        solution_flux
            .push(r * (p - 1.0) * v * up + lambda * rn * u * vals.f + (n - p) * v * u);
        energy_flux
            .push(r * (p - 1.0) * v * up + p * lambda * rn * vals.big_f + (n - p) * v * u);
        energy_source.push(
            lambda * (n * p * vals.big_f - (n - p) * u * vals.f + p * r * vals.big_f_r),
        );
        numerators.push(p * vals.f + r * vals.f_r);
        denominators.push(u * vals.f_u - (p - 1.0) * vals.f);
    }

    let den_scale = denominators.iter().fold(0.0f64, |s, d| s.max(d.abs()));
    let mut guarded = 0usize;
    let amplitude_ratio: Vec<f64> = numerators
        .iter()
        .zip(&denominators)
        .map(|(&num, &den)| {
            if den.abs() <= 1e-12 * den_scale.max(f64::MIN_POSITIVE) {
                guarded += 1;
                f64::NAN
            } else {
                num / den
            }
        })
        .collect();

    let up1 = traj.final_u_prime();
    IdentityProfiles {
        grid: traj.grid().to_vec(),
        pairing,
        linearized_flux,
        solution_flux,
        energy_flux,
        energy_source,
        amplitude_ratio,
        guarded_nodes: guarded,
        boundary_flux_reference: (p - 1.0) * up1.abs().powf(p),
    }
}

/// Deviation statistics of one differentiated profile from its analytic
/// right-hand side.
#[derive(Clone, Copy, Debug)]
pub struct ResidualStats {
    pub max_abs: f64,
    pub scale: f64,
    pub relative: f64,
    pub nodes_checked: usize,
}

/// Residuals of the three differential identities.
#[derive(Clone, Copy, Debug)]
pub struct IdentityResiduals {
    pub pairing: ResidualStats,
    pub linearized_flux: ResidualStats,
    pub energy_flux: ResidualStats,
}

const FD_PROBES: usize = 400;
const FD_STEP: f64 = 1e-3;
const FD_STEP_FLOOR: f64 = 1e-5;
const FD_BOUNDARY_SKIP: f64 = 2e-5;
/// Near the origin the profiles carry fractional powers of r whenever
/// p > 2 (|u'| grows like r^{1/(p-1)} there), so their fifth derivative
/// blows up like r^{1/(p-1)-5} and a fixed stencil step loses accuracy.
/// With a step proportional to r the truncation error h^4 * f^(5) scales
/// like r^{1/(p-1)-1}, which stays bounded and vanishes as r -> 0.
const FD_SINGULAR_SHRINK: f64 = 8.0;

/// Five-point central difference of `profile` against `rhs` at interior
/// probes; the step shrinks near the interval ends (proportionally to r on
/// the origin side) and probes too close to the boundary are skipped (the
/// stencil would leave the domain).
fn residual_stats(
    lo: f64,
    hi: f64,
    profile: &dyn Fn(f64) -> f64,
    rhs: &dyn Fn(f64) -> f64,
) -> ResidualStats {
    let mut max_abs = 0.0f64;
    let mut scale = 0.0f64;
    let mut checked = 0usize;
    let inner_lo = lo + FD_BOUNDARY_SKIP;
    let inner_hi = hi - FD_BOUNDARY_SKIP;
    for k in 0..FD_PROBES {
        let x = inner_lo + (inner_hi - inner_lo) * (k as f64 + 0.5) / FD_PROBES as f64;
        let h = FD_STEP
            .min(x / FD_SINGULAR_SHRINK)
            .min((x - lo) / 2.0)
            .min((hi - x) / 2.0);
        if h < FD_STEP_FLOOR {
            continue;
        }
        let fd = (profile(x - 2.0 * h) - 8.0 * profile(x - h) + 8.0 * profile(x + h)
            - profile(x + 2.0 * h))
            / (12.0 * h);
        let analytic = rhs(x);
        max_abs = max_abs.max((fd - analytic).abs());
        scale = scale.max(analytic.abs());
        checked += 1;
    }
    // Keep the scale honest when the right side is nearly zero everywhere.
    let span_scale = (profile(inner_hi) - profile(inner_lo)).abs() / (hi - lo);
    let scale = scale.max(span_scale).max(1e-300);
    ResidualStats { max_abs, scale, relative: max_abs / scale, nodes_checked: checked }
}

/// Differentiate the computed profiles numerically and compare with the
/// analytic identities. Profiles built from the linearization use its own
/// coupled dense output throughout, so interpolation errors cancel
/// consistently; the energy flux uses the primary trajectory.
pub fn identity_residuals(solution: &RadialSolution) -> IdentityResiduals {
    let traj = solution.trajectory();
    let lin = solution.linearized();
    let spec = traj.spec();
    let p = spec.p();
    let n = spec.n() as f64;
    let n_int = spec.n() as i32;
    let lambda = traj.lambda();
    let lo = traj.epsilon();
    let hi = traj.final_r();

    let pairing_profile = |r: f64| {
        let s = lin.sample(r);
        (p - 1.0) * s.v * s.w - s.u * s.z
    };
    let pairing_rhs = |r: f64| {
        let s = lin.sample(r);
        let vals = spec.values_signed(r, s.u);
        lambda * r.powi(n_int - 1) * (s.u * vals.f_u - (p - 1.0) * vals.f) * s.w
    };

    let flux_profile = |r: f64| {
        let s = lin.sample(r);
        let vals = spec.values_signed(r, s.u);
        r * (p - 1.0) * s.v * s.w_prime
            + lambda * r.powi(n_int) * vals.f * s.w
            + (n - p) * s.v * s.w
    };
    let flux_rhs = |r: f64| {
        let s = lin.sample(r);
        let vals = spec.values_signed(r, s.u);
        lambda * r.powi(n_int - 1) * (p * vals.f + r * vals.f_r) * s.w
    };

    let energy_profile = |r: f64| {
        let s = traj.sample(r);
        let vals = spec.values_signed(r, s.u);
        r * (p - 1.0) * s.v * s.u_prime
            + p * lambda * r.powi(n_int) * vals.big_f
            + (n - p) * s.v * s.u
    };
    let energy_rhs = |r: f64| {
        let s = traj.sample(r);
        let vals = spec.values_signed(r, s.u);
        r.powi(n_int - 1)
            * lambda
            * (n * p * vals.big_f - (n - p) * s.u * vals.f + p * r * vals.big_f_r)
    };

    IdentityResiduals {
        pairing: residual_stats(lo, hi, &pairing_profile, &pairing_rhs),
        linearized_flux: residual_stats(lo, hi, &flux_profile, &flux_rhs),
        energy_flux: residual_stats(lo, hi, &energy_profile, &energy_rhs),
    }
}

/// A-posteriori monotonicity of the amplitude ratio along the radius.
#[derive(Clone, Copy, Debug)]
pub struct AmplitudeRatioMonotonicity {
    pub nonincreasing: bool,
    pub worst_rise: f64,
    pub checked_nodes: usize,
    pub skipped_nodes: usize,
    /// True when the denominator u f_u - (p-1) f was guarded out on most of
    /// the grid (linear problems degenerate this way by design).
    pub degenerate_denominator: bool,
}

pub fn amplitude_ratio_monotonicity(
    profiles: &IdentityProfiles,
) -> AmplitudeRatioMonotonicity {
    let valid: Vec<f64> = profiles
        .amplitude_ratio()
        .iter()
        .copied()
        .filter(|x| x.is_finite())
        .collect();
    let skipped = profiles.amplitude_ratio().len() - valid.len();
    let scale = valid.iter().fold(0.0f64, |s, x| s.max(x.abs())).max(1e-300);
    let mut worst_rise = 0.0f64;
    for pair in valid.windows(2) {
        worst_rise = worst_rise.max(pair[1] - pair[0]);
    }
    AmplitudeRatioMonotonicity {
        nonincreasing: worst_rise <= 1e-8 * scale,
        worst_rise,
        checked_nodes: valid.len(),
        skipped_nodes: skipped,
        degenerate_denominator: skipped * 2 > profiles.amplitude_ratio().len(),
    }
}

/// Shape facts about a computed solution that the theory promises.
#[derive(Clone, Debug)]
pub struct QualitativeReport {
    /// -u'(1); positive means the boundary derivative is strictly negative.
    pub hopf_margin: f64,
    pub hopf_ok: bool,
    /// No interior zero of u' before the first zero of u.
    pub monotone_decreasing: bool,
    /// max u' over interior nodes (negative when monotone).
    pub worst_interior_slope: f64,
    /// f(0, alpha).
    pub center_source: f64,
    pub center_source_positive: bool,
    /// Sign changes of r -> f(r, u(r)) inside (0, 1).
    pub source_sign_changes: usize,
    /// Radius of the single + to - crossing, when there is exactly one.
    pub source_crossing: Option<f64>,
    /// Largest upward move of the energy along the radius (exact
    /// constancy is required on 1D autonomous problems).
    pub energy_rise: f64,
    pub energy_ok: bool,
    /// Zero crossings of w, with their radii.
    pub w_crossings: Vec<f64>,
    /// Crossings of w beyond the source crossing; the sign-portrait
    /// argument needs w to keep its sign there.
    pub w_crossings_after_source_crossing: usize,
}

/// Bisect g on [a, b] given g(a) and g(b) of opposite sign.
fn bisect(g: &dyn Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let mut ga = g(a);
    for _ in 0..80 {
        let mid = 0.5 * (a + b);
        let gm = g(mid);
        if ga * gm <= 0.0 {
            b = mid;
        } else {
            a = mid;
            ga = gm;
        }
        if b - a < 1e-12 * b.abs().max(1.0) {
            break;
        }
    }
    0.5 * (a + b)
}

pub fn qualitative_checks(solution: &RadialSolution) -> QualitativeReport {
    let traj = solution.trajectory();
    let lin = solution.linearized();
    let spec = traj.spec();
    let p = spec.p();
    let lambda = traj.lambda();
    let first_zero = traj.first_zero().unwrap_or(f64::INFINITY);

    let hopf_margin = -traj.final_u_prime();
    let monotone = !traj
        .events()
        .iter()
        .any(|e| e.kind == EventKind::ZeroOfUPrime && e.r < first_zero);
    let worst_interior_slope = traj
        .u_prime()
        .iter()
        .zip(traj.grid())
        .filter(|(_, &r)| r > 2.0 * traj.epsilon() && r < first_zero)
        .fold(f64::NEG_INFINITY, |m, (&up, _)| m.max(up));

    let center_source = spec.values_signed(0.0, traj.alpha()).f;

    // Sign portrait of the source along the trajectory.
    let samples = 2001usize;
    let lo = traj.epsilon();
    let hi = traj.final_r();
    let source_at = |r: f64| {
        let s = traj.sample(r);
        spec.values_signed(r, s.u).f
    };
    let mut g_values = Vec::with_capacity(samples);
    let mut g_scale = 0.0f64;
    for i in 0..samples {
        let r = lo + (hi - lo) * i as f64 / (samples - 1) as f64;
        let g = source_at(r);
        g_scale = g_scale.max(g.abs());
        g_values.push((r, g));
    }
    let tiny = 1e-12 * g_scale.max(f64::MIN_POSITIVE);
    let mut changes = 0usize;
    let mut first_change = None;
    let mut last_sign = 0i8;
    let mut last_r = lo;
    for &(r, g) in &g_values {
        if g.abs() <= tiny {
            continue;
        }
        let sign = if g > 0.0 { 1 } else { -1 };
        if last_sign != 0 && sign != last_sign {
            changes += 1;
            if first_change.is_none() {
                first_change = Some(bisect(&source_at, last_r, r));
            }
        }
        last_sign = sign;
        last_r = r;
    }
    let source_crossing = if changes == 1 { first_change } else { None };

    // Energy law: E = (p-1)/p |u'|^p + lambda F along the radius.
    let energy_at = |r: f64| {
        let s = traj.sample(r);
        (p - 1.0) / p * s.u_prime.abs().powf(p)
            + lambda * spec.values_signed(r, s.u).big_f
    };
    let energies: Vec<f64> = traj.grid().iter().map(|&r| energy_at(r)).collect();
    let e_scale = energies.iter().fold(0.0f64, |s, e| s.max(e.abs())).max(1e-300);
    let one_dim_autonomous = spec.n() == 1 && spec.nonlinearity().is_autonomous();
    let energy_rise = if one_dim_autonomous {
        let e0 = energies[0];
        energies.iter().fold(0.0f64, |m, e| m.max((e - e0).abs()))
    } else {
        energies.windows(2).fold(0.0f64, |m, pair| m.max(pair[1] - pair[0]))
    };
    let energy_ok = energy_rise <= 1e-8 * e_scale;

    // Zero crossings of w.
    let w_at = |r: f64| lin.sample(r).w;
    let mut w_crossings = Vec::new();
    for i in 1..lin.grid().len() {
        let (r0, r1) = (lin.grid()[i - 1], lin.grid()[i]);
        let (w0, w1) = (lin.w()[i - 1], lin.w()[i]);
        if w0 != 0.0 && w1 != 0.0 && w0.signum() != w1.signum() {
            w_crossings.push(bisect(&w_at, r0, r1));
        }
    }
    let after = source_crossing.unwrap_or(0.0);
    let w_crossings_after_source_crossing =
        w_crossings.iter().filter(|&&r| r > after).count();

    QualitativeReport {
        hopf_margin,
        hopf_ok: hopf_margin > 1e-10,
        monotone_decreasing: monotone,
        worst_interior_slope,
        center_source,
        center_source_positive: center_source > 0.0,
        source_sign_changes: changes,
        source_crossing,
        energy_rise,
        energy_ok,
        w_crossings,
        w_crossings_after_source_crossing,
    }
}

/// Outcome of one audited hypothesis.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CheckStatus {
    Pass,
    Fail,
    NotApplicable,
}

#[derive(Clone, Copy, Debug)]
pub struct HypothesisWitness {
    pub location: f64,
    pub value: f64,
}

#[derive(Clone, Debug)]
pub struct HypothesisEntry {
    pub name: &'static str,
    pub status: CheckStatus,
    pub witness: Option<HypothesisWitness>,
    pub detail: String,
}

/// Exact audit of the structural hypotheses for a problem family.
#[derive(Clone, Debug)]
pub struct HypothesisReport {
    entries: Vec<HypothesisEntry>,
}

impl HypothesisReport {
    pub fn entries(&self) -> &[HypothesisEntry] {
        &self.entries
    }

    pub fn entry(&self, name: &str) -> Option<&HypothesisEntry> {
        self.entries.iter().find(|e| e.name == name)
    }

    pub fn failures(&self) -> Vec<&HypothesisEntry> {
        self.entries.iter().filter(|e| e.status == CheckStatus::Fail).collect()
    }

    pub fn passed(&self) -> bool {
        self.entries.iter().all(|e| e.status != CheckStatus::Fail)
    }
}

fn verdict_to_entry(
    name: &'static str,
    verdict: SignVerdict,
    detail: String,
) -> HypothesisEntry {
    match verdict {
        SignVerdict::Holds => {
            HypothesisEntry { name, status: CheckStatus::Pass, witness: None, detail }
        }
        SignVerdict::Fails { witness, value } => HypothesisEntry {
            name,
            status: CheckStatus::Fail,
            witness: Some(HypothesisWitness { location: witness, value }),
            detail,
        },
    }
}

fn not_applicable(name: &'static str, detail: &str) -> HypothesisEntry {
    HypothesisEntry {
        name,
        status: CheckStatus::NotApplicable,
        witness: None,
        detail: detail.to_string(),
    }
}

/// Strict positivity on the closed unit interval: exact endpoint signs plus
/// an exact open-interval verdict.
fn strictly_positive_unit(p: &Poly) -> SignVerdict {
    let (lo, hi) = poly::unit_interval();
    let at_lo = p.eval_exact(&lo);
    if at_lo <= BigRational::zero() {
        return SignVerdict::Fails { witness: 0.0, value: at_lo.to_f64() };
    }
    let at_hi = p.eval_exact(&hi);
    if at_hi <= BigRational::zero() {
        return SignVerdict::Fails { witness: 1.0, value: at_hi.to_f64() };
    }
    poly::positive_on_open(p, &lo, &hi)
}

trait ToF64 {
    fn to_f64(&self) -> f64;
}

impl ToF64 for BigRational {
    fn to_f64(&self) -> f64 {
        num_traits::ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
}

fn subcritical_entry(spec: &ProblemSpec) -> HypothesisEntry {
    match spec.assert_admissible() {
        Ok(()) => {
            let detail = match (spec.nonlinearity().growth_exponent(), spec.exponents().q())
            {
                (Some(q), _) => match crate::model::critical_exponent(spec.p(), spec.n()) {
                    Some(c) => format!("growth exponent {q} is below the critical exponent {c}"),
                    None => format!("n <= p: every growth exponent {q} is admissible"),
                },
                _ => "no polynomial growth exponent to bound".to_string(),
            };
            HypothesisEntry {
                name: "subcritical-growth",
                status: CheckStatus::Pass,
                witness: None,
                detail,
            }
        }
        Err(ModelError::SupercriticalGrowth { q, critical, .. }) => HypothesisEntry {
            name: "subcritical-growth",
            status: CheckStatus::Fail,
            witness: Some(HypothesisWitness { location: 0.0, value: q }),
            detail: format!("growth exponent {q} is not below the critical exponent {critical}"),
        },
        Err(other) => HypothesisEntry {
            name: "subcritical-growth",
            status: CheckStatus::Fail,
            witness: None,
            detail: other.to_string(),
        },
    }
}

/// B(r) = [n p/(q+1) - (n-p)] b(r) + p/(q+1) r b'(r): the weighted radial
/// divergence of the superlinear coefficient.
fn radial_weight_b(b: &Poly, p: f64, n: u32, q: f64) -> Poly {
    let p_r = BigRational::from_f64(p).expect("finite p");
    let q1 = BigRational::from_f64(q).expect("finite q") + BigRational::one();
    let n_r = BigRational::from_integer(n.into());
    let c1 = &n_r * &p_r / &q1 - (&n_r - &p_r);
    let c2 = p_r / q1;
    b.scale(&c1).add(&b.derivative().mul_x().scale(&c2))
}

/// A(r) = p a(r) + r a'(r): the weighted radial divergence of the
/// linear-term coefficient.
fn radial_weight_a(a: &Poly, p: f64) -> Poly {
    let p_r = BigRational::from_f64(p).expect("finite p");
    a.scale(&p_r).add(&a.derivative().mul_x())
}

fn b_side_entries(entries: &mut Vec<HypothesisEntry>, b: &CoefficientFn, p: f64, n: u32, q: f64) {
    let (lo, hi) = poly::unit_interval();
    let b_poly = b.poly();
    let b1 = b_poly.derivative();

    entries.push(verdict_to_entry(
        "coefficient-b-positive",
        strictly_positive_unit(b_poly),
        "b(r) > 0 on [0, 1]".to_string(),
    ));
    entries.push(verdict_to_entry(
        "coefficient-b-nonincreasing",
        poly::nonpositive_on(&b1, &lo, &hi),
        "b'(r) <= 0 on [0, 1]".to_string(),
    ));
    let big_b = radial_weight_b(b_poly, p, n, q);
    entries.push(verdict_to_entry(
        "radial-weight-B-positive",
        strictly_positive_unit(&big_b),
        "[n p/(q+1) - (n-p)] b + p/(q+1) r b' > 0 on [0, 1]".to_string(),
    ));
    // r b'/b non-increasing <=> (b' + r b'') b - r (b')^2 <= 0 where b > 0.
    let b2 = b1.derivative();
    let log_slope_num = b1.add(&b2.mul_x()).mul(b_poly).sub(&b1.mul(&b1).mul_x());
    entries.push(verdict_to_entry(
        "log-slope-nonincreasing",
        poly::nonpositive_on(&log_slope_num, &lo, &hi),
        "r b'/b non-increasing on [0, 1] (numerator test)".to_string(),
    ));
    // r b' non-increasing <=> b' + r b'' <= 0.
    entries.push(verdict_to_entry(
        "weighted-slope-nonincreasing",
        poly::nonpositive_on(&b1.add(&b2.mul_x()), &lo, &hi),
        "(r b')' = b' + r b'' <= 0 on [0, 1]".to_string(),
    ));
    // p b + r b' > 0 keeps the amplitude ratio positive.
    let amp = b_poly
        .scale(&BigRational::from_f64(p).expect("finite p"))
        .add(&b1.mul_x());
    entries.push(verdict_to_entry(
        "amplitude-exponent-positive",
        strictly_positive_unit(&amp),
        "p b + r b' > 0 on [0, 1]".to_string(),
    ));
}

fn a_side_entries(entries: &mut Vec<HypothesisEntry>, a: &CoefficientFn, p: f64) {
    let (lo, hi) = poly::unit_interval();
    let a_poly = a.poly();
    entries.push(verdict_to_entry(
        "coefficient-a-positive",
        strictly_positive_unit(a_poly),
        "a(r) > 0 on [0, 1]".to_string(),
    ));
    entries.push(verdict_to_entry(
        "coefficient-a-nondecreasing",
        poly::nonnegative_on(&a_poly.derivative(), &lo, &hi),
        "a'(r) >= 0 on [0, 1]".to_string(),
    ));
    let big_a = radial_weight_a(a_poly, p);
    entries.push(verdict_to_entry(
        "radial-weight-A-positive",
        strictly_positive_unit(&big_a),
        "p a + r a' > 0 on [0, 1]".to_string(),
    ));
    entries.push(verdict_to_entry(
        "radial-weight-A-nondecreasing",
        poly::nonnegative_on(&big_a.derivative(), &lo, &hi),
        "(p a + r a')' >= 0 on [0, 1]".to_string(),
    ));
}

fn conjunction_entry(
    name: &'static str,
    report_so_far: &[HypothesisEntry],
    constituents: &[&'static str],
    detail: String,
) -> HypothesisEntry {
    let mut witness = None;
    let mut status = CheckStatus::Pass;
    for c in constituents {
        match report_so_far.iter().find(|e| e.name == *c) {
            Some(e) if e.status == CheckStatus::Fail => {
                status = CheckStatus::Fail;
                witness = e.witness;
                break;
            }
            Some(_) => {}
            None => {
                status = CheckStatus::NotApplicable;
            }
        }
    }
    HypothesisEntry { name, status, witness, detail }
}

/// Superlinearity margin u f_u - (p-1) f for the polynomial family: exact
/// positivity of u f'(u) - (p-1) f(u) on (0, bound).
fn autonomous_superlinearity(f_poly: &Poly, p: f64) -> SignVerdict {
    let p1 = BigRational::from_f64(p - 1.0).expect("finite p");
    let margin = f_poly.derivative().mul_x().sub(&f_poly.scale(&p1));
    if margin.is_zero() {
        return SignVerdict::Fails { witness: 1.0, value: 0.0 };
    }
    let hi = margin.root_bound();
    // Positive on (0, hi) plus a positive leading coefficient covers all
    // u > 0 (no roots live beyond the Cauchy bound).
    let lead_positive = margin
        .coeffs()
        .last()
        .map(|c| c > &BigRational::zero())
        .unwrap_or(false);
    if !lead_positive {
        let at = hi.to_f64();
        return SignVerdict::Fails { witness: at, value: margin.eval_f64(at) };
    }
    poly::positive_on_open(&margin, &BigRational::zero(), &hi)
}

/// Audit every structural hypothesis the solver theory rests on, with exact
/// rational arithmetic on the coefficient polynomials. Never called
/// implicitly: supercritical or misshapen problems can still be audited.
pub fn check_model_hypotheses(spec: &ProblemSpec) -> HypothesisReport {
    let mut entries = vec![subcritical_entry(spec)];
    let p = spec.p();
    let n = spec.n();

    match spec.nonlinearity() {
        Nonlinearity::ModelAb { a, b, q, a_weight } => {
            if *a_weight > 0.0 {
                a_side_entries(&mut entries, a, p);
            } else {
                entries.push(not_applicable(
                    "coefficient-a-positive",
                    "linear term switched off (weight 0)",
                ));
            }
            b_side_entries(&mut entries, b, p, n, *q);
            entries.push(HypothesisEntry {
                name: "superlinearity-gap",
                status: if *q > p - 1.0 { CheckStatus::Pass } else { CheckStatus::Fail },
                witness: None,
                detail: format!(
                    "u f_u - (p-1) f = (q-p+1) b u^q with q-p+1 = {}",
                    q - p + 1.0
                ),
            });
            let power = conjunction_entry(
                "homotopy-power-family",
                &entries,
                &[
                    "coefficient-b-positive",
                    "coefficient-b-nonincreasing",
                    "radial-weight-B-positive",
                    "log-slope-nonincreasing",
                    "weighted-slope-nonincreasing",
                ],
                "b^t for t in [0,1]: positivity and slope conditions reduce to the base \
                 polynomial, and B > 0 at t = 1 dominates the family"
                    .to_string(),
            );
            entries.push(power);
            let weight = conjunction_entry(
                "homotopy-weight-family",
                &entries,
                &[
                    "coefficient-a-positive",
                    "coefficient-a-nondecreasing",
                    "radial-weight-A-positive",
                    "radial-weight-A-nondecreasing",
                ],
                "t a for t in (0,1]: scaling by t preserves every sign condition on a"
                    .to_string(),
            );
            entries.push(weight);
        }
        Nonlinearity::PureB { b, q, .. } => {
            b_side_entries(&mut entries, b, p, n, *q);
            entries.push(HypothesisEntry {
                name: "superlinearity-gap",
                status: if *q > p - 1.0 { CheckStatus::Pass } else { CheckStatus::Fail },
                witness: None,
                detail: format!(
                    "u f_u - (p-1) f = (q-p+1) b^t u^q with q-p+1 = {}",
                    q - p + 1.0
                ),
            });
            let power = conjunction_entry(
                "homotopy-power-family",
                &entries,
                &[
                    "coefficient-b-positive",
                    "coefficient-b-nonincreasing",
                    "radial-weight-B-positive",
                    "log-slope-nonincreasing",
                    "weighted-slope-nonincreasing",
                ],
                "b^t for t in [0,1]: conditions on the base polynomial cover every power"
                    .to_string(),
            );
            entries.push(power);
            entries.push(not_applicable("homotopy-weight-family", "no linear term present"));
        }
        Nonlinearity::Autonomous1d { f_poly, .. } => {
            entries.push(verdict_to_entry(
                "superlinearity-gap",
                autonomous_superlinearity(f_poly, p),
                "u f'(u) - (p-1) f(u) > 0 for u > 0".to_string(),
            ));
            let sign_entry = match spec.critical_amplitudes() {
                Ok((gamma, theta)) => HypothesisEntry {
                    name: "sign-structure",
                    status: CheckStatus::Pass,
                    witness: None,
                    detail: if gamma > 0.0 {
                        format!("single crossing: f < 0 on (0, {gamma}), f > 0 beyond; zero-energy threshold {theta}")
                    } else {
                        "f > 0 on (0, infinity)".to_string()
                    },
                },
                Err(err) => HypothesisEntry {
                    name: "sign-structure",
                    status: CheckStatus::Fail,
                    witness: None,
                    detail: err.to_string(),
                },
            };
            entries.push(sign_entry);
            entries.push(not_applicable("homotopy-power-family", "no radial coefficient"));
            entries.push(not_applicable("homotopy-weight-family", "no radial coefficient"));
        }
        Nonlinearity::LinearTest => {
            entries.push(HypothesisEntry {
                name: "superlinearity-gap",
                status: CheckStatus::Fail,
                witness: Some(HypothesisWitness { location: 1.0, value: 0.0 }),
                detail: "u f_u - (p-1) f vanishes identically for the linear oracle at p = 2"
                    .to_string(),
            });
            entries.push(not_applicable("homotopy-power-family", "oracle family"));
            entries.push(not_applicable("homotopy-weight-family", "oracle family"));
        }
    }
    HypothesisReport { entries }
}

/// Sign classification of the energy source I over the radius.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SourceSignCase {
    Nonnegative,
    Nonpositive,
    SignChanging,
    Indeterminate,
}

#[derive(Clone, Copy, Debug)]
pub struct SourceSignReport {
    pub case: SourceSignCase,
    pub min: f64,
    pub max: f64,
    pub first_sign_change: Option<f64>,
}

pub fn classify_energy_source(profiles: &IdentityProfiles) -> SourceSignReport {
    let values = profiles.energy_source();
    let scale = values.iter().fold(0.0f64, |s, x| s.max(x.abs()));
    let tiny = 1e-12 * scale.max(f64::MIN_POSITIVE);
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    let mut has_pos = false;
    let mut has_neg = false;
    let mut first_sign_change = None;
    let mut last_sign = 0i8;
    for (&r, &x) in profiles.grid().iter().zip(values) {
        min = min.min(x);
        max = max.max(x);
        if x > tiny {
            has_pos = true;
            if last_sign == -1 && first_sign_change.is_none() {
                first_sign_change = Some(r);
            }
            last_sign = 1;
        } else if x < -tiny {
            has_neg = true;
            if last_sign == 1 && first_sign_change.is_none() {
                first_sign_change = Some(r);
            }
            last_sign = -1;
        }
    }
    let case = match (has_pos, has_neg) {
        (true, true) => SourceSignCase::SignChanging,
        (true, false) => SourceSignCase::Nonnegative,
        (false, true) => SourceSignCase::Nonpositive,
        (false, false) => SourceSignCase::Indeterminate,
    };
    SourceSignReport { case, min, max, first_sign_change }
}

/// Identities special to n = 1 autonomous problems, where the equation has
/// a conserved pairing K = u' z + lambda f(u) w with K = lambda f(alpha).
#[derive(Clone, Debug)]
pub struct OneDimReport {
    /// lambda f(alpha): the predicted constant of motion.
    pub invariant_constant: f64,
    /// max |K(r) - lambda f(alpha)| over the grid.
    pub invariant_deviation: f64,
    pub invariant_ok: bool,
    /// Largest relative gap between the differentiated linearized flux and
    /// p lambda f w.
    pub flux_derivative_deviation: f64,
    /// x0 with u(x0) = gamma (the zero of f), when it exists.
    pub gamma_crossing: Option<f64>,
    /// (p-1)(1 - x0) phi(u'(x0)) + phi'(u'(x0)) u(x0), expected negative.
    pub turning_quantity: Option<f64>,
    pub turning_negative: Option<bool>,
    /// Pairing xi at x0, expected positive.
    pub pairing_at_crossing: Option<f64>,
    pub pairing_positive: Option<bool>,
    /// w'(x0), expected negative.
    pub slope_at_crossing: Option<f64>,
    pub slope_negative: Option<bool>,
}

pub fn one_dim_identities(solution: &RadialSolution) -> Result<OneDimReport, DiagnosticsError> {
    let traj = solution.trajectory();
    let lin = solution.linearized();
    let spec = traj.spec();
    if spec.n() != 1 {
        return Err(DiagnosticsError::NotOneDimensional(spec.n()));
    }
    if !spec.nonlinearity().is_autonomous() {
        return Err(DiagnosticsError::NotAutonomous);
    }
    let p = spec.p();
    let lambda = traj.lambda();
    let alpha = traj.alpha();

    let invariant_constant = lambda * spec.values_signed(0.0, alpha).f;
    let mut invariant_deviation = 0.0f64;
    for &r in traj.grid() {
        let s = lin.sample(r);
        let k = s.u_prime * s.z + lambda * spec.values_signed(r, s.u).f * s.w;
        invariant_deviation = invariant_deviation.max((k - invariant_constant).abs());
    }
    let invariant_ok = invariant_deviation <= 1e-7 * invariant_constant.abs().max(1e-300);

    // FD check of T' = p lambda f w (n = 1, f_r = 0).
    let flux_profile = |r: f64| {
        let s = lin.sample(r);
        let vals = spec.values_signed(r, s.u);
        r * (p - 1.0) * s.v * s.w_prime + lambda * r * vals.f * s.w + (1.0 - p) * s.v * s.w
    };
    let flux_rhs = |r: f64| {
        let s = lin.sample(r);
        p * lambda * spec.values_signed(r, s.u).f * s.w
    };
    let stats = residual_stats(traj.epsilon(), traj.final_r(), &flux_profile, &flux_rhs);
    let flux_derivative_deviation = stats.relative;

    let (gamma, _) = spec.critical_amplitudes()?;
    let mut gamma_crossing = None;
    let mut turning_quantity = None;
    let mut pairing_at_crossing = None;
    let mut slope_at_crossing = None;
    if gamma > 0.0 && alpha > gamma && traj.final_u() < gamma {
        let u_gap = |r: f64| traj.sample(r).u - gamma;
        let x0 = bisect(&u_gap, traj.epsilon(), traj.final_r());
        let s = lin.sample(x0);
        let phi_d = phi_derivative(s.u_prime, p)?;
        turning_quantity =
            Some((p - 1.0) * (1.0 - x0) * phi(s.u_prime, p) + phi_d * s.u);
        pairing_at_crossing = Some((p - 1.0) * s.v * s.w - s.u * s.z);
        slope_at_crossing = Some(s.w_prime);
        gamma_crossing = Some(x0);
    }

    Ok(OneDimReport {
        invariant_constant,
        invariant_deviation,
        invariant_ok,
        flux_derivative_deviation,
        gamma_crossing,
        turning_quantity,
        turning_negative: turning_quantity.map(|t| t < 0.0),
        pairing_at_crossing,
        pairing_positive: pairing_at_crossing.map(|x| x > 0.0),
        slope_at_crossing,
        slope_negative: slope_at_crossing.map(|s| s < 0.0),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Nonlinearity;
    use crate::shoot::{solve_at_lambda, solve_autonomous_by_scaling, ShootOptions};
    use crate::timemap;

    fn cubic_solution() -> RadialSolution {
        let nl = Nonlinearity::autonomous(&[0.0, -1.0, 0.0, 1.0]).unwrap();
        let lambda = timemap::time_map_lambda(&nl, 2.0, 2.0).unwrap().lambda;
        let spec = ProblemSpec::new(2.0, 1, nl, 1.0).unwrap();
        solve_at_lambda(&spec, lambda, None, &ShootOptions::default()).unwrap()
    }

    #[test]
    fn boundary_flux_matches_closed_form() {
        let sol = cubic_solution();
        let profiles = identity_profiles(&sol);
        let reference = profiles.boundary_flux_reference();
        let q1 = *profiles.solution_flux().last().unwrap();
        let p1 = *profiles.energy_flux().last().unwrap();
        assert!(
            (q1 - reference).abs() < 1e-6 * reference,
            "Q(1) = {q1}, reference {reference}"
        );
        assert!(
            (p1 - reference).abs() < 1e-6 * reference,
            "P(1) = {p1}, reference {reference}"
        );
    }

    #[test]
    fn identity_residuals_sit_at_integration_error_level() {
        let sol = cubic_solution();
        let res = identity_residuals(&sol);
        assert!(res.pairing.relative < 1e-6, "pairing {}", res.pairing.relative);
        assert!(
            res.linearized_flux.relative < 1e-6,
            "flux {}",
            res.linearized_flux.relative
        );
        assert!(res.energy_flux.relative < 1e-6, "energy {}", res.energy_flux.relative);
        assert!(res.pairing.nodes_checked > 300);
    }

    #[test]
    fn identity_residuals_shrink_under_refinement() {
        let nl = Nonlinearity::autonomous(&[0.0, -1.0, 0.0, 1.0]).unwrap();
        let lambda = timemap::time_map_lambda(&nl, 2.0, 2.0).unwrap().lambda;
        let spec = ProblemSpec::new(2.0, 1, nl, 1.0).unwrap();
        let run = |rtol: f64| {
            let mut opts = ShootOptions::default();
            opts.ivp.rtol = rtol;
            opts.ivp.atol = rtol * 1e-2;
            let sol = solve_at_lambda(&spec, lambda, None, &opts).unwrap();
            identity_residuals(&sol).pairing.relative
        };
        let coarse = run(1e-7);
        let fine = run(1e-10);
        assert!(fine < coarse, "fine {fine} vs coarse {coarse}");
        assert!(fine < 1e-6);
    }

    #[test]
    fn pure_power_amplitude_ratio_is_constant() {
        // For f = b u^q with constant b: ratio = p/(q-p+1) exactly.
        let nl = Nonlinearity::autonomous(&[0.0, 0.0, 0.0, 1.0]).unwrap();
        let spec = ProblemSpec::new(2.0, 3, nl, 1.0).unwrap();
        let sol =
            solve_autonomous_by_scaling(&spec, 1.0, &ShootOptions::default()).unwrap();
        let profiles = identity_profiles(&sol);
        let expected = 2.0 / (3.0 - 2.0 + 1.0);
        for &x in profiles.amplitude_ratio() {
            if x.is_finite() {
                assert!((x - expected).abs() < 1e-9, "ratio {x} vs {expected}");
            }
        }
        let mono = amplitude_ratio_monotonicity(&profiles);
        assert!(mono.nonincreasing);
        assert!(!mono.degenerate_denominator);
    }

    #[test]
    fn sign_changing_model_has_nonincreasing_amplitude_ratio() {
        // a = b = 1, q = 3, n = 3: ratio = 1 - u^{-2}, decreasing along r.
        let a = CoefficientFn::constant(1.0).unwrap();
        let b = CoefficientFn::constant(1.0).unwrap();
        let nl = Nonlinearity::model_ab(a, b, 3.0);
        let spec = ProblemSpec::new(2.0, 3, nl, 1.0).unwrap();
        let sol = solve_at_lambda(&spec, 20.0, None, &ShootOptions::default()).unwrap();
        let profiles = identity_profiles(&sol);
        let mono = amplitude_ratio_monotonicity(&profiles);
        assert!(mono.nonincreasing, "worst rise {}", mono.worst_rise);
        assert!(mono.checked_nodes > 10);
    }

    #[test]
    fn qualitative_checks_pass_on_cubic() {
        let sol = cubic_solution();
        let report = qualitative_checks(&sol);
        assert!(report.hopf_ok);
        assert!(report.monotone_decreasing);
        assert!(report.worst_interior_slope < 0.0);
        assert!(report.center_source_positive);
        assert_eq!(report.source_sign_changes, 1);
        // The source f = -u + u^3 crosses zero where u crosses gamma = 1.
        let r2 = report.source_crossing.expect("crossing");
        let u_at_r2 = sol.trajectory().sample(r2).u;
        assert!((u_at_r2 - 1.0).abs() < 1e-6, "u(r2) = {u_at_r2}");
        assert!(report.energy_ok, "energy rise {}", report.energy_rise);
        assert_eq!(report.w_crossings_after_source_crossing, 0);
    }

    #[test]
    fn energy_source_changes_sign_for_cubic() {
        // I = lambda (2F + u f) = lambda u^2 (1.5 u^2 - 2) for p = 2, n = 1:
        // negative near the boundary, positive near the center at alpha = 2.
        let sol = cubic_solution();
        let profiles = identity_profiles(&sol);
        let report = classify_energy_source(&profiles);
        assert_eq!(report.case, SourceSignCase::SignChanging);
        assert!(report.first_sign_change.is_some());
        assert!(report.min < 0.0 && report.max > 0.0);
    }

    #[test]
    fn hypothesis_audit_passes_unit_coefficients() {
        let a = CoefficientFn::constant(1.0).unwrap();
        let b = CoefficientFn::constant(1.0).unwrap();
        let spec =
            ProblemSpec::new(2.0, 3, Nonlinearity::model_ab(a, b, 3.0), 1.0).unwrap();
        let report = check_model_hypotheses(&spec);
        assert!(report.passed(), "failures: {:?}", report.failures());
        assert_eq!(
            report.entry("radial-weight-B-positive").unwrap().status,
            CheckStatus::Pass
        );
        assert_eq!(
            report.entry("homotopy-power-family").unwrap().status,
            CheckStatus::Pass
        );
    }

    #[test]
    fn hypothesis_audit_rejects_supercritical_growth() {
        let a = CoefficientFn::constant(1.0).unwrap();
        let b = CoefficientFn::constant(1.0).unwrap();
        let spec =
            ProblemSpec::new(2.0, 3, Nonlinearity::model_ab(a, b, 7.0), 1.0).unwrap();
        let report = check_model_hypotheses(&spec);
        assert!(!report.passed());
        let entry = report.entry("subcritical-growth").unwrap();
        assert_eq!(entry.status, CheckStatus::Fail);
        assert!(entry.detail.contains('5'), "detail: {}", entry.detail);
    }

    #[test]
    fn hypothesis_audit_rejects_increasing_b() {
        let a = CoefficientFn::constant(1.0).unwrap();
        let b = CoefficientFn::from_coeffs(&[1.0, 1.0]).unwrap(); // 1 + r
        let spec =
            ProblemSpec::new(2.0, 3, Nonlinearity::model_ab(a, b, 3.0), 1.0).unwrap();
        let report = check_model_hypotheses(&spec);
        let entry = report.entry("coefficient-b-nonincreasing").unwrap();
        assert_eq!(entry.status, CheckStatus::Fail);
        assert!(entry.witness.is_some());
    }

    #[test]
    fn narrowing_b_fails_only_the_radial_weight() {
        // b = 2 - r^2 is positive and non-increasing, but B = 1 - 1.5 r^2
        // dips negative near r = 1: exactly one failing entry, with a
        // witness in the dip.
        let b = CoefficientFn::from_coeffs(&[2.0, 0.0, -1.0]).unwrap();
        let spec =
            ProblemSpec::new(2.0, 3, Nonlinearity::pure_b(b, 3.0), 1.0).unwrap();
        let report = check_model_hypotheses(&spec);
        let weight = report.entry("radial-weight-B-positive").unwrap();
        assert_eq!(weight.status, CheckStatus::Fail);
        let witness = weight.witness.unwrap();
        assert!(
            witness.location > 0.81 && witness.location <= 1.0,
            "witness at {}",
            witness.location
        );
        assert_eq!(
            report.entry("coefficient-b-positive").unwrap().status,
            CheckStatus::Pass
        );
        assert_eq!(
            report.entry("coefficient-b-nonincreasing").unwrap().status,
            CheckStatus::Pass
        );
        // The power-family reduction inherits the failure.
        assert_eq!(
            report.entry("homotopy-power-family").unwrap().status,
            CheckStatus::Fail
        );
    }

    #[test]
    fn autonomous_audit_checks_superlinearity_exactly() {
        let nl = Nonlinearity::autonomous(&[-1.0, 0.0, 0.0, 1.0]).unwrap();
        let spec = ProblemSpec::new(2.0, 1, nl, 1.0).unwrap();
        let report = check_model_hypotheses(&spec);
        // u f' - f = 2u^3 + 1 > 0 on (0, inf).
        assert_eq!(report.entry("superlinearity-gap").unwrap().status, CheckStatus::Pass);
        assert_eq!(report.entry("sign-structure").unwrap().status, CheckStatus::Pass);
        assert!(report.passed());
    }

    #[test]
    fn one_dim_invariant_is_constant_for_eigen_problem() {
        let spec =
            ProblemSpec::new(2.0, 1, Nonlinearity::linear_test(), 1.0).unwrap();
        let sol =
            solve_autonomous_by_scaling(&spec, 1.0, &ShootOptions::default()).unwrap();
        // Scaling the unit-lambda eigenfunction run lands on lambda = pi^2/4.
        assert!((sol.lambda() - std::f64::consts::PI.powi(2) / 4.0).abs() < 1e-8);
        let report = one_dim_identities(&sol).unwrap();
        assert!(
            report.invariant_ok,
            "deviation {} from constant {}",
            report.invariant_deviation, report.invariant_constant
        );
        assert!(report.gamma_crossing.is_none());
        // The linear oracle guards out the amplitude ratio everywhere.
        let profiles = identity_profiles(&sol);
        let mono = amplitude_ratio_monotonicity(&profiles);
        assert!(mono.degenerate_denominator);
    }

    #[test]
    fn one_dim_pointwise_signs_hold_for_cubic() {
        let sol = cubic_solution();
        let report = one_dim_identities(&sol).unwrap();
        assert!(report.invariant_ok);
        assert!(report.flux_derivative_deviation < 1e-6);
        let x0 = report.gamma_crossing.expect("gamma crossing");
        assert!((sol.trajectory().sample(x0).u - 1.0).abs() < 1e-8);
        assert_eq!(report.turning_negative, Some(true));
        assert_eq!(report.pairing_positive, Some(true));
        assert_eq!(report.slope_negative, Some(true));
    }

    #[test]
    fn one_dim_identities_reject_higher_dimensions() {
        let nl = Nonlinearity::autonomous(&[0.0, 0.0, 0.0, 1.0]).unwrap();
        let spec = ProblemSpec::new(2.0, 3, nl, 1.0).unwrap();
        let sol =
            solve_autonomous_by_scaling(&spec, 1.0, &ShootOptions::default()).unwrap();
        assert!(matches!(
            one_dim_identities(&sol),
            Err(DiagnosticsError::NotOneDimensional(3))
        ));
    }
}
