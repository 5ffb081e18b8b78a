//! Adaptive Dormand-Prince 5(4) integration with dense output and events.
//!
//! One explicit embedded pair serves every integration in this crate: the
//! radial system in divergence variables, the coupled linearized system, and
//! the auxiliary rescaling runs. Dense output (the standard quartic-in-theta
//! interpolant) backs event location to 1e-12 in r and the finite-difference
//! identity residuals, so diagnostic floors track integrator tolerance
//! rather than grid resolution.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum IntegratorError {
    #[error("step size underflow at r = {r} (step {h:e}); the system is degenerate there")]
    StepSizeUnderflow { r: f64, h: f64 },
    #[error("right-hand side returned a non-finite value at r = {r}")]
    NonFiniteRhs { r: f64 },
    #[error("step budget exhausted after {steps} accepted steps at r = {r}")]
    MaxStepsExceeded { r: f64, steps: usize },
}

/// Crossing direction for event functions.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    /// Trigger when g passes from positive to non-positive.
    Falling,
    /// Trigger when g passes from negative to non-negative.
    Rising,
}

/// A scalar event function g(r, y) watched for zero crossings along the
/// integration. Terminal events truncate the trajectory at the crossing.
pub struct Event<'a, const N: usize> {
    pub g: &'a dyn Fn(f64, &[f64; N]) -> f64,
    pub direction: Direction,
    pub terminal: bool,
    pub label: &'static str,
}

#[derive(Clone, Copy, Debug)]
pub struct EventHit<const N: usize> {
    pub label: &'static str,
    pub r: f64,
    pub y: [f64; N],
    pub terminal: bool,
}

/// Dense-output data for one accepted step on [r0, r0 + h].
#[derive(Clone, Debug)]
struct DenseStep<const N: usize> {
    r0: f64,
    h: f64,
    /// Valid evaluation end (may be short of r0 + h on a truncated step).
    valid_end: f64,
    rcont: [[f64; N]; 5],
}

impl<const N: usize> DenseStep<N> {
    fn eval(&self, r: f64) -> [f64; N] {
        let theta = (r - self.r0) / self.h;
        let s1 = 1.0 - theta;
        let [r1, r2, r3, r4, r5] = &self.rcont;
        let mut y = [0.0; N];
        for i in 0..N {
            y[i] = r1[i] + theta * (r2[i] + s1 * (r3[i] + theta * (r4[i] + s1 * r5[i])));
        }
        y
    }

    fn eval_derivative(&self, r: f64) -> [f64; N] {
        let theta = (r - self.r0) / self.h;
        let [_, r2, r3, r4, r5] = &self.rcont;
        let mut dy = [0.0; N];
        for i in 0..N {
            dy[i] = (r2[i]
                + r3[i] * (1.0 - 2.0 * theta)
                + r4[i] * theta * (2.0 - 3.0 * theta)
                + r5[i] * 2.0 * theta * (1.0 - theta) * (1.0 - 2.0 * theta))
                / self.h;
        }
        dy
    }
}

/// Piecewise dense output over the whole integration range.
#[derive(Clone, Debug)]
pub struct DenseOutput<const N: usize> {
    steps: Vec<DenseStep<N>>,
    r_start: f64,
    r_end: f64,
}

impl<const N: usize> DenseOutput<N> {
    pub fn range(&self) -> (f64, f64) {
        (self.r_start, self.r_end)
    }

    fn step_for(&self, r: f64) -> &DenseStep<N> {
        let idx = self
            .steps
            .partition_point(|s| s.valid_end < r)
            .min(self.steps.len() - 1);
        &self.steps[idx]
    }

    /// State at r, clamped into the covered range.
    pub fn eval(&self, r: f64) -> [f64; N] {
        let r = r.clamp(self.r_start, self.r_end);
        self.step_for(r).eval(r)
    }

    /// d/dr of the interpolant at r.
    pub fn eval_derivative(&self, r: f64) -> [f64; N] {
        let r = r.clamp(self.r_start, self.r_end);
        self.step_for(r).eval_derivative(r)
    }

    /// Copy of the interpolant under the affine substitution r -> r * r_scale
    /// with each component multiplied by its scale. The dense polynomials are
    /// linear in the state, so scaling the stored coefficients suffices;
    /// derivative evaluations pick up the 1/r_scale chain factor through h.
    pub(crate) fn rescaled(&self, r_scale: f64, component_scale: [f64; N]) -> DenseOutput<N> {
        let steps = self
            .steps
            .iter()
            .map(|s| {
                let mut rcont = s.rcont;
                for row in &mut rcont {
                    for (value, scale) in row.iter_mut().zip(&component_scale) {
                        *value *= scale;
                    }
                }
                DenseStep {
                    r0: s.r0 * r_scale,
                    h: s.h * r_scale,
                    valid_end: s.valid_end * r_scale,
                    rcont,
                }
            })
            .collect();
        DenseOutput {
            steps,
            r_start: self.r_start * r_scale,
            r_end: self.r_end * r_scale,
        }
    }
}

/// Result of an adaptive integration.
#[derive(Clone, Debug)]
pub struct Integration<const N: usize> {
    /// Accepted-step endpoints, strictly increasing, starting at r_start.
    pub grid: Vec<f64>,
    /// State at each grid node.
    pub states: Vec<[f64; N]>,
    pub dense: DenseOutput<N>,
    pub events: Vec<EventHit<N>>,
    /// Per-component sum of |local error estimate| over accepted steps:
    /// a conservative global error gauge.
    pub accumulated_error: [f64; N],
    pub rhs_evaluations: usize,
}

impl<const N: usize> Integration<N> {
    pub fn final_r(&self) -> f64 {
        *self.grid.last().expect("nonempty grid")
    }

    pub fn final_state(&self) -> [f64; N] {
        *self.states.last().expect("nonempty states")
    }

    pub fn terminated_by(&self, label: &str) -> Option<&EventHit<N>> {
        self.events.iter().find(|e| e.terminal && e.label == label)
    }
}

// Dormand-Prince 5(4) tableau.
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// Embedded 4th-order weights.
const BH1: f64 = 5179.0 / 57600.0;
const BH3: f64 = 7571.0 / 16695.0;
const BH4: f64 = 393.0 / 640.0;
const BH5: f64 = -92097.0 / 339200.0;
const BH6: f64 = 187.0 / 2100.0;
const BH7: f64 = 1.0 / 40.0;
// Dense-output coefficients.
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

const MAX_STEPS: usize = 2_000_000;
const SAFETY: f64 = 0.9;
const MIN_SCALE: f64 = 0.2;
const MAX_SCALE: f64 = 5.0;

pub struct Options {
    pub rtol: f64,
    pub atol: f64,
    /// Optional cap on the step size (events thinner than a step are the
    /// caller's concern; none of our systems need it by default).
    pub max_step: f64,
}

impl Default for Options {
    fn default() -> Self {
        Options { rtol: 1e-10, atol: 1e-12, max_step: f64::INFINITY }
    }
}

/// Hairer-style automatic initial step selection.
fn initial_step<const N: usize>(
    rhs: &impl Fn(f64, &[f64; N]) -> [f64; N],
    r0: f64,
    y0: &[f64; N],
    f0: &[f64; N],
    r_end: f64,
    opts: &Options,
) -> f64 {
    let span = r_end - r0;
    let sc = |y: &[f64; N], i: usize| opts.atol + opts.rtol * y[i].abs();
    let mut d0 = 0.0;
    let mut d1 = 0.0;
    for i in 0..N {
        d0 += (y0[i] / sc(y0, i)).powi(2);
        d1 += (f0[i] / sc(y0, i)).powi(2);
    }
    d0 = (d0 / N as f64).sqrt();
    d1 = (d1 / N as f64).sqrt();
    let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    let h0 = h0.min(span);
    let mut y1 = [0.0; N];
    for i in 0..N {
        y1[i] = y0[i] + h0 * f0[i];
    }
    let f1 = rhs(r0 + h0, &y1);
    let mut d2 = 0.0;
    for i in 0..N {
        d2 += ((f1[i] - f0[i]) / sc(y0, i)).powi(2);
    }
    d2 = (d2 / N as f64).sqrt() / h0;
    let d_max = d1.max(d2);
    let h1 = if d_max <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d_max).powf(0.2)
    };
    (100.0 * h0).min(h1).min(span).min(opts.max_step)
}

/// Integrate y' = rhs(r, y) from (r0, y0) to r_end with adaptive steps,
/// recording dense output and locating the given events.
pub fn integrate<const N: usize>(
    rhs: impl Fn(f64, &[f64; N]) -> [f64; N],
    r0: f64,
    y0: [f64; N],
    r_end: f64,
    opts: &Options,
    events: &[Event<'_, N>],
) -> Result<Integration<N>, IntegratorError> {
    assert!(r_end > r0, "integration range must be forward");
    let mut r = r0;
    let mut y = y0;
    let mut k1 = rhs(r, &y);
    let mut rhs_evaluations = 1usize;
    if !k1.iter().all(|v| v.is_finite()) {
        return Err(IntegratorError::NonFiniteRhs { r });
    }
    let mut h = initial_step(&rhs, r0, &y0, &k1, r_end, opts);
    rhs_evaluations += 2;
    let mut grid = vec![r0];
    let mut states = vec![y0];
    let mut steps: Vec<DenseStep<N>> = Vec::new();
    let mut hits: Vec<EventHit<N>> = Vec::new();
    let mut accumulated_error = [0.0; N];
    let mut event_sign: Vec<f64> = events.iter().map(|e| (e.g)(r0, &y0)).collect();
    let mut accepted = 0usize;
    let mut rejected_last = false;

    'outer: while r < r_end {
        if accepted >= MAX_STEPS {
            return Err(IntegratorError::MaxStepsExceeded { r, steps: accepted });
        }
        if h < 1e-14 * r.abs().max(1.0) {
            return Err(IntegratorError::StepSizeUnderflow { r, h });
        }
        let h_eff = h.min(r_end - r).min(opts.max_step);
        // Stage evaluations.
        let stage = |base: &[f64; N], incs: &[(&[f64; N], f64)]| {
            let mut out = *base;
            for (k, c) in incs {
                for i in 0..N {
                    out[i] += h_eff * c * k[i];
                }
            }
            out
        };
        let y2 = stage(&y, &[(&k1, A21)]);
        let k2 = rhs(r + h_eff / 5.0, &y2);
        let y3 = stage(&y, &[(&k1, A31), (&k2, A32)]);
        let k3 = rhs(r + 3.0 * h_eff / 10.0, &y3);
        let y4 = stage(&y, &[(&k1, A41), (&k2, A42), (&k3, A43)]);
        let k4 = rhs(r + 4.0 * h_eff / 5.0, &y4);
        let y5 = stage(&y, &[(&k1, A51), (&k2, A52), (&k3, A53), (&k4, A54)]);
        let k5 = rhs(r + 8.0 * h_eff / 9.0, &y5);
        let y6 = stage(&y, &[(&k1, A61), (&k2, A62), (&k3, A63), (&k4, A64), (&k5, A65)]);
        let k6 = rhs(r + h_eff, &y6);
        let ynew = stage(&y, &[(&k1, B1), (&k3, B3), (&k4, B4), (&k5, B5), (&k6, B6)]);
        let k7 = rhs(r + h_eff, &ynew);
        rhs_evaluations += 6;

        let finite = ynew.iter().all(|v| v.is_finite()) && k7.iter().all(|v| v.is_finite());
        // Local error: 5th-order minus embedded 4th-order solution.
        let mut err = 0.0;
        let mut le = [0.0; N];
        if finite {
            for i in 0..N {
                let y4th = y[i]
                    + h_eff
                        * (BH1 * k1[i]
                            + BH3 * k3[i]
                            + BH4 * k4[i]
                            + BH5 * k5[i]
                            + BH6 * k6[i]
                            + BH7 * k7[i]);
                le[i] = ynew[i] - y4th;
                let sc = opts.atol + opts.rtol * y[i].abs().max(ynew[i].abs());
                err += (le[i] / sc).powi(2);
            }
            err = (err / N as f64).sqrt();
        } else {
            err = f64::INFINITY;
        }

        if !(err <= 1.0) {
            // Reject: shrink and retry.
            let scale = if err.is_finite() {
                (SAFETY * err.powf(-0.2)).max(MIN_SCALE)
            } else {
                MIN_SCALE
            };
            h = h_eff * scale.min(1.0);
            rejected_last = true;
            continue;
        }

        // Accept: build dense output.
        let mut rcont = [[0.0; N]; 5];
        for i in 0..N {
            let delta = ynew[i] - y[i];
            rcont[0][i] = y[i];
            rcont[1][i] = delta;
            rcont[2][i] = h_eff * k1[i] - delta;
            rcont[3][i] = delta - h_eff * k7[i] - rcont[2][i];
            rcont[4][i] = h_eff
                * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]);
        }
        let step = DenseStep { r0: r, h: h_eff, valid_end: r + h_eff, rcont };

        // Event scan on this step: record every crossing up to (and
        // including) the first terminal one, in r order.
        let mut crossings: Vec<(usize, f64)> = Vec::new();
        for (idx, event) in events.iter().enumerate() {
            let g0 = event_sign[idx];
            let g1 = (event.g)(r + h_eff, &ynew);
            let crossed = match event.direction {
                Direction::Falling => g0 > 0.0 && g1 <= 0.0,
                Direction::Rising => g0 < 0.0 && g1 >= 0.0,
            };
            if crossed {
                crossings.push((idx, locate_event(event, &step, r, r + h_eff)));
            }
            event_sign[idx] = g1;
        }
        crossings.sort_by(|a, b| a.1.total_cmp(&b.1));
        let mut terminal_cut: Option<f64> = None;
        for (idx, r_star) in &crossings {
            if terminal_cut.is_some_and(|cut| *r_star > cut) {
                break;
            }
            hits.push(EventHit {
                label: events[*idx].label,
                r: *r_star,
                y: step.eval(*r_star),
                terminal: events[*idx].terminal,
            });
            if events[*idx].terminal && terminal_cut.is_none() {
                terminal_cut = Some(*r_star);
            }
        }

        for i in 0..N {
            accumulated_error[i] += le[i].abs();
        }
        accepted += 1;

        if let Some(r_star) = terminal_cut {
            let mut final_step = step;
            final_step.valid_end = r_star;
            let y_star = final_step.eval(r_star);
            steps.push(final_step);
            grid.push(r_star);
            states.push(y_star);
            break 'outer;
        }

        steps.push(step);
        r += h_eff;
        y = ynew;
        k1 = k7; // FSAL
        grid.push(r);
        states.push(y);

        let scale = if err == 0.0 {
            MAX_SCALE
        } else {
            (SAFETY * err.powf(-0.2)).clamp(MIN_SCALE, MAX_SCALE)
        };
        // No step growth immediately after a rejection.
        h = h_eff * if rejected_last { scale.min(1.0) } else { scale };
        rejected_last = false;
    }

    let r_final = *grid.last().unwrap();
    Ok(Integration {
        grid,
        states,
        dense: DenseOutput { steps, r_start: r0, r_end: r_final },
        events: hits,
        accumulated_error,
        rhs_evaluations,
    })
}

/// Bisect the dense output for the event crossing in [lo, hi] to 1e-12 in r.
fn locate_event<const N: usize>(
    event: &Event<'_, N>,
    step: &DenseStep<N>,
    lo: f64,
    hi: f64,
) -> f64 {
    let sign_at = |r: f64| (event.g)(r, &step.eval(r));
    let mut lo = lo;
    let mut hi = hi;
    let target_width = 1e-12 * hi.abs().max(1.0);
    for _ in 0..80 {
        if hi - lo <= target_width {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let gm = sign_at(mid);
        let crossed_by_mid = match event.direction {
            Direction::Falling => gm <= 0.0,
            Direction::Rising => gm >= 0.0,
        };
        if crossed_by_mid {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}
