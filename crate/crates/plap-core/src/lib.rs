//! Numerical solver and verification suite for positive radial solutions of
//! p-Laplace Dirichlet problems on the unit ball.
//!
//! The library integrates the radial equation
//!
//! ```text
//! (phi(u'))' + ((n-1)/r) phi(u') + lambda f(r, u) = 0,   u'(0) = 0,  u(1) = 0,
//! ```
//!
//! with `phi(t) = t |t|^{p-2}`, `p > 1`, by shooting on the initial amplitude
//! `u(0) = alpha`. Alongside each solution it integrates the linearized
//! equation, evaluates structural diagnostic identities, audits the
//! hypotheses under which uniqueness and non-degeneracy are known, inverts
//! the one-dimensional time map as an independent oracle, and traces
//! solution curves and coefficient homotopies.
//!
//! All public types are plain immutable data (`Send + Sync`); every operation
//! is a pure function of its inputs, so callers may parallelize sweeps
//! externally. Defaults keep everything sequential and deterministic.

// Validation deliberately writes `!(x > 0.0)` rather than `x <= 0.0`: the
// negated form fails closed on NaN, which must be rejected everywhere.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod curve;
pub mod diagnostics;
pub mod dopri;
pub mod ivp;
pub mod model;
pub mod poly;
pub mod quad;
pub mod shoot;
pub mod timemap;
