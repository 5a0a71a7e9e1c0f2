//! Numerical laboratory for one-dimensional Dirac operators.
//!
//! The crate implements the computational machinery for studying transport
//! and spectral properties of 1D Dirac operators with bounded potentials,
//! in both a discrete (lattice) and a continuum (piecewise-constant cell)
//! realization:
//!
//! * [`algebra`] — 2×2 complex matrices, SL(2) conjugacy classification,
//!   rotation angles, operator norms.
//! * [`potentials`] — reproducible potential families: two-valued patterns,
//!   Bernoulli words, Thue–Morse, Sturmian rotation sequences, file-loaded.
//! * [`transfer`] — discrete transfer-matrix cocycles, windowed sup-norms,
//!   the energy-perturbation identity and its explicit bound, power-law
//!   growth fits.
//! * [`continuum`] — unit-cell transfer matrices for piecewise-constant
//!   potentials, free fundamental solutions, compact-support states, the
//!   conjugate-linear pairing, and the admissibility test.
//! * [`lattice`] — finite Dirichlet truncation as a real symmetric
//!   tridiagonal matrix, its eigensystem, unitary time evolution, and
//!   direct Abel-averaged position moments.
//! * [`greens`] — resolvent Green pairs from a banded complex solver, the
//!   Borel transform, spectral-measure estimates, and the energy-integral
//!   route to the same Abel moments.
//! * [`analysis`] — growth-exponent estimation, critical-energy scans for
//!   the two-block continuum model, bounded-energy scans, and the
//!   Monte-Carlo window-norm experiment for random words.
//!
//! All randomized constructions take explicit seeds and are bit-for-bit
//! reproducible; parallel code paths never change results.

// `!(x > 0.0)` is used throughout as a guard: unlike `x <= 0.0`, it also
// rejects NaN, which must never pass a parameter check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod algebra;
pub mod analysis;
pub mod continuum;
mod error;
pub mod greens;
pub mod lattice;
pub mod potentials;
pub mod transfer;

pub use error::{CoreError, Result};

/// Physical parameters of the Dirac operator: mass `m ≥ 0` and an effective
/// speed of light `c > 0`, so that `m c²` is the rest energy and `c` the
/// kinetic coupling.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct DiracParams {
    pub m: f64,
    pub c: f64,
}

impl DiracParams {
    /// Validated constructor: requires finite `m ≥ 0` and finite `c > 0`.
    pub fn new(m: f64, c: f64) -> Result<Self> {
        if !m.is_finite() || m < 0.0 {
            return Err(CoreError::InvalidParam(format!(
                "mass must be finite and nonnegative, got {m}"
            )));
        }
        if !c.is_finite() || c <= 0.0 {
            return Err(CoreError::InvalidParam(format!(
                "light speed must be finite and positive, got {c}"
            )));
        }
        Ok(Self { m, c })
    }

    /// Rest energy `m c²`.
    #[inline]
    pub fn mc2(&self) -> f64 {
        self.m * self.c * self.c
    }

    /// Massless parameters with the given speed.
    pub fn massless(c: f64) -> Result<Self> {
        Self::new(0.0, c)
    }
}
