//! 2×2 complex matrix arithmetic, SL(2) conjugacy classification, and
//! rotation-angle extraction.
//!
//! Transfer matrices of the 1D Dirac eigenvalue equation are unimodular
//! 2×2 matrices; their conjugacy class (elliptic / parabolic / hyperbolic /
//! ±identity) decides whether cocycle products stay bounded, grow
//! polynomially, or grow exponentially. This module provides the matrix
//! type, the classifier, the rotation angle of rotation-like matrices, and
//! a closed-form spectral norm.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::{CoreError, Result};

/// Complex scalar used throughout the crate.
pub type C64 = Complex64;

/// Default tolerance for conjugacy classification. A single band parameter
/// governs the ±identity test, the parabolic trace test, and the imaginary
/// trace gate.
pub const CLASS_TOL: f64 = 1e-9;

/// Dense 2×2 complex matrix, row-major fields.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat2 {
    pub a11: C64,
    pub a12: C64,
    pub a21: C64,
    pub a22: C64,
}

/// Conjugacy class of a unimodular 2×2 matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatClass {
    Elliptic,
    Parabolic,
    Hyperbolic,
    PlusIdentity,
    MinusIdentity,
}

impl MatClass {
    /// True for the classes whose powers stay bounded: elliptic and ±I.
    pub fn is_rotation_like(self) -> bool {
        matches!(
            self,
            MatClass::Elliptic | MatClass::PlusIdentity | MatClass::MinusIdentity
        )
    }
}

impl Mat2 {
    pub const fn new(a11: C64, a12: C64, a21: C64, a22: C64) -> Self {
        Self { a11, a12, a21, a22 }
    }

    /// Matrix from real entries.
    pub fn from_real(a11: f64, a12: f64, a21: f64, a22: f64) -> Self {
        Self::new(
            C64::new(a11, 0.0),
            C64::new(a12, 0.0),
            C64::new(a21, 0.0),
            C64::new(a22, 0.0),
        )
    }

    pub fn identity() -> Self {
        Self::from_real(1.0, 0.0, 0.0, 1.0)
    }

    pub fn det(&self) -> C64 {
        self.a11 * self.a22 - self.a12 * self.a21
    }

    pub fn trace(&self) -> C64 {
        self.a11 + self.a22
    }

    /// Standard matrix product `self · rhs`.
    pub fn mul(&self, rhs: &Mat2) -> Mat2 {
        Mat2::new(
            self.a11 * rhs.a11 + self.a12 * rhs.a21,
            self.a11 * rhs.a12 + self.a12 * rhs.a22,
            self.a21 * rhs.a11 + self.a22 * rhs.a21,
            self.a21 * rhs.a12 + self.a22 * rhs.a22,
        )
    }

    /// Adjugate matrix; for unimodular input this is the exact inverse,
    /// with no division and no amplification of rounding error.
    pub fn adjugate(&self) -> Mat2 {
        Mat2::new(self.a22, -self.a12, -self.a21, self.a11)
    }

    /// True inverse (adjugate divided by the determinant).
    pub fn inverse(&self) -> Result<Mat2> {
        let d = self.det();
        if d.norm() == 0.0 {
            return Err(CoreError::NumericalGuard(
                "matrix inverse of a singular matrix".into(),
            ));
        }
        Ok(self.adjugate().scale(d.inv()))
    }

    pub fn scale(&self, s: C64) -> Mat2 {
        Mat2::new(self.a11 * s, self.a12 * s, self.a21 * s, self.a22 * s)
    }

    pub fn scale_real(&self, s: f64) -> Mat2 {
        self.scale(C64::new(s, 0.0))
    }

    pub fn add(&self, rhs: &Mat2) -> Mat2 {
        Mat2::new(
            self.a11 + rhs.a11,
            self.a12 + rhs.a12,
            self.a21 + rhs.a21,
            self.a22 + rhs.a22,
        )
    }

    pub fn sub(&self, rhs: &Mat2) -> Mat2 {
        Mat2::new(
            self.a11 - rhs.a11,
            self.a12 - rhs.a12,
            self.a21 - rhs.a21,
            self.a22 - rhs.a22,
        )
    }

    /// Apply to a column vector `(v0, v1)`.
    pub fn apply(&self, v: (C64, C64)) -> (C64, C64) {
        (
            self.a11 * v.0 + self.a12 * v.1,
            self.a21 * v.0 + self.a22 * v.1,
        )
    }

    /// Largest entry magnitude (max norm).
    pub fn max_abs_entry(&self) -> f64 {
        self.a11
            .norm()
            .max(self.a12.norm())
            .max(self.a21.norm())
            .max(self.a22.norm())
    }

    /// Frobenius norm.
    pub fn frobenius_norm(&self) -> f64 {
        (self.a11.norm_sqr() + self.a12.norm_sqr() + self.a21.norm_sqr() + self.a22.norm_sqr())
            .sqrt()
    }

    /// Max-entry distance to another matrix.
    pub fn dist_max(&self, rhs: &Mat2) -> f64 {
        self.sub(rhs).max_abs_entry()
    }

    pub fn is_finite(&self) -> bool {
        [self.a11, self.a12, self.a21, self.a22]
            .iter()
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

impl std::ops::Mul for Mat2 {
    type Output = Mat2;
    fn mul(self, rhs: Mat2) -> Mat2 {
        Mat2::mul(&self, &rhs)
    }
}

/// Spectral norm (largest singular value) of a 2×2 complex matrix.
///
/// Closed form: with `f = Σ|a_ij|²` and `d = |det|`, the squared singular
/// values are `(f ± √(f² − 4d²))/2`. Entries are rescaled by the largest
/// magnitude first so the formula never overflows for representable input.
pub fn operator_norm(m: &Mat2) -> f64 {
    let s = m.max_abs_entry();
    if s == 0.0 {
        return 0.0;
    }
    if !s.is_finite() {
        return f64::INFINITY;
    }
    let r = m.scale_real(1.0 / s);
    let f = r.a11.norm_sqr() + r.a12.norm_sqr() + r.a21.norm_sqr() + r.a22.norm_sqr();
    let d = r.det().norm();
    let disc = (f * f - 4.0 * d * d).max(0.0);
    s * (0.5 * (f + disc.sqrt())).sqrt()
}

/// Natural log of the spectral norm, computed without forming the norm
/// itself (safe when entries are near the overflow threshold).
pub fn log_operator_norm(m: &Mat2) -> f64 {
    let s = m.max_abs_entry();
    if s == 0.0 {
        return f64::NEG_INFINITY;
    }
    let r = m.scale_real(1.0 / s);
    let f = r.a11.norm_sqr() + r.a12.norm_sqr() + r.a21.norm_sqr() + r.a22.norm_sqr();
    let d = r.det().norm();
    let disc = (f * f - 4.0 * d * d).max(0.0);
    s.ln() + 0.5 * (0.5 * (f + disc.sqrt())).ln()
}

/// Frobenius norm of the commutator `ab − ba`.
pub fn commutator_frobenius(a: &Mat2, b: &Mat2) -> f64 {
    a.mul(b).sub(&b.mul(a)).frobenius_norm()
}

/// Classify a unimodular matrix by its trace.
///
/// Order of tests: ±identity (entrywise) first, then elliptic
/// (`|Re tr| < 2 − tol` with `|Im tr| ≤ tol`), hyperbolic
/// (`|Re tr| > 2 + tol`), parabolic (`|tr ∓ 2| ≤ tol`). Inputs whose trace
/// falls inside the tolerance band without matching ±I or parabolic
/// structure — or with a large imaginary trace at small real trace — are
/// rejected as indeterminate: real-energy transfer matrices in the allowed
/// region always have a real trace, so such inputs signal evaluation
/// outside the intended domain.
pub fn classify(m: &Mat2, tol: f64) -> Result<MatClass> {
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(CoreError::InvalidParam(format!(
            "classification tolerance must be positive and finite, got {tol}"
        )));
    }
    if !m.is_finite() {
        return Err(CoreError::InvalidParam(
            "classification of a non-finite matrix".into(),
        ));
    }
    let det_err = (m.det() - C64::new(1.0, 0.0)).norm();
    if det_err > tol.max(1e-9) {
        return Err(CoreError::InvalidParam(format!(
            "classification assumes a unimodular matrix; |det − 1| = {det_err:.3e}"
        )));
    }
    if m.dist_max(&Mat2::identity()) <= tol {
        return Ok(MatClass::PlusIdentity);
    }
    if m.dist_max(&Mat2::identity().scale_real(-1.0)) <= tol {
        return Ok(MatClass::MinusIdentity);
    }
    let t = m.trace();
    if t.re.abs() < 2.0 - tol && t.im.abs() <= tol {
        return Ok(MatClass::Elliptic);
    }
    if t.re.abs() > 2.0 + tol {
        return Ok(MatClass::Hyperbolic);
    }
    if (t - C64::new(2.0, 0.0)).norm() <= tol || (t + C64::new(2.0, 0.0)).norm() <= tol {
        return Ok(MatClass::Parabolic);
    }
    Err(CoreError::Indeterminate(format!(
        "trace {t} lies in the tolerance band without ±I or parabolic structure"
    )))
}

/// Rotation angle `η = arccos(Re tr / 2) ∈ [0, π]` of a rotation-like
/// matrix: `0` for +I, `π` for −I, `arccos(Re tr / 2)` for elliptic input.
/// Parabolic and hyperbolic matrices are rejected; only trace data is used
/// (no conjugating matrix is ever constructed).
pub fn rotation_angle(m: &Mat2) -> Result<f64> {
    let class = classify(m, CLASS_TOL)?;
    match class {
        MatClass::PlusIdentity => Ok(0.0),
        MatClass::MinusIdentity => Ok(std::f64::consts::PI),
        MatClass::Elliptic => {
            let half = (m.trace().re * 0.5).clamp(-1.0, 1.0);
            Ok(half.acos())
        }
        MatClass::Parabolic | MatClass::Hyperbolic => Err(CoreError::InvalidParam(format!(
            "rotation angle is defined only for elliptic or ±identity matrices, got {class:?}"
        ))),
    }
}
