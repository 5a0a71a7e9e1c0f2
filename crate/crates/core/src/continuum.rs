//! Continuum half-line Dirac machinery on [0, 1]-cell potentials:
//! constant-cell transfer matrices in an all-real-energy form, word
//! products, the free fundamental system, compactly supported spinor
//! states, and the admissibility test that decides which boundary data a
//! state can pair against without interference.
//!
//! Cell matrices use the squared momentum `z = ((E−v)² − m²c⁴)/c²`, which
//! is real for real energy in either the propagating (`z > 0`) or
//! evanescent (`z < 0`) regime; `cos` and `sinc` of `√z·x` are evaluated
//! as even functions of the momentum via series near `z = 0`, so matrix
//! entries are continuous across spectral-gap edges.


use crate::algebra::{Mat2, C64};
use crate::{CoreError, DiracParams, Result};

/// Squared cell momentum `z = ξ² = ((E−v)² − m²c⁴)/c²` (real for real
/// inputs; negative inside a gap).
pub fn momentum_sq(params: &DiracParams, e: f64, v: f64) -> f64 {
    let ev = e - v;
    let mc2 = params.mc2();
    (ev * ev - mc2 * mc2) / (params.c * params.c)
}

/// `(cos(√z·t), sinc(√z·t)·t)` for real `z` of either sign, as even
/// functions of `√z`: trigonometric for `z·t² > 0`, hyperbolic for
/// `z·t² < 0`, and a Taylor series for `|z·t²| < 1e-8` so gap edges are
/// crossed smoothly. Returns `(C, S)` with `C² − z·S² = 1` analytically.
pub fn cos_sinc(z: f64, t: f64) -> (f64, f64) {
    let w = z * t * t;
    if w.abs() < 1e-8 {
        let c = 1.0 - w / 2.0 + w * w / 24.0 - w * w * w / 720.0;
        let s = 1.0 - w / 6.0 + w * w / 120.0 - w * w * w / 5040.0;
        (c, s * t)
    } else if w > 0.0 {
        let xi = w.sqrt();
        (xi.cos(), xi.sin() / xi * t)
    } else {
        let xi = (-w).sqrt();
        (xi.cosh(), xi.sinh() / xi * t)
    }
}

/// Transfer matrix across one unit cell of constant potential `v` at real
/// energy `e`:
/// `[[C, i(E−v+mc²)S/c], [−i(mc²−E+v)S/c, C]]` with `C = cos ξ`,
/// `S = sinc ξ` and `ξ² = z`. Unimodular analytically
/// (`det = C² − z·S² = 1`); valid at every real energy including spectral
/// gaps and their edges.
pub fn free_cell_matrix(params: &DiracParams, e: f64, v: f64) -> Mat2 {
    let z = momentum_sq(params, e, v);
    let (cc, ss) = cos_sinc(z, 1.0);
    let mc2 = params.mc2();
    let ev = e - v;
    Mat2::new(
        C64::new(cc, 0.0),
        C64::new(0.0, (ev + mc2) * ss / params.c),
        C64::new(0.0, -(mc2 - ev) * ss / params.c),
        C64::new(cc, 0.0),
    )
}

/// Ordered product of cell matrices over the first `n` cells of a word
/// potential: leftmost factor is the `n`-th cell.
pub fn word_product(
    params: &DiracParams,
    e: f64,
    word: &crate::potentials::CellWord,
    n: usize,
) -> Result<Mat2> {
    if n > word.len() {
        return Err(CoreError::OutOfRange(format!(
            "cell count {n} exceeds word length {}",
            word.len()
        )));
    }
    let mut m = Mat2::identity();
    for cell in 0..n {
        m = free_cell_matrix(params, e, word.cell_value(cell)).mul(&m);
    }
    Ok(m)
}

/// A spinor sampled on the uniform grid `x_k = k·grid_step`,
/// `k = 0..=samples`: `samples + 1` points per component.
#[derive(Debug, Clone)]
pub struct SpinorSamples {
    pub plus: Vec<C64>,
    pub minus: Vec<C64>,
    pub grid_step: f64,
}

impl SpinorSamples {
    pub fn len(&self) -> usize {
        self.plus.len()
    }

    pub fn is_empty(&self) -> bool {
        self.plus.is_empty()
    }

    /// L² norm over the sampled support (trapezoid weights).
    pub fn l2_norm(&self) -> f64 {
        let n = self.plus.len();
        if n < 2 {
            return 0.0;
        }
        let mut acc = 0.0;
        for k in 0..n {
            let w = if k == 0 || k == n - 1 { 0.5 } else { 1.0 };
            acc += w * (self.plus[k].norm_sqr() + self.minus[k].norm_sqr());
        }
        (acc * self.grid_step).sqrt()
    }
}

/// The free fundamental system at energy `e` (requires `E² > m²c⁴`):
/// the Neumann-type solution `u^N(x) = (cos ξx, i(E−mc²)·x·sinc(ξx)/c)`
/// with `u^N(0) = (1, 0)` and the Dirichlet-type solution
/// `u^D(x) = (i(E+mc²)·x·sinc(ξx)/c, cos ξx)` with `u^D(0) = (0, 1)`.
/// Their Wronskian is identically 1.
pub struct FreeSolutions {
    pub params: DiracParams,
    pub e: f64,
    xi_sq: f64,
}

impl FreeSolutions {
    pub fn new(params: &DiracParams, e: f64) -> Result<Self> {
        let mc2 = params.mc2();
        if e * e <= mc2 * mc2 {
            return Err(CoreError::OutOfRange(format!(
                "free solutions need E² > m²c⁴, got E = {e}, mc² = {mc2}"
            )));
        }
        Ok(Self {
            params: *params,
            e,
            xi_sq: momentum_sq(params, e, 0.0),
        })
    }

    /// Neumann-type value at `x`.
    pub fn neumann(&self, x: f64) -> (C64, C64) {
        let (cc, ss) = cos_sinc(self.xi_sq, x);
        (
            C64::new(cc, 0.0),
            C64::new(0.0, (self.e - self.params.mc2()) * ss / self.params.c),
        )
    }

    /// Dirichlet-type value at `x`.
    pub fn dirichlet(&self, x: f64) -> (C64, C64) {
        let (cc, ss) = cos_sinc(self.xi_sq, x);
        (
            C64::new(0.0, (self.e + self.params.mc2()) * ss / self.params.c),
            C64::new(cc, 0.0),
        )
    }

    /// Sample both solutions on the grid `k·h`, `k = 0..=n`.
    pub fn sample(&self, h: f64, n: usize) -> (SpinorSamples, SpinorSamples) {
        let mut np = Vec::with_capacity(n + 1);
        let mut nm = Vec::with_capacity(n + 1);
        let mut dp = Vec::with_capacity(n + 1);
        let mut dm = Vec::with_capacity(n + 1);
        for k in 0..=n {
            let x = k as f64 * h;
            let (a, b) = self.neumann(x);
            np.push(a);
            nm.push(b);
            let (a, b) = self.dirichlet(x);
            dp.push(a);
            dm.push(b);
        }
        (
            SpinorSamples {
                plus: np,
                minus: nm,
                grid_step: h,
            },
            SpinorSamples {
                plus: dp,
                minus: dm,
                grid_step: h,
            },
        )
    }
}

/// A compactly supported spinor state on `[0, support_end]`, sampled on a
/// uniform grid and implicitly extended by zero beyond its support.
#[derive(Debug, Clone)]
pub struct CompactState {
    pub samples: SpinorSamples,
    pub support_end: f64,
    pub provenance: String,
}

impl CompactState {
    /// Build from component closures sampled at `grid_step = support_end / n`.
    pub fn from_fn(
        support_end: f64,
        n: usize,
        f_plus: impl Fn(f64) -> C64,
        f_minus: impl Fn(f64) -> C64,
    ) -> Result<Self> {
        if !(support_end > 0.0) || !support_end.is_finite() {
            return Err(CoreError::InvalidParam(format!(
                "support end must be finite and positive, got {support_end}"
            )));
        }
        if n < 2 {
            return Err(CoreError::InvalidParam(format!(
                "need at least 2 grid intervals, got {n}"
            )));
        }
        let h = support_end / n as f64;
        let mut plus = Vec::with_capacity(n + 1);
        let mut minus = Vec::with_capacity(n + 1);
        for k in 0..=n {
            let x = k as f64 * h;
            plus.push(f_plus(x));
            minus.push(f_minus(x));
        }
        Ok(Self {
            samples: SpinorSamples {
                plus,
                minus,
                grid_step: h,
            },
            support_end,
            provenance: "closure".into(),
        })
    }

    /// Load from a text file: optional header lines `support_end <v>` and
    /// `grid_step <h>`, then one sample per line as four real columns
    /// `Re f⁺  Im f⁺  Re f⁻  Im f⁻`. Blank lines and `#` comments are
    /// skipped. When both headers are present they must be consistent with
    /// the sample count (`support_end = samples·grid_step` within 1e-9).
    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut support_end: Option<f64> = None;
        let mut grid_step: Option<f64> = None;
        let mut plus = Vec::new();
        let mut minus = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let parse_f = |tok: &str| -> Result<f64> {
                tok.parse::<f64>().map_err(|_| {
                    CoreError::Parse(format!(
                        "{}:{}: cannot parse '{tok}' as a number",
                        path.display(),
                        lineno + 1
                    ))
                })
            };
            if let Some(rest) = line.strip_prefix("support_end") {
                support_end = Some(parse_f(rest.trim())?);
                continue;
            }
            if let Some(rest) = line.strip_prefix("grid_step") {
                grid_step = Some(parse_f(rest.trim())?);
                continue;
            }
            let toks: Vec<&str> = line.split_whitespace().collect();
            if toks.len() != 4 {
                return Err(CoreError::Parse(format!(
                    "{}:{}: expected 4 real columns, got {}",
                    path.display(),
                    lineno + 1,
                    toks.len()
                )));
            }
            plus.push(C64::new(parse_f(toks[0])?, parse_f(toks[1])?));
            minus.push(C64::new(parse_f(toks[2])?, parse_f(toks[3])?));
        }
        if plus.len() < 3 {
            return Err(CoreError::Parse(format!(
                "{}: need at least 3 samples, got {}",
                path.display(),
                plus.len()
            )));
        }
        let intervals = (plus.len() - 1) as f64;
        let (support_end, grid_step) = match (support_end, grid_step) {
            (Some(se), Some(h)) => {
                if (se - intervals * h).abs() > 1e-9 * se.abs().max(1.0) {
                    return Err(CoreError::Parse(format!(
                        "{}: support_end {se} inconsistent with {} samples at step {h}",
                        path.display(),
                        plus.len()
                    )));
                }
                (se, h)
            }
            (Some(se), None) => (se, se / intervals),
            (None, Some(h)) => (intervals * h, h),
            (None, None) => (1.0, 1.0 / intervals),
        };
        if !(support_end > 0.0) || !(grid_step > 0.0) {
            return Err(CoreError::Parse(format!(
                "{}: support_end and grid_step must be positive",
                path.display()
            )));
        }
        Ok(Self {
            samples: SpinorSamples {
                plus,
                minus,
                grid_step,
            },
            support_end,
            provenance: path.display().to_string(),
        })
    }
}

/// Composite Simpson integration of complex samples on a uniform grid.
/// Even panel counts use pure Simpson; odd counts finish with a 3/8 rule
/// on the last three panels; a single panel falls back to the trapezoid.
pub fn simpson_complex(samples: &[C64], h: f64) -> C64 {
    let n = samples.len();
    if n < 2 {
        return C64::new(0.0, 0.0);
    }
    let panels = n - 1;
    if panels == 1 {
        return (samples[0] + samples[1]) * (h / 2.0);
    }
    let (simpson_panels, tail) = if panels.is_multiple_of(2) {
        (panels, 0)
    } else if panels >= 3 {
        (panels - 3, 3)
    } else {
        (0, 0)
    };
    let mut acc = C64::new(0.0, 0.0);
    if simpson_panels > 0 {
        let mut s = samples[0] + samples[simpson_panels];
        for (i, v) in samples.iter().enumerate().take(simpson_panels).skip(1) {
            s += *v * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        acc += s * (h / 3.0);
    }
    if tail == 3 {
        let k = simpson_panels;
        acc += (samples[k] + samples[k + 1] * 3.0 + samples[k + 2] * 3.0 + samples[k + 3])
            * (3.0 * h / 8.0);
    }
    acc
}

/// Unconjugated pairing `⟨g, f⟩ = ∫ (g⁺f⁺ + g⁻f⁻) dx` over the support of
/// `f`, with `g` given by a closure returning spinor values. (All pairings
/// in the admissibility analysis appear with conjugations that cancel, so
/// the bilinear form is the one that matters.)
pub fn bracket(state: &CompactState, g: impl Fn(f64) -> (C64, C64)) -> C64 {
    let h = state.samples.grid_step;
    let vals: Vec<C64> = (0..state.samples.len())
        .map(|k| {
            let x = k as f64 * h;
            let (gp, gm) = g(x);
            gp * state.samples.plus[k] + gm * state.samples.minus[k]
        })
        .collect();
    simpson_complex(&vals, h)
}

/// Which admissibility case applies to a state, decided by which spinor
/// components it actually carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CaseTag {
    /// Only the upper component is present.
    PlusOnly,
    /// Only the lower component is present.
    MinusOnly,
    /// Both components are present.
    BothComponents,
}

/// Pairing data underlying an admissibility decision. All brackets are the
/// bilinear `∫ g·f` form: the defining pairings carry conjugated test
/// functions, and the two conjugations cancel.
#[derive(Debug, Clone, serde::Serialize)]
pub struct AdmissibilityReport {
    pub case_tag: CaseTag,
    /// Bracket against `w_E = (−u⁺^D, u⁻^D)` (decides the two-component
    /// case together with `pairing_v`).
    pub pairing_w: C64,
    /// Bracket against `v_E = (u⁺^N, −u⁻^N)`.
    pub pairing_v: C64,
    /// Bracket against the Neumann-type free solution (backs the
    /// single-component cases).
    pub pairing_neumann: C64,
    /// Bracket against the Dirichlet-type free solution.
    pub pairing_dirichlet: C64,
    pub admissible: bool,
    pub energy: f64,
    /// Threshold actually used: `1e-9 · ‖f‖`.
    pub tolerance: f64,
}

/// Decide admissibility of a compact state at energy `e` (propagating
/// regime required).
///
/// A single-component state is admissible when it pairs nontrivially with
/// some solution at `e`; testing the two fundamental solutions suffices
/// because the pairing is linear over their span. A two-component state is
/// admissible when at least one of the brackets against `w_E`, `v_E` is
/// nonzero. Thresholds scale with the state so the verdict is invariant
/// under rescaling. The zero state is rejected.
pub fn admissibility(
    params: &DiracParams,
    e: f64,
    state: &CompactState,
) -> Result<AdmissibilityReport> {
    let free = FreeSolutions::new(params, e)?;
    let sup_plus = state
        .samples
        .plus
        .iter()
        .map(|z| z.norm())
        .fold(0.0f64, f64::max);
    let sup_minus = state
        .samples
        .minus
        .iter()
        .map(|z| z.norm())
        .fold(0.0f64, f64::max);
    let total = sup_plus.max(sup_minus);
    if total == 0.0 {
        return Err(CoreError::InvalidParam(
            "admissibility of the zero state is undefined".into(),
        ));
    }
    let has_plus = sup_plus > 1e-14 * total;
    let has_minus = sup_minus > 1e-14 * total;
    let case_tag = match (has_plus, has_minus) {
        (true, false) => CaseTag::PlusOnly,
        (false, true) => CaseTag::MinusOnly,
        _ => CaseTag::BothComponents,
    };
    let pairing_neumann = bracket(state, |x| free.neumann(x));
    let pairing_dirichlet = bracket(state, |x| free.dirichlet(x));
    let pairing_w = bracket(state, |x| {
        let (dp, dm) = free.dirichlet(x);
        (-dp, dm)
    });
    let pairing_v = bracket(state, |x| {
        let (np, nm) = free.neumann(x);
        (np, -nm)
    });
    let tolerance = 1e-9 * state.samples.l2_norm();
    let admissible = match case_tag {
        CaseTag::PlusOnly | CaseTag::MinusOnly => {
            pairing_neumann.norm() > tolerance || pairing_dirichlet.norm() > tolerance
        }
        CaseTag::BothComponents => {
            pairing_w.norm() > tolerance || pairing_v.norm() > tolerance
        }
    };
    Ok(AdmissibilityReport {
        case_tag,
        pairing_w,
        pairing_v,
        pairing_neumann,
        pairing_dirichlet,
        admissible,
        energy: e,
        tolerance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potentials;
    use std::f64::consts::PI;

    fn params(m: f64, c: f64) -> DiracParams {
        DiracParams::new(m, c).unwrap()
    }

    #[test]
    fn cell_matrix_frozen_values() {
        // Propagating cell, m = c = 1, E = 2, v = 0: z = 3, ξ = √3.
        let a = free_cell_matrix(&params(1.0, 1.0), 2.0, 0.0);
        let xi = 3.0f64.sqrt();
        let c_exp = xi.cos(); // −0.160557…
        let s_exp = xi.sin() / xi;
        assert!((a.a11.re - c_exp).abs() <= 1e-15 && a.a11.im == 0.0);
        assert!(
            (a.a12.im - 3.0 * s_exp).abs() <= 1e-15,
            "upper coupling should be i(E+mc²)sinc ξ, got {}",
            a.a12.im
        );
        assert!(
            (a.a21.im - s_exp).abs() <= 1e-15,
            "lower coupling should be −i(mc²−E)sinc ξ = +i·sinc ξ here"
        );
        assert!((a.a11.re + 0.16055653857469052).abs() <= 1e-14);
        assert!((a.a12.im - 1.7095802975475418).abs() <= 1e-14);
        assert!((a.a21.im - 0.5698600991825139).abs() <= 1e-14);

        // Gap edge E = mc²: z = 0, so C = 1, S = 1 exactly.
        let a = free_cell_matrix(&params(1.0, 1.0), 1.0, 0.0);
        assert!(
            a.dist_max(&Mat2::new(
                C64::new(1.0, 0.0),
                C64::new(0.0, 2.0),
                C64::new(0.0, 0.0),
                C64::new(1.0, 0.0)
            )) <= 1e-15,
            "gap-edge cell should be [[1, 2i], [0, 1]]"
        );

        // Massless full rotation: E = π gives −I.
        let a = free_cell_matrix(&params(0.0, 1.0), PI, 0.0);
        let minus_i = Mat2::from_real(-1.0, 0.0, 0.0, -1.0);
        assert!(
            a.dist_max(&minus_i) <= 1e-15,
            "massless cell at E = π should be −I"
        );
    }

    #[test]
    fn cell_matrix_is_continuous_across_gap_edges_and_unimodular() {
        let p = params(1.0, 1.0);
        for e0 in [1.0, -1.0] {
            let below = free_cell_matrix(&p, e0 - 1e-9, 0.0);
            let above = free_cell_matrix(&p, e0 + 1e-9, 0.0);
            assert!(
                below.dist_max(&above) <= 1e-8,
                "cell matrix should be continuous across the gap edge at E = {e0}"
            );
        }
        // det = 1 analytically, propagating, evanescent and edge alike.
        for e in [-3.0, -1.0, -0.5, 0.0, 0.3, 1.0, 1.0001, 2.7] {
            let d = (free_cell_matrix(&p, e, 0.0).det() - C64::new(1.0, 0.0)).norm();
            assert!(d <= 1e-12, "cell determinant error {d:.2e} at E = {e}");
        }
    }

    #[test]
    fn cos_sinc_series_matches_closed_form() {
        // Just outside the series window both evaluations must agree.
        for &z in &[1e-8 * 1.01, -1e-8 * 1.01, 2e-8, -2e-8] {
            let (c1, s1) = cos_sinc(z, 1.0);
            let w = z;
            let c2 = 1.0 - w / 2.0 + w * w / 24.0 - w * w * w / 720.0;
            let s2 = 1.0 - w / 6.0 + w * w / 120.0 - w * w * w / 5040.0;
            assert!((c1 - c2).abs() <= 1e-15 && (s1 - s2).abs() <= 1e-15);
        }
        let (c, s) = cos_sinc(4.0, 1.0);
        assert!((c - 2.0f64.cos()).abs() <= 1e-15);
        assert!((s - 2.0f64.sin() / 2.0).abs() <= 1e-15);
        let (c, s) = cos_sinc(-4.0, 1.0);
        assert!((c - 2.0f64.cosh()).abs() <= 1e-13);
        assert!((s - 2.0f64.sinh() / 2.0).abs() <= 1e-13);
    }

    #[test]
    fn critical_energy_word_products_are_signed_identities() {
        // Massless, c = 1: one cell at E − v = nπ is (−1)ⁿ·I, so a word
        // product over k cells at such an energy is (−1)^{nk}·I.
        let p = params(0.0, 1.0);
        let free_word = potentials::CellWord::from_pattern(vec![0, 0, 0, 0], 0.0, 0.0).unwrap();
        for n in 1..=4usize {
            for k in 1..=4usize {
                let m = word_product(&p, n as f64 * PI, &free_word, k).unwrap();
                let sign = if (n * k) % 2 == 0 { 1.0 } else { -1.0 };
                let expect = Mat2::from_real(sign, 0.0, 0.0, sign);
                assert!(
                    m.dist_max(&expect) <= 1e-12,
                    "{k} cells at E = {n}π should give ({sign})·I, got {m:?}"
                );
            }
        }
        // Two-letter word at an energy critical for both letters
        // (a = 0, b = π, E = 2π: a-cells rotate by 2π, b-cells by π).
        let word = potentials::CellWord::from_pattern(vec![0, 1, 1, 0, 1], 0.0, PI).unwrap();
        let m = word_product(&p, 2.0 * PI, &word, 5).unwrap();
        let expect = Mat2::from_real(-1.0, 0.0, 0.0, -1.0); // (+I)²·(−I)³
        assert!(
            m.dist_max(&expect) <= 1e-12,
            "mixed critical word should give −I, got {m:?}"
        );
    }

    #[test]
    fn word_product_matches_repeated_cells() {
        let p = params(0.5, 1.3);
        let word = potentials::CellWord::from_pattern(vec![1, 0, 1, 1], 0.2, 0.9).unwrap();
        let m = word_product(&p, 1.7, &word, 4).unwrap();
        let a = free_cell_matrix(&p, 1.7, 0.2);
        let b = free_cell_matrix(&p, 1.7, 0.9);
        let expect = b.mul(&b).mul(&a).mul(&b);
        assert!(
            m.dist_max(&expect) <= 1e-13,
            "word product should multiply cells right-to-left"
        );
        assert!(word_product(&p, 1.7, &word, 5).is_err(), "length guard");
    }

    #[test]
    fn free_solutions_wronskian_and_rejection() {
        let p = params(1.0, 1.0);
        assert!(
            FreeSolutions::new(&p, 0.5).is_err(),
            "energies inside the mass gap have no free fundamental system"
        );
        let f = FreeSolutions::new(&p, 1.7).unwrap();
        for &x in &[0.0, 0.3, 1.0, 2.5, 10.0] {
            let (np, nm) = f.neumann(x);
            let (dp, dm) = f.dirichlet(x);
            // W = u^N⁺·u^D⁻ − u^D⁺·u^N⁻ = cos² + ξ²x²sinc²·(E²−m²c⁴)/c²…
            let w = np * dm - dp * nm;
            assert!(
                (w - C64::new(1.0, 0.0)).norm() <= 1e-12,
                "Wronskian should be 1 identically, got {w} at x = {x}"
            );
        }
        // Massless plane-wave check: u^N = (cos Ex, i sin Ex).
        let f = FreeSolutions::new(&params(0.0, 1.0), 2.0).unwrap();
        let (np, nm) = f.neumann(0.7);
        assert!((np.re - (1.4f64).cos()).abs() <= 1e-15);
        assert!((nm.im - (1.4f64).sin()).abs() <= 1e-15);
    }

    #[test]
    fn simpson_is_spectrally_accurate_on_full_periods() {
        // Composite Simpson on exact full periods of trigonometric
        // integrands benefits from roots-of-unity cancellation: the error
        // is rounding-level, far below the generic h⁴ bound.
        let n = 256;
        let h = 1.0 / n as f64;
        let vals: Vec<C64> = (0..=n)
            .map(|k| {
                let x = k as f64 * h;
                C64::new((2.0 * PI * x).sin() * (2.0 * PI * x).sin(), 0.0)
            })
            .collect();
        let got = simpson_complex(&vals, h);
        assert!(
            (got.re - 0.5).abs() <= 1e-14,
            "∫sin²(2πx) over one period should be 1/2, error {:.2e}",
            (got.re - 0.5).abs()
        );
        // Polynomial exactness through degree 3.
        let vals: Vec<C64> = (0..=n)
            .map(|k| {
                let x = k as f64 * h;
                C64::new(x * x * x - 2.0 * x, 0.0)
            })
            .collect();
        let got = simpson_complex(&vals, h);
        assert!((got.re - (0.25 - 1.0)).abs() <= 1e-14);
        // Odd panel count: 3/8 tail keeps 4th-order accuracy.
        let n = 255;
        let h = 1.0 / n as f64;
        let vals: Vec<C64> = (0..=n)
            .map(|k| C64::new((k as f64 * h).exp(), 0.0))
            .collect();
        let got = simpson_complex(&vals, h);
        assert!(
            (got.re - (1.0f64.exp() - 1.0)).abs() <= 1e-9,
            "odd-panel Simpson error too large: {:.2e}",
            (got.re - (1.0f64.exp() - 1.0)).abs()
        );
    }

    #[test]
    fn interference_state_is_invisible_at_both_branches() {
        // Massless, c = 1, E = π: f = (i sin πx, −cos πx) on [0, 1] has
        // both components, yet brackets to zero against w_E and v_E:
        // ∫(sin² − cos²) = 0 and 2i∫sin·cos = 0 over the full period.
        let p = params(0.0, 1.0);
        let f = CompactState::from_fn(
            1.0,
            256,
            |x| C64::new(0.0, (PI * x).sin()),
            |x| C64::new(-(PI * x).cos(), 0.0),
        )
        .unwrap();
        let rep = admissibility(&p, PI, &f).unwrap();
        assert_eq!(rep.case_tag, CaseTag::BothComponents);
        assert!(
            !rep.admissible,
            "interference state should be invisible: {rep:?}"
        );
        assert!(
            rep.pairing_w.norm() <= 1e-10 && rep.pairing_v.norm() <= 1e-10,
            "both brackets should vanish, got w = {:.3e}, v = {:.3e}",
            rep.pairing_w.norm(),
            rep.pairing_v.norm()
        );
    }

    #[test]
    fn companion_states_are_admissible() {
        let p = params(0.0, 1.0);
        // Upper component only: (cos πx, 0) pairs with the Neumann-type
        // solution, ∫cos²πx = 1/2.
        let f = CompactState::from_fn(
            1.0,
            256,
            |x| C64::new((PI * x).cos(), 0.0),
            |_| C64::new(0.0, 0.0),
        )
        .unwrap();
        let rep = admissibility(&p, PI, &f).unwrap();
        assert_eq!(rep.case_tag, CaseTag::PlusOnly);
        assert!(rep.admissible, "upper cos component must be visible");
        assert!(
            (rep.pairing_neumann - C64::new(0.5, 0.0)).norm() <= 1e-10,
            "Neumann bracket should be 1/2, got {}",
            rep.pairing_neumann
        );

        // Lower component only: (0, cos πx) pairs with the Dirichlet-type
        // solution the same way.
        let f = CompactState::from_fn(
            1.0,
            256,
            |_| C64::new(0.0, 0.0),
            |x| C64::new((PI * x).cos(), 0.0),
        )
        .unwrap();
        let rep = admissibility(&p, PI, &f).unwrap();
        assert_eq!(rep.case_tag, CaseTag::MinusOnly);
        assert!(rep.admissible);
        assert!(
            (rep.pairing_dirichlet - C64::new(0.5, 0.0)).norm() <= 1e-10,
            "Dirichlet bracket should be 1/2, got {}",
            rep.pairing_dirichlet
        );

        // Flipping the relative sign of the interference state makes the
        // w-bracket ∫(sin² + cos²) = 1.
        let f = CompactState::from_fn(
            1.0,
            256,
            |x| C64::new(0.0, (PI * x).sin()),
            |x| C64::new((PI * x).cos(), 0.0),
        )
        .unwrap();
        let rep = admissibility(&p, PI, &f).unwrap();
        assert_eq!(rep.case_tag, CaseTag::BothComponents);
        assert!(rep.admissible);
        assert!((rep.pairing_w - C64::new(1.0, 0.0)).norm() <= 1e-10);
    }

    #[test]
    fn indicator_state_pairs_through_a_half_support() {
        // f₊ = 1 on [0, 1/2]: ∫₀^½ cos πx dx = 1/π ≠ 0.
        let p = params(0.0, 1.0);
        let f = CompactState::from_fn(
            0.5,
            256,
            |_| C64::new(1.0, 0.0),
            |_| C64::new(0.0, 0.0),
        )
        .unwrap();
        let rep = admissibility(&p, PI, &f).unwrap();
        assert_eq!(rep.case_tag, CaseTag::PlusOnly);
        assert!(rep.admissible);
        assert!(
            (rep.pairing_neumann - C64::new(1.0 / PI, 0.0)).norm() <= 1e-10,
            "indicator bracket should be 1/π, got {}",
            rep.pairing_neumann
        );
    }

    #[test]
    fn admissibility_tolerance_scales_with_the_state() {
        // Rescaling the state must not change the verdict.
        let p = params(0.0, 1.0);
        for scale in [1e-8, 1.0, 1e8] {
            let f = CompactState::from_fn(
                1.0,
                256,
                move |x| C64::new(0.0, scale * (PI * x).sin()),
                move |x| C64::new(-scale * (PI * x).cos(), 0.0),
            )
            .unwrap();
            let rep = admissibility(&p, PI, &f).unwrap();
            assert!(
                !rep.admissible,
                "interference verdict must be scale invariant (scale {scale:e})"
            );
        }
        // Zero state rejected.
        let z = CompactState::from_fn(1.0, 8, |_| C64::new(0.0, 0.0), |_| C64::new(0.0, 0.0))
            .unwrap();
        assert!(admissibility(&p, PI, &z).is_err(), "zero state must be rejected");
        // Evanescent energies carry no free fundamental system.
        let gap = params(1.0, 1.0);
        let f = CompactState::from_fn(1.0, 8, |_| C64::new(1.0, 0.0), |_| C64::new(0.0, 0.0))
            .unwrap();
        assert!(admissibility(&gap, 0.5, &f).is_err());
    }

    #[test]
    fn state_file_round_trip() {
        let dir = std::env::temp_dir().join("dirac_core_state_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("state.txt");
        let mut text = String::from("# test state\nsupport_end 1.0\ngrid_step 0.25\n");
        for k in 0..=4 {
            let x = k as f64 * 0.25;
            text.push_str(&format!("{} 0.0 0.0 {}\n", x, 1.0 - x));
        }
        std::fs::write(&path, &text).unwrap();
        let st = CompactState::load(&path).unwrap();
        assert_eq!(st.samples.len(), 5);
        assert!((st.support_end - 1.0).abs() <= 1e-12);
        assert!((st.samples.plus[2].re - 0.5).abs() <= 1e-12);
        assert!((st.samples.minus[4].re - 0.0).abs() <= 1e-12);

        std::fs::write(dir.join("bad.txt"), "support_end 2.0\ngrid_step 0.25\n0 0 0 0\n1 0 0 0\n0 0 0 0\n").unwrap();
        assert!(
            CompactState::load(&dir.join("bad.txt")).is_err(),
            "inconsistent headers must be rejected"
        );
        std::fs::write(dir.join("garbled.txt"), "0 0 zebra 0\n").unwrap();
        assert!(CompactState::load(&dir.join("garbled.txt")).is_err());
    }

    #[test]
    fn verdicts_are_robust_to_a_tenfold_tolerance_change() {
        // The decisive brackets on the shipped examples are either
        // rounding-level or order one, so scaling the threshold by 10
        // either way flips nothing.
        let p = params(0.0, 1.0);
        let f = CompactState::from_fn(
            1.0,
            256,
            |x| C64::new(0.0, (PI * x).sin()),
            |x| C64::new(-(PI * x).cos(), 0.0),
        )
        .unwrap();
        let rep = admissibility(&p, PI, &f).unwrap();
        for v in [rep.pairing_w.norm(), rep.pairing_v.norm()] {
            assert!(
                v <= rep.tolerance / 10.0,
                "interference bracket {v:.3e} should survive a 10× tighter threshold"
            );
        }
        let f = CompactState::from_fn(
            1.0,
            256,
            |x| C64::new((PI * x).cos(), 0.0),
            |_| C64::new(0.0, 0.0),
        )
        .unwrap();
        let rep = admissibility(&p, PI, &f).unwrap();
        assert!(
            rep.pairing_neumann.norm() > rep.tolerance * 10.0,
            "companion bracket should survive a 10× looser threshold"
        );
    }
}
