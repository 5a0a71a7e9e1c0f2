//! Discrete transfer-matrix cocycle for the lattice Dirac eigenvalue
//! equation: single-step matrices, ordered products `Φ(E, x, y)`, windowed
//! sup-norms `L(N)`, power-law membership, the energy-perturbation identity
//! with its explicit exponential bound, and growth-exponent fits.
//!
//! A solution of the eigenvalue equation is transported between sites by
//! `(u⁺(x+1), u⁻(x)) = Φ(E, x, y) · (u⁺(y+1), u⁻(y))`, where `Φ(E, x, y)`
//! is the ordered product of single-step matrices whose rightmost factor
//! uses the potential at site `y + 1`. All step matrices have determinant
//! exactly 1 in exact arithmetic.

use rayon::prelude::*;

use crate::algebra::{log_operator_norm, operator_norm, Mat2, C64};
use crate::potentials::PotentialSeq;
use crate::{CoreError, DiracParams, Result};

/// Single-step transfer matrix of the discrete model,
/// `[[1 + (m²c⁴ − (E−v)²)/c², (mc² + E − v)/c], [(mc² − E + v)/c, 1]]`.
pub fn step_matrix(params: &DiracParams, e: C64, v: f64) -> Mat2 {
    let c = params.c;
    let mc2 = params.mc2();
    let ev = e - v;
    let c2 = c * c;
    Mat2::new(
        1.0 + (mc2 * mc2 - ev * ev) / c2,
        (mc2 + ev) / c,
        (mc2 - ev) / c,
        C64::new(1.0, 0.0),
    )
}

fn check_site(v: &PotentialSeq, s: usize, what: &str) -> Result<()> {
    if s > v.len() {
        return Err(CoreError::OutOfRange(format!(
            "{what} = {s} exceeds the potential length {}",
            v.len()
        )));
    }
    Ok(())
}

/// Ordered cocycle product `Φ(E, x, y) = T(E,V(x))···T(E,V(y+1))` for
/// `x ≥ y`, with the group conventions `Φ(E, y, y) = I` and
/// `Φ(E, x, y) = Φ(E, y, x)⁻¹` for `x < y` (the inverse is the adjugate,
/// exact for unimodular input).
///
/// Products are accumulated in plain double precision; callers probing
/// exponentially growing regimes over long windows should use the scaled
/// prefix machinery ([`prefix_products`]) instead.
pub fn cocycle(
    params: &DiracParams,
    e: C64,
    v: &PotentialSeq,
    x: usize,
    y: usize,
) -> Result<Mat2> {
    check_site(v, x, "x")?;
    check_site(v, y, "y")?;
    if x < y {
        return Ok(cocycle(params, e, v, y, x)?.adjugate());
    }
    let mut m = Mat2::identity();
    for k in (y + 1)..=x {
        m = step_matrix(params, e, v.value(k)).mul(&m);
    }
    Ok(m)
}

/// Entry magnitude beyond which a running product is renormalized.
const RESCALE_THRESHOLD: f64 = 1e150;

/// A 2×2 matrix with a separated logarithmic scale: the represented value
/// is `e^{log_scale} · mat`. Keeps exponentially growing cocycle products
/// representable.
#[derive(Debug, Clone, Copy)]
pub struct ScaledMat2 {
    pub mat: Mat2,
    pub log_scale: f64,
}

impl ScaledMat2 {
    pub fn identity() -> Self {
        Self {
            mat: Mat2::identity(),
            log_scale: 0.0,
        }
    }

    /// Left-multiply by a plain step and renormalize if any entry leaves
    /// the safe magnitude range. (The symmetric lower guard never fires for
    /// unimodular prefixes — their largest entry is ≥ 1/2 — but keeps the
    /// type safe for general use.)
    pub fn left_mul(&self, step: &Mat2) -> Self {
        let mut mat = step.mul(&self.mat);
        let mut log_scale = self.log_scale;
        let s = mat.max_abs_entry();
        if s > RESCALE_THRESHOLD || (s > 0.0 && s < 1.0 / RESCALE_THRESHOLD) {
            mat = mat.scale_real(1.0 / s);
            log_scale += s.ln();
        }
        Self { mat, log_scale }
    }

    /// Natural log of the spectral norm of the represented matrix.
    pub fn log_norm(&self) -> f64 {
        self.log_scale + log_operator_norm(&self.mat)
    }
}

/// Scaled prefix products `P_k = Φ(E, k, 0)` for `k = 0..=n`.
pub fn prefix_products(
    params: &DiracParams,
    e: C64,
    v: &PotentialSeq,
    n: usize,
) -> Result<Vec<ScaledMat2>> {
    check_site(v, n, "N")?;
    let mut out = Vec::with_capacity(n + 1);
    let mut p = ScaledMat2::identity();
    out.push(p);
    for k in 1..=n {
        p = p.left_mul(&step_matrix(params, e, v.value(k)));
        out.push(p);
    }
    Ok(out)
}

/// Natural log of `‖Φ(E, x, y)‖` from scaled prefixes: since the true
/// prefixes are unimodular, `P_y⁻¹ = e^{s_y}·adj(M_y)` and
/// `log‖Φ(x,y)‖ = s_x + s_y + log‖M_x · adj(M_y)‖`.
///
/// Accurate only while the prefixes themselves are modest: the product
/// `M_x·adj(M_y)` cancels down from magnitude `‖P_x‖·‖P_y‖` to
/// `‖Φ(x,y)‖`, so the absolute error in the log is about
/// `ε·‖P_x‖·‖P_y‖/‖Φ(x,y)‖`. Exhaustive sups over exponentially growing
/// windows therefore use forward sliding products instead (see
/// [`window_norm_log`]).
pub fn log_pair_norm(px: &ScaledMat2, py: &ScaledMat2) -> f64 {
    px.log_scale + py.log_scale + log_operator_norm(&px.mat.mul(&py.mat.adjugate()))
}

/// Strategy for the windowed sup-norm.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormMode {
    /// Exact pair enumeration up to 4096, prefix upper bound beyond.
    Auto,
    /// Exact O(N²) enumeration of every pair, any N.
    ExactPairs,
    /// Upper bound `max_x ‖Φ(x,0)‖ · max_y ‖Φ(y,0)⁻¹‖ = (max_x ‖Φ(x,0)‖)²`
    /// using the unimodular inverse-norm identity. Cheap (O(N)) but can
    /// badly over-estimate the growth of rotation-dominated cocycles; never
    /// used for exponent fits.
    PrefixBound,
}

const EXACT_PAIRS_LIMIT: usize = 4096;

/// Exhaustive pair sup via forward sliding products: for each starting
/// site `y` the products `Φ(x, y)` are accumulated directly (with scale
/// renormalization), so no cancellation occurs even in exponentially
/// growing regimes. Returns, for each `y`, the running maxima of
/// `ln‖Φ(x, y)‖` at the checkpoint window sizes, then folds them into
/// per-checkpoint sups. Cost is one 2×2 multiply and norm per pair.
///
/// `checkpoints` must be ascending; the result has one log-sup per
/// checkpoint, where entry `k` is `sup{ln‖Φ(x,y)‖ : 0 ≤ y < x ≤ N_k}`
/// combined with the trivial `‖I‖ = 1` floor. Deterministic regardless of
/// thread count (per-row results are folded in index order).
fn exact_pair_sups(steps: &[Mat2], checkpoints: &[usize]) -> Vec<f64> {
    let n = steps.len();
    let per_row: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|y| {
            let mut acc = ScaledMat2::identity();
            let mut best = f64::NEG_INFINITY;
            let mut out = vec![f64::NEG_INFINITY; checkpoints.len()];
            let mut ci = checkpoints.iter().position(|&c| c > y).unwrap_or(checkpoints.len());
            for (x, step) in steps.iter().enumerate().skip(y) {
                acc = acc.left_mul(step);
                let ln = acc.log_norm();
                if ln > best {
                    best = ln;
                }
                // x + 1 is the endpoint just reached.
                while ci < checkpoints.len() && checkpoints[ci] == x + 1 {
                    out[ci] = best;
                    ci += 1;
                }
            }
            for slot in out.iter_mut().skip(ci) {
                *slot = best;
            }
            out
        })
        .collect();
    checkpoints
        .iter()
        .enumerate()
        .map(|(k, &ck)| {
            per_row
                .iter()
                .take(ck)
                .map(|row| row[k])
                .fold(0.0f64, f64::max)
        })
        .collect()
}

fn step_sequence(params: &DiracParams, e: C64, v: &PotentialSeq, n: usize) -> Vec<Mat2> {
    (1..=n).map(|k| step_matrix(params, e, v.value(k))).collect()
}

/// Natural log of the windowed sup-norm
/// `L(N) = sup_{0 ≤ x, y ≤ N} ‖Φ(E, x, y)‖`.
pub fn window_norm_log(
    params: &DiracParams,
    e: C64,
    v: &PotentialSeq,
    n: usize,
    mode: NormMode,
) -> Result<f64> {
    check_site(v, n, "N")?;
    let exact = match mode {
        NormMode::ExactPairs => true,
        NormMode::PrefixBound => false,
        NormMode::Auto => n <= EXACT_PAIRS_LIMIT,
    };
    if exact {
        let steps = step_sequence(params, e, v, n);
        Ok(exact_pair_sups(&steps, &[n])[0])
    } else {
        // ‖Φ(x,y)‖ ≤ ‖Φ(x,0)‖·‖Φ(y,0)⁻¹‖ and the unimodular inverse has
        // the same norm, so twice the largest prefix log-norm bounds every
        // pair.
        let prefixes = prefix_products(params, e, v, n)?;
        let m = prefixes
            .iter()
            .map(ScaledMat2::log_norm)
            .fold(0.0f64, f64::max);
        Ok(2.0 * m)
    }
}

/// Windowed sup-norm `L(N)` (may be `inf` if it exceeds the double range;
/// use [`window_norm_log`] when that matters).
pub fn window_norm(params: &DiracParams, e: C64, v: &PotentialSeq, n: usize) -> Result<f64> {
    Ok(window_norm_log(params, e, v, n, NormMode::Auto)?.exp())
}

/// One row of a window-norm table.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct WindowNormEntry {
    pub n: usize,
    /// `L(N)` (can overflow to `inf` for exponential regimes).
    pub norm: f64,
    /// `ln L(N)`, always finite for finite windows.
    pub log_norm: f64,
}

/// Windowed sup-norms over a list of window sizes at one (params, E, V).
#[derive(Debug, Clone)]
pub struct WindowNormTable {
    pub entries: Vec<WindowNormEntry>,
    pub energy: f64,
    pub params: DiracParams,
    pub provenance: String,
}

/// Build the table over `n_list` (ascending). Exact modes share a single
/// O(N_max²) sliding pass with per-window checkpoints.
pub fn build_window_table(
    params: &DiracParams,
    e: f64,
    v: &PotentialSeq,
    n_list: &[usize],
    mode: NormMode,
) -> Result<WindowNormTable> {
    if n_list.is_empty() {
        return Err(CoreError::InvalidParam("empty window list".into()));
    }
    if n_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(CoreError::InvalidParam(
            "window sizes must be strictly increasing".into(),
        ));
    }
    let n_max = *n_list.last().unwrap();
    check_site(v, n_max, "N")?;
    let ec = C64::new(e, 0.0);
    let exact = match mode {
        NormMode::ExactPairs => true,
        NormMode::PrefixBound => false,
        NormMode::Auto => n_max <= EXACT_PAIRS_LIMIT,
    };
    let logs: Vec<f64> = if exact {
        let steps = step_sequence(params, ec, v, n_max);
        exact_pair_sups(&steps, n_list)
    } else {
        let prefixes = prefix_products(params, ec, v, n_max)?;
        let mut best = 0.0f64;
        let mut iter_n = n_list.iter();
        let mut next = iter_n.next();
        let mut out = Vec::with_capacity(n_list.len());
        for (k, p) in prefixes.iter().enumerate() {
            best = best.max(p.log_norm());
            if next == Some(&k) {
                out.push(2.0 * best);
                next = iter_n.next();
            }
        }
        out
    };
    let entries = n_list
        .iter()
        .zip(logs)
        .map(|(&n, log_norm)| WindowNormEntry {
            n,
            norm: log_norm.exp(),
            log_norm,
        })
        .collect();
    Ok(WindowNormTable {
        entries,
        energy: e,
        params: *params,
        provenance: v.provenance().to_string(),
    })
}

/// Power-law membership: true iff `L(N) ≤ C·N^α` (compared in log space so
/// exponential regimes cannot overflow the test).
pub fn membership(
    params: &DiracParams,
    e: f64,
    v: &PotentialSeq,
    alpha: f64,
    c_bound: f64,
    n: usize,
) -> Result<bool> {
    if alpha < 0.0 || !alpha.is_finite() {
        return Err(CoreError::InvalidParam(format!(
            "power-law exponent must be finite and ≥ 0, got {alpha}"
        )));
    }
    if c_bound <= 0.0 || !c_bound.is_finite() {
        return Err(CoreError::InvalidParam(format!(
            "power-law constant must be finite and > 0, got {c_bound}"
        )));
    }
    let lhs = window_norm_log(params, C64::new(e, 0.0), v, n, NormMode::Auto)?;
    Ok(lhs <= c_bound.ln() + alpha * (n.max(1) as f64).ln())
}

/// First-order step-difference matrix `B_δ(E, v)`: the single-step matrices
/// satisfy `T(E+δ, v) = T(E, v) − δ·B_δ(E, v)` exactly, with
/// `B_δ(E, v) = (δ/c²)·[[1,0],[0,0]] + (1/c)·[[2(E−v)/c, −1], [1, 0]]`.
pub fn step_difference(params: &DiracParams, e: C64, delta: C64, v: f64) -> Mat2 {
    let c = params.c;
    let c2 = c * c;
    Mat2::new(
        (delta + 2.0 * (e - v)) / c2,
        C64::new(-1.0 / c, 0.0),
        C64::new(1.0 / c, 0.0),
        C64::new(0.0, 0.0),
    )
}

/// Result of evaluating the energy-perturbation identity.
#[derive(Debug, Clone, Copy)]
pub struct PerturbedProduct {
    /// The perturbed cocycle `Φ(E+δ, x, y)`.
    pub matrix: Mat2,
    /// Max-entry residual of the identity, relative to the largest
    /// magnitude appearing on either side.
    pub residual: f64,
}

/// Evaluate both sides of the perturbation identity
/// `Φ(E+δ, x, y) = Φ(E, x, y) − δ·Σ_{j=y}^{x−1} Φ(E+δ, x, j+1)·B_δ(E, V(j+1))·Φ(E, j, y)`
/// and report the perturbed product together with the relative max-entry
/// residual. The `B_δ` factor sandwiched between `Φ(E+δ, x, j+1)` and
/// `Φ(E, j, y)` carries the potential of the step joining them — site
/// `j + 1` — which is what makes the sum telescope exactly.
pub fn perturbed_product(
    params: &DiracParams,
    e: C64,
    delta: C64,
    v: &PotentialSeq,
    x: usize,
    y: usize,
) -> Result<PerturbedProduct> {
    check_site(v, x, "x")?;
    check_site(v, y, "y")?;
    if x < y {
        return Err(CoreError::InvalidParam(format!(
            "perturbation identity requires x ≥ y, got x = {x}, y = {y}"
        )));
    }
    let e_pert = e + delta;
    // Suffix products at the perturbed energy: S_j = Φ(E+δ, x, j).
    let width = x - y;
    let mut suffix = vec![Mat2::identity(); width + 1];
    for (idx, j) in (y..x).rev().enumerate() {
        let _ = idx;
        let step = step_matrix(params, e_pert, v.value(j + 1));
        suffix[j - y] = suffix[j - y + 1].mul(&step);
    }
    let lhs = suffix[0];
    // Prefix products at the base energy: Q_j = Φ(E, j, y).
    let mut q = Mat2::identity();
    let mut sum = Mat2::new(
        C64::new(0.0, 0.0),
        C64::new(0.0, 0.0),
        C64::new(0.0, 0.0),
        C64::new(0.0, 0.0),
    );
    let mut max_term = 0.0f64;
    for j in y..x {
        let b = step_difference(params, e, delta, v.value(j + 1));
        let term = suffix[j + 1 - y].mul(&b).mul(&q);
        max_term = max_term.max(term.max_abs_entry());
        sum = sum.add(&term);
        q = step_matrix(params, e, v.value(j + 1)).mul(&q);
    }
    let base = q; // Φ(E, x, y)
    let rhs = base.sub(&sum.scale(delta));
    let num = lhs.sub(&rhs).max_abs_entry();
    let scale = lhs
        .max_abs_entry()
        .max(base.max_abs_entry())
        .max(delta.norm() * max_term)
        .max(f64::MIN_POSITIVE);
    Ok(PerturbedProduct {
        matrix: lhs,
        residual: num / scale,
    })
}

/// Explicit upper bound for perturbed cocycle norms over a window:
/// `‖Φ(E+δ, x, y)‖ ≤ L(N)·exp[(|δ|/c)·(|δ|/c + C₁)·L(N)·N]` for all
/// `0 ≤ x, y ≤ N`, where `C₁ = sup_j ‖[[2(E−V(j))/c, −1], [1, 0]]‖` over
/// the window (so that `|δ|·‖B_δ‖ ≤ (|δ|/c)(|δ|/c + C₁)`).
pub fn perturbation_bound(
    params: &DiracParams,
    e: C64,
    delta: C64,
    v: &PotentialSeq,
    n: usize,
) -> Result<f64> {
    let l = window_norm_log(params, e, v, n, NormMode::Auto)?.exp();
    let c = params.c;
    let mut c1 = 0.0f64;
    for j in 1..=n {
        let m = Mat2::new(
            2.0 * (e - v.value(j)) / c,
            C64::new(-1.0, 0.0),
            C64::new(1.0, 0.0),
            C64::new(0.0, 0.0),
        );
        c1 = c1.max(operator_norm(&m));
    }
    let dc = delta.norm() / c;
    Ok(l * (dc * (dc + c1) * l * n as f64).exp())
}

/// Ordinary least squares for `y ≈ intercept + slope·x`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct LineFit {
    pub slope: f64,
    #[allow(dead_code)]
    pub intercept: f64,
    /// Root-mean-square of the fit residuals.
    pub rms_residual: f64,
    /// Standard error of the slope (zero when fewer than 3 points).
    pub slope_stderr: f64,
}

pub(crate) fn linear_fit(xs: &[f64], ys: &[f64]) -> LineFit {
    let n = xs.len() as f64;
    let xbar = xs.iter().sum::<f64>() / n;
    let ybar = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - xbar) * (x - xbar)).sum();
    let sxy: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (x - xbar) * (y - ybar))
        .sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = ybar - slope * xbar;
    let ss_res: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| {
            let r = y - (intercept + slope * x);
            r * r
        })
        .sum();
    let rms_residual = (ss_res / n).sqrt();
    let slope_stderr = if xs.len() > 2 && sxx > 0.0 {
        (ss_res / (n - 2.0)).sqrt() / sxx.sqrt()
    } else {
        0.0
    };
    LineFit {
        slope,
        intercept,
        rms_residual,
        slope_stderr,
    }
}

/// RMS log-residual below which a power-law fit is considered adequate.
pub const POWER_LAW_RMS_LIMIT: f64 = 0.25;

/// Power-law fit of a window-norm table.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct GrowthFit {
    /// Least-squares slope of `ln L(N)` against `ln N`.
    pub alpha_hat: f64,
    /// RMS residual of that fit (in log units).
    pub residual: f64,
    /// Standard error of the slope — a rough confidence band.
    pub alpha_stderr: f64,
    /// Slope of `ln L(N)` against `N` (exponential-growth rate candidate).
    pub log_linear_rate: f64,
    /// RMS residual of the log-linear fit.
    pub log_linear_residual: f64,
    /// True when the power-law residual is below [`POWER_LAW_RMS_LIMIT`];
    /// false signals power-law fit failure (exponential growth).
    pub power_law_ok: bool,
    /// True when `L` was constant over the whole list (α̂ = 0 exactly,
    /// zero variance).
    pub degenerate: bool,
}

/// Fit `L(N) ≈ C·N^α` over a geometric window list (≥ 4 sizes). Pair sups
/// are always evaluated exactly: the prefix upper bound conflates prefix
/// growth with pair growth and is not a consistent exponent estimator for
/// rotation-dominated cocycles.
pub fn growth_exponent(
    params: &DiracParams,
    e: f64,
    v: &PotentialSeq,
    n_list: &[usize],
) -> Result<GrowthFit> {
    if n_list.len() < 4 {
        return Err(CoreError::InvalidParam(format!(
            "growth fit needs at least 4 window sizes, got {}",
            n_list.len()
        )));
    }
    if n_list.windows(2).any(|w| w[0] >= w[1]) || n_list[0] == 0 {
        return Err(CoreError::InvalidParam(
            "window sizes must be positive and strictly increasing".into(),
        ));
    }
    let ratios: Vec<f64> = n_list
        .windows(2)
        .map(|w| (w[1] as f64 / w[0] as f64).ln())
        .collect();
    let rmin = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
    let rmax = ratios.iter().cloned().fold(0.0f64, f64::max);
    if rmax - rmin > 0.02 * rmax {
        return Err(CoreError::InvalidParam(
            "window sizes must form a geometric progression".into(),
        ));
    }
    let table = build_window_table(params, e, v, n_list, NormMode::ExactPairs)?;
    Ok(fit_growth(&table))
}

/// Fit an already-computed table (see [`growth_exponent`]).
pub fn fit_growth(table: &WindowNormTable) -> GrowthFit {
    let xs_log: Vec<f64> = table.entries.iter().map(|e| (e.n as f64).ln()).collect();
    let xs_lin: Vec<f64> = table.entries.iter().map(|e| e.n as f64).collect();
    let ys: Vec<f64> = table.entries.iter().map(|e| e.log_norm).collect();
    let spread = ys.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        - ys.iter().cloned().fold(f64::INFINITY, f64::min);
    if spread <= 1e-12 {
        return GrowthFit {
            alpha_hat: 0.0,
            residual: 0.0,
            alpha_stderr: 0.0,
            log_linear_rate: 0.0,
            log_linear_residual: 0.0,
            power_law_ok: true,
            degenerate: true,
        };
    }
    let pl = linear_fit(&xs_log, &ys);
    let ll = linear_fit(&xs_lin, &ys);
    GrowthFit {
        alpha_hat: pl.slope,
        residual: pl.rms_residual,
        alpha_stderr: pl.slope_stderr,
        log_linear_rate: ll.slope,
        log_linear_residual: ll.rms_residual,
        power_law_ok: pl.rms_residual <= POWER_LAW_RMS_LIMIT,
        degenerate: false,
    }
}
