//! The six experiment commands.
//!
//! Each command validates its `task` section, runs the corresponding
//! library routine, writes exactly one output file (CSV or pretty JSON,
//! from a single thread), and returns a one-line summary for stdout.
//! Floats in CSV output are printed with 17 significant digits
//! (`{:.16e}`), so reruns with the same config and seed are
//! byte-identical; infinities print as `inf`. In JSON output non-finite
//! floats become `null`.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use dirac_core::algebra::C64;
use dirac_core::analysis::{
    bernoulli_bound_experiment, beta_estimate, bounded_energy_scan, critical_scan, lambda_window,
    EnergyClass, MomentCurve,
};
use dirac_core::continuum::{momentum_sq, CompactState};
use dirac_core::greens::abel_moments_green;
use dirac_core::lattice::{abel_moments_direct, build_operator, SpinorLattice};
use dirac_core::DiracParams;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::config::{ExperimentConfig, ModelConfig};
use crate::CliError;

/// CSV float format: 17 significant digits, enough to round-trip `f64`.
fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}

fn task_section<T: serde::de::DeserializeOwned>(cfg: &ExperimentConfig) -> Result<T, CliError> {
    serde_json::from_value(cfg.task.clone())
        .map_err(|e| CliError::Config(format!("task section: {e}")))
}

fn model_section(cfg: &ExperimentConfig) -> Result<&ModelConfig, CliError> {
    cfg.model
        .as_ref()
        .ok_or_else(|| CliError::Config("this command needs a model section".into()))
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text)
        .map_err(|e| CliError::Config(format!("cannot write {}: {e}", path.display())))
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Config(format!("serialize output: {e}")))?;
    text.push('\n');
    write_text(path, &text)
}

/// Uniform grid `start, start + step, …` covering `[start, stop]`.
fn float_grid(start: f64, stop: f64, step: f64) -> Result<Vec<f64>, CliError> {
    if !start.is_finite() || !stop.is_finite() || !(step > 0.0) || !step.is_finite() {
        return Err(CliError::Config(format!(
            "bad energy grid: start {start}, stop {stop}, step {step}"
        )));
    }
    if stop < start {
        return Err(CliError::Config(format!(
            "bad energy grid: stop {stop} is below start {start}"
        )));
    }
    let count = ((stop - start) / step).round() as usize;
    if count > 10_000_000 {
        return Err(CliError::Config(format!(
            "energy grid would have {count} points; refusing more than 10^7"
        )));
    }
    Ok((0..=count).map(|i| start + i as f64 * step).collect())
}

// ---------------------------------------------------------------------------
// moments
// ---------------------------------------------------------------------------

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct MomentsTask {
    /// First Abel time scale.
    t_start: f64,
    /// Ratio between consecutive time scales (default 2).
    #[serde(default = "default_t_factor")]
    t_factor: f64,
    /// Number of time scales.
    t_count: usize,
    /// Moment orders.
    q_list: Vec<f64>,
}

fn default_t_factor() -> f64 {
    2.0
}

/// Compute Abel-averaged moments along a geometric grid of time scales by
/// both routes (spectral/direct and resolvent/energy integral) and write
/// their comparison as CSV. Exits with code 2 if the worst relative gap
/// between the routes exceeds `tolerances.moment_rel`.
pub fn moments(cfg: &ExperimentConfig) -> Result<String, CliError> {
    let t: MomentsTask = task_section(cfg)?;
    if t.t_count == 0 {
        return Err(CliError::Config("t_count must be at least 1".into()));
    }
    if !(t.t_start > 0.0) || !(t.t_factor > 1.0) {
        return Err(CliError::Config(format!(
            "need t_start > 0 and t_factor > 1, got {} and {}",
            t.t_start, t.t_factor
        )));
    }
    if t.q_list.is_empty() {
        return Err(CliError::Config("q_list must not be empty".into()));
    }
    let model = model_section(cfg)?;
    let params = model.params()?;
    let v = model.potential()?;
    let sites = v.len();
    let op = build_operator(&params, &v)?;
    let psi = SpinorLattice::delta_plus(sites, 1)?;
    let t_list: Vec<f64> = (0..t.t_count)
        .map(|k| t.t_start * t.t_factor.powi(k as i32))
        .collect();

    let direct = abel_moments_direct(&op, &psi, &t_list, &t.q_list)?;
    let mut csv = String::from("t,q,a_direct,a_green,rel_diff\n");
    let mut worst = 0.0f64;
    for (ti, &tval) in t_list.iter().enumerate() {
        let green = abel_moments_green(&op, tval, &t.q_list)?;
        for (qi, &q) in t.q_list.iter().enumerate() {
            let d = direct.values[ti][qi];
            let g = green[qi].value;
            let rel = if d != 0.0 {
                ((g - d) / d).abs()
            } else {
                (g - d).abs()
            };
            worst = worst.max(rel);
            writeln!(
                csv,
                "{},{},{},{},{}",
                fmt(tval),
                fmt(q),
                fmt(d),
                fmt(g),
                fmt(rel)
            )
            .unwrap();
        }
    }

    let path = cfg.output.resolve("moments.csv")?;
    write_text(&path, &csv)?;
    let rows = t_list.len() * t.q_list.len();
    let gap = format!(
        "worst relative route gap {worst:.3e} (tolerance {:.3e})",
        cfg.tolerances.moment_rel
    );
    if worst > cfg.tolerances.moment_rel {
        return Err(CliError::Tolerance(format!(
            "wrote {rows} rows to {}; {gap}",
            path.display()
        )));
    }
    Ok(format!("wrote {rows} rows to {}; {gap}", path.display()))
}

// ---------------------------------------------------------------------------
// beta
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "snake_case")]
enum Route {
    #[default]
    Direct,
    Green,
}

impl Route {
    fn name(self) -> &'static str {
        match self {
            Route::Direct => "direct",
            Route::Green => "green",
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct BetaTask {
    /// A CSV file previously written by the `moments` command.
    input: PathBuf,
    /// Which moment column to fit (default: the direct route).
    #[serde(default)]
    route: Route,
}

const MOMENTS_HEADER: &str = "t,q,a_direct,a_green,rel_diff";

/// Fit windowed log-log slopes of a moment curve written by `moments` and
/// report the minimum slope per `q` as the growth-exponent estimate.
pub fn beta(cfg: &ExperimentConfig) -> Result<String, CliError> {
    let t: BetaTask = task_section(cfg)?;
    let text = std::fs::read_to_string(&t.input)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", t.input.display())))?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| CliError::Config(format!("{} is empty", t.input.display())))?;
    if header.trim() != MOMENTS_HEADER {
        return Err(CliError::Config(format!(
            "{} does not look like a moments CSV: header is {header:?}, expected {MOMENTS_HEADER:?}",
            t.input.display()
        )));
    }

    // Group samples by q, preserving first-appearance order.
    let mut curves: Vec<(f64, Vec<(f64, f64)>)> = Vec::new();
    for (i, line) in lines.enumerate() {
        let lineno = i + 2;
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 5 {
            return Err(CliError::Config(format!(
                "{} line {lineno}: expected 5 columns, found {}",
                t.input.display(),
                cols.len()
            )));
        }
        let field = |idx: usize, name: &str| -> Result<f64, CliError> {
            cols[idx].trim().parse::<f64>().map_err(|_| {
                CliError::Config(format!(
                    "{} line {lineno}: cannot parse {name} value {:?}",
                    t.input.display(),
                    cols[idx]
                ))
            })
        };
        let tval = field(0, "t")?;
        let q = field(1, "q")?;
        let a = match t.route {
            Route::Direct => field(2, "a_direct")?,
            Route::Green => field(3, "a_green")?,
        };
        match curves.iter_mut().find(|(cq, _)| *cq == q) {
            Some((_, samples)) => samples.push((tval, a)),
            None => curves.push((q, vec![(tval, a)])),
        }
    }

    let mut estimates = Vec::new();
    for (q, mut samples) in curves {
        samples.sort_by(|a, b| a.0.total_cmp(&b.0));
        let curve = MomentCurve {
            q,
            samples,
            provenance: format!("{}:{}", t.input.display(), t.route.name()),
        };
        let est = beta_estimate(&curve)?;
        estimates.push(json!({
            "q": q,
            "beta_hat": est.beta_hat,
            "residual": est.residual,
            "window_slopes": est.window_slopes,
        }));
    }
    let count = estimates.len();

    let out = json!({
        "label": "indicative: minimum windowed slope of log A(T) against log T, a proxy for the lower growth exponent, not a limit",
        "input": t.input.display().to_string(),
        "route": t.route.name(),
        "estimates": estimates,
    });
    let path = cfg.output.resolve("beta.json")?;
    write_json(&path, &out)?;
    Ok(format!(
        "wrote {count} exponent estimate(s) to {}",
        path.display()
    ))
}

// ---------------------------------------------------------------------------
// transfer-scan
// ---------------------------------------------------------------------------

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct TransferScanTask {
    e_start: f64,
    e_stop: f64,
    e_step: f64,
    /// Window sizes for the sup-norm table (need at least 4, roughly
    /// geometric, for the growth fit).
    n_list: Vec<usize>,
}

/// Scan an energy grid, classify window-norm growth at each energy
/// (bounded / power_law / exponential), and write one CSV row per
/// (energy, window size).
pub fn transfer_scan(cfg: &ExperimentConfig) -> Result<String, CliError> {
    let t: TransferScanTask = task_section(cfg)?;
    let grid = float_grid(t.e_start, t.e_stop, t.e_step)?;
    let model = model_section(cfg)?;
    let params = model.params()?;
    let v = model.potential()?;
    let records = bounded_energy_scan(&params, &v, &grid, &t.n_list)?;

    let mut csv = String::from("e,n,log_window_sup,window_sup,alpha_hat,class\n");
    let mut counts = [0usize; 3];
    for r in &records {
        let (class, slot) = match r.class {
            EnergyClass::Bounded => ("bounded", 0),
            EnergyClass::PowerLaw => ("power_law", 1),
            EnergyClass::Exponential => ("exponential", 2),
        };
        counts[slot] += 1;
        for entry in &r.norms {
            writeln!(
                csv,
                "{},{},{},{},{},{}",
                fmt(r.energy),
                entry.n,
                fmt(entry.log_norm),
                fmt(entry.norm),
                fmt(r.alpha_hat),
                class
            )
            .unwrap();
        }
    }

    let path = cfg.output.resolve("transfer_scan.csv")?;
    write_text(&path, &csv)?;
    Ok(format!(
        "scanned {} energies ({} bounded, {} power-law, {} exponential); wrote {} rows to {}",
        records.len(),
        counts[0],
        counts[1],
        counts[2],
        records.len() * t.n_list.len(),
        path.display()
    ))
}

// ---------------------------------------------------------------------------
// critical
// ---------------------------------------------------------------------------

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CriticalTask {
    /// Coupling of the two-valued (0, lambda_c) unit-cell model.
    lambda_c: f64,
    e_start: f64,
    e_stop: f64,
    e_step: f64,
    /// Oscillation level for the reported coupling windows (default 1).
    #[serde(default = "default_window_n")]
    window_n: u32,
    /// Quadrature samples for the admissibility spot checks.
    #[serde(default = "default_state_samples")]
    state_samples: usize,
}

fn default_window_n() -> u32 {
    1
}

fn default_state_samples() -> usize {
    2048
}

/// Scan for critical energies of the continuum unit-cell model (both
/// half-cell transfer blocks elliptic with commuting rotations), report
/// the coupling windows that keep a full oscillation level inside one
/// cell, and spot-check admissibility of probe states at each critical
/// energy found.
pub fn critical(cfg: &ExperimentConfig) -> Result<String, CliError> {
    let t: CriticalTask = task_section(cfg)?;
    let model = model_section(cfg)?;
    let params = model.params()?;
    let grid = float_grid(t.e_start, t.e_stop, t.e_step)?;
    let records = critical_scan(&params, t.lambda_c, &grid)?;
    let ((lo0, hi0), (lo1, hi1)) = lambda_window(&params, t.window_n)?;

    let spot_checks = records
        .iter()
        .map(|r| spot_check(&params, r.e0, t.state_samples))
        .collect::<Result<Vec<_>, CliError>>()?;

    let out = json!({
        "m": model.m,
        "c": model.c,
        "lambda_c": t.lambda_c,
        "records": records,
        // Unbounded endpoints serialize as null.
        "coupling_windows": {
            "n": t.window_n,
            "zero_level": [lo0, hi0],
            "full_level": [lo1, hi1],
        },
        "spot_checks": spot_checks,
    });
    let path = cfg.output.resolve("critical.json")?;
    write_json(&path, &out)?;
    Ok(format!(
        "found {} critical energies in [{}, {}]; wrote {}",
        records.len(),
        t.e_start,
        t.e_stop,
        path.display()
    ))
}

/// Admissibility probes at one critical energy: a cosine state in the
/// upper component, and — when the free momentum sits on an integer
/// oscillation level `nπ` — the interference state
/// `(i sin(nπx), −cos(nπx))`, whose pairings against both fundamental
/// solutions cancel in the massless model.
fn spot_check(
    params: &DiracParams,
    e0: f64,
    samples: usize,
) -> Result<serde_json::Value, CliError> {
    let ksq = momentum_sq(params, e0, 0.0);
    if !(ksq > 0.0) {
        return Ok(json!({
            "e0": e0,
            "note": "energy inside the free gap: no oscillatory probe",
            "upper_companion": null,
            "interference": null,
        }));
    }
    let ratio = ksq.sqrt() / PI;
    let level = ratio.round();
    let on_integer_level = level >= 1.0 && (ratio - level).abs() <= 1e-9;
    let k = if on_integer_level { level } else { 1.0 };

    let upper = CompactState::from_fn(
        1.0,
        samples,
        move |x| C64::new((k * PI * x).cos(), 0.0),
        |_| C64::new(0.0, 0.0),
    )?;
    let upper_report = dirac_core::continuum::admissibility(params, e0, &upper)?;

    let interference = if on_integer_level {
        let state = CompactState::from_fn(
            1.0,
            samples,
            move |x| C64::new(0.0, (level * PI * x).sin()),
            move |x| C64::new(-(level * PI * x).cos(), 0.0),
        )?;
        Some(dirac_core::continuum::admissibility(params, e0, &state)?)
    } else {
        None
    };

    Ok(json!({
        "e0": e0,
        "probe_frequency": k,
        "upper_companion": upper_report,
        "interference": interference,
    }))
}

// ---------------------------------------------------------------------------
// bernoulli
// ---------------------------------------------------------------------------

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct BernoulliTask {
    /// Coupling of the two-valued (0, lambda_c) random word model.
    lambda_c: f64,
    /// Center of the shrinking energy window.
    e0: f64,
    /// Window width exponent: width = N^(-window_exp).
    window_exp: f64,
    /// Word lengths, increasing.
    n_list: Vec<usize>,
    /// Monte-Carlo trials per word length.
    trials: usize,
    /// Probability of the zero letter.
    p: f64,
    seed: u64,
    /// Sup-norm threshold C; omit to calibrate it from the first word
    /// length (twice the 99th-percentile sup).
    #[serde(default)]
    c_test: Option<f64>,
}

/// Monte-Carlo check that the fraction of random words whose windowed
/// transfer sup-norm exceeds a threshold does not grow with the word
/// length. Writes a CSV with `#` metadata lines, one data row per word
/// length, and Wilson 95% confidence bounds; exits with code 2 if the
/// fractions rise beyond the one-sided confidence band.
pub fn bernoulli(cfg: &ExperimentConfig) -> Result<String, CliError> {
    let t: BernoulliTask = task_section(cfg)?;
    let model = model_section(cfg)?;
    let params = model.params()?;
    let experiment = bernoulli_bound_experiment(
        &params,
        t.lambda_c,
        t.e0,
        t.window_exp,
        &t.n_list,
        t.trials,
        t.seed,
        t.p,
        t.c_test,
    )?;

    let mut csv = String::new();
    writeln!(
        csv,
        "# e0={} lambda_c={} window_exp={} p={} seed={} trials={}",
        fmt(t.e0),
        fmt(t.lambda_c),
        fmt(t.window_exp),
        fmt(t.p),
        t.seed,
        t.trials
    )
    .unwrap();
    writeln!(
        csv,
        "# c_test={} trend_ok={}",
        fmt(experiment.c_test),
        experiment.trend_ok
    )
    .unwrap();
    csv.push_str("n,failure_fraction,ci_low,ci_high,trials\n");
    for row in &experiment.rows {
        writeln!(
            csv,
            "{},{},{},{},{}",
            row.n,
            fmt(row.failure_fraction),
            fmt(row.ci_low),
            fmt(row.ci_high),
            row.trials
        )
        .unwrap();
    }

    let path = cfg.output.resolve("bernoulli.csv")?;
    write_text(&path, &csv)?;
    if !experiment.trend_ok {
        return Err(CliError::Tolerance(format!(
            "wrote {} rows to {}; failure fractions rise with the word length beyond the 95% band",
            experiment.rows.len(),
            path.display()
        )));
    }
    Ok(format!(
        "wrote {} rows to {}; failure fractions nonincreasing (threshold C = {:.6})",
        experiment.rows.len(),
        path.display(),
        experiment.c_test
    ))
}

// ---------------------------------------------------------------------------
// admissibility
// ---------------------------------------------------------------------------

/// Compactly supported probe states on `[0, support_end]`.
#[derive(Debug, Clone, Copy, Deserialize, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum StateConfig {
    /// `(i sin(nπx), −cos(nπx))`: the combination whose pairings against
    /// both fundamental solutions cancel at matched massless energies.
    Interference {
        #[serde(default = "one_u32")]
        n: u32,
    },
    /// `(cos(nπx), 0)`.
    CosinePlus {
        #[serde(default = "one_u32")]
        n: u32,
    },
    /// `(0, cos(nπx))`.
    CosineMinus {
        #[serde(default = "one_u32")]
        n: u32,
    },
    /// Indicator of `[from, to]` in the upper component.
    IndicatorPlus { from: f64, to: f64 },
}

fn one_u32() -> u32 {
    1
}

fn build_state(
    s: &StateConfig,
    support_end: f64,
    samples: usize,
) -> Result<CompactState, CliError> {
    let zero = |_: f64| C64::new(0.0, 0.0);
    let state = match *s {
        StateConfig::Interference { n } => {
            let w = n as f64 * PI;
            CompactState::from_fn(
                support_end,
                samples,
                move |x| C64::new(0.0, (w * x).sin()),
                move |x| C64::new(-(w * x).cos(), 0.0),
            )?
        }
        StateConfig::CosinePlus { n } => {
            let w = n as f64 * PI;
            CompactState::from_fn(support_end, samples, move |x| C64::new((w * x).cos(), 0.0), zero)?
        }
        StateConfig::CosineMinus { n } => {
            let w = n as f64 * PI;
            CompactState::from_fn(support_end, samples, zero, move |x| C64::new((w * x).cos(), 0.0))?
        }
        StateConfig::IndicatorPlus { from, to } => {
            if !(0.0 <= from && from < to && to <= support_end) {
                return Err(CliError::Config(format!(
                    "indicator needs 0 <= from < to <= support_end, got [{from}, {to}] with support_end {support_end}"
                )));
            }
            CompactState::from_fn(
                support_end,
                samples,
                move |x| {
                    if (from..=to).contains(&x) {
                        C64::new(1.0, 0.0)
                    } else {
                        C64::new(0.0, 0.0)
                    }
                },
                zero,
            )?
        }
    };
    Ok(state)
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct AdmissibilityTask {
    energy: f64,
    state: StateConfig,
    #[serde(default = "default_state_samples")]
    samples: usize,
    #[serde(default = "default_support_end")]
    support_end: f64,
}

fn default_support_end() -> f64 {
    1.0
}

/// Evaluate the admissibility pairings of one compactly supported state at
/// one energy and write the full report as JSON. The verdict does not
/// affect the exit code: both outcomes are valid results.
pub fn admissibility(cfg: &ExperimentConfig) -> Result<String, CliError> {
    let t: AdmissibilityTask = task_section(cfg)?;
    let model = model_section(cfg)?;
    let params = model.params()?;
    let state = build_state(&t.state, t.support_end, t.samples)?;
    let report = dirac_core::continuum::admissibility(&params, t.energy, &state)?;
    let verdict = if report.admissible {
        "admissible"
    } else {
        "inadmissible"
    };

    let out = json!({
        "m": model.m,
        "c": model.c,
        "energy": t.energy,
        "state": t.state,
        "samples": t.samples,
        "support_end": t.support_end,
        "report": report,
    });
    let path = cfg.output.resolve("admissibility.json")?;
    write_json(&path, &out)?;
    Ok(format!(
        "state is {verdict} at E = {}; wrote {}",
        t.energy,
        path.display()
    ))
}
