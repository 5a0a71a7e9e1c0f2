//! Experiment configuration: one JSON file, optionally patched by
//! `--set key=value` overrides, deserialized into typed sections.
//!
//! The file has four top-level sections: `model` (operator parameters and
//! the potential generator), `task` (command-specific parameters,
//! validated by the command that runs), `output` (directory and optional
//! file-name override), and `tolerances`. Unknown keys are rejected so
//! that typos fail loudly instead of silently running defaults.

use std::path::{Path, PathBuf};

use dirac_core::potentials::{
    self, bernoulli_two_valued, constant, sturmian, thue_morse, two_valued, PotentialSeq,
};
use dirac_core::DiracParams;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::CliError;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Operator parameters; optional because `beta` runs on a file alone.
    #[serde(default)]
    pub model: Option<ModelConfig>,
    /// Command-specific section, deserialized by the command itself.
    #[serde(default)]
    pub task: Value,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub tolerances: Tolerances,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub m: f64,
    pub c: f64,
    #[serde(default)]
    pub potential: Option<PotentialConfig>,
}

impl ModelConfig {
    pub fn params(&self) -> Result<DiracParams, CliError> {
        Ok(DiracParams::new(self.m, self.c)?)
    }

    pub fn potential(&self) -> Result<PotentialSeq, CliError> {
        let spec = self.potential.as_ref().ok_or_else(|| {
            CliError::Config("this command needs a model.potential section".into())
        })?;
        spec.build()
    }
}

/// Reproducible potential generators, tagged by `family`.
#[derive(Debug, Deserialize, Serialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum PotentialConfig {
    /// `V ≡ value` on `length` sites.
    Constant { value: f64, length: usize },
    /// Explicit two-valued pattern: `pattern[i] = 0` picks `a`, else `b`.
    TwoValued { a: f64, b: f64, pattern: Vec<u8> },
    /// I.i.d. two-valued draw with `P(a) = p`, seeded.
    Bernoulli {
        a: f64,
        b: f64,
        p: f64,
        seed: u64,
        length: usize,
    },
    /// The substitution sequence fixed by a→ab, b→ba.
    ThueMorse { a: f64, b: f64, length: usize },
    /// Circle-rotation sequence `λ·χ_[1−ρ,1)(nρ + θ mod 1)`.
    Sturmian {
        lambda: f64,
        rho: f64,
        theta: f64,
        length: usize,
    },
    /// Whitespace/line-separated values loaded from a text file.
    File { path: PathBuf },
}

impl PotentialConfig {
    pub fn build(&self) -> Result<PotentialSeq, CliError> {
        let v = match self {
            PotentialConfig::Constant { value, length } => constant(*value, *length)?,
            PotentialConfig::TwoValued { a, b, pattern } => two_valued(*a, *b, pattern)?,
            PotentialConfig::Bernoulli {
                a,
                b,
                p,
                seed,
                length,
            } => bernoulli_two_valued(*a, *b, *p, *seed, *length)?,
            PotentialConfig::ThueMorse { a, b, length } => thue_morse(*a, *b, *length)?,
            PotentialConfig::Sturmian {
                lambda,
                rho,
                theta,
                length,
            } => sturmian(*lambda, *rho, *theta, *length)?,
            PotentialConfig::File { path } => potentials::load_potential_file(path)?,
        };
        Ok(v)
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    /// Directory the output file is written into (created if absent).
    #[serde(default = "default_dir")]
    pub dir: PathBuf,
    /// Output file name; each command has a default (see docs/formats.md).
    #[serde(default)]
    pub file: Option<String>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: default_dir(),
            file: None,
        }
    }
}

impl OutputConfig {
    /// Resolve the output path for a command's default file name and make
    /// sure the directory exists.
    pub fn resolve(&self, default_name: &str) -> Result<PathBuf, CliError> {
        std::fs::create_dir_all(&self.dir)
            .map_err(|e| CliError::Config(format!("output dir {:?}: {e}", self.dir)))?;
        let name = self.file.as_deref().unwrap_or(default_name);
        Ok(self.dir.join(name))
    }
}

fn default_dir() -> PathBuf {
    PathBuf::from(".")
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// `moments`: maximum allowed relative gap between the two routes.
    pub moment_rel: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { moment_rel: 0.02 }
    }
}

/// Load the JSON config, apply `--set` overrides, deserialize.
pub fn load(path: &Path, sets: &[String]) -> Result<ExperimentConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("config {path:?}: {e}")))?;
    let mut value: Value = serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("config {path:?} is not valid JSON: {e}")))?;
    for s in sets {
        apply_set(&mut value, s)?;
    }
    serde_json::from_value(value).map_err(|e| CliError::Config(format!("config {path:?}: {e}")))
}

/// Apply one `key.path=value` override onto the JSON tree, creating
/// intermediate objects as needed. The value is parsed as JSON when it
/// parses (numbers, booleans, arrays, null, quoted strings), and taken as
/// a bare string otherwise.
fn apply_set(root: &mut Value, spec: &str) -> Result<(), CliError> {
    let (path, raw) = spec
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("--set needs KEY=VALUE, got {spec:?}")))?;
    if path.is_empty() {
        return Err(CliError::Config(format!("--set has an empty key: {spec:?}")));
    }
    let new = serde_json::from_str::<Value>(raw).unwrap_or(Value::String(raw.to_string()));
    let mut node = root;
    let mut segments = path.split('.').peekable();
    while let Some(seg) = segments.next() {
        if !node.is_object() {
            return Err(CliError::Config(format!(
                "--set {path}: {seg:?} is not inside a JSON object"
            )));
        }
        let map = node.as_object_mut().expect("checked is_object");
        if segments.peek().is_none() {
            map.insert(seg.to_string(), new);
            return Ok(());
        }
        node = map
            .entry(seg.to_string())
            .or_insert_with(|| Value::Object(serde_json::Map::new()));
    }
    unreachable!("split('.') yields at least one segment")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn set_overrides_parse_json_and_fall_back_to_strings() {
        let mut v: Value = serde_json::json!({"model": {"m": 0.0}});
        apply_set(&mut v, "model.m=1.5").unwrap();
        apply_set(&mut v, "model.potential.family=bernoulli").unwrap();
        apply_set(&mut v, "task.n_list=[8,16]").unwrap();
        assert_eq!(v["model"]["m"], serde_json::json!(1.5));
        assert_eq!(
            v["model"]["potential"]["family"],
            serde_json::json!("bernoulli"),
            "bare words should land as strings"
        );
        assert_eq!(v["task"]["n_list"], serde_json::json!([8, 16]));
        let err = apply_set(&mut v, "no-equals").unwrap_err();
        assert!(err.message().contains("KEY=VALUE"));
        let err = apply_set(&mut v, "model.m.deeper=1").unwrap_err();
        assert!(
            err.message().contains("not inside a JSON object"),
            "descending through a scalar should fail loudly"
        );
    }

    #[test]
    fn typed_config_rejects_unknown_keys() {
        let good: Result<ExperimentConfig, _> = serde_json::from_value(serde_json::json!({
            "model": {"m": 0.0, "c": 1.0},
            "task": {"anything": 1},
            "output": {"dir": "out"}
        }));
        assert!(good.is_ok(), "task stays free-form: {good:?}");
        let bad: Result<ExperimentConfig, _> = serde_json::from_value(serde_json::json!({
            "model": {"m": 0.0, "c": 1.0, "mass": 2.0}
        }));
        assert!(bad.is_err(), "typo'd model keys must be rejected");
    }
}
