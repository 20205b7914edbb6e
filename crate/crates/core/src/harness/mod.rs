//! Batch experiment runner.
//!
//! An [`ExperimentConfig`] names an experiment, its parameters, an output
//! format and budgets. [`execute`] computes the whole artifact in memory;
//! [`run`] additionally writes it atomically and maps failures to exit codes.
//!
//! Configs come either as flat `key=value` text (one pair per line or per
//! argument, `#` starts a comment) or as JSON:
//!
//! ```text
//! experiment=glukhov
//! p=2
//! nmax=8
//! system=both
//! budget.cells=16777216
//! ```
//!
//! ```json
//! {"experiment": "glukhov", "params": {"p": 2, "nmax": 8, "system": "both"},
//!  "format": "csv", "seed": 0, "budgets": {"cells": 16777216}}
//! ```

mod experiments;
mod table;

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use table::{ColumnKind, Table};

/// Exit statuses of [`run`].
pub mod exit {
    pub const OK: i32 = 0;
    pub const IO: i32 = 1;
    pub const CONFIG: i32 = 2;
    pub const BUDGET: i32 = 3;
    pub const ACCEPTANCE: i32 = 4;
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Kernels,
    Transforms,
    Glukhov,
    StrongMeans,
    Approximation,
    Counterexample,
    Acceptance,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 7] = [
        ExperimentKind::Kernels,
        ExperimentKind::Transforms,
        ExperimentKind::Glukhov,
        ExperimentKind::StrongMeans,
        ExperimentKind::Approximation,
        ExperimentKind::Counterexample,
        ExperimentKind::Acceptance,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Kernels => "kernels",
            ExperimentKind::Transforms => "transforms",
            ExperimentKind::Glukhov => "glukhov",
            ExperimentKind::StrongMeans => "strong-means",
            ExperimentKind::Approximation => "approximation",
            ExperimentKind::Counterexample => "counterexample",
            ExperimentKind::Acceptance => "acceptance",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentKind {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, HarnessError> {
        ExperimentKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| HarnessError::Config(format!("unknown experiment `{s}`")))
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, HarnessError> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            _ => Err(HarnessError::Config(format!("unknown format `{s}` (csv or json)"))),
        }
    }
}

/// Resource caps checked before any heavy work starts.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Budgets {
    /// Largest dyadic resolution any grid may use.
    pub resolution: u32,
    /// Largest number of cells any grid or cell sweep may touch.
    pub cells: u64,
    /// Rough cap on working memory, in MiB.
    pub memory_mb: u64,
}

impl Default for Budgets {
    fn default() -> Self {
        Budgets {
            resolution: 24,
            cells: 1 << 24,
            memory_mb: 2048,
        }
    }
}

impl Budgets {
    fn validate(&self) -> Result<(), HarnessError> {
        if self.resolution == 0 || self.cells == 0 || self.memory_mb == 0 {
            return Err(HarnessError::Config("budgets must be positive".into()));
        }
        Ok(())
    }

    pub(crate) fn check_resolution(&self, what: &str, resolution: u32) -> Result<(), HarnessError> {
        if resolution > self.resolution {
            return Err(HarnessError::Budget(format!(
                "{what}: resolution {resolution} exceeds budget {}",
                self.resolution
            )));
        }
        Ok(())
    }

    /// `cells` cells of `bytes_per_cell` bytes each.
    pub(crate) fn check_cells(&self, what: &str, cells: u128, bytes_per_cell: u128) -> Result<(), HarnessError> {
        if cells > self.cells as u128 {
            return Err(HarnessError::Budget(format!(
                "{what}: {cells} cells exceed budget {}",
                self.cells
            )));
        }
        let bytes = cells.saturating_mul(bytes_per_cell);
        if bytes > (self.memory_mb as u128) << 20 {
            return Err(HarnessError::Budget(format!(
                "{what}: about {} MiB exceeds memory budget {} MiB",
                bytes >> 20,
                self.memory_mb
            )));
        }
        Ok(())
    }

    pub(crate) fn cells_log2(&self) -> u32 {
        63 - self.cells.leading_zeros()
    }
}

/// One experiment invocation.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    /// Kind-specific parameters, as written.
    pub params: BTreeMap<String, String>,
    pub format: OutputFormat,
    /// Destination file; standard output when absent.
    pub out: Option<PathBuf>,
    pub seed: u64,
    /// Worker cap; rayon's default when absent.
    pub threads: Option<usize>,
    pub budgets: Budgets,
}

impl ExperimentConfig {
    pub fn new(experiment: ExperimentKind) -> Self {
        ExperimentConfig {
            experiment,
            params: BTreeMap::new(),
            format: OutputFormat::Csv,
            out: None,
            seed: 0,
            threads: None,
            budgets: Budgets::default(),
        }
    }

    pub fn param(mut self, key: &str, value: impl ToString) -> Self {
        self.params.insert(key.to_string(), value.to_string());
        self
    }

    /// Parses `key=value` pairs; `experiment` must be among them.
    pub fn from_pairs<'a>(pairs: impl IntoIterator<Item = &'a str>) -> Result<Self, HarnessError> {
        let mut builder = Builder::default();
        for pair in pairs {
            builder.pair(pair)?;
        }
        builder.finish()
    }

    /// Flat text: one `key=value` per line, blank lines and `#` comments ignored.
    pub fn from_kv_text(text: &str) -> Result<Self, HarnessError> {
        let lines = text
            .lines()
            .map(|l| l.split('#').next().unwrap_or("").trim())
            .filter(|l| !l.is_empty());
        Self::from_pairs(lines)
    }

    pub fn from_json(text: &str) -> Result<Self, HarnessError> {
        let file: ConfigFile =
            serde_json::from_str(text).map_err(|e| HarnessError::Config(format!("config JSON: {e}")))?;
        let mut params = BTreeMap::new();
        for (k, v) in file.params {
            params.insert(k.clone(), json_scalar(&k, &v)?);
        }
        let cfg = ExperimentConfig {
            experiment: file.experiment.parse()?,
            params,
            format: file.format.as_deref().map(str::parse).transpose()?.unwrap_or_default(),
            out: file.out.map(PathBuf::from),
            seed: file.seed.unwrap_or(0),
            threads: file.threads,
            budgets: file.budgets.unwrap_or_default(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// JSON when the first non-blank character is `{`, flat text otherwise.
    pub fn from_text(text: &str) -> Result<Self, HarnessError> {
        if text.trim_start().starts_with('{') {
            Self::from_json(text)
        } else {
            Self::from_kv_text(text)
        }
    }

    pub fn from_path(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_text(&text)
    }

    /// Applies one `key=value` override.
    pub fn set(&mut self, pair: &str) -> Result<(), HarnessError> {
        let (key, value) = split_pair(pair)?;
        apply(self, key, value)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        self.budgets.validate()?;
        if self.threads == Some(0) {
            return Err(HarnessError::Config("threads must be positive".into()));
        }
        Ok(())
    }

    /// Hex SHA-256 of the canonical JSON of everything that affects the
    /// output bytes (destination and thread count excluded).
    pub fn digest(&self) -> String {
        let canonical = serde_json::to_string(&self.canonical()).expect("config serializes");
        let hash = Sha256::digest(canonical.as_bytes());
        hash.iter().map(|b| format!("{b:02x}")).collect()
    }

    /// The fields covered by [`Self::digest`].
    pub fn canonical(&self) -> serde_json::Value {
        serde_json::json!({
            "experiment": self.experiment,
            "params": self.params,
            "format": self.format,
            "seed": self.seed,
            "budgets": self.budgets,
        })
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    experiment: String,
    #[serde(default)]
    params: BTreeMap<String, serde_json::Value>,
    format: Option<String>,
    out: Option<String>,
    seed: Option<u64>,
    threads: Option<usize>,
    budgets: Option<Budgets>,
}

fn json_scalar(key: &str, v: &serde_json::Value) -> Result<String, HarnessError> {
    use serde_json::Value;
    match v {
        Value::String(s) => Ok(s.clone()),
        Value::Number(n) => Ok(n.to_string()),
        Value::Bool(b) => Ok(b.to_string()),
        Value::Array(items) => items
            .iter()
            .map(|i| match i {
                Value::Array(_) | Value::Object(_) => {
                    Err(HarnessError::Config(format!("param `{key}`: nested arrays are not allowed")))
                }
                other => json_scalar(key, other),
            })
            .collect::<Result<Vec<_>, _>>()
            .map(|v| v.join(",")),
        Value::Null | Value::Object(_) => Err(HarnessError::Config(format!(
            "param `{key}` must be a string, number, boolean or list"
        ))),
    }
}

fn split_pair(pair: &str) -> Result<(&str, &str), HarnessError> {
    let (k, v) = pair
        .split_once('=')
        .ok_or_else(|| HarnessError::Config(format!("expected key=value, found `{pair}`")))?;
    let (k, v) = (k.trim(), v.trim());
    if k.is_empty() {
        return Err(HarnessError::Config(format!("empty key in `{pair}`")));
    }
    Ok((k, v))
}

fn parse_num<T: FromStr>(key: &str, value: &str) -> Result<T, HarnessError> {
    value
        .parse()
        .map_err(|_| HarnessError::Config(format!("`{key}`: cannot parse `{value}`")))
}

fn apply(cfg: &mut ExperimentConfig, key: &str, value: &str) -> Result<(), HarnessError> {
    match key {
        "experiment" => cfg.experiment = value.parse()?,
        "format" => cfg.format = value.parse()?,
        "out" => cfg.out = Some(PathBuf::from(value)),
        "seed" => cfg.seed = parse_num(key, value)?,
        "threads" => cfg.threads = Some(parse_num(key, value)?),
        "budget.resolution" => cfg.budgets.resolution = parse_num(key, value)?,
        "budget.cells" => cfg.budgets.cells = parse_num(key, value)?,
        "budget.memory_mb" => cfg.budgets.memory_mb = parse_num(key, value)?,
        k if k.starts_with("budget.") => {
            return Err(HarnessError::Config(format!("unknown budget `{k}`")));
        }
        _ => {
            cfg.params.insert(key.to_string(), value.to_string());
        }
    }
    Ok(())
}

#[derive(Default)]
struct Builder {
    experiment: Option<ExperimentKind>,
    rest: Vec<(String, String)>,
}

impl Builder {
    fn pair(&mut self, pair: &str) -> Result<(), HarnessError> {
        let (k, v) = split_pair(pair)?;
        if k == "experiment" {
            self.experiment = Some(v.parse()?);
        } else {
            self.rest.push((k.to_string(), v.to_string()));
        }
        Ok(())
    }

    fn finish(self) -> Result<ExperimentConfig, HarnessError> {
        let kind = self
            .experiment
            .ok_or_else(|| HarnessError::Config("missing `experiment`".into()))?;
        let mut cfg = ExperimentConfig::new(kind);
        for (k, v) in &self.rest {
            apply(&mut cfg, k, v)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Why a run did not produce an artifact.
#[derive(Debug)]
pub enum HarnessError {
    Config(String),
    Budget(String),
    Io(String),
}

impl HarnessError {
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) => exit::CONFIG,
            HarnessError::Budget(_) => exit::BUDGET,
            HarnessError::Io(_) => exit::IO,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            HarnessError::Config(_) => "config",
            HarnessError::Budget(_) => "budget",
            HarnessError::Io(_) => "io",
        }
    }

    fn message(&self) -> &str {
        match self {
            HarnessError::Config(m) | HarnessError::Budget(m) | HarnessError::Io(m) => m,
        }
    }

    /// Single-line JSON `{"error": kind, "exit_code": n, "message": ...}`.
    pub fn to_json(&self) -> String {
        serde_json::json!({
            "error": self.kind(),
            "exit_code": self.exit_code(),
            "message": self.message(),
        })
        .to_string()
    }
}

impl fmt::Display for HarnessError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} error: {}", self.kind(), self.message())
    }
}

impl std::error::Error for HarnessError {}

impl From<crate::Error> for HarnessError {
    fn from(e: crate::Error) -> Self {
        use crate::Error;
        match e {
            e if e.is_budget() => HarnessError::Budget(e.to_string()),
            Error::ResolutionExceeded { .. } => HarnessError::Budget(e.to_string()),
            Error::Io(io) => HarnessError::Io(io.to_string()),
            e => HarnessError::Config(e.to_string()),
        }
    }
}

/// A fully rendered output.
#[derive(Clone, Debug, PartialEq)]
pub struct Artifact {
    pub bytes: Vec<u8>,
    /// False only for an acceptance run with a failing criterion.
    pub passed: bool,
}

/// Runs the experiment and renders its output without touching the filesystem
/// (except for reading inputs named in the parameters).
pub fn execute(cfg: &ExperimentConfig) -> Result<Artifact, HarnessError> {
    cfg.validate()?;
    match cfg.threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| HarnessError::Config(format!("thread pool: {e}")))?
            .install(|| experiments::dispatch(cfg)),
        None => experiments::dispatch(cfg),
    }
}

/// Writes `bytes` to `path` through a sibling temporary file and a rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let name = path
        .file_name()
        .ok_or_else(|| std::io::Error::new(std::io::ErrorKind::InvalidInput, "output path has no file name"))?;
    let tmp = dir.join(format!(".{}.{}.tmp", name.to_string_lossy(), std::process::id()));
    let result = (|| {
        let mut file = std::fs::File::create(&tmp)?;
        file.write_all(bytes)?;
        file.sync_all()?;
        std::fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = std::fs::remove_file(&tmp);
    }
    result
}

/// Executes, writes the artifact (to `cfg.out` or standard output) and returns
/// the exit status. Failures print one JSON line to standard error and write
/// nothing.
pub fn run(cfg: &ExperimentConfig) -> i32 {
    let outcome = execute(cfg).and_then(|artifact| {
        match &cfg.out {
            Some(path) => write_atomic(path, &artifact.bytes)
                .map_err(|e| HarnessError::Io(format!("{}: {e}", path.display())))?,
            None => {
                let mut stdout = std::io::stdout().lock();
                stdout
                    .write_all(&artifact.bytes)
                    .and_then(|_| stdout.flush())
                    .map_err(|e| HarnessError::Io(e.to_string()))?;
            }
        }
        Ok(artifact.passed)
    });
    match outcome {
        Ok(true) => exit::OK,
        Ok(false) => exit::ACCEPTANCE,
        Err(e) => {
            eprintln!("{}", e.to_json());
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kv_and_json_agree() {
        let kv = ExperimentConfig::from_kv_text("experiment=glukhov\np=2 # order\nnmax=8\n\nsystem=both\nseed=3\n").unwrap();
        let js = ExperimentConfig::from_json(
            r#"{"experiment":"glukhov","params":{"p":2,"nmax":8,"system":"both"},"seed":3}"#,
        )
        .unwrap();
        assert_eq!(kv, js);
        assert_eq!(kv.digest(), js.digest());
    }

    #[test]
    fn digest_ignores_destination_and_threads() {
        let a = ExperimentConfig::from_pairs(["experiment=kernels", "op=glukhov"]).unwrap();
        let mut b = a.clone();
        b.out = Some("x.csv".into());
        b.threads = Some(2);
        assert_eq!(a.digest(), b.digest());
        b.seed = 1;
        assert_ne!(a.digest(), b.digest());
    }

    #[test]
    fn malformed_configs_are_config_errors() {
        for bad in [
            "p=2",
            "experiment=nope",
            "experiment=glukhov\nnot a pair",
            "experiment=glukhov\nbudget.cells=0",
            "experiment=glukhov\nbudget.flux=3",
            "experiment=glukhov\nseed=-1",
            "{\"experiment\":\"glukhov\",\"extra\":1}",
            "{\"experiment\":\"glukhov\",\"params\":{\"p\":null}}",
        ] {
            let e = ExperimentConfig::from_text(bad).unwrap_err();
            assert_eq!(e.exit_code(), exit::CONFIG, "{bad}");
        }
    }

    #[test]
    fn error_json_is_machine_readable() {
        let e = HarnessError::Budget("too big".into());
        let v: serde_json::Value = serde_json::from_str(&e.to_json()).unwrap();
        assert_eq!(v["error"], "budget");
        assert_eq!(v["exit_code"], 3);
    }

    #[test]
    fn atomic_write_replaces_whole_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.csv");
        write_atomic(&path, b"first").unwrap();
        write_atomic(&path, b"second").unwrap();
        assert_eq!(std::fs::read(&path).unwrap(), b"second");
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}
