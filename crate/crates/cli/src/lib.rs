//! Scenario engine behind the `csqfc` binary: parses one TOML config per
//! scenario kind, runs the corresponding pipeline, and writes plot-ready CSV
//! tables plus a run manifest into the output directory.

use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};
use thiserror::Error;

pub mod config;
mod scenarios;

pub use config::ScenarioConfig;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("infeasible: {0}")]
    Infeasible(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    /// Process exit status: 2 config, 3 runtime infeasibility, 4 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Infeasible(_) => 3,
            CliError::Io(_) => 4,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(err: std::io::Error) -> Self {
        CliError::Io(err.to_string())
    }
}

/// The scenario kinds the runner understands; each maps onto one config
/// schema and one set of output tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScenarioKind {
    EfficiencySweep,
    BandwidthScan,
    Switching,
    Coincidence,
    Matrix,
    Schedule,
    Fit,
}

impl ScenarioKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ScenarioKind::EfficiencySweep => "efficiency-sweep",
            ScenarioKind::BandwidthScan => "bandwidth-scan",
            ScenarioKind::Switching => "switching",
            ScenarioKind::Coincidence => "coincidence",
            ScenarioKind::Matrix => "matrix",
            ScenarioKind::Schedule => "schedule",
            ScenarioKind::Fit => "fit",
        }
    }

    /// Kinds that draw random numbers and therefore require a seed.
    pub fn is_stochastic(&self) -> bool {
        matches!(self, ScenarioKind::Coincidence | ScenarioKind::Matrix)
    }
}

/// Collects scenario outputs under one directory and records their names for
/// the manifest; no file reaches disk without being declared.
pub struct OutputWriter {
    dir: PathBuf,
    written: Vec<String>,
}

impl OutputWriter {
    fn new(dir: &Path) -> Result<Self, CliError> {
        std::fs::create_dir_all(dir)?;
        Ok(OutputWriter {
            dir: dir.to_path_buf(),
            written: Vec::new(),
        })
    }

    pub fn write(&mut self, name: &str, content: &str) -> Result<PathBuf, CliError> {
        let path = self.dir.join(name);
        std::fs::write(&path, content)?;
        self.written.push(name.to_string());
        Ok(path)
    }

    pub fn declared(&self) -> &[String] {
        &self.written
    }
}

/// Everything a scenario runner needs beyond its parsed config.
pub struct RunContext {
    pub seed: Option<u64>,
    pub config_dir: PathBuf,
    pub out: OutputWriter,
}

impl RunContext {
    /// Resolve a data-file reference relative to the config file.
    pub fn data_path(&self, relative: &str) -> PathBuf {
        let path = Path::new(relative);
        if path.is_absolute() {
            path.to_path_buf()
        } else {
            self.config_dir.join(path)
        }
    }

    pub fn read_data(&self, relative: &str) -> Result<String, CliError> {
        let path = self.data_path(relative);
        std::fs::read_to_string(&path)
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
    }

    pub fn require_seed(&self) -> Result<u64, CliError> {
        self.seed.ok_or_else(|| {
            CliError::Config("this scenario is stochastic and needs a seed (config `seed` or --seed)".into())
        })
    }
}

/// Run one scenario end to end; returns the list of files written
/// (manifest included).
pub fn run(
    kind: ScenarioKind,
    config_path: &Path,
    out_dir: &Path,
    seed_override: Option<u64>,
) -> Result<Vec<PathBuf>, CliError> {
    let raw = std::fs::read_to_string(config_path)
        .map_err(|e| CliError::Io(format!("{}: {e}", config_path.display())))?;
    let digest = Sha256::digest(raw.as_bytes());
    let digest_hex: String = digest.iter().map(|b| format!("{b:02x}")).collect();

    let parsed: ScenarioConfig =
        toml::from_str(&raw).map_err(|e| CliError::Config(format!("{}: {e}", config_path.display())))?;
    if parsed.kind() != kind {
        return Err(CliError::Config(format!(
            "config declares kind {:?} but the {} scenario was requested",
            parsed.kind().as_str(),
            kind.as_str()
        )));
    }

    let seed = seed_override.or(parsed.config_seed());
    if kind.is_stochastic() && seed.is_none() {
        return Err(CliError::Config(format!(
            "scenario {} is stochastic and requires a seed (config `seed` or --seed)",
            kind.as_str()
        )));
    }

    let mut context = RunContext {
        seed,
        config_dir: config_path
            .parent()
            .map(Path::to_path_buf)
            .unwrap_or_else(|| PathBuf::from(".")),
        out: OutputWriter::new(out_dir)?,
    };
    scenarios::dispatch(&parsed, &mut context)?;

    let mut manifest = String::new();
    manifest.push_str(&format!("kind: {}\n", kind.as_str()));
    manifest.push_str(&format!("version: {}\n", env!("CARGO_PKG_VERSION")));
    manifest.push_str(&format!("config: {}\n", config_path.display()));
    manifest.push_str(&format!("config_sha256: {digest_hex}\n"));
    match seed {
        Some(s) => manifest.push_str(&format!("seed: {s}\n")),
        None => manifest.push_str("seed: none\n"),
    }
    for name in context.out.declared().to_vec() {
        manifest.push_str(&format!("output: {name}\n"));
    }
    manifest.push_str("output: manifest.txt\n");
    context.out.write("manifest.txt", &manifest)?;

    Ok(context
        .out
        .declared()
        .iter()
        .map(|name| out_dir.join(name))
        .collect())
}

/// Shortest-roundtrip float formatting shared by all CSV writers; identical
/// inputs always serialize to identical bytes.
pub(crate) fn fmt_f64(value: f64) -> String {
    if value.is_finite() {
        format!("{value}")
    } else {
        "nan".to_string()
    }
}
