//! Experiment configuration, read from TOML.
//!
//! ```toml
//! seed = 7
//!
//! [model]
//! kind = "hubbard"
//! rows = 2
//! cols = 2
//! t = 1.0
//! u = 4.0
//!
//! [ansatz]
//! kind = "hv-real"
//! layers = 3
//!
//! [qmc]
//! delta_tau = 0.01
//! total_time = 40.0
//! initial_walkers = 6000
//!
//! [backend]
//! kind = "exact"
//!
//! [output]
//! dir = "out"
//! ```
//!
//! Every section except `[model]` is optional. The run seed lives at the top
//! level and overrides `qmc.seed`.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use qcqmc_core::fciqmc::RunConfig;
use qcqmc_core::matelem::Backend;
use qcqmc_core::vqa::{OptimizerSettings, PoolKind};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ModelConfig {
    Hubbard {
        rows: usize,
        cols: usize,
        #[serde(default = "one")]
        t: f64,
        u: f64,
        #[serde(default)]
        periodic: bool,
    },
    Fcidump {
        path: PathBuf,
        /// 1-based orbital labels to freeze as doubly occupied core.
        #[serde(default)]
        frozen: Vec<usize>,
    },
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AnsatzKind {
    /// Interaction and hopping layers of the Hubbard Hamiltonian.
    Hv,
    /// Real pair-transfer and orbital-rotation layers (Hubbard only).
    HvReal,
    Adapt,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnsatzConfig {
    #[serde(default = "default_ansatz")]
    pub kind: AnsatzKind,
    /// Layers for the layered ansatze.
    #[serde(default = "default_layers")]
    pub layers: usize,
    /// Initial parameters are uniform in `[-init_scale, init_scale]`.
    #[serde(default = "default_init_scale")]
    pub init_scale: f64,
    #[serde(default)]
    pub pool: PoolKind,
    #[serde(default = "default_max_operators")]
    pub max_operators: usize,
    #[serde(default = "default_gradient_tol")]
    pub gradient_tol: f64,
}

fn default_ansatz() -> AnsatzKind {
    AnsatzKind::HvReal
}
fn default_layers() -> usize {
    3
}
fn default_init_scale() -> f64 {
    0.1
}
fn default_max_operators() -> usize {
    12
}
fn default_gradient_tol() -> f64 {
    1e-6
}

impl Default for AnsatzConfig {
    fn default() -> Self {
        Self {
            kind: default_ansatz(),
            layers: default_layers(),
            init_scale: default_init_scale(),
            pool: PoolKind::default(),
            max_operators: default_max_operators(),
            gradient_tol: default_gradient_tol(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct QmcConfig {
    #[serde(flatten)]
    pub run: RunConfig,
    /// Walk in the computational basis instead of the VQE basis.
    #[serde(default)]
    pub identity_basis: bool,
    /// Circuit file from a previous `vqe` run; VQE is rerun when absent.
    #[serde(default)]
    pub circuit: Option<PathBuf>,
    /// Matrix element cache file, loaded if present and written back.
    #[serde(default)]
    pub cache_file: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NsiConfig {
    #[serde(default = "default_beta")]
    pub beta: f64,
    /// Initial-state index; the model reference when absent.
    #[serde(default)]
    pub phi0: Option<u64>,
    /// Circuit file to analyse; VQE is rerun when absent.
    #[serde(default)]
    pub circuit: Option<PathBuf>,
}

fn default_beta() -> f64 {
    0.1
}

impl Default for NsiConfig {
    fn default() -> Self {
        Self { beta: default_beta(), phi0: None, circuit: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_dir")]
    pub dir: PathBuf,
}

fn default_dir() -> PathBuf {
    PathBuf::from("out")
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: default_dir() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepAxis {
    /// HV layers, or the ADAPT operator cap.
    Depth,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(default = "default_axis")]
    pub axis: SweepAxis,
    pub values: Vec<usize>,
}

fn default_axis() -> SweepAxis {
    SweepAxis::Depth
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub seed: u64,
    pub model: ModelConfig,
    #[serde(default)]
    pub ansatz: AnsatzConfig,
    #[serde(default)]
    pub vqe: OptimizerSettings,
    #[serde(default)]
    pub qmc: QmcConfig,
    #[serde(default)]
    pub nsi: NsiConfig,
    #[serde(default)]
    pub backend: Backend,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub sweep: Option<SweepConfig>,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let cfg: Self = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads `path`; relative paths inside, including the output directory,
    /// resolve against its directory.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::from_toml(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let ModelConfig::Fcidump { path, .. } = &mut cfg.model {
            resolve(path);
        }
        for p in [&mut cfg.qmc.circuit, &mut cfg.nsi.circuit, &mut cfg.qmc.cache_file].into_iter().flatten() {
            resolve(p);
        }
        resolve(&mut cfg.output.dir);
        cfg.validate_files()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Config(m));
        if let ModelConfig::Hubbard { rows, cols, t, u, .. } = self.model {
            if rows == 0 || cols == 0 || !t.is_finite() || !u.is_finite() {
                return bad(format!("bad Hubbard model {rows}x{cols} t={t} u={u}"));
            }
        }
        if !(self.nsi.beta > 0.0 && self.nsi.beta.is_finite()) {
            return bad(format!("nsi.beta must be positive, got {}", self.nsi.beta));
        }
        if !(self.ansatz.init_scale >= 0.0) {
            return bad("ansatz.init_scale must be non-negative".into());
        }
        self.qmc.run.validate().map_err(|e| CliError::Config(e.to_string()))?;
        if let Some(s) = &self.sweep {
            if s.values.is_empty() {
                return bad("sweep.values is empty".into());
            }
        }
        Ok(())
    }

    fn validate_files(&self) -> Result<(), CliError> {
        let mut files: Vec<&PathBuf> = Vec::new();
        if let ModelConfig::Fcidump { path, .. } = &self.model {
            files.push(path);
        }
        files.extend(self.qmc.circuit.iter());
        files.extend(self.nsi.circuit.iter());
        for f in files {
            if !f.is_file() {
                return Err(CliError::Config(format!("{} does not exist", f.display())));
            }
        }
        Ok(())
    }
}
