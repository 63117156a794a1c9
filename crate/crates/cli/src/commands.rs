//! The five subcommands. Each computes a record, writes it under the output
//! directory, and returns it. Outputs carry no timings or host details, so a
//! rerun with the same config and seed reproduces them byte for byte.

use std::fs;
use std::path::Path;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use qcqmc_core::exactdiag::pauli_spectrum;
use qcqmc_core::fciqmc::{self, write_trajectory_csv, RunSummary};
use qcqmc_core::matelem::ElementSource;
use qcqmc_core::nsi::{transformed_nsi, NsiReport};
use qcqmc_core::rng::{stream, tag};
use qcqmc_core::simulator::{read_circuit_text, write_circuit_text, Circuit, CircuitFile};
use qcqmc_core::vqa::{
    adapt_vqe, fermionic_pool, hubbard_hv_parts, hubbard_real_hv_parts, hv_ansatz, vqe_minimize, AdaptSettings,
    AdaptStep,
};

use crate::config::{AnsatzKind, ExperimentConfig};
use crate::model::{build_model, Model};
use crate::CliError;

pub const ED_FILE: &str = "ed.json";
pub const VQE_FILE: &str = "vqe.json";
pub const CIRCUIT_FILE: &str = "circuit.txt";
pub const NSI_FILE: &str = "nsi.json";
pub const QMC_FILE: &str = "qmc.json";
pub const TRAJECTORY_FILE: &str = "trajectory.csv";
pub const SWEEP_FILE: &str = "sweep.json";
pub const SWEEP_CSV: &str = "sweep.csv";
pub const SWEEP_HEADER: &str = "depth,e_vqe,e_qmc_mean,e_qmc_std,e_qmc_std_error,s_thermal,theorem1_bound,error";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdRecord {
    pub config: ExperimentConfig,
    pub n_qubits: usize,
    pub sector_dim: usize,
    pub ground_energy: f64,
    /// Lowest few sector eigenvalues, ascending.
    pub low_energies: Vec<f64>,
    /// `<ref|H|ref>`.
    pub reference_energy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VqeRecord {
    pub config: ExperimentConfig,
    pub n_qubits: usize,
    pub reference: u64,
    pub energy: f64,
    pub n_parameters: usize,
    pub params: Vec<f64>,
    pub iterations: usize,
    pub gradient_norm: f64,
    pub converged: bool,
    /// Energy after each accepted optimizer step.
    pub history: Vec<(usize, f64)>,
    /// Operator selections, for ADAPT runs.
    pub adapt_steps: Option<Vec<AdaptStep>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NsiRecord {
    pub config: ExperimentConfig,
    pub phi0: u64,
    pub vqe_energy: Option<f64>,
    pub identity: NsiReport,
    pub transformed: NsiReport,
    /// Transformed over identity `s_thermal`; 1 when both vanish, absent when
    /// only the identity value does.
    pub ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QmcRecord {
    pub config: ExperimentConfig,
    pub basis: String,
    pub reference: u64,
    /// `<ref|U^dag H U|ref>`, the starting shift.
    pub reference_energy: f64,
    pub vqe_energy: Option<f64>,
    pub n_steps: usize,
    pub activation_step: Option<u64>,
    pub summary: RunSummary,
    pub cache_entries: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub depth: usize,
    pub e_vqe: Option<f64>,
    pub e_qmc_mean: Option<f64>,
    pub e_qmc_std: Option<f64>,
    pub e_qmc_std_error: Option<f64>,
    pub s_thermal: Option<f64>,
    pub theorem1_bound: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub config: ExperimentConfig,
    pub rows: Vec<SweepRow>,
}

/// An optimized basis circuit.
#[derive(Debug, Clone)]
pub struct Basis {
    pub circuit: Circuit,
    pub params: Vec<f64>,
    pub energy: Option<f64>,
}

fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<(), CliError> {
    fs::create_dir_all(dir)?;
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Other(e.to_string()))?;
    text.push('\n');
    fs::write(dir.join(name), text)?;
    Ok(())
}

/// Uniform initial parameters in `[-scale, scale]`.
fn initial_params(n: usize, scale: f64, seed: u64) -> Vec<f64> {
    let mut rng = stream(seed, &[tag::INIT]);
    (0..n).map(|_| if scale > 0.0 { rng.random_range(-scale..=scale) } else { 0.0 }).collect()
}

/// Runs the configured ansatz. `depth` overrides the layer count (layered
/// ansatze) or the operator cap (ADAPT).
pub fn run_vqe(
    cfg: &ExperimentConfig,
    model: &Model,
    depth: Option<usize>,
    seed: u64,
) -> Result<(qcqmc_core::VqeResult, Option<Vec<AdaptStep>>), CliError> {
    let a = &cfg.ansatz;
    match a.kind {
        AnsatzKind::Hv | AnsatzKind::HvReal => {
            let spec = model
                .hubbard
                .as_ref()
                .ok_or_else(|| CliError::Config("layered ansatze need a Hubbard model".into()))?;
            let parts = if a.kind == AnsatzKind::Hv { hubbard_hv_parts(spec)? } else { hubbard_real_hv_parts(spec)? };
            let circuit = hv_ansatz(&parts, depth.unwrap_or(a.layers))?;
            let init = initial_params(circuit.n_slots(), a.init_scale, seed);
            let r = vqe_minimize(&circuit, &model.hamiltonian, &init, model.reference, &cfg.vqe)?;
            Ok((r, None))
        }
        AnsatzKind::Adapt => {
            let pool = fermionic_pool(model.n_qubits() / 2, model.reference, a.pool)?;
            let settings = AdaptSettings {
                max_operators: depth.unwrap_or(a.max_operators),
                gradient_tol: a.gradient_tol,
                optimizer: cfg.vqe,
            };
            let r = adapt_vqe(&model.hamiltonian, &pool, model.reference, &settings)?;
            Ok((r.vqe, Some(r.steps)))
        }
    }
}

/// Circuit from a file written by `vqe`, checked against the model.
pub fn load_circuit(path: &Path, model: &Model) -> Result<Basis, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let f = read_circuit_text(&text)?;
    if f.circuit.n_qubits() != model.n_qubits() {
        return Err(CliError::Config(format!(
            "circuit has {} qubits, model has {}",
            f.circuit.n_qubits(),
            model.n_qubits()
        )));
    }
    if f.reference != model.reference {
        return Err(CliError::Config(format!(
            "circuit reference {:#x} differs from model reference {:#x}",
            f.reference, model.reference
        )));
    }
    Ok(Basis { circuit: f.circuit, params: f.params, energy: None })
}

fn optimized_basis(cfg: &ExperimentConfig, model: &Model, file: Option<&Path>) -> Result<Basis, CliError> {
    match file {
        Some(p) => load_circuit(p, model),
        None => {
            let (r, _) = run_vqe(cfg, model, None, cfg.seed)?;
            Ok(Basis { circuit: r.circuit, params: r.params, energy: Some(r.energy) })
        }
    }
}

fn identity_basis(model: &Model) -> Basis {
    Basis { circuit: Circuit::new(model.n_qubits()), params: Vec::new(), energy: None }
}

pub fn cmd_ed(cfg: &ExperimentConfig) -> Result<EdRecord, CliError> {
    let model = build_model(&cfg.model)?;
    let spec = pauli_spectrum(&model.hamiltonian, Some(&model.sector))?;
    let rec = EdRecord {
        config: cfg.clone(),
        n_qubits: model.n_qubits(),
        sector_dim: model.sector.len(),
        ground_energy: spec.ground_energy(),
        low_energies: spec.eigenvalues.iter().take(8).copied().collect(),
        reference_energy: model.hamiltonian.element(model.reference, model.reference).re,
    };
    log::info!("ground energy {:.12} in a sector of dimension {}", rec.ground_energy, rec.sector_dim);
    write_json(&cfg.output.dir, ED_FILE, &rec)?;
    Ok(rec)
}

pub fn cmd_vqe(cfg: &ExperimentConfig) -> Result<VqeRecord, CliError> {
    let model = build_model(&cfg.model)?;
    let (r, adapt_steps) = run_vqe(cfg, &model, None, cfg.seed)?;
    log::info!("VQE energy {:.12} after {} iterations", r.energy, r.iterations);
    let file = CircuitFile { circuit: r.circuit.clone(), params: r.params.clone(), reference: model.reference };
    fs::create_dir_all(&cfg.output.dir)?;
    fs::write(cfg.output.dir.join(CIRCUIT_FILE), write_circuit_text(&file))?;
    let rec = VqeRecord {
        config: cfg.clone(),
        n_qubits: model.n_qubits(),
        reference: model.reference,
        energy: r.energy,
        n_parameters: r.params.len(),
        params: r.params,
        iterations: r.iterations,
        gradient_norm: r.gradient_norm,
        converged: r.converged,
        history: r.history,
        adapt_steps,
    };
    write_json(&cfg.output.dir, VQE_FILE, &rec)?;
    Ok(rec)
}

fn s_ratio(transformed: f64, identity: f64) -> Option<f64> {
    if identity == 0.0 {
        (transformed == 0.0).then_some(1.0)
    } else {
        Some(transformed / identity)
    }
}

pub fn cmd_nsi(cfg: &ExperimentConfig) -> Result<NsiRecord, CliError> {
    let model = build_model(&cfg.model)?;
    let phi0 = cfg.nsi.phi0.unwrap_or(model.reference);
    if model.sector_position(phi0).is_none() {
        return Err(CliError::Config(format!("nsi.phi0 {phi0:#x} is outside the model's particle sector")));
    }
    let basis = optimized_basis(cfg, &model, cfg.nsi.circuit.as_deref())?;
    let h = &model.hamiltonian;
    let beta = cfg.nsi.beta;
    let id = identity_basis(&model);
    let identity = transformed_nsi(h, &id.circuit, &id.params, beta, phi0, Some(&model.sector))?;
    let transformed = transformed_nsi(h, &basis.circuit, &basis.params, beta, phi0, Some(&model.sector))?;
    let ratio = s_ratio(transformed.s_thermal, identity.s_thermal);
    log::info!("s_thermal identity {:.6e}, transformed {:.6e}", identity.s_thermal, transformed.s_thermal);
    let rec = NsiRecord { config: cfg.clone(), phi0, vqe_energy: basis.energy, identity, transformed, ratio };
    write_json(&cfg.output.dir, NSI_FILE, &rec)?;
    Ok(rec)
}

struct QmcOutcome {
    trajectory: fciqmc::Trajectory,
    summary: RunSummary,
    reference_energy: f64,
    cache_entries: usize,
}

fn run_qmc(
    cfg: &ExperimentConfig,
    model: &Model,
    basis: &Basis,
    seed: u64,
    cache_file: Option<&Path>,
) -> Result<QmcOutcome, CliError> {
    let src = ElementSource::new(
        model.hamiltonian.clone(),
        basis.circuit.clone(),
        basis.params.clone(),
        cfg.backend,
        seed,
    )?;
    if let Some(p) = cache_file.filter(|p| p.is_file()) {
        let n = src.load_cache(p)?;
        log::info!("loaded {n} cached matrix elements from {}", p.display());
    }
    let mut run = cfg.qmc.run.clone();
    run.seed = seed;
    let trajectory = fciqmc::run(&src, model.reference, &run)?;
    let summary = fciqmc::statistics(&trajectory, &run)?;
    let reference_energy = src.get_element(model.reference, model.reference)?;
    let cache = src.cache().expect("source built with a cache");
    log::info!("matrix element cache: {} entries, {} hits, {} misses", cache.len(), cache.hits(), cache.misses());
    if let Some(p) = cache_file {
        src.save_cache(p)?;
    }
    Ok(QmcOutcome { trajectory, summary, reference_energy, cache_entries: cache.len() })
}

pub fn cmd_qmc(cfg: &ExperimentConfig) -> Result<QmcRecord, CliError> {
    let model = build_model(&cfg.model)?;
    let (basis, name) = if cfg.qmc.identity_basis {
        (identity_basis(&model), "identity")
    } else {
        (optimized_basis(cfg, &model, cfg.qmc.circuit.as_deref())?, "circuit")
    };
    let out = run_qmc(cfg, &model, &basis, cfg.seed, cfg.qmc.cache_file.as_deref())?;
    let e = &out.summary.energy;
    log::info!("mixed energy {:.10} +- {:.3e} ({} samples)", e.mean, e.std_error, e.n_samples);
    fs::create_dir_all(&cfg.output.dir)?;
    let mut csv = Vec::new();
    write_trajectory_csv(&out.trajectory, &mut csv)?;
    fs::write(cfg.output.dir.join(TRAJECTORY_FILE), csv)?;
    let rec = QmcRecord {
        config: cfg.clone(),
        basis: name.to_string(),
        reference: model.reference,
        reference_energy: out.reference_energy,
        vqe_energy: basis.energy,
        n_steps: out.trajectory.records.len() - 1,
        activation_step: out.trajectory.activation_step,
        summary: out.summary,
        cache_entries: out.cache_entries,
    };
    write_json(&cfg.output.dir, QMC_FILE, &rec)?;
    Ok(rec)
}

fn sweep_point(cfg: &ExperimentConfig, model: &Model, depth: usize, seed: u64) -> SweepRow {
    let mut row = SweepRow {
        depth,
        e_vqe: None,
        e_qmc_mean: None,
        e_qmc_std: None,
        e_qmc_std_error: None,
        s_thermal: None,
        theorem1_bound: None,
        error: None,
    };
    let result = (|| -> Result<(), CliError> {
        let (r, _) = run_vqe(cfg, model, Some(depth), seed)?;
        row.e_vqe = Some(r.energy);
        let nsi =
            transformed_nsi(&model.hamiltonian, &r.circuit, &r.params, cfg.nsi.beta, model.reference, Some(&model.sector))?;
        row.s_thermal = Some(nsi.s_thermal);
        row.theorem1_bound = Some(nsi.theorem1_bound);
        let basis = Basis { circuit: r.circuit, params: r.params, energy: Some(r.energy) };
        let out = run_qmc(cfg, model, &basis, seed, None)?;
        let e = out.summary.energy;
        row.e_qmc_mean = Some(e.mean);
        row.e_qmc_std = Some(e.std);
        row.e_qmc_std_error = Some(e.std_error);
        Ok(())
    })();
    if let Err(e) = result {
        log::warn!("sweep point depth {depth} failed: {e}");
        row.error = Some(e.to_string());
    }
    row
}

fn field(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(SWEEP_HEADER);
    out.push('\n');
    for r in rows {
        let err = r.error.as_deref().unwrap_or("").replace([',', '\n', '\r'], ";");
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            r.depth,
            field(r.e_vqe),
            field(r.e_qmc_mean),
            field(r.e_qmc_std),
            field(r.e_qmc_std_error),
            field(r.s_thermal),
            field(r.theorem1_bound),
            err
        ));
    }
    out
}

pub fn read_sweep_csv(text: &str) -> Result<Vec<SweepRow>, CliError> {
    let mut lines = text.lines();
    if lines.next() != Some(SWEEP_HEADER) {
        return Err(CliError::Other("sweep CSV header mismatch".into()));
    }
    lines
        .enumerate()
        .map(|(k, line)| {
            let bad = || CliError::Other(format!("sweep CSV row {}: malformed", k + 1));
            let f: Vec<&str> = line.splitn(8, ',').collect();
            if f.len() != 8 {
                return Err(bad());
            }
            let num = |s: &str| -> Result<Option<f64>, CliError> {
                if s.is_empty() {
                    Ok(None)
                } else {
                    s.parse().map(Some).map_err(|_| bad())
                }
            };
            Ok(SweepRow {
                depth: f[0].parse().map_err(|_| bad())?,
                e_vqe: num(f[1])?,
                e_qmc_mean: num(f[2])?,
                e_qmc_std: num(f[3])?,
                e_qmc_std_error: num(f[4])?,
                s_thermal: num(f[5])?,
                theorem1_bound: num(f[6])?,
                error: (!f[7].is_empty()).then(|| f[7].to_string()),
            })
        })
        .collect()
}

/// One row per depth, computed in parallel with seed `seed + index`. A
/// failing point records its error and the sweep continues.
pub fn cmd_sweep(cfg: &ExperimentConfig) -> Result<SweepRecord, CliError> {
    let sweep = cfg.sweep.as_ref().ok_or_else(|| CliError::Config("missing [sweep] section".into()))?;
    let model = build_model(&cfg.model)?;
    let rows: Vec<SweepRow> = sweep
        .values
        .par_iter()
        .enumerate()
        .map(|(k, &d)| sweep_point(cfg, &model, d, cfg.seed.wrapping_add(k as u64)))
        .collect();
    fs::create_dir_all(&cfg.output.dir)?;
    fs::write(cfg.output.dir.join(SWEEP_CSV), sweep_csv(&rows))?;
    let rec = SweepRecord { config: cfg.clone(), rows };
    write_json(&cfg.output.dir, SWEEP_FILE, &rec)?;
    Ok(rec)
}
