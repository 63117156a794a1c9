use std::path::Path;
use std::process::Command;

use qcqmc::commands::{
    read_sweep_csv, CIRCUIT_FILE, ED_FILE, QMC_FILE, SWEEP_CSV, SWEEP_FILE, TRAJECTORY_FILE, VQE_FILE,
};
use qcqmc::{cmd_ed, cmd_nsi, cmd_qmc, cmd_sweep, cmd_vqe, CliError, EdRecord, ExperimentConfig, QmcRecord, SweepRecord};
use qcqmc_core::fciqmc::read_trajectory_csv;
use qcqmc_core::simulator::{prepare_circuit_state, read_circuit_text};

const DIMER: &str = "[model]\nkind = \"hubbard\"\nrows = 1\ncols = 2\nu = 4.0\n";
const PLAQUETTE: &str = "[model]\nkind = \"hubbard\"\nrows = 2\ncols = 2\nu = 4.0\n";

fn config(dir: &Path, body: &str) -> ExperimentConfig {
    let mut c = ExperimentConfig::from_toml(body).unwrap();
    c.output.dir = dir.to_path_buf();
    c
}

fn read<T: serde::de::DeserializeOwned>(path: &Path) -> T {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn ed_dimer_energy_and_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let rec = cmd_ed(&config(dir.path(), DIMER)).unwrap();
    assert!((rec.ground_energy - (2.0 - 2.0 * 2f64.sqrt())).abs() < 1e-10);
    assert_eq!(rec.sector_dim, 4);
    assert_eq!(rec.reference_energy, 4.0);
    let back: EdRecord = read(&dir.path().join(ED_FILE));
    assert_eq!(back, rec);
}

#[test]
fn vqe_circuit_file_reproduces_state() {
    let dir = tempfile::tempdir().unwrap();
    let rec = cmd_vqe(&config(dir.path(), &format!("seed = 4\n{PLAQUETTE}[ansatz]\nlayers = 2\n"))).unwrap();
    let f = read_circuit_text(&std::fs::read_to_string(dir.path().join(CIRCUIT_FILE)).unwrap()).unwrap();
    assert_eq!(f.params, rec.params);
    assert_eq!(f.reference, rec.reference);
    let a = prepare_circuit_state(&f.circuit, &f.params, f.reference).unwrap();
    let b = prepare_circuit_state(&f.circuit, &rec.params, rec.reference).unwrap();
    assert_eq!(a.amplitudes(), b.amplitudes());
    let e = qcqmc_core::vqa::energy(&f.circuit, &qcqmc::build_model(&rec.config.model).unwrap().hamiltonian, &f.params, f.reference)
        .unwrap();
    assert!((e - rec.energy).abs() < 1e-12);
    let back: qcqmc::VqeRecord = read(&dir.path().join(VQE_FILE));
    assert_eq!(back, rec);
}

#[test]
fn vqe_adapt_dimer_reaches_ground_state() {
    let dir = tempfile::tempdir().unwrap();
    let rec = cmd_vqe(&config(dir.path(), &format!("{DIMER}[ansatz]\nkind = \"adapt\"\n"))).unwrap();
    assert!((rec.energy - (2.0 - 2.0 * 2f64.sqrt())).abs() < 1e-6, "{}", rec.energy);
    let steps = rec.adapt_steps.unwrap();
    assert!(!steps.is_empty());
    assert!(steps.windows(2).all(|w| w[1].energy <= w[0].energy + 1e-9));
}

#[test]
fn zero_layers_give_reference_energy() {
    let dir = tempfile::tempdir().unwrap();
    let rec = cmd_vqe(&config(dir.path(), &format!("{PLAQUETTE}[ansatz]\nlayers = 0\n"))).unwrap();
    assert_eq!(rec.n_parameters, 0);
    assert_eq!(rec.energy, 8.0);
}

#[test]
fn nsi_identity_circuit_has_unit_ratio() {
    let dir = tempfile::tempdir().unwrap();
    // An empty circuit file is the identity.
    let id = dir.path().join("id.txt");
    std::fs::write(&id, "# qcqmc circuit v1\nqubits 8\nreference 0xf\nslots 0\n").unwrap();
    let mut cfg = config(dir.path(), PLAQUETTE);
    cfg.nsi.circuit = Some(id);
    let rec = cmd_nsi(&cfg).unwrap();
    assert!(rec.identity.s_thermal > 0.0);
    assert_eq!(rec.identity, rec.transformed);
    assert_eq!(rec.ratio, Some(1.0));
}

#[test]
fn nsi_rejects_phi0_outside_sector() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), &format!("{DIMER}[nsi]\nphi0 = 1\n"));
    assert!(matches!(cmd_nsi(&cfg), Err(CliError::Config(_))));
}

#[test]
fn qmc_outputs_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let body = format!("seed = 2\n{DIMER}[qmc]\ndelta_tau = 0.01\ntotal_time = 5.0\ninitial_walkers = 200\nidentity_basis = true\n[qmc.shift]\nthreshold = 300\n");
    let rec = cmd_qmc(&config(dir.path(), &body)).unwrap();
    assert_eq!(rec.basis, "identity");
    assert_eq!(rec.n_steps, 500);
    assert!(rec.cache_entries > 0);
    let back: QmcRecord = read(&dir.path().join(QMC_FILE));
    assert_eq!(back, rec);
    let rows = read_trajectory_csv(&std::fs::read_to_string(dir.path().join(TRAJECTORY_FILE)).unwrap()).unwrap();
    assert_eq!(rows.len(), 501);
    assert_eq!(rows[0].n_walkers, 200);
}

#[test]
fn qmc_cache_file_is_reused() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("elements.bin");
    let body = format!("{DIMER}[qmc]\ndelta_tau = 0.01\ntotal_time = 1.0\ninitial_walkers = 50\n");
    let mut cfg = config(dir.path(), &body);
    cfg.qmc.cache_file = Some(cache.clone());
    let first = cmd_qmc(&cfg).unwrap();
    assert!(cache.is_file());
    let second = cmd_qmc(&cfg).unwrap();
    assert_eq!(first.summary, second.summary);
    assert!(second.cache_entries >= first.cache_entries);
}

#[test]
fn sweep_rows_and_partial_failures() {
    let dir = tempfile::tempdir().unwrap();
    // The complex layered ansatz yields a complex transformed Hamiltonian
    // for any nonzero depth, which the walker engine refuses.
    let body = format!(
        "seed = 9\n{DIMER}[ansatz]\nkind = \"hv\"\n[qmc]\ndelta_tau = 0.01\ntotal_time = 2.0\ninitial_walkers = 100\n[sweep]\nvalues = [0, 1, 0]\n"
    );
    let cfg = config(dir.path(), &body);
    let rec = cmd_sweep(&cfg).unwrap();
    assert_eq!(rec.rows.len(), 3);
    assert!(rec.rows[0].error.is_none());
    assert!(rec.rows[1].error.is_some());
    assert!(rec.rows[1].e_vqe.is_some());
    let back: SweepRecord = read(&dir.path().join(SWEEP_FILE));
    assert_eq!(back, rec);
    let csv = read_sweep_csv(&std::fs::read_to_string(dir.path().join(SWEEP_CSV)).unwrap()).unwrap();
    assert_eq!(csv[0], rec.rows[0]);
    assert_eq!(csv[2].e_vqe, rec.rows[2].e_vqe);

    // Depth 0 is the identity basis, run with the row's seed.
    let mut q = cfg.clone();
    q.output.dir = dir.path().join("q");
    q.qmc.identity_basis = true;
    let identity = cmd_qmc(&q).unwrap();
    assert_eq!(rec.rows[0].e_qmc_mean, Some(identity.summary.energy.mean));
    assert_eq!(rec.rows[0].e_qmc_std, Some(identity.summary.energy.std));
}

fn binary() -> Command {
    Command::new(env!("CARGO_BIN_EXE_qcqmc"))
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let write = |name: &str, body: &str| {
        let p = dir.path().join(name);
        std::fs::write(&p, format!("{body}[output]\ndir = \"out\"\n")).unwrap();
        p
    };
    let code = |args: &[&str], cfg: &Path| binary().args(args).arg(cfg).output().unwrap().status.code();
    assert_eq!(code(&["ed"], &write("ok.toml", DIMER)), Some(0));
    assert!(dir.path().join("out").join(ED_FILE).is_file());
    assert_eq!(code(&["ed"], &write("bad.toml", "[model]\nkind = \"hubbard\"\n")), Some(2));
    assert_eq!(code(&["ed"], &dir.path().join("missing.toml")), Some(2));
    let odd = write("odd.toml", "[model]\nkind = \"hubbard\"\nrows = 1\ncols = 3\nu = 1.0\n");
    assert_eq!(code(&["ed"], &odd), Some(3));
    let big = write("big.toml", "[model]\nkind = \"hubbard\"\nrows = 4\ncols = 2\nu = 1.0\n");
    assert_eq!(code(&["ed"], &big), Some(4));
    assert_eq!(code(&["sweep"], &write("nosweep.toml", DIMER)), Some(2));
}

#[test]
fn flags_override_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(&cfg, format!("{DIMER}[qmc]\ndelta_tau = 0.01\ntotal_time = 1.0\ninitial_walkers = 50\n")).unwrap();
    let out = dir.path().join("elsewhere");
    let status = binary()
        .args(["qmc", "--seed", "11", "--identity-basis", "--backend", "exact", "--output-dir"])
        .arg(&out)
        .arg(&cfg)
        .status()
        .unwrap();
    assert!(status.success());
    let rec: QmcRecord = read(&out.join(QMC_FILE));
    assert_eq!(rec.config.seed, 11);
    assert_eq!(rec.basis, "identity");
}
