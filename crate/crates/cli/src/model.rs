use std::collections::BTreeSet;

use qcqmc_core::exactdiag::spin_sector;
use qcqmc_core::operators::{build_hubbard, build_molecular, jordan_wigner, parse_fcidump, HubbardSpec, PauliSum};

use crate::config::ModelConfig;
use crate::CliError;

/// A qubit Hamiltonian with its reference determinant and the particle
/// sector that contains it.
#[derive(Debug, Clone)]
pub struct Model {
    pub hamiltonian: PauliSum,
    pub reference: u64,
    /// Basis indices with the reference's spin-up and spin-down counts.
    pub sector: Vec<u64>,
    pub hubbard: Option<HubbardSpec>,
}

impl Model {
    pub fn n_qubits(&self) -> usize {
        self.hamiltonian.n_qubits()
    }

    /// Position of `index` in the sector.
    pub fn sector_position(&self, index: u64) -> Option<usize> {
        self.sector.binary_search(&index).ok()
    }
}

pub fn build_model(cfg: &ModelConfig) -> Result<Model, CliError> {
    match cfg {
        &ModelConfig::Hubbard { rows, cols, t, u, periodic } => {
            let spec = HubbardSpec { rows, cols, t, u, periodic };
            let n = spec.n_sites();
            if n % 2 != 0 {
                return Err(CliError::Model(format!("half filling needs an even site count, got {n}")));
            }
            let h = jordan_wigner(&build_hubbard(&spec).map_err(CliError::model)?).map_err(CliError::model)?;
            Ok(Model {
                hamiltonian: h,
                reference: spec.reference_index(),
                sector: sorted(spin_sector(n, n / 2, n / 2)),
                hubbard: Some(spec),
            })
        }
        ModelConfig::Fcidump { path, frozen } => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
            let data = parse_fcidump(&text).map_err(CliError::model)?;
            let frozen: BTreeSet<usize> = frozen.iter().copied().collect();
            let m = build_molecular(&data, &frozen).map_err(CliError::model)?;
            let ne = m.n_active_electrons as i64;
            if (ne + m.ms2) % 2 != 0 || m.ms2.abs() > ne {
                return Err(CliError::Model(format!("{ne} electrons incompatible with MS2 = {}", m.ms2)));
            }
            let (n_up, n_dn) = (((ne + m.ms2) / 2) as usize, ((ne - m.ms2) / 2) as usize);
            let reference = m.hartree_fock_index().map_err(CliError::model)?;
            let h = jordan_wigner(&m.hamiltonian).map_err(CliError::model)?;
            Ok(Model {
                hamiltonian: h,
                reference,
                sector: sorted(spin_sector(m.n_active_orbitals, n_up, n_dn)),
                hubbard: None,
            })
        }
    }
}

fn sorted(mut v: Vec<u64>) -> Vec<u64> {
    v.sort_unstable();
    v
}
