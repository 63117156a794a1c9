//! Hybrid quantum-circuit / FCIQMC toolkit.

pub mod error;
pub mod exactdiag;
pub mod fciqmc;
pub mod matelem;
pub mod nsi;
pub mod operators;
pub mod rng;
pub mod simulator;
pub mod vqa;

pub use error::{Error, Result};
pub use exactdiag::{diagonalize, number_sector, pauli_spectrum, spin_sector, Spectrum};
pub use fciqmc::{run, statistics, RunConfig, RunSummary, ShiftSettings, Trajectory, WalkerPopulation};
pub use matelem::{Backend, ElementSource, MatrixElementCache};
pub use nsi::{nsi_report, transformed_nsi, NsiReport};
pub use simulator::{read_circuit_text, write_circuit_text, Circuit, CircuitFile, Gate, Statevector};
pub use vqa::{adapt_vqe, vqe_minimize, AdaptSettings, OptimizerSettings, PoolKind, VqeResult};
pub use operators::{
    build_hubbard, build_molecular, jordan_wigner, parse_fcidump, FcidumpData, FermionSum,
    FermionTerm, HubbardSpec, MolecularModel, PauliSum, PauliTerm, PauliWord,
};
