//! Shared fixtures for the benchmarks.

use qcqmc_core::operators::{build_hubbard, jordan_wigner, HubbardSpec, PauliSum};
use qcqmc_core::simulator::Circuit;
use qcqmc_core::vqa::{hubbard_real_hv_parts, hv_ansatz};

/// Half-filled Hubbard model on a `rows x cols` lattice, `t = 1`, `U = 4`.
pub fn hubbard(rows: usize, cols: usize) -> (HubbardSpec, PauliSum) {
    let spec = HubbardSpec::new(rows, cols, 1.0, 4.0);
    let h = jordan_wigner(&build_hubbard(&spec).unwrap()).unwrap();
    (spec, h)
}

/// Real layered ansatz with fixed pseudo-random parameters.
pub fn ansatz(spec: &HubbardSpec, layers: usize) -> (Circuit, Vec<f64>) {
    let c = hv_ansatz(&hubbard_real_hv_parts(spec).unwrap(), layers).unwrap();
    let params = (0..c.n_slots()).map(|k| 0.1 * ((k as f64 * 1.7).sin())).collect();
    (c, params)
}
