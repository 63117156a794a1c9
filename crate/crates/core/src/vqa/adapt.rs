use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{energy, push_generator, real_generator, vqe_minimize, OptimizerSettings, VqeResult};
use crate::error::{Error, Result};
use crate::operators::fermion::{FermionSum, FermionTerm};
use crate::operators::pauli::PauliSum;
use crate::simulator::{prepare_circuit_state, Circuit};

/// A pool entry: Hermitian `K`, appended as `exp(-i theta K)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoolOperator {
    pub label: String,
    pub generator: PauliSum,
}

/// How excitations are grouped into pool operators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PoolKind {
    /// Spin-summed singles `sum_s a+_as a_is` and doubles
    /// `sum_st a+_as a+_bt a_jt a_is` over spatial orbitals.
    SpinAdapted,
    /// One operator per spin-orbital excitation that conserves `S_z`.
    SpinResolved,
    /// Every `S_z`-conserving spin-orbital single `a+_p a_q` and double
    /// `a+_p a+_q a_s a_r`, regardless of the reference occupation.
    #[default]
    Generalized,
}

/// Excitations from the doubly occupied spatial orbitals of `reference` into
/// its empty ones. Each operator is `i (T - T^dag)` for the excitation `T`;
/// singly occupied orbitals are left out of the pool.
pub fn fermionic_pool(n_orbitals: usize, reference: u64, kind: PoolKind) -> Result<Vec<PoolOperator>> {
    let n = 2 * n_orbitals;
    if n > 64 || (n < 64 && reference >> n != 0) {
        return Err(Error::IndexOutOfRange { index: reference, n_qubits: n });
    }
    let occ_bits = |p: usize| (reference >> (2 * p) & 1, reference >> (2 * p + 1) & 1);
    let occ: Vec<usize> = (0..n_orbitals).filter(|&p| occ_bits(p) == (1, 1)).collect();
    let virt: Vec<usize> = (0..n_orbitals).filter(|&p| occ_bits(p) == (0, 0)).collect();
    let so = |p: usize, s: usize| 2 * p + s;
    let spin = ['u', 'd'];

    let mut pool = Vec::new();
    let mut push = |label: String, terms: Vec<FermionTerm>| -> Result<()> {
        let k = real_generator(&FermionSum::from_terms(n, terms)?)?;
        if !k.is_empty() {
            pool.push(PoolOperator { label, generator: k });
        }
        Ok(())
    };
    match kind {
        PoolKind::SpinAdapted => {
            for &i in &occ {
                for &a in &virt {
                    let terms = (0..2).map(|s| FermionTerm::one_body(1.0, so(a, s), so(i, s))).collect();
                    push(format!("s {i}->{a}"), terms)?;
                }
            }
            for (x, &i) in occ.iter().enumerate() {
                for &j in &occ[x..] {
                    for (y, &a) in virt.iter().enumerate() {
                        for &b in &virt[y..] {
                            let mut terms = Vec::new();
                            for s in 0..2 {
                                for t in 0..2 {
                                    let (as_, bt, jt, is) = (so(a, s), so(b, t), so(j, t), so(i, s));
                                    if as_ == bt || jt == is {
                                        continue;
                                    }
                                    terms.push(FermionTerm::two_body(1.0, as_, bt, jt, is));
                                }
                            }
                            push(format!("d {i},{j}->{a},{b}"), terms)?;
                        }
                    }
                }
            }
        }
        PoolKind::SpinResolved => {
            let occ_so: Vec<usize> = occ.iter().flat_map(|&p| [so(p, 0), so(p, 1)]).collect();
            let virt_so: Vec<usize> = virt.iter().flat_map(|&p| [so(p, 0), so(p, 1)]).collect();
            let name = |q: usize| format!("{}{}", q / 2, spin[q % 2]);
            for &i in &occ_so {
                for &a in virt_so.iter().filter(|&&a| a % 2 == i % 2) {
                    push(format!("s {}->{}", name(i), name(a)), vec![FermionTerm::one_body(1.0, a, i)])?;
                }
            }
            for (x, &i) in occ_so.iter().enumerate() {
                for &j in &occ_so[x + 1..] {
                    for (y, &a) in virt_so.iter().enumerate() {
                        for &b in &virt_so[y + 1..] {
                            if (a % 2 + b % 2) != (i % 2 + j % 2) {
                                continue;
                            }
                            push(
                                format!("d {},{}->{},{}", name(i), name(j), name(a), name(b)),
                                vec![FermionTerm::two_body(1.0, b, a, i, j)],
                            )?;
                        }
                    }
                }
            }
        }
        PoolKind::Generalized => {
            let name = |q: usize| format!("{}{}", q / 2, spin[q % 2]);
            for q in 0..n {
                for p in (q + 1..n).filter(|p| p % 2 == q % 2) {
                    push(format!("s {}->{}", name(q), name(p)), vec![FermionTerm::one_body(1.0, p, q)])?;
                }
            }
            let pairs: Vec<(usize, usize)> = (0..n).flat_map(|r| (r + 1..n).map(move |s| (r, s))).collect();
            for (x, &(r, s_)) in pairs.iter().enumerate() {
                for &(p, q) in &pairs[x + 1..] {
                    if p % 2 + q % 2 != r % 2 + s_ % 2 {
                        continue;
                    }
                    push(
                        format!("d {},{}->{},{}", name(r), name(s_), name(p), name(q)),
                        vec![FermionTerm::two_body(1.0, q, p, r, s_)],
                    )?;
                }
            }
        }
    }
    Ok(pool)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AdaptSettings {
    pub max_operators: usize,
    /// Stop when the largest pool gradient falls below this.
    pub gradient_tol: f64,
    pub optimizer: OptimizerSettings,
}

impl Default for AdaptSettings {
    fn default() -> Self {
        Self {
            max_operators: 12,
            gradient_tol: 1e-6,
            optimizer: OptimizerSettings::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaptStep {
    pub n_operators: usize,
    pub selected: usize,
    pub label: String,
    /// `|dE/dtheta|` of the selected operator at `theta = 0`.
    pub max_gradient: f64,
    /// Energy after re-optimizing all parameters.
    pub energy: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaptResult {
    pub vqe: VqeResult,
    pub reference_energy: f64,
    pub steps: Vec<AdaptStep>,
    /// Largest pool gradient when the loop stopped (`None` if it never ran).
    pub final_max_gradient: Option<f64>,
}

impl AdaptResult {
    /// Reference energy followed by the energy after each added operator.
    pub fn energies(&self) -> Vec<f64> {
        std::iter::once(self.reference_energy).chain(self.steps.iter().map(|s| s.energy)).collect()
    }
}

/// `dE/dtheta` at `theta = 0` for appending `exp(-i theta K)` to the state:
/// `i <psi|[K, H]|psi> = -2 Im <K psi|H psi>`.
fn pool_gradients(pool: &[PoolOperator], psi: &[Complex64], h_psi: &[Complex64]) -> Vec<f64> {
    pool.par_iter()
        .map(|op| {
            let k_psi = op.generator.apply(psi);
            let z: Complex64 = k_psi.iter().zip(h_psi).map(|(a, b)| a.conj() * b).sum();
            -2.0 * z.im
        })
        .collect()
}

/// Grow a circuit operator by operator from `pool`, re-optimizing all
/// parameters after each addition.
pub fn adapt_vqe(h: &PauliSum, pool: &[PoolOperator], reference: u64, settings: &AdaptSettings) -> Result<AdaptResult> {
    let n = h.n_qubits();
    if pool.is_empty() {
        return Err(Error::invalid("empty operator pool"));
    }
    if let Some(op) = pool.iter().find(|op| op.generator.n_qubits() != n) {
        return Err(Error::QubitMismatch(op.generator.n_qubits(), n));
    }
    let mut circuit = Circuit::new(n);
    let mut params: Vec<f64> = Vec::new();
    let reference_energy = energy(&circuit, h, &params, reference)?;
    let mut vqe = VqeResult {
        circuit: circuit.clone(),
        params: params.clone(),
        reference,
        energy: reference_energy,
        history: vec![(0, reference_energy)],
        gradient_norm: 0.0,
        iterations: 0,
        converged: true,
    };
    let mut steps = Vec::new();
    let mut final_max_gradient = None;

    while steps.len() < settings.max_operators {
        let psi = prepare_circuit_state(&circuit, &params, reference)?;
        let h_psi = h.apply(psi.amplitudes());
        let grads = pool_gradients(pool, psi.amplitudes(), &h_psi);
        let (best, gmax) = grads
            .iter()
            .enumerate()
            .fold((0, -1.0f64), |acc, (k, g)| if g.abs() > acc.1 { (k, g.abs()) } else { acc });
        final_max_gradient = Some(gmax);
        if gmax < settings.gradient_tol {
            log::info!("ADAPT converged: largest pool gradient {gmax:e}");
            break;
        }
        let slot = circuit.add_slot();
        push_generator(&mut circuit, &pool[best].generator, slot)?;
        params.push(0.0);
        let res = vqe_minimize(&circuit, h, &params, reference, &settings.optimizer)?;
        params = res.params.clone();
        log::info!(
            "ADAPT step {}: added {} (|g|={gmax:.3e}), energy {:.10}",
            steps.len() + 1,
            pool[best].label,
            res.energy
        );
        steps.push(AdaptStep {
            n_operators: steps.len() + 1,
            selected: best,
            label: pool[best].label.clone(),
            max_gradient: gmax,
            energy: res.energy,
            converged: res.converged,
        });
        vqe = res;
    }
    Ok(AdaptResult { vqe, reference_energy, steps, final_max_gradient })
}
