//! Second-quantized molecular Hamiltonians from FCIDUMP integrals, with an
//! optional frozen core.
//!
//! Frozen orbitals are given by their FCIDUMP labels (1-based) and are taken
//! as doubly occupied. The remaining orbitals are renumbered from zero in
//! ascending label order; spin-orbital `2p + spin` as for lattices.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::fcidump::FcidumpData;
use super::fermion::{FermionSum, FermionTerm, Ladder};
use crate::error::{Error, Result};

/// Integrals smaller than this are not emitted as terms.
const INTEGRAL_TOL: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MolecularModel {
    pub hamiltonian: FermionSum,
    pub n_active_orbitals: usize,
    pub n_active_electrons: usize,
    pub ms2: i64,
    /// Core energy including the frozen-orbital contribution.
    pub core_energy: f64,
    /// FCIDUMP labels of the active orbitals, in qubit order.
    pub active_labels: Vec<usize>,
}

impl MolecularModel {
    pub fn n_qubits(&self) -> usize {
        2 * self.n_active_orbitals
    }

    /// Aufbau determinant: the lowest active orbitals filled per spin.
    pub fn hartree_fock_index(&self) -> Result<u64> {
        let ne = self.n_active_electrons as i64;
        if (ne + self.ms2) % 2 != 0 || self.ms2.abs() > ne {
            return Err(Error::invalid(format!(
                "inconsistent electron count {ne} and MS2 {}",
                self.ms2
            )));
        }
        let n_up = ((ne + self.ms2) / 2) as usize;
        let n_dn = ((ne - self.ms2) / 2) as usize;
        if n_up > self.n_active_orbitals || n_dn > self.n_active_orbitals {
            return Err(Error::invalid("more electrons than active spin-orbitals"));
        }
        let mut idx = 0u64;
        for p in 0..n_up {
            idx |= 1 << (2 * p);
        }
        for p in 0..n_dn {
            idx |= 1 << (2 * p + 1);
        }
        Ok(idx)
    }
}

/// `H = E + sum h_pq a+_ps a_qs + 1/2 sum (pq|rs) a+_ps a+_rt a_st a_qs`
/// over the active space, with the frozen core folded into `E` and `h`.
pub fn build_molecular(f: &FcidumpData, frozen: &BTreeSet<usize>) -> Result<MolecularModel> {
    if let Some(&bad) = frozen.iter().find(|&&c| c == 0 || c > f.n_orbitals) {
        return Err(Error::invalid(format!(
            "frozen orbital {bad} outside 1..={}",
            f.n_orbitals
        )));
    }
    if 2 * frozen.len() > f.n_electrons {
        return Err(Error::invalid(format!(
            "freezing {} orbitals needs {} electrons, only {} available",
            frozen.len(),
            2 * frozen.len(),
            f.n_electrons
        )));
    }
    let active: Vec<usize> = (1..=f.n_orbitals).filter(|p| !frozen.contains(p)).collect();
    let n_act = active.len();
    if 2 * n_act > 64 {
        return Err(Error::invalid(format!("{n_act} active orbitals need more than 64 qubits")));
    }

    let mut e_core = f.core_energy;
    for &c in frozen {
        e_core += 2.0 * f.h1(c, c);
        for &d in frozen {
            e_core += 2.0 * f.eri(c, c, d, d) - f.eri(c, d, d, c);
        }
    }

    let h_eff = |p: usize, q: usize| -> f64 {
        let mut v = f.h1(p, q);
        for &c in frozen {
            v += 2.0 * f.eri(p, q, c, c) - f.eri(p, c, c, q);
        }
        v
    };

    let mut h = FermionSum::new(2 * n_act);
    if e_core != 0.0 {
        h.push(FermionTerm::new(e_core, Vec::new()))?;
    }
    for (p, &lp) in active.iter().enumerate() {
        for (q, &lq) in active.iter().enumerate() {
            let v = h_eff(lp, lq);
            if v.abs() < INTEGRAL_TOL {
                continue;
            }
            for s in 0..2 {
                h.push(FermionTerm::one_body(v, 2 * p + s, 2 * q + s))?;
            }
        }
    }
    for (p, &lp) in active.iter().enumerate() {
        for (q, &lq) in active.iter().enumerate() {
            for (r, &lr) in active.iter().enumerate() {
                for (s, &ls) in active.iter().enumerate() {
                    let v = f.eri(lp, lq, lr, ls);
                    if v.abs() < INTEGRAL_TOL {
                        continue;
                    }
                    for sig in 0..2 {
                        for tau in 0..2 {
                            let (ps, qs) = (2 * p + sig, 2 * q + sig);
                            let (rt, st) = (2 * r + tau, 2 * s + tau);
                            if ps == rt || qs == st {
                                continue;
                            }
                            h.push(FermionTerm::new(
                                0.5 * v,
                                vec![
                                    Ladder::create(ps),
                                    Ladder::create(rt),
                                    Ladder::annihilate(st),
                                    Ladder::annihilate(qs),
                                ],
                            ))?;
                        }
                    }
                }
            }
        }
    }

    Ok(MolecularModel {
        hamiltonian: h,
        n_active_orbitals: n_act,
        n_active_electrons: f.n_electrons - 2 * frozen.len(),
        ms2: f.ms2,
        core_energy: e_core,
        active_labels: active,
    })
}
