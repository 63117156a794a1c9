//! Fermi-Hubbard lattices.
//!
//! Spin-orbital index is `2 * site + spin` with spin up = 0, sites numbered
//! row-major.

use serde::{Deserialize, Serialize};

use super::fermion::{FermionSum, FermionTerm, Ladder};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HubbardSpec {
    pub rows: usize,
    pub cols: usize,
    pub t: f64,
    pub u: f64,
    #[serde(default)]
    pub periodic: bool,
}

impl HubbardSpec {
    pub fn new(rows: usize, cols: usize, t: f64, u: f64) -> Self {
        Self { rows, cols, t, u, periodic: false }
    }

    pub fn n_sites(&self) -> usize {
        self.rows * self.cols
    }

    pub fn n_qubits(&self) -> usize {
        2 * self.n_sites()
    }

    fn validate(&self) -> Result<()> {
        if self.n_sites() == 0 {
            return Err(Error::invalid("Hubbard lattice has no sites"));
        }
        if !(self.t.is_finite() && self.u.is_finite()) {
            return Err(Error::invalid("non-finite Hubbard parameters"));
        }
        if self.n_qubits() > 64 {
            return Err(Error::invalid("Hubbard lattice needs more than 64 qubits"));
        }
        Ok(())
    }

    /// Nearest-neighbour bonds `(i, j)` with `i < j`, in lattice order: for
    /// each site row-major, the bond to the right and then the bond below.
    /// Periodic wraps are added only for extents above two so no bond repeats.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let site = |r: usize, c: usize| r * self.cols + c;
        let mut out = Vec::new();
        for r in 0..self.rows {
            for c in 0..self.cols {
                let s = site(r, c);
                if c + 1 < self.cols {
                    out.push((s, site(r, c + 1)));
                } else if self.periodic && self.cols > 2 {
                    out.push((site(r, 0), s));
                }
                if r + 1 < self.rows {
                    out.push((s, site(r + 1, c)));
                } else if self.periodic && self.rows > 2 {
                    out.push((site(0, c), s));
                }
            }
        }
        out
    }

    /// Lowest basis index at half filling with zero magnetization: the first
    /// `n_sites` spin-orbitals occupied.
    pub fn reference_index(&self) -> u64 {
        (1u64 << self.n_sites()) - 1
    }
}

pub fn spin_orbital(site: usize, spin: usize) -> usize {
    2 * site + spin
}

/// `H = -t sum_<ij>,s (a+_is a_js + h.c.) + U sum_i n_i,up n_i,down`.
pub fn build_hubbard(spec: &HubbardSpec) -> Result<FermionSum> {
    spec.validate()?;
    let mut h = FermionSum::new(spec.n_qubits());
    for (i, j) in spec.edges() {
        for spin in 0..2 {
            let p = spin_orbital(i, spin);
            let q = spin_orbital(j, spin);
            h.push(FermionTerm::one_body(-spec.t, p, q))?;
            h.push(FermionTerm::one_body(-spec.t, q, p))?;
        }
    }
    for i in 0..spec.n_sites() {
        let up = spin_orbital(i, 0);
        let dn = spin_orbital(i, 1);
        h.push(FermionTerm::new(
            spec.u,
            vec![Ladder::create(up), Ladder::annihilate(up), Ladder::create(dn), Ladder::annihilate(dn)],
        ))?;
    }
    Ok(h)
}

/// The two physical parts of the Hubbard Hamiltonian, interaction first.
pub fn hubbard_parts(spec: &HubbardSpec) -> Result<(FermionSum, FermionSum)> {
    let full = build_hubbard(spec)?;
    let n_hop = 4 * spec.edges().len();
    let hop = FermionSum::from_terms(full.n_modes(), full.terms()[..n_hop].to_vec())?;
    let int = FermionSum::from_terms(full.n_modes(), full.terms()[n_hop..].to_vec())?;
    Ok((int, hop))
}
