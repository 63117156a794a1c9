//! Second-quantized operators and the Jordan-Wigner mapping.
//!
//! Mode `p` maps to qubit `p` with
//! `a_p^dag = Z_0 ... Z_{p-1} (X_p - i Y_p) / 2`, so an occupied mode is the
//! qubit state `|1>`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::pauli::{Pauli, PauliSum, PauliTerm, PauliWord, MAX_QUBITS};
use crate::error::{Error, Result};

/// A creation (`dagger = true`) or annihilation operator on one mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Ladder {
    pub mode: usize,
    pub dagger: bool,
}

impl Ladder {
    pub fn create(mode: usize) -> Self {
        Self { mode, dagger: true }
    }
    pub fn annihilate(mode: usize) -> Self {
        Self { mode, dagger: false }
    }
}

/// `coeff * op_0 op_1 ... op_k`, applied right to left.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FermionTerm {
    pub coeff: f64,
    pub ops: Vec<Ladder>,
}

impl FermionTerm {
    pub fn new(coeff: f64, ops: Vec<Ladder>) -> Self {
        Self { coeff, ops }
    }

    /// `coeff * a_p^dag a_q`
    pub fn one_body(coeff: f64, p: usize, q: usize) -> Self {
        Self::new(coeff, vec![Ladder::create(p), Ladder::annihilate(q)])
    }

    /// `coeff * a_p^dag a_q^dag a_r a_s`
    pub fn two_body(coeff: f64, p: usize, q: usize, r: usize, s: usize) -> Self {
        Self::new(
            coeff,
            vec![Ladder::create(p), Ladder::create(q), Ladder::annihilate(r), Ladder::annihilate(s)],
        )
    }

    pub fn adjoint(&self) -> Self {
        Self {
            coeff: self.coeff,
            ops: self
                .ops
                .iter()
                .rev()
                .map(|l| Ladder { mode: l.mode, dagger: !l.dagger })
                .collect(),
        }
    }
}

/// A sum of fermionic monomials on `n_modes` modes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FermionSum {
    n_modes: usize,
    terms: Vec<FermionTerm>,
}

impl FermionSum {
    pub fn new(n_modes: usize) -> Self {
        Self { n_modes, terms: Vec::new() }
    }

    pub fn from_terms(n_modes: usize, terms: Vec<FermionTerm>) -> Result<Self> {
        let mut s = Self::new(n_modes);
        for t in terms {
            s.push(t)?;
        }
        Ok(s)
    }

    pub fn push(&mut self, term: FermionTerm) -> Result<()> {
        if !term.coeff.is_finite() {
            return Err(Error::invalid("non-finite fermionic coefficient"));
        }
        if let Some(l) = term.ops.iter().find(|l| l.mode >= self.n_modes) {
            return Err(Error::invalid(format!(
                "mode {} out of range for {} modes",
                l.mode, self.n_modes
            )));
        }
        self.terms.push(term);
        Ok(())
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn terms(&self) -> &[FermionTerm] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn adjoint(&self) -> Self {
        Self { n_modes: self.n_modes, terms: self.terms.iter().map(FermionTerm::adjoint).collect() }
    }

    /// `self - self^dag`, the anti-Hermitian part used for unitary generators.
    pub fn anti_hermitian_part(&self) -> Self {
        let mut terms = self.terms.clone();
        terms.extend(self.adjoint().terms.into_iter().map(|mut t| {
            t.coeff = -t.coeff;
            t
        }));
        Self { n_modes: self.n_modes, terms }
    }

    /// Hermiticity via the (faithful) qubit image.
    pub fn is_hermitian(&self, tol: f64) -> Result<bool> {
        let q = jordan_wigner(self)?;
        Ok(q.is_hermitian(tol))
    }
}

/// Qubit image of one ladder operator.
pub fn ladder_to_pauli(n_modes: usize, l: Ladder) -> Result<PauliSum> {
    if l.mode >= n_modes {
        return Err(Error::invalid(format!("mode {} out of range for {n_modes} modes", l.mode)));
    }
    let tail = (1u64 << l.mode) - 1;
    let x = PauliWord::single(n_modes, l.mode, Pauli::X)?;
    let y = PauliWord::single(n_modes, l.mode, Pauli::Y)?;
    let xw = PauliWord::new(n_modes, x.x_mask(), tail | x.z_mask())?;
    let yw = PauliWord::new(n_modes, y.x_mask(), tail | y.z_mask())?;
    let sign = if l.dagger { -1.0 } else { 1.0 };
    PauliSum::from_terms(
        n_modes,
        [PauliTerm::new(0.5, xw), PauliTerm::new(Complex64::new(0.0, 0.5 * sign), yw)],
    )
}

/// Jordan-Wigner image of a fermionic sum; the result is simplified.
pub fn jordan_wigner(f: &FermionSum) -> Result<PauliSum> {
    let n = f.n_modes;
    if n > MAX_QUBITS {
        return Err(Error::invalid(format!("{n} modes exceeds {MAX_QUBITS}")));
    }
    let mut terms: Vec<PauliTerm> = Vec::new();
    for t in &f.terms {
        let mut prod = PauliSum::identity(n, t.coeff);
        for &l in &t.ops {
            prod = prod.try_mul(&ladder_to_pauli(n, l)?)?;
            if prod.is_empty() {
                break;
            }
        }
        terms.extend_from_slice(prod.terms());
    }
    PauliSum::from_terms(n, terms)
}
