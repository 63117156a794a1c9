//! Pauli words and weighted sums of them.
//!
//! A word on `n` qubits is stored as two bit masks: qubit `q` carries X when
//! bit `q` of `x` is set, Z when bit `q` of `z` is set, and Y when both are.
//! With that encoding a word equals `i^{|x & z|} X^x Z^z`, which makes products
//! and basis-state actions pure bit arithmetic.
//!
//! Computational basis index `b` has qubit `q` in state `|1>` iff bit `q` of
//! `b` is set.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Coefficients smaller than this are dropped by [`PauliSum::simplify`].
pub const PRUNE_TOL: f64 = 1e-12;

/// Largest qubit count for which dense 2^n x 2^n matrices are built.
pub const DEFAULT_DENSE_LIMIT: usize = 12;

/// Hard upper bound imposed by the 64-bit masks.
pub const MAX_QUBITS: usize = 64;

/// Single-qubit Pauli operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    fn bits(self) -> (bool, bool) {
        match self {
            Pauli::I => (false, false),
            Pauli::X => (true, false),
            Pauli::Y => (true, true),
            Pauli::Z => (false, true),
        }
    }

    fn from_bits(x: bool, z: bool) -> Self {
        match (x, z) {
            (false, false) => Pauli::I,
            (true, false) => Pauli::X,
            (true, true) => Pauli::Y,
            (false, true) => Pauli::Z,
        }
    }
}

/// A phase from the group {1, i, -1, -i}, stored as the exponent of `i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Phase(u8);

impl Phase {
    pub const ONE: Phase = Phase(0);
    pub const I: Phase = Phase(1);
    pub const MINUS_ONE: Phase = Phase(2);
    pub const MINUS_I: Phase = Phase(3);

    pub fn from_exponent(k: u32) -> Self {
        Phase((k & 3) as u8)
    }

    pub fn exponent(self) -> u8 {
        self.0
    }

    pub fn to_complex(self) -> Complex64 {
        match self.0 {
            0 => Complex64::new(1.0, 0.0),
            1 => Complex64::new(0.0, 1.0),
            2 => Complex64::new(-1.0, 0.0),
            _ => Complex64::new(0.0, -1.0),
        }
    }
}

impl Mul for Phase {
    type Output = Phase;
    fn mul(self, rhs: Phase) -> Phase {
        Phase((self.0 + rhs.0) & 3)
    }
}

/// Tensor product of single-qubit Paulis on a fixed number of qubits.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PauliWord {
    n_qubits: usize,
    x: u64,
    z: u64,
}

fn width_mask(n: usize) -> u64 {
    if n >= 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

impl PauliWord {
    pub fn new(n_qubits: usize, x: u64, z: u64) -> Result<Self> {
        if n_qubits > MAX_QUBITS {
            return Err(Error::invalid(format!("{n_qubits} qubits exceeds {MAX_QUBITS}")));
        }
        let m = width_mask(n_qubits);
        if x & !m != 0 || z & !m != 0 {
            return Err(Error::invalid(format!(
                "masks x={x:#x} z={z:#x} do not fit in {n_qubits} qubits"
            )));
        }
        Ok(Self { n_qubits, x, z })
    }

    pub fn identity(n_qubits: usize) -> Self {
        assert!(n_qubits <= MAX_QUBITS);
        Self { n_qubits, x: 0, z: 0 }
    }

    /// A word with one non-identity Pauli on `qubit`.
    pub fn single(n_qubits: usize, qubit: usize, p: Pauli) -> Result<Self> {
        if qubit >= n_qubits {
            return Err(Error::invalid(format!("qubit {qubit} out of range for {n_qubits}")));
        }
        let (x, z) = p.bits();
        Self::new(n_qubits, (x as u64) << qubit, (z as u64) << qubit)
    }

    /// Parse a string such as `"XIZY"`; character `k` acts on qubit `k`.
    pub fn parse(s: &str) -> Result<Self> {
        let mut x = 0u64;
        let mut z = 0u64;
        let chars: Vec<char> = s.chars().collect();
        for (q, c) in chars.iter().enumerate() {
            let p = match c {
                'I' | 'i' => Pauli::I,
                'X' | 'x' => Pauli::X,
                'Y' | 'y' => Pauli::Y,
                'Z' | 'z' => Pauli::Z,
                _ => return Err(Error::invalid(format!("bad Pauli character {c:?}"))),
            };
            let (bx, bz) = p.bits();
            x |= (bx as u64) << q;
            z |= (bz as u64) << q;
        }
        Self::new(chars.len(), x, z)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn x_mask(&self) -> u64 {
        self.x
    }

    pub fn z_mask(&self) -> u64 {
        self.z
    }

    pub fn is_identity(&self) -> bool {
        self.x == 0 && self.z == 0
    }

    pub fn is_diagonal(&self) -> bool {
        self.x == 0
    }

    pub fn pauli_at(&self, qubit: usize) -> Pauli {
        Pauli::from_bits((self.x >> qubit) & 1 == 1, (self.z >> qubit) & 1 == 1)
    }

    /// Number of Y factors.
    pub fn y_count(&self) -> u32 {
        (self.x & self.z).count_ones()
    }

    /// Number of non-identity factors.
    pub fn weight(&self) -> u32 {
        (self.x | self.z).count_ones()
    }

    /// True when the word is a real matrix, i.e. has an even number of Y factors.
    pub fn is_real(&self) -> bool {
        self.y_count() % 2 == 0
    }

    pub fn commutes_with(&self, other: &PauliWord) -> bool {
        ((self.x & other.z).count_ones() + (self.z & other.x).count_ones()) % 2 == 0
    }

    /// Action on a computational basis state: `W|b> = phase * |b ^ x>`.
    #[inline]
    pub fn act(&self, b: u64) -> (u64, Phase) {
        let k = (self.x & self.z).count_ones() + 2 * (self.z & b).count_ones();
        (b ^ self.x, Phase::from_exponent(k))
    }
}

impl fmt::Display for PauliWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for q in 0..self.n_qubits {
            let c = match self.pauli_at(q) {
                Pauli::I => 'I',
                Pauli::X => 'X',
                Pauli::Y => 'Y',
                Pauli::Z => 'Z',
            };
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for PauliWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PauliWord({self})")
    }
}

/// Product `a * b = phase * word`.
pub fn pauli_product(a: &PauliWord, b: &PauliWord) -> Result<(Phase, PauliWord)> {
    if a.n_qubits != b.n_qubits {
        return Err(Error::QubitMismatch(a.n_qubits, b.n_qubits));
    }
    let x = a.x ^ b.x;
    let z = a.z ^ b.z;
    // i^{|x1 z1|} X^x1 Z^z1 i^{|x2 z2|} X^x2 Z^z2, moving Z^z1 past X^x2 costs (-1)^{|z1 x2|}.
    let k = (a.x & a.z).count_ones() + (b.x & b.z).count_ones() + 2 * (a.z & b.x).count_ones()
        + 3 * (x & z).count_ones();
    Ok((Phase::from_exponent(k), PauliWord { n_qubits: a.n_qubits, x, z }))
}

/// One weighted Pauli word.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PauliTerm {
    pub coeff: Complex64,
    pub word: PauliWord,
}

impl PauliTerm {
    pub fn new(coeff: impl Into<Complex64>, word: PauliWord) -> Self {
        Self { coeff: coeff.into(), word }
    }
}

/// `H = sum_k h_k P_k`. Coefficients are complex so that products and
/// anti-Hermitian generators can be represented; Hermitian sums carry real
/// coefficients after [`simplify`](PauliSum::simplify).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PauliSum {
    n_qubits: usize,
    terms: Vec<PauliTerm>,
}

impl PauliSum {
    pub fn zero(n_qubits: usize) -> Self {
        Self { n_qubits, terms: Vec::new() }
    }

    pub fn identity(n_qubits: usize, coeff: f64) -> Self {
        Self::from_terms(n_qubits, [PauliTerm::new(coeff, PauliWord::identity(n_qubits))])
            .expect("identity word always matches")
    }

    /// Build and simplify. Fails when a word has the wrong qubit count.
    pub fn from_terms(n_qubits: usize, terms: impl IntoIterator<Item = PauliTerm>) -> Result<Self> {
        let terms: Vec<PauliTerm> = terms.into_iter().collect();
        for t in &terms {
            if t.word.n_qubits != n_qubits {
                return Err(Error::QubitMismatch(n_qubits, t.word.n_qubits));
            }
            if !(t.coeff.re.is_finite() && t.coeff.im.is_finite()) {
                return Err(Error::invalid("non-finite Pauli coefficient"));
            }
        }
        let mut s = Self { n_qubits, terms };
        s.simplify();
        Ok(s)
    }

    /// Convenience: real-weighted words given as strings.
    pub fn from_strs(terms: &[(f64, &str)]) -> Result<Self> {
        let mut n = None;
        let mut out = Vec::with_capacity(terms.len());
        for &(c, s) in terms {
            let w = PauliWord::parse(s)?;
            match n {
                None => n = Some(w.n_qubits),
                Some(m) if m != w.n_qubits => return Err(Error::QubitMismatch(m, w.n_qubits)),
                _ => {}
            }
            out.push(PauliTerm::new(c, w));
        }
        Self::from_terms(n.unwrap_or(0), out)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn terms(&self) -> &[PauliTerm] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Merge duplicate words, drop coefficients below [`PRUNE_TOL`] and sort
    /// terms by word so that equal operators compare equal.
    pub fn simplify(&mut self) {
        let mut acc: BTreeMap<PauliWord, Complex64> = BTreeMap::new();
        for t in self.terms.drain(..) {
            *acc.entry(t.word).or_default() += t.coeff;
        }
        self.terms = acc
            .into_iter()
            .map(|(word, mut coeff)| {
                if coeff.re.abs() < PRUNE_TOL {
                    coeff.re = 0.0;
                }
                if coeff.im.abs() < PRUNE_TOL {
                    coeff.im = 0.0;
                }
                PauliTerm { coeff, word }
            })
            .filter(|t| t.coeff.norm() >= PRUNE_TOL)
            .collect();
    }

    pub fn scale(&self, c: Complex64) -> Self {
        let mut out = self.clone();
        for t in &mut out.terms {
            t.coeff *= c;
        }
        out.simplify();
        out
    }

    pub fn adjoint(&self) -> Self {
        let mut out = self.clone();
        for t in &mut out.terms {
            t.coeff = t.coeff.conj();
        }
        out
    }

    /// Largest imaginary coefficient magnitude; zero for a Hermitian sum.
    pub fn hermiticity_defect(&self) -> f64 {
        self.terms.iter().map(|t| t.coeff.im.abs()).fold(0.0, f64::max)
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_defect() <= tol
    }

    pub fn identity_coefficient(&self) -> Complex64 {
        self.terms
            .iter()
            .find(|t| t.word.is_identity())
            .map(|t| t.coeff)
            .unwrap_or_default()
    }

    /// Sum of |h_k|, an upper bound on the spectral norm.
    pub fn one_norm(&self) -> f64 {
        self.terms.iter().map(|t| t.coeff.norm()).sum()
    }

    pub fn try_add(&self, other: &PauliSum) -> Result<Self> {
        if self.n_qubits != other.n_qubits {
            return Err(Error::QubitMismatch(self.n_qubits, other.n_qubits));
        }
        let mut terms = self.terms.clone();
        terms.extend_from_slice(&other.terms);
        let mut s = Self { n_qubits: self.n_qubits, terms };
        s.simplify();
        Ok(s)
    }

    pub fn try_mul(&self, other: &PauliSum) -> Result<Self> {
        if self.n_qubits != other.n_qubits {
            return Err(Error::QubitMismatch(self.n_qubits, other.n_qubits));
        }
        let mut terms = Vec::with_capacity(self.len() * other.len());
        for a in &self.terms {
            for b in &other.terms {
                let (ph, w) = pauli_product(&a.word, &b.word)?;
                terms.push(PauliTerm { coeff: a.coeff * b.coeff * ph.to_complex(), word: w });
            }
        }
        let mut s = Self { n_qubits: self.n_qubits, terms };
        s.simplify();
        Ok(s)
    }

    /// `[A, B] = AB - BA`.
    pub fn commutator(&self, other: &PauliSum) -> Result<Self> {
        let ab = self.try_mul(other)?;
        let ba = other.try_mul(self)?;
        ab.try_add(&ba.scale(Complex64::new(-1.0, 0.0)))
    }

    /// Accumulate `out += H * input` for a dense amplitude vector.
    pub fn apply_into(&self, input: &[Complex64], out: &mut [Complex64]) {
        debug_assert_eq!(input.len(), 1usize << self.n_qubits);
        debug_assert_eq!(out.len(), input.len());
        for t in &self.terms {
            let xz = (t.word.x & t.word.z).count_ones();
            let base = t.coeff * Phase::from_exponent(xz).to_complex();
            let neg = -base;
            for (b, &amp) in input.iter().enumerate() {
                if amp.re == 0.0 && amp.im == 0.0 {
                    continue;
                }
                let b = b as u64;
                let c = if (t.word.z & b).count_ones() & 1 == 0 { base } else { neg };
                out[(b ^ t.word.x) as usize] += c * amp;
            }
        }
    }

    /// `H * input` as a new vector.
    pub fn apply(&self, input: &[Complex64]) -> Vec<Complex64> {
        let mut out = vec![Complex64::default(); input.len()];
        self.apply_into(input, &mut out);
        out
    }

    /// Matrix element `<row| H |col>` between basis states.
    pub fn element(&self, row: u64, col: u64) -> Complex64 {
        let mut acc = Complex64::default();
        for t in &self.terms {
            let (b, ph) = t.word.act(col);
            if b == row {
                acc += t.coeff * ph.to_complex();
            }
        }
        acc
    }

    /// Dense 2^n x 2^n matrix, refusing sizes above `limit` qubits.
    pub fn to_dense_with_limit(&self, limit: usize) -> Result<DMatrix<Complex64>> {
        if self.n_qubits > limit {
            return Err(Error::DenseLimit { n_qubits: self.n_qubits, limit });
        }
        let dim = 1usize << self.n_qubits;
        let mut m = DMatrix::<Complex64>::zeros(dim, dim);
        let mut e = vec![Complex64::default(); dim];
        for col in 0..dim {
            e[col] = Complex64::new(1.0, 0.0);
            let v = self.apply(&e);
            e[col] = Complex64::default();
            for (row, val) in v.into_iter().enumerate() {
                m[(row, col)] = val;
            }
        }
        Ok(m)
    }

    pub fn to_dense(&self) -> Result<DMatrix<Complex64>> {
        self.to_dense_with_limit(DEFAULT_DENSE_LIMIT)
    }

    /// Dense matrix restricted to the listed basis states (rows and columns in
    /// the given order). Useful for particle-number sectors beyond the full
    /// dense limit.
    pub fn to_dense_in_basis(&self, basis: &[u64]) -> DMatrix<Complex64> {
        let pos: std::collections::HashMap<u64, usize> =
            basis.iter().enumerate().map(|(k, &b)| (b, k)).collect();
        let mut m = DMatrix::<Complex64>::zeros(basis.len(), basis.len());
        for (c, &b) in basis.iter().enumerate() {
            for t in &self.terms {
                let (b2, ph) = t.word.act(b);
                if let Some(&r) = pos.get(&b2) {
                    m[(r, c)] += t.coeff * ph.to_complex();
                }
            }
        }
        m
    }
}

impl Add for &PauliSum {
    type Output = PauliSum;
    fn add(self, rhs: &PauliSum) -> PauliSum {
        self.try_add(rhs).expect("qubit count mismatch in PauliSum addition")
    }
}

impl Sub for &PauliSum {
    type Output = PauliSum;
    fn sub(self, rhs: &PauliSum) -> PauliSum {
        self + &(-rhs)
    }
}

impl Neg for &PauliSum {
    type Output = PauliSum;
    fn neg(self) -> PauliSum {
        self.scale(Complex64::new(-1.0, 0.0))
    }
}

impl Mul for &PauliSum {
    type Output = PauliSum;
    fn mul(self, rhs: &PauliSum) -> PauliSum {
        self.try_mul(rhs).expect("qubit count mismatch in PauliSum product")
    }
}

impl fmt::Display for PauliSum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (k, t) in self.terms.iter().enumerate() {
            if k > 0 {
                write!(f, " + ")?;
            }
            if t.coeff.im == 0.0 {
                write!(f, "{}*{}", t.coeff.re, t.word)?;
            } else {
                write!(f, "({})*{}", t.coeff, t.word)?;
            }
        }
        Ok(())
    }
}
