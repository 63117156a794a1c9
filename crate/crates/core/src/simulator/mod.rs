//! Dense statevector simulation of Pauli-exponential circuits.

mod text;

use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operators::pauli::{PauliSum, PauliWord, MAX_QUBITS};

pub use text::{read_circuit_text, write_circuit_text, CircuitFile, CIRCUIT_HEADER};

/// Norm drift tolerated after unitary evolution.
pub const NORM_TOL: f64 = 1e-10;

/// Hermiticity tolerance for observables.
pub const HERMITIAN_TOL: f64 = 1e-10;

/// Tolerance on probability vectors passed to [`sample_counts`].
pub const PROBABILITY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Statevector {
    n_qubits: usize,
    amps: Vec<Complex64>,
}

impl Statevector {
    pub fn from_amplitudes(n_qubits: usize, amps: Vec<Complex64>) -> Result<Self> {
        if n_qubits > MAX_QUBITS || amps.len() != 1usize << n_qubits {
            return Err(Error::invalid(format!(
                "{} amplitudes do not describe {n_qubits} qubits",
                amps.len()
            )));
        }
        Ok(Self { n_qubits, amps })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amps
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &Statevector) -> Result<Complex64> {
        if self.n_qubits != other.n_qubits {
            return Err(Error::QubitMismatch(self.n_qubits, other.n_qubits));
        }
        Ok(self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum())
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }
}

/// `|index>` on `n` qubits.
pub fn prepare_basis_state(n: usize, index: u64) -> Result<Statevector> {
    if n > 32 {
        return Err(Error::DenseLimit { n_qubits: n, limit: 32 });
    }
    if index >> n != 0 {
        return Err(Error::IndexOutOfRange { index, n_qubits: n });
    }
    let mut amps = vec![Complex64::default(); 1usize << n];
    amps[index as usize] = Complex64::new(1.0, 0.0);
    Ok(Statevector { n_qubits: n, amps })
}

/// Rotation angle, either fixed or bound to a parameter slot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Angle {
    Fixed(f64),
    /// `scale * params[slot]`.
    Slot { slot: usize, scale: f64 },
}

impl Angle {
    pub fn value(&self, params: &[f64]) -> f64 {
        match *self {
            Angle::Fixed(a) => a,
            Angle::Slot { slot, scale } => scale * params[slot],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Gate {
    /// `exp(-i angle/2 word)`.
    Rotation { word: PauliWord, angle: Angle },
    /// The word itself, applied as a unitary.
    Pauli(PauliWord),
    /// `X` on one qubit.
    Flip(usize),
}

/// An ordered gate list; parameters live outside the circuit and are bound at
/// application time. Several gates may share a slot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Circuit {
    n_qubits: usize,
    gates: Vec<Gate>,
    n_slots: usize,
}

impl Circuit {
    pub fn new(n_qubits: usize) -> Self {
        Self { n_qubits, gates: Vec::new(), n_slots: 0 }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn n_slots(&self) -> usize {
        self.n_slots
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    /// Reserve a new parameter slot and return its index.
    pub fn add_slot(&mut self) -> usize {
        self.n_slots += 1;
        self.n_slots - 1
    }

    /// Declare that slots `0..n` exist even if no gate uses them yet.
    pub fn reserve_slots(&mut self, n: usize) {
        self.n_slots = self.n_slots.max(n);
    }

    pub fn push(&mut self, gate: Gate) -> Result<()> {
        match gate {
            Gate::Rotation { word, angle } => {
                self.check_word(&word)?;
                match angle {
                    Angle::Fixed(a) if !a.is_finite() => {
                        return Err(Error::invalid("non-finite rotation angle"))
                    }
                    Angle::Slot { slot, scale } => {
                        if !scale.is_finite() {
                            return Err(Error::invalid("non-finite angle scale"));
                        }
                        if slot >= self.n_slots {
                            return Err(Error::invalid(format!(
                                "slot {slot} not reserved ({} slots)",
                                self.n_slots
                            )));
                        }
                    }
                    _ => {}
                }
            }
            Gate::Pauli(word) => self.check_word(&word)?,
            Gate::Flip(q) => {
                if q >= self.n_qubits {
                    return Err(Error::invalid(format!("flip on qubit {q} of {}", self.n_qubits)));
                }
            }
        }
        self.gates.push(gate);
        Ok(())
    }

    fn check_word(&self, w: &PauliWord) -> Result<()> {
        if w.n_qubits() != self.n_qubits {
            return Err(Error::QubitMismatch(w.n_qubits(), self.n_qubits));
        }
        Ok(())
    }

    /// Positions of the gates bound to `slot`.
    pub fn slot_gates(&self, slot: usize) -> Vec<usize> {
        self.gates
            .iter()
            .enumerate()
            .filter_map(|(k, g)| match g {
                Gate::Rotation { angle: Angle::Slot { slot: s, .. }, .. } if *s == slot => Some(k),
                _ => None,
            })
            .collect()
    }

    fn check(&self, s: &Statevector, params: &[f64]) -> Result<()> {
        if s.n_qubits != self.n_qubits {
            return Err(Error::QubitMismatch(s.n_qubits, self.n_qubits));
        }
        if params.len() != self.n_slots {
            return Err(Error::invalid(format!(
                "{} parameters given for {} slots",
                params.len(),
                self.n_slots
            )));
        }
        Ok(())
    }

    /// `U(params) |s>` in place.
    pub fn apply(&self, s: &mut Statevector, params: &[f64]) -> Result<()> {
        self.check(s, params)?;
        for g in &self.gates {
            apply_gate(&mut s.amps, g, params, false);
        }
        Ok(())
    }

    /// `U(params)^dag |s>` in place: gates reversed with negated angles.
    pub fn apply_inverse(&self, s: &mut Statevector, params: &[f64]) -> Result<()> {
        self.check(s, params)?;
        for g in self.gates.iter().rev() {
            apply_gate(&mut s.amps, g, params, true);
        }
        Ok(())
    }

    /// The circuit with gate order reversed and fixed angles negated, so that
    /// applying it with the same parameters realizes the inverse when all
    /// slot scales are negated as well.
    pub fn inverse(&self) -> Circuit {
        let gates = self
            .gates
            .iter()
            .rev()
            .map(|g| match *g {
                Gate::Rotation { word, angle } => Gate::Rotation {
                    word,
                    angle: match angle {
                        Angle::Fixed(a) => Angle::Fixed(-a),
                        Angle::Slot { slot, scale } => Angle::Slot { slot, scale: -scale },
                    },
                },
                other => other,
            })
            .collect();
        Circuit { n_qubits: self.n_qubits, gates, n_slots: self.n_slots }
    }
}

/// `i^k` for `k` in 0..4.
#[inline]
fn i_pow(k: u32) -> Complex64 {
    match k & 3 {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    }
}

/// Phase of `W|b>` for a word given by masks.
#[inline]
fn word_phase(x: u64, z: u64, b: u64) -> Complex64 {
    i_pow((x & z).count_ones() + 2 * (z & b).count_ones())
}

fn apply_pauli_word(amps: &mut [Complex64], w: &PauliWord) {
    let (x, z) = (w.x_mask(), w.z_mask());
    if x == 0 {
        for (b, a) in amps.iter_mut().enumerate() {
            *a *= word_phase(x, z, b as u64);
        }
        return;
    }
    for b in 0..amps.len() as u64 {
        let b2 = b ^ x;
        if b2 < b {
            continue;
        }
        let (a0, a1) = (amps[b as usize], amps[b2 as usize]);
        amps[b2 as usize] = word_phase(x, z, b) * a0;
        amps[b as usize] = word_phase(x, z, b2) * a1;
    }
}

/// `exp(-i theta/2 W) = cos(theta/2) - i sin(theta/2) W`, one pass over pairs.
fn apply_rotation(amps: &mut [Complex64], w: &PauliWord, theta: f64) {
    let (s, c) = (0.5 * theta).sin_cos();
    let mis = Complex64::new(0.0, -s);
    let (x, z) = (w.x_mask(), w.z_mask());
    if x == 0 {
        for (b, a) in amps.iter_mut().enumerate() {
            *a *= c + mis * word_phase(x, z, b as u64);
        }
        return;
    }
    for b in 0..amps.len() as u64 {
        let b2 = b ^ x;
        if b2 < b {
            continue;
        }
        let (a0, a1) = (amps[b as usize], amps[b2 as usize]);
        amps[b as usize] = c * a0 + mis * word_phase(x, z, b2) * a1;
        amps[b2 as usize] = c * a1 + mis * word_phase(x, z, b) * a0;
    }
}

/// Apply one gate (or its inverse) to a raw amplitude buffer.
pub fn apply_gate(amps: &mut [Complex64], g: &Gate, params: &[f64], inverse: bool) {
    match g {
        Gate::Rotation { word, angle } => {
            let a = angle.value(params);
            apply_rotation(amps, word, if inverse { -a } else { a });
        }
        Gate::Pauli(w) => apply_pauli_word(amps, w),
        Gate::Flip(q) => {
            let m = 1usize << q;
            for b in 0..amps.len() {
                if b & m == 0 {
                    amps.swap(b, b | m);
                }
            }
        }
    }
}

/// `<s|H|s>` for Hermitian `h`.
pub fn expectation(s: &Statevector, h: &PauliSum) -> Result<f64> {
    if h.n_qubits() != s.n_qubits {
        return Err(Error::QubitMismatch(h.n_qubits(), s.n_qubits));
    }
    let defect = h.hermiticity_defect();
    if defect > HERMITIAN_TOL {
        return Err(Error::NotHermitian(defect));
    }
    Ok(expectation_unchecked(&s.amps, h))
}

/// `Re <s|H|s>` without validation.
pub(crate) fn expectation_unchecked(amps: &[Complex64], h: &PauliSum) -> f64 {
    let mut acc = 0.0;
    for t in h.terms() {
        let (x, z) = (t.word.x_mask(), t.word.z_mask());
        let mut part = Complex64::default();
        for (b, a) in amps.iter().enumerate() {
            if a.re == 0.0 && a.im == 0.0 {
                continue;
            }
            let b = b as u64;
            part += amps[(b ^ x) as usize].conj() * word_phase(x, z, b) * a;
        }
        acc += (t.coeff * part).re;
    }
    acc
}

/// `U^dag |s>` as an amplitude vector: entry `j` is `<j|U^dag|s>`.
pub fn amplitude_vector(s: &Statevector, c: &Circuit, params: &[f64]) -> Result<Vec<Complex64>> {
    let mut w = s.clone();
    c.apply_inverse(&mut w, params)?;
    Ok(w.amps)
}

/// `U(params)|index>`.
pub fn prepare_circuit_state(c: &Circuit, params: &[f64], index: u64) -> Result<Statevector> {
    let mut s = prepare_basis_state(c.n_qubits(), index)?;
    c.apply(&mut s, params)?;
    Ok(s)
}

/// Multinomial draw of `shots` outcomes, as sequential conditional binomials.
/// Zero-count outcomes are omitted.
pub fn sample_counts<R: Rng + ?Sized>(
    probabilities: &[f64],
    shots: u64,
    rng: &mut R,
) -> Result<BTreeMap<u64, u64>> {
    let mut out = BTreeMap::new();
    if shots == 0 {
        return Ok(out);
    }
    let mut total = 0.0;
    for (k, &p) in probabilities.iter().enumerate() {
        if !p.is_finite() || p < -PROBABILITY_TOL {
            return Err(Error::invalid(format!("probability {p} at outcome {k}")));
        }
        total += p.max(0.0);
    }
    if !(total > 0.0) {
        return Err(Error::invalid("probabilities sum to zero"));
    }
    if (total - 1.0).abs() > PROBABILITY_TOL * probabilities.len().max(1) as f64 {
        log::debug!("renormalizing probabilities summing to {total}");
    }
    let mut remaining_shots = shots;
    let mut remaining_mass = 1.0;
    for (k, &p) in probabilities.iter().enumerate() {
        if remaining_shots == 0 {
            break;
        }
        let p = p.max(0.0) / total;
        if p == 0.0 {
            continue;
        }
        let cond = if remaining_mass <= p { 1.0 } else { (p / remaining_mass).min(1.0) };
        let n = if cond >= 1.0 {
            remaining_shots
        } else {
            Binomial::new(remaining_shots, cond)
                .map_err(|e| Error::Numerical(format!("binomial draw: {e}")))?
                .sample(rng)
        };
        if n > 0 {
            out.insert(k as u64, n);
        }
        remaining_shots -= n;
        remaining_mass -= p;
    }
    if remaining_shots > 0 {
        // Rounding left mass unassigned; give it to the last positive outcome.
        let last = probabilities.iter().rposition(|&p| p > 0.0).unwrap_or(0) as u64;
        *out.entry(last).or_insert(0) += remaining_shots;
    }
    Ok(out)
}
