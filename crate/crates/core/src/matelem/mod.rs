//! Matrix elements `H_ji = <j|U^dag H U|i>` in a circuit-rotated basis.
//!
//! The exact backend reads them off the statevector `U^dag H U|i>`. The
//! sampled backend reproduces the output statistics of the measurement
//! circuits: a multinomial over `|H_ji|^2 / nu_i^2` for magnitudes (with
//! `nu_i^2 = <i|U^dag H^2 U|i>`), a Hadamard-test Bernoulli with success
//! probability `(1 + Re H_ji / nu_i) / 2` for signs, and per-term Pauli
//! averages for diagonals.
//!
//! Every element is defined through the row of the smaller index of its pair,
//! so `(i, j)` and `(j, i)` always agree, and every random draw comes from a
//! stream keyed by the indices involved. Values therefore do not depend on
//! evaluation order or on whether the cache is enabled.

mod cache;

use std::collections::HashMap;
use std::sync::Arc;

use num_complex::Complex64;
use parking_lot::RwLock;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::nsi::IMAG_TOL;
use crate::operators::pauli::PauliSum;
use crate::rng::{stream, tag};
use crate::simulator::{
    amplitude_vector, prepare_circuit_state, sample_counts, write_circuit_text, Circuit, CircuitFile, Statevector,
    HERMITIAN_TOL,
};

pub use cache::MatrixElementCache;

/// Connections weaker than this are dropped by the exact backend.
pub const EXACT_MAGNITUDE_FLOOR: f64 = 1e-8;

/// Row entries below this magnitude are not stored at all.
const ROW_STORE_TOL: f64 = 1e-15;

fn default_floor() -> f64 {
    EXACT_MAGNITUDE_FLOOR
}

fn default_shots_magnitude() -> u64 {
    1_000_000
}

fn default_shots_sign() -> u64 {
    10_000
}

fn default_confidence() -> f64 {
    3.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Backend {
    Exact {
        #[serde(default = "default_floor")]
        magnitude_floor: f64,
    },
    Sampled {
        #[serde(default = "default_shots_magnitude")]
        shots_magnitude: u64,
        #[serde(default = "default_shots_sign")]
        shots_sign: u64,
        /// Absolute floor on `|H_ji|`. When unset, an estimate is kept only
        /// if it exceeds three of its own standard errors.
        #[serde(default)]
        magnitude_floor: Option<f64>,
        /// Signs whose Hadamard-test mean lies within this many standard
        /// errors of zero are reported as ambiguous.
        #[serde(default = "default_confidence")]
        sign_confidence: f64,
    },
}

impl Default for Backend {
    fn default() -> Self {
        Backend::exact()
    }
}

impl Backend {
    pub fn exact() -> Self {
        Backend::Exact { magnitude_floor: EXACT_MAGNITUDE_FLOOR }
    }

    pub fn sampled(shots_magnitude: u64, shots_sign: u64) -> Self {
        Backend::Sampled { shots_magnitude, shots_sign, magnitude_floor: None, sign_confidence: default_confidence() }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Backend::Exact { .. })
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            Backend::Exact { magnitude_floor } => magnitude_floor >= 0.0,
            Backend::Sampled { shots_magnitude, shots_sign, magnitude_floor, sign_confidence } => {
                shots_magnitude > 0
                    && shots_sign > 0
                    && magnitude_floor.map_or(true, |f| f >= 0.0)
                    && sign_confidence >= 0.0
            }
        };
        if !ok {
            return Err(Error::invalid(format!("bad backend settings {self:?}")));
        }
        Ok(())
    }
}

/// Outcome of a sign estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SignEstimate {
    Positive,
    Negative,
    /// Indistinguishable from zero; callers treat the element as zero.
    Ambiguous,
}

impl SignEstimate {
    pub fn value(self) -> f64 {
        match self {
            SignEstimate::Positive => 1.0,
            SignEstimate::Negative => -1.0,
            SignEstimate::Ambiguous => 0.0,
        }
    }
}

/// Estimated `|H_ji|` for `j != i`, at or above the backend floor.
#[derive(Debug, Clone, PartialEq)]
pub struct ConnectionList {
    pub source: u64,
    pub connections: Vec<(u64, f64)>,
}

#[derive(Debug)]
struct Row {
    /// `<i|U^dag H^2 U|i>`.
    nu2: f64,
    /// `<i|U^dag H U|i>`, exact.
    diagonal: f64,
    /// Exact real entries of `U^dag H U|i>`, sorted by index.
    values: Vec<(u64, f64)>,
    /// Off-diagonal magnitude estimates that passed the floor.
    magnitudes: Vec<(u64, f64)>,
}

impl Row {
    fn value(&self, j: u64) -> f64 {
        self.values.binary_search_by_key(&j, |e| e.0).map_or(0.0, |k| self.values[k].1)
    }

    fn magnitude(&self, j: u64) -> f64 {
        self.magnitudes.binary_search_by_key(&j, |e| e.0).map_or(0.0, |k| self.magnitudes[k].1)
    }
}

/// Matrix elements of one Hamiltonian in one fixed circuit basis.
#[derive(Debug)]
pub struct ElementSource {
    hamiltonian: PauliSum,
    circuit: Circuit,
    params: Vec<f64>,
    backend: Backend,
    seed: u64,
    cache: Option<MatrixElementCache>,
    rows: RwLock<HashMap<u64, Arc<Row>>>,
}

impl ElementSource {
    pub fn new(h: PauliSum, circuit: Circuit, params: Vec<f64>, backend: Backend, seed: u64) -> Result<Self> {
        if h.n_qubits() != circuit.n_qubits() {
            return Err(Error::QubitMismatch(h.n_qubits(), circuit.n_qubits()));
        }
        if params.len() != circuit.n_slots() {
            return Err(Error::invalid(format!("{} parameters for {} slots", params.len(), circuit.n_slots())));
        }
        let d = h.hermiticity_defect();
        if d > HERMITIAN_TOL {
            return Err(Error::NotHermitian(d));
        }
        backend.validate()?;
        Ok(Self {
            hamiltonian: h,
            circuit,
            params,
            backend,
            seed,
            cache: Some(MatrixElementCache::new()),
            rows: RwLock::new(HashMap::new()),
        })
    }

    /// The computational basis itself (no circuit).
    pub fn identity(h: PauliSum, backend: Backend, seed: u64) -> Result<Self> {
        let n = h.n_qubits();
        Self::new(h, Circuit::new(n), Vec::new(), backend, seed)
    }

    /// Disable all caching; every query recomputes from scratch.
    pub fn without_cache(mut self) -> Self {
        self.cache = None;
        self
    }

    pub fn n_qubits(&self) -> usize {
        self.hamiltonian.n_qubits()
    }

    pub fn hamiltonian(&self) -> &PauliSum {
        &self.hamiltonian
    }

    pub fn circuit(&self) -> &Circuit {
        &self.circuit
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn backend(&self) -> &Backend {
        &self.backend
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn cache(&self) -> Option<&MatrixElementCache> {
        self.cache.as_ref()
    }

    fn check_index(&self, i: u64) -> Result<()> {
        let n = self.n_qubits();
        if n < 64 && i >> n != 0 {
            return Err(Error::IndexOutOfRange { index: i, n_qubits: n });
        }
        Ok(())
    }

    fn row(&self, i: u64) -> Result<Arc<Row>> {
        self.check_index(i)?;
        if self.cache.is_some() {
            if let Some(r) = self.rows.read().get(&i) {
                return Ok(Arc::clone(r));
            }
        }
        let row = Arc::new(self.compute_row(i)?);
        if self.cache.is_some() {
            return Ok(Arc::clone(self.rows.write().entry(i).or_insert(row)));
        }
        Ok(row)
    }

    fn compute_row(&self, i: u64) -> Result<Row> {
        let n = self.n_qubits();
        let phi = prepare_circuit_state(&self.circuit, &self.params, i)?;
        let w = self.hamiltonian.apply(phi.amplitudes());
        let nu2: f64 = w.iter().map(|z| z.norm_sqr()).sum();
        let diagonal: f64 = phi.amplitudes().iter().zip(&w).map(|(a, b)| (a.conj() * b).re).sum();
        let amps = amplitude_vector(&Statevector::from_amplitudes(n, w)?, &self.circuit, &self.params)?;
        let scale = nu2.sqrt().max(1.0);
        let mut values = Vec::new();
        for (j, z) in amps.iter().enumerate() {
            if z.im.abs() > IMAG_TOL * scale {
                return Err(Error::ComplexElement(z.im.abs()));
            }
            if z.re.abs() > ROW_STORE_TOL {
                values.push((j as u64, z.re));
            }
        }
        let magnitudes = match self.backend {
            Backend::Exact { magnitude_floor } => values
                .iter()
                .filter(|&&(j, v)| j != i && v.abs() >= magnitude_floor.max(ROW_STORE_TOL))
                .map(|&(j, v)| (j, v.abs()))
                .collect(),
            Backend::Sampled { shots_magnitude, magnitude_floor, .. } => {
                if nu2 == 0.0 {
                    Vec::new()
                } else {
                    let probs: Vec<f64> = amps.iter().map(|z| z.norm_sqr() / nu2).collect();
                    let mut rng = stream(self.seed, &[tag::ROW, i]);
                    let counts = sample_counts(&probs, shots_magnitude, &mut rng)?;
                    let shots = shots_magnitude as f64;
                    counts
                        .into_iter()
                        .filter(|&(j, _)| j != i)
                        .filter_map(|(j, c)| {
                            let q = c as f64 / shots;
                            let est2 = nu2 * q;
                            let keep = match magnitude_floor {
                                Some(f) => est2 >= f * f,
                                None => c as f64 >= 9.0 * (1.0 - q),
                            };
                            keep.then(|| (j, est2.sqrt()))
                        })
                        .collect()
                }
            }
        };
        Ok(Row { nu2, diagonal, values, magnitudes })
    }

    /// `|H_ji|` for every `j != i` above the backend floor. An empty list
    /// means `H U|i>` vanishes or is diagonal.
    pub fn row_magnitudes(&self, i: u64) -> Result<ConnectionList> {
        let row = self.row(i)?;
        Ok(ConnectionList { source: i, connections: row.magnitudes.clone() })
    }

    /// `<i|U^dag H^2 U|i>`, always exact.
    pub fn row_norm_sqr(&self, i: u64) -> Result<f64> {
        Ok(self.row(i)?.nu2)
    }

    /// Sign of `Re H_ji`.
    pub fn element_sign(&self, i: u64, j: u64) -> Result<SignEstimate> {
        self.check_index(j)?;
        let (a, b) = cache::pair(i, j);
        let row = self.row(a)?;
        let exact = row.value(b);
        match self.backend {
            Backend::Exact { .. } => Ok(if exact > 0.0 {
                SignEstimate::Positive
            } else if exact < 0.0 {
                SignEstimate::Negative
            } else {
                SignEstimate::Ambiguous
            }),
            Backend::Sampled { shots_sign, sign_confidence, .. } => {
                if row.nu2 == 0.0 {
                    return Ok(SignEstimate::Ambiguous);
                }
                let x = (exact / row.nu2.sqrt()).clamp(-1.0, 1.0);
                let mut rng = stream(self.seed, &[tag::SIGN, a, b]);
                let dist = Binomial::new(shots_sign, 0.5 * (1.0 + x))
                    .map_err(|e| Error::Numerical(format!("sign test: {e}")))?;
                let n = shots_sign as f64;
                let mean = 2.0 * dist.sample(&mut rng) as f64 / n - 1.0;
                let se = (1.0 - mean * mean).max(1.0 / n).sqrt() / n.sqrt();
                Ok(if mean.abs() <= sign_confidence * se {
                    SignEstimate::Ambiguous
                } else if mean > 0.0 {
                    SignEstimate::Positive
                } else {
                    SignEstimate::Negative
                })
            }
        }
    }

    /// `<i|U^dag H U|i>`: exact, or summed from per-term Pauli averages of
    /// `shots_magnitude` shots each.
    pub fn diagonal_element(&self, i: u64) -> Result<f64> {
        match self.backend {
            Backend::Exact { .. } => Ok(self.row(i)?.diagonal),
            Backend::Sampled { shots_magnitude, .. } => {
                self.check_index(i)?;
                let phi = prepare_circuit_state(&self.circuit, &self.params, i)?;
                let mut rng = stream(self.seed, &[tag::DIAG, i]);
                let n = shots_magnitude as f64;
                let mut e = 0.0;
                for t in self.hamiltonian.terms() {
                    if t.word.is_identity() {
                        e += t.coeff.re;
                        continue;
                    }
                    let mut p = Complex64::default();
                    for (b, a) in phi.amplitudes().iter().enumerate() {
                        if a.re == 0.0 && a.im == 0.0 {
                            continue;
                        }
                        let (b2, ph) = t.word.act(b as u64);
                        p += phi.amplitudes()[b2 as usize].conj() * ph.to_complex() * a;
                    }
                    let prob = (0.5 * (1.0 + p.re)).clamp(0.0, 1.0);
                    let dist = Binomial::new(shots_magnitude, prob)
                        .map_err(|e| Error::Numerical(format!("diagonal estimate: {e}")))?;
                    e += t.coeff.re * (2.0 * dist.sample(&mut rng) as f64 / n - 1.0);
                }
                Ok(e)
            }
        }
    }

    fn compute_element(&self, a: u64, b: u64) -> Result<f64> {
        if a == b {
            return self.diagonal_element(a);
        }
        match self.backend {
            Backend::Exact { .. } => Ok(self.row(a)?.value(b)),
            Backend::Sampled { .. } => {
                let mag = self.row(a)?.magnitude(b);
                if mag == 0.0 {
                    return Ok(0.0);
                }
                Ok(mag * self.element_sign(a, b)?.value())
            }
        }
    }

    /// Signed `H_ji`, from the cache when present.
    pub fn get_element(&self, i: u64, j: u64) -> Result<f64> {
        self.check_index(i)?;
        self.check_index(j)?;
        let (a, b) = cache::pair(i, j);
        match &self.cache {
            Some(c) => match c.lookup(a, b) {
                Some(v) => Ok(v),
                None => Ok(c.insert_if_absent(a, b, self.compute_element(a, b)?)),
            },
            None => self.compute_element(a, b),
        }
    }

    /// Signed nonzero off-diagonal elements `(j, H_ji)` over the row's
    /// connection list.
    pub fn connections(&self, i: u64) -> Result<Vec<(u64, f64)>> {
        let row = self.row(i)?;
        let floor = match self.backend {
            Backend::Exact { magnitude_floor } => magnitude_floor,
            Backend::Sampled { .. } => 0.0,
        };
        let mut out = Vec::with_capacity(row.magnitudes.len());
        for &(j, _) in &row.magnitudes {
            let v = self.get_element(i, j)?;
            if v != 0.0 && v.abs() >= floor {
                out.push((j, v));
            }
        }
        Ok(out)
    }

    /// Digest identifying the Hamiltonian, basis circuit, backend and seed;
    /// persisted caches are only reloaded under the same key.
    pub fn cache_key(&self) -> [u8; 32] {
        let mut d = Sha256::new();
        d.update(b"qcqmc matrix elements v1\n");
        d.update((self.n_qubits() as u64).to_le_bytes());
        for t in self.hamiltonian.terms() {
            d.update(t.word.x_mask().to_le_bytes());
            d.update(t.word.z_mask().to_le_bytes());
            d.update(t.coeff.re.to_bits().to_le_bytes());
            d.update(t.coeff.im.to_bits().to_le_bytes());
        }
        let text = write_circuit_text(&CircuitFile {
            circuit: self.circuit.clone(),
            params: self.params.clone(),
            reference: 0,
        });
        d.update(text.as_bytes());
        for p in &self.params {
            d.update(p.to_bits().to_le_bytes());
        }
        match self.backend {
            Backend::Exact { magnitude_floor } => {
                d.update(b"exact");
                d.update(magnitude_floor.to_bits().to_le_bytes());
            }
            Backend::Sampled { shots_magnitude, shots_sign, magnitude_floor, sign_confidence } => {
                d.update(b"sampled");
                d.update(shots_magnitude.to_le_bytes());
                d.update(shots_sign.to_le_bytes());
                d.update(magnitude_floor.map_or(u64::MAX, f64::to_bits).to_le_bytes());
                d.update(sign_confidence.to_bits().to_le_bytes());
                d.update(self.seed.to_le_bytes());
            }
        }
        d.finalize().into()
    }

    pub fn save_cache(&self, path: &std::path::Path) -> Result<()> {
        let c = self.cache.as_ref().ok_or_else(|| Error::invalid("caching is disabled"))?;
        c.save(&self.cache_key(), path)
    }

    /// Merge a saved cache into this source. Returns the number of entries read.
    pub fn load_cache(&self, path: &std::path::Path) -> Result<usize> {
        let c = self.cache.as_ref().ok_or_else(|| Error::invalid("caching is disabled"))?;
        c.load(&self.cache_key(), path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nsi::transformed_matrix;
    use crate::operators::pauli::{PauliTerm, PauliWord};
    use crate::simulator::{Angle, Gate};
    use rand::{Rng, SeedableRng};

    fn random_real_instance(seed: u64, n: usize) -> (PauliSum, Circuit, Vec<f64>) {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let m = (1u64 << n) - 1;
        let mut terms = Vec::new();
        while terms.len() < 8 {
            let (x, z) = (rng.random::<u64>() & m, rng.random::<u64>() & m);
            let w = PauliWord::new(n, x, z).unwrap();
            if w.is_real() {
                terms.push(PauliTerm::new(rng.random_range(-1.0..1.0), w));
            }
        }
        let h = PauliSum::from_terms(n, terms).unwrap();
        let mut c = Circuit::new(n);
        let mut params = Vec::new();
        while c.gates().len() < 6 {
            let (x, z) = (rng.random::<u64>() & m, rng.random::<u64>() & m);
            let w = PauliWord::new(n, x, z).unwrap();
            // Odd number of Y: exp(-i a/2 P) is real.
            if w.y_count() % 2 == 1 {
                let k = c.add_slot();
                c.push(Gate::Rotation { word: w, angle: Angle::Slot { slot: k, scale: 1.0 } }).unwrap();
                params.push(rng.random_range(-3.0..3.0));
            }
        }
        (h, c, params)
    }

    #[test]
    fn diagonal_hamiltonian_has_no_connections() {
        let h = PauliSum::from_strs(&[(1.0, "ZI"), (0.5, "ZZ")]).unwrap();
        let src = ElementSource::identity(h, Backend::exact(), 0).unwrap();
        for i in 0..4 {
            assert!(src.row_magnitudes(i).unwrap().connections.is_empty());
        }
    }

    #[test]
    fn single_flip() {
        let h = PauliSum::from_strs(&[(0.5, "X")]).unwrap();
        let src = ElementSource::identity(h, Backend::exact(), 0).unwrap();
        assert_eq!(src.row_magnitudes(0).unwrap().connections, vec![(1, 0.5)]);
        assert!(src.row_magnitudes(2).is_err());
    }

    #[test]
    fn exact_signs() {
        for (c, want) in [(-1.0, SignEstimate::Negative), (1.0, SignEstimate::Positive)] {
            let h = PauliSum::from_strs(&[(c, "X")]).unwrap();
            let src = ElementSource::identity(h, Backend::exact(), 0).unwrap();
            assert_eq!(src.element_sign(0, 1).unwrap(), want);
        }
    }

    #[test]
    fn zero_hamiltonian_row_is_empty() {
        let src = ElementSource::identity(PauliSum::zero(2), Backend::sampled(100, 100), 0).unwrap();
        assert!(src.row_magnitudes(1).unwrap().connections.is_empty());
        assert_eq!(src.row_norm_sqr(1).unwrap(), 0.0);
    }

    #[test]
    fn exact_matches_dense_transform() {
        for seed in 0..20 {
            let (h, c, p) = random_real_instance(seed, 3);
            let dense = transformed_matrix(&h, &c, &p, None).unwrap();
            let src = ElementSource::new(h, c, p, Backend::exact(), 0).unwrap();
            for i in 0..8u64 {
                assert!((src.diagonal_element(i).unwrap() - dense[(i as usize, i as usize)]).abs() < 1e-10);
                for j in 0..8u64 {
                    let v = src.get_element(i, j).unwrap();
                    assert!((v - dense[(j as usize, i as usize)]).abs() < 1e-10);
                }
                let conn = src.row_magnitudes(i).unwrap();
                for &(j, m) in &conn.connections {
                    assert_ne!(j, i);
                    assert!((m - dense[(j as usize, i as usize)].abs()).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn row_probabilities_sum_to_nu2() {
        let (h, c, p) = random_real_instance(3, 3);
        let h2 = &h * &h;
        let src = ElementSource::new(h, c.clone(), p.clone(), Backend::Exact { magnitude_floor: 0.0 }, 0).unwrap();
        for i in 0..8 {
            let d = src.diagonal_element(i).unwrap();
            let off: f64 = src.row_magnitudes(i).unwrap().connections.iter().map(|c| c.1 * c.1).sum();
            let phi = prepare_circuit_state(&c, &p, i).unwrap();
            let want = crate::simulator::expectation(&phi, &h2).unwrap();
            assert!((d * d + off - want).abs() < 1e-9);
            assert!((src.row_norm_sqr(i).unwrap() - want).abs() < 1e-9);
        }
    }

    #[test]
    fn cache_hits_and_symmetry() {
        let (h, c, p) = random_real_instance(1, 3);
        let src = ElementSource::new(h, c, p, Backend::exact(), 0).unwrap();
        let a = src.get_element(2, 5).unwrap();
        let cache = src.cache().unwrap();
        assert_eq!(cache.misses(), 1);
        assert_eq!(src.get_element(2, 5).unwrap().to_bits(), a.to_bits());
        assert_eq!(src.get_element(5, 2).unwrap().to_bits(), a.to_bits());
        assert_eq!(cache.misses(), 1);
        assert_eq!(cache.hits(), 2);
    }

    #[test]
    fn caching_is_transparent() {
        let (h, c, p) = random_real_instance(2, 3);
        let on = ElementSource::new(h.clone(), c.clone(), p.clone(), Backend::exact(), 0).unwrap();
        let off = ElementSource::new(h, c, p, Backend::exact(), 0).unwrap().without_cache();
        for i in (0..8).rev() {
            assert_eq!(on.connections(i).unwrap(), off.connections(i).unwrap());
            for j in 0..8 {
                assert_eq!(on.get_element(i, j).unwrap().to_bits(), off.get_element(i, j).unwrap().to_bits());
            }
        }
    }

    #[test]
    fn sampled_is_order_independent() {
        let (h, c, p) = random_real_instance(4, 3);
        let be = Backend::sampled(10_000, 1000);
        let a = ElementSource::new(h.clone(), c.clone(), p.clone(), be, 9).unwrap();
        let b = ElementSource::new(h, c, p, be, 9).unwrap().without_cache();
        let fwd: Vec<_> = (0..8).map(|i| a.connections(i).unwrap()).collect();
        let rev: Vec<_> = (0..8).rev().map(|i| b.connections(i).unwrap()).collect();
        assert_eq!(fwd, rev.into_iter().rev().collect::<Vec<_>>());
        for i in 0..8 {
            for j in 0..8 {
                assert_eq!(a.get_element(i, j).unwrap(), a.get_element(j, i).unwrap());
            }
        }
    }

    #[test]
    fn sampled_magnitudes_are_unbiased() {
        let (h, c, p) = random_real_instance(5, 3);
        let exact = ElementSource::new(h.clone(), c.clone(), p.clone(), Backend::Exact { magnitude_floor: 0.0 }, 0)
            .unwrap();
        let i = 0;
        let nu2 = exact.row_norm_sqr(i).unwrap();
        let want: Vec<(u64, f64)> = exact.row_magnitudes(i).unwrap().connections;
        let shots = 20_000u64;
        let seeds = 200;
        let be = Backend::Sampled {
            shots_magnitude: shots,
            shots_sign: 100,
            magnitude_floor: Some(0.0),
            sign_confidence: 3.0,
        };
        let mut sums = [0.0; 8];
        for seed in 0..seeds {
            let src = ElementSource::new(h.clone(), c.clone(), p.clone(), be, seed).unwrap();
            for (j, m) in src.row_magnitudes(i).unwrap().connections {
                sums[j as usize] += m * m;
            }
        }
        for (j, m) in want {
            let q = m * m / nu2;
            let se = nu2 * (q * (1.0 - q) / (shots as f64 * seeds as f64)).sqrt();
            let mean = sums[j as usize] / seeds as f64;
            assert!((mean - m * m).abs() < 3.0 * se + 1e-15, "j={j} mean={mean} want={}", m * m);
        }
    }

    #[test]
    fn sampled_signs_agree_with_exact() {
        let mut checked = 0;
        for seed in 0..10 {
            let (h, c, p) = random_real_instance(seed, 3);
            let ex = ElementSource::new(h.clone(), c.clone(), p.clone(), Backend::exact(), 0).unwrap();
            let sm = ElementSource::new(h, c, p, Backend::sampled(1000, 10_000), seed).unwrap();
            for i in 0..8 {
                let nu = ex.row_norm_sqr(i).unwrap().sqrt();
                for j in i + 1..8 {
                    if ex.get_element(i, j).unwrap().abs() > 0.1 * nu {
                        assert_eq!(sm.element_sign(i, j).unwrap(), ex.element_sign(i, j).unwrap());
                        checked += 1;
                    }
                }
            }
        }
        assert!(checked > 20);
    }

    #[test]
    fn sampled_diagonal_is_close() {
        let (h, c, p) = random_real_instance(6, 3);
        let ex = ElementSource::new(h.clone(), c.clone(), p.clone(), Backend::exact(), 0).unwrap();
        let sm = ElementSource::new(h.clone(), c, p, Backend::sampled(1_000_000, 10), 1).unwrap();
        let l1: f64 = h.terms().iter().map(|t| t.coeff.norm()).sum();
        for i in 0..8 {
            let d = (sm.diagonal_element(i).unwrap() - ex.diagonal_element(i).unwrap()).abs();
            assert!(d < 5.0 * l1 / 1000.0, "{d}");
        }
    }

    #[test]
    fn persisted_cache_reloads_under_same_key() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.bin");
        let (h, c, p) = random_real_instance(7, 3);
        let a = ElementSource::new(h.clone(), c.clone(), p.clone(), Backend::exact(), 0).unwrap();
        for i in 0..8 {
            a.connections(i).unwrap();
        }
        a.save_cache(&path).unwrap();
        let b = ElementSource::new(h.clone(), c.clone(), p.clone(), Backend::exact(), 0).unwrap();
        assert_eq!(b.load_cache(&path).unwrap(), a.cache().unwrap().len());
        assert_eq!(b.get_element(1, 4).unwrap().to_bits(), a.get_element(4, 1).unwrap().to_bits());
        assert_eq!(b.cache().unwrap().misses(), 0);

        let mut p2 = p.clone();
        p2[0] += 1e-3;
        let other = ElementSource::new(h, c, p2, Backend::exact(), 0).unwrap();
        assert!(matches!(other.load_cache(&path), Err(Error::CacheFormat(_))));
    }

    #[test]
    fn complex_basis_is_rejected() {
        let h = PauliSum::from_strs(&[(1.0, "X")]).unwrap();
        let mut c = Circuit::new(1);
        let k = c.add_slot();
        c.push(Gate::Rotation { word: PauliWord::parse("Z").unwrap(), angle: Angle::Slot { slot: k, scale: 1.0 } })
            .unwrap();
        let src = ElementSource::new(h, c, vec![0.7], Backend::exact(), 0).unwrap();
        assert!(matches!(src.get_element(0, 1), Err(Error::ComplexElement(_))));
    }
}
