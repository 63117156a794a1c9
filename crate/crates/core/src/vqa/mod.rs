//! Variational circuits: Hamiltonian-variational and ADAPT ansatze, exact
//! energies, gradients, and a line-search optimizer.
//!
//! Every generator is stored as a Hermitian [`PauliSum`] `K`, realized as
//! `exp(-i theta K)`, i.e. one Pauli rotation per term with angle
//! `2 k_j theta`. When the terms of `K` commute this is exact; otherwise it is
//! a first-order product formula in term order.

mod adapt;
mod optimize;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::operators::fermion::{jordan_wigner, FermionSum, FermionTerm};
use crate::operators::hubbard::{hubbard_parts, spin_orbital, HubbardSpec};
use crate::operators::pauli::PauliSum;
use crate::simulator::{
    apply_gate, expectation_unchecked, prepare_circuit_state, Angle, Circuit, Gate, HERMITIAN_TOL,
};

pub use adapt::{adapt_vqe, fermionic_pool, AdaptResult, AdaptSettings, AdaptStep, PoolKind, PoolOperator};
pub use optimize::{vqe_minimize, OptimizerSettings, VqeResult};

/// Largest imaginary coefficient accepted in a Hermitian generator.
const REAL_COEFF_TOL: f64 = 1e-12;

fn check_hermitian(h: &PauliSum) -> Result<()> {
    let d = h.hermiticity_defect();
    if d > HERMITIAN_TOL {
        return Err(Error::NotHermitian(d));
    }
    Ok(())
}

/// Append `exp(-i theta K)` bound to `slot`.
pub fn push_generator(c: &mut Circuit, k: &PauliSum, slot: usize) -> Result<()> {
    for t in k.terms() {
        if t.coeff.im.abs() > REAL_COEFF_TOL {
            return Err(Error::NotHermitian(t.coeff.im.abs()));
        }
        c.push(Gate::Rotation { word: t.word, angle: Angle::Slot { slot, scale: 2.0 * t.coeff.re } })?;
    }
    Ok(())
}

/// Layered ansatz: `layers` repetitions of `exp(-i theta_{l,p} part_p)` over
/// the parts in order, one slot per (layer, part). The reference state is
/// not part of the circuit.
pub fn hv_ansatz(parts: &[PauliSum], layers: usize) -> Result<Circuit> {
    let first = parts.first().ok_or_else(|| Error::invalid("empty Hamiltonian partition"))?;
    let n = first.n_qubits();
    for p in parts {
        if p.n_qubits() != n {
            return Err(Error::QubitMismatch(p.n_qubits(), n));
        }
        check_hermitian(p)?;
    }
    let mut c = Circuit::new(n);
    for _ in 0..layers {
        for p in parts {
            let slot = c.add_slot();
            push_generator(&mut c, p, slot)?;
        }
    }
    Ok(c)
}

/// Hubbard interaction and hopping parts in qubit form, interaction first.
pub fn hubbard_hv_parts(spec: &HubbardSpec) -> Result<Vec<PauliSum>> {
    let (int, hop) = hubbard_parts(spec)?;
    Ok(vec![jordan_wigner(&int)?, jordan_wigner(&hop)?])
}

/// `i (T - T^dag)` in qubit form: Hermitian, with real coefficients on words
/// carrying an odd number of `Y`, so `exp(-i theta K)` is a real rotation.
pub fn real_generator(t: &FermionSum) -> Result<PauliSum> {
    Ok(jordan_wigner(&t.anti_hermitian_part())?.scale(Complex64::new(0.0, 1.0)))
}

/// Real-valued layered ansatz for the Hubbard model. Per bond, in lattice
/// order: the on-site pair transfer `i(a+_iu a+_id a_jd a_ju - h.c.)` (the
/// part that acts like the interaction), then, per bond again, the
/// spin-summed orbital rotation `i sum_s (a+_is a_js - h.c.)` (the hopping
/// counterpart). Every rotation is a real orthogonal matrix, so transformed
/// Hamiltonians stay real.
pub fn hubbard_real_hv_parts(spec: &HubbardSpec) -> Result<Vec<PauliSum>> {
    let n = spec.n_qubits();
    let edges = spec.edges();
    let mut parts = Vec::with_capacity(2 * edges.len());
    for &(i, j) in &edges {
        let (iu, id) = (spin_orbital(i, 0), spin_orbital(i, 1));
        let (ju, jd) = (spin_orbital(j, 0), spin_orbital(j, 1));
        let t = FermionSum::from_terms(n, vec![FermionTerm::two_body(1.0, iu, id, jd, ju)])?;
        parts.push(real_generator(&t)?);
    }
    for &(i, j) in &edges {
        let terms = (0..2).map(|s| FermionTerm::one_body(1.0, spin_orbital(i, s), spin_orbital(j, s))).collect();
        parts.push(real_generator(&FermionSum::from_terms(n, terms)?)?);
    }
    Ok(parts)
}

/// `<ref| U^dag H U |ref>`.
pub fn energy(c: &Circuit, h: &PauliSum, params: &[f64], reference: u64) -> Result<f64> {
    if h.n_qubits() != c.n_qubits() {
        return Err(Error::QubitMismatch(h.n_qubits(), c.n_qubits()));
    }
    check_hermitian(h)?;
    let s = prepare_circuit_state(c, params, reference)?;
    let e = expectation_unchecked(s.amplitudes(), h);
    if !e.is_finite() {
        return Err(Error::Numerical("non-finite energy".into()));
    }
    Ok(e)
}

/// Parameter-shift gradient. For a gate with angle `scale * theta_k`, the
/// shifts `+-pi/2` are applied to the gate angle and the difference is
/// weighted by `scale`; gates sharing a slot are summed.
pub fn gradient(c: &Circuit, h: &PauliSum, params: &[f64], reference: u64) -> Result<Vec<f64>> {
    let mut g = vec![0.0; c.n_slots()];
    let half_pi = std::f64::consts::FRAC_PI_2;
    for (k, gk) in g.iter_mut().enumerate() {
        for pos in c.slot_gates(k) {
            let Gate::Rotation { word, angle: Angle::Slot { scale, .. } } = c.gates()[pos] else {
                return Err(Error::invalid("parameterized gate is not a rotation"));
            };
            let base = scale * params[k];
            let shifted = |delta: f64| -> Result<f64> {
                let mut cc = Circuit::new(c.n_qubits());
                cc.reserve_slots(c.n_slots());
                for (q, gate) in c.gates().iter().enumerate() {
                    if q == pos {
                        cc.push(Gate::Rotation { word, angle: Angle::Fixed(base + delta) })?;
                    } else {
                        cc.push(*gate)?;
                    }
                }
                energy(&cc, h, params, reference)
            };
            *gk += scale * 0.5 * (shifted(half_pi)? - shifted(-half_pi)?);
        }
    }
    Ok(g)
}

/// Energy and its exact gradient from one forward and one backward pass.
pub fn energy_and_gradient(c: &Circuit, h: &PauliSum, params: &[f64], reference: u64) -> Result<(f64, Vec<f64>)> {
    if h.n_qubits() != c.n_qubits() {
        return Err(Error::QubitMismatch(h.n_qubits(), c.n_qubits()));
    }
    check_hermitian(h)?;
    let psi = prepare_circuit_state(c, params, reference)?;
    let e = expectation_unchecked(psi.amplitudes(), h);
    if !e.is_finite() {
        return Err(Error::Numerical("non-finite energy".into()));
    }
    let mut phi = psi.into_amplitudes();
    let mut lam = h.apply(&phi);
    let mut grad = vec![0.0; c.n_slots()];
    let mut buf = vec![Complex64::default(); phi.len()];
    for g in c.gates().iter().rev() {
        if let Gate::Rotation { word, angle: Angle::Slot { slot, scale } } = g {
            // dE/d(angle) = Im <lam| P |phi>.
            buf.copy_from_slice(&phi);
            apply_gate(&mut buf, &Gate::Pauli(*word), params, false);
            let z: Complex64 = lam.iter().zip(&buf).map(|(l, p)| l.conj() * p).sum();
            grad[*slot] += scale * z.im;
        }
        apply_gate(&mut phi, g, params, true);
        apply_gate(&mut lam, g, params, true);
    }
    Ok((e, grad))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactdiag::{pauli_spectrum, spin_sector};
    use crate::operators::hubbard::build_hubbard;
    use crate::operators::pauli::{PauliTerm, PauliWord};
    use crate::simulator::prepare_basis_state;
    use rand::{Rng, SeedableRng};

    fn random_word(n: usize, rng: &mut impl Rng) -> PauliWord {
        let m = (1u64 << n) - 1;
        PauliWord::new(n, rng.random::<u64>() & m, rng.random::<u64>() & m).unwrap()
    }

    fn random_instance(rng: &mut impl Rng) -> (Circuit, PauliSum, Vec<f64>) {
        let n = rng.random_range(1..=4);
        let terms: Vec<PauliTerm> =
            (0..6).map(|_| PauliTerm::new(rng.random_range(-1.0..1.0), random_word(n, rng))).collect();
        let h = PauliSum::from_terms(n, terms).unwrap();
        let mut c = Circuit::new(n);
        c.reserve_slots(3);
        for _ in 0..10 {
            let w = random_word(n, rng);
            let g = if rng.random_bool(0.7) {
                Gate::Rotation { word: w, angle: Angle::Slot { slot: rng.random_range(0..3), scale: rng.random_range(-2.0..2.0) } }
            } else {
                Gate::Rotation { word: w, angle: Angle::Fixed(rng.random_range(-2.0..2.0)) }
            };
            c.push(g).unwrap();
        }
        let p = (0..3).map(|_| rng.random_range(-3.0..3.0)).collect();
        (c, h, p)
    }

    #[test]
    fn zero_layers_is_reference() {
        let spec = HubbardSpec::new(1, 2, 1.0, 4.0);
        let parts = hubbard_hv_parts(&spec).unwrap();
        let c = hv_ansatz(&parts, 0).unwrap();
        assert!(c.is_empty());
        let h = jordan_wigner(&build_hubbard(&spec).unwrap()).unwrap();
        let e = energy(&c, &h, &[], spec.reference_index()).unwrap();
        assert_eq!(e, h.element(spec.reference_index(), spec.reference_index()).re);
    }

    #[test]
    fn hv_counts() {
        let spec = HubbardSpec::new(1, 2, 1.0, 4.0);
        let parts = hubbard_hv_parts(&spec).unwrap();
        let c = hv_ansatz(&parts, 1).unwrap();
        assert_eq!(c.n_slots(), 2);
        let per_layer: usize = parts.iter().map(|p| p.len()).sum();
        assert_eq!(hv_ansatz(&parts, 3).unwrap().gates().len(), 3 * per_layer);
        assert!(hv_ansatz(&[], 2).is_err());
    }

    #[test]
    fn zero_parameters_leave_reference() {
        let spec = HubbardSpec::new(2, 2, 1.0, 4.0);
        for parts in [hubbard_hv_parts(&spec).unwrap(), hubbard_real_hv_parts(&spec).unwrap()] {
            let c = hv_ansatz(&parts, 2).unwrap();
            let s = prepare_circuit_state(&c, &vec![0.0; c.n_slots()], spec.reference_index()).unwrap();
            let r = prepare_basis_state(8, spec.reference_index()).unwrap();
            assert!((s.inner(&r).unwrap().norm() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn real_parts_have_odd_y_words() {
        let spec = HubbardSpec::new(2, 2, 1.0, 4.0);
        let parts = hubbard_real_hv_parts(&spec).unwrap();
        assert_eq!(parts.len(), 8);
        for p in &parts {
            assert!(p.is_hermitian(1e-14));
            assert!(p.terms().iter().all(|t| !t.word.is_real() && t.coeff.im == 0.0));
        }
    }

    #[test]
    fn cosine_toy() {
        // E(theta) = <0| R_y(theta)^dag Z R_y(theta) |0> = cos(theta).
        let mut c = Circuit::new(1);
        let k = c.add_slot();
        c.push(Gate::Rotation { word: PauliWord::parse("Y").unwrap(), angle: Angle::Slot { slot: k, scale: 1.0 } })
            .unwrap();
        let h = PauliSum::from_strs(&[(1.0, "Z")]).unwrap();
        for th in [0.0, 0.4, 2.0, std::f64::consts::PI] {
            assert!((energy(&c, &h, &[th], 0).unwrap() - th.cos()).abs() < 1e-14);
        }
        assert!(gradient(&c, &h, &[0.0], 0).unwrap()[0].abs() < 1e-15);
        let g = gradient(&c, &h, &[0.4], 0).unwrap()[0];
        assert!((g + 0.4f64.sin()).abs() < 1e-14);
    }

    #[test]
    fn shift_rule_matches_finite_differences() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(12);
        for _ in 0..20 {
            let (c, h, p) = random_instance(&mut rng);
            let g = gradient(&c, &h, &p, 0).unwrap();
            let (_, ga) = energy_and_gradient(&c, &h, &p, 0).unwrap();
            for k in 0..p.len() {
                let step = 1e-5;
                let mut pp = p.clone();
                pp[k] += step;
                let ep = energy(&c, &h, &pp, 0).unwrap();
                pp[k] -= 2.0 * step;
                let em = energy(&c, &h, &pp, 0).unwrap();
                let fd = (ep - em) / (2.0 * step);
                let scale = g[k].abs().max(1e-3);
                assert!((g[k] - fd).abs() / scale < 1e-6, "slot {k}: {} vs {fd}", g[k]);
                assert!((g[k] - ga[k]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn shared_slot_gradient_is_sum_of_gate_shifts() {
        let mut c = Circuit::new(2);
        let k = c.add_slot();
        c.push(Gate::Rotation { word: PauliWord::parse("YX").unwrap(), angle: Angle::Slot { slot: k, scale: 0.7 } })
            .unwrap();
        c.push(Gate::Rotation { word: PauliWord::parse("ZY").unwrap(), angle: Angle::Slot { slot: k, scale: -1.3 } })
            .unwrap();
        let h = PauliSum::from_strs(&[(0.5, "XZ"), (-0.2, "ZZ"), (0.9, "IX")]).unwrap();
        let th = 0.31;
        let g = gradient(&c, &h, &[th], 1).unwrap()[0];
        let fd = (energy(&c, &h, &[th + 1e-6], 1).unwrap() - energy(&c, &h, &[th - 1e-6], 1).unwrap()) / 2e-6;
        assert!((g - fd).abs() < 1e-8);
    }

    #[test]
    fn real_hv_reaches_plaquette_ground_state() {
        let spec = HubbardSpec::new(2, 2, 1.0, 4.0);
        let h = jordan_wigner(&build_hubbard(&spec).unwrap()).unwrap();
        let exact = pauli_spectrum(&h, Some(&spin_sector(4, 2, 2))).unwrap().ground_energy();
        let c = hv_ansatz(&hubbard_real_hv_parts(&spec).unwrap(), 3).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
        let init: Vec<f64> = (0..c.n_slots()).map(|_| rng.random_range(-0.1..0.1)).collect();
        let res = vqe_minimize(&c, &h, &init, spec.reference_index(), &OptimizerSettings::default()).unwrap();
        assert!(res.energy >= exact - 1e-9);
        assert!(res.energy - exact < 1e-6, "{} vs {exact}", res.energy);
    }
}
