use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;

use qcqmc_core::fciqmc::{annihilate, blocking, Spawned, WalkerPopulation};
use qcqmc_core::matelem::MatrixElementCache;
use qcqmc_core::nsi::{nsi_report, split, theorem1_bound};
use qcqmc_core::operators::pauli::pauli_product;
use qcqmc_core::simulator::{prepare_basis_state, Angle, Circuit, Gate, Statevector};
use qcqmc_core::PauliWord;

fn word(n: usize) -> impl Strategy<Value = PauliWord> {
    let m = (1u64 << n) - 1;
    (0..=m, 0..=m).prop_map(move |(x, z)| PauliWord::new(n, x, z).unwrap())
}

fn symmetric(n: usize) -> impl Strategy<Value = DMatrix<f64>> {
    prop::collection::vec(-1.0f64..1.0, n * n).prop_map(move |v| {
        let a = DMatrix::from_vec(n, n, v);
        (&a + a.transpose()) * 0.5
    })
}

fn circuit(n: usize) -> impl Strategy<Value = Circuit> {
    prop::collection::vec((word(n), -3.2f64..3.2), 0..8).prop_map(move |gates| {
        let mut c = Circuit::new(n);
        for (w, a) in gates {
            c.push(Gate::Rotation { word: w, angle: Angle::Fixed(a) }).unwrap();
        }
        c
    })
}

fn phase_of(w: &PauliWord, b: u64) -> (u64, Complex64) {
    let (out, ph) = w.act(b);
    (out, ph.to_complex())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn pauli_product_is_associative(a in word(4), b in word(4), c in word(4)) {
        let (p1, ab) = pauli_product(&a, &b).unwrap();
        let (p2, ab_c) = pauli_product(&ab, &c).unwrap();
        let (q1, bc) = pauli_product(&b, &c).unwrap();
        let (q2, a_bc) = pauli_product(&a, &bc).unwrap();
        prop_assert_eq!(ab_c, a_bc);
        let l = p1.to_complex() * p2.to_complex();
        let r = q1.to_complex() * q2.to_complex();
        prop_assert!((l - r).norm() < 1e-12);
    }

    #[test]
    fn pauli_product_acts_as_composition(a in word(3), b in word(3), s in 0u64..8) {
        let (ph, ab) = pauli_product(&a, &b).unwrap();
        let (t, pb) = phase_of(&b, s);
        let (u, pa) = phase_of(&a, t);
        let (v, pab) = phase_of(&ab, s);
        prop_assert_eq!(u, v);
        prop_assert!((pa * pb - ph.to_complex() * pab).norm() < 1e-12);
    }

    #[test]
    fn circuits_preserve_norm_and_invert(c in circuit(3), b in 0u64..8) {
        let mut s = prepare_basis_state(3, b).unwrap();
        c.apply(&mut s, &[]).unwrap();
        prop_assert!((s.norm() - 1.0).abs() < 1e-10);
        c.apply_inverse(&mut s, &[]).unwrap();
        prop_assert!((s.amplitudes()[b as usize].norm_sqr() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn circuits_are_linear(c in circuit(2), re in prop::collection::vec(-1.0f64..1.0, 8), alpha in -2.0f64..2.0) {
        let s1: Vec<Complex64> = (0..4).map(|k| Complex64::new(re[k], re[k + 4])).collect();
        let s2: Vec<Complex64> = (0..4).map(|k| Complex64::new(re[3 - k], -re[k])).collect();
        let run = |v: Vec<Complex64>| {
            let mut s = Statevector::from_amplitudes(2, v).unwrap();
            c.apply(&mut s, &[]).unwrap();
            s.into_amplitudes()
        };
        let combined: Vec<Complex64> = s1.iter().zip(&s2).map(|(a, b)| a * alpha + b).collect();
        let lhs = run(combined);
        let (o1, o2) = (run(s1), run(s2));
        for k in 0..4 {
            prop_assert!((lhs[k] - (o1[k] * alpha + o2[k])).norm() < 1e-10);
        }
    }

    #[test]
    fn thermal_indicator_is_bounded(h in symmetric(4), beta in prop::sample::select(vec![0.05, 0.1, 0.5])) {
        let r = nsi_report(&h, beta, Some(0)).unwrap();
        prop_assert!(r.s_thermal >= -1e-10);
        prop_assert!(r.theorem1_bound >= r.s_thermal);
        prop_assert_eq!(r.avg_sign * (1.0 + r.s_thermal), 1.0);
        prop_assert_eq!(theorem1_bound(&split(&h).unwrap(), beta), r.theorem1_bound);
    }

    #[test]
    fn stoquastic_matrices_have_no_sign_problem(h in symmetric(5)) {
        let s = h.map_with_location(|i, j, v| if i == j { v } else { -v.abs() });
        prop_assert_eq!(nsi_report(&s, 0.3, Some(2)).unwrap().s_thermal, 0.0);
    }

    #[test]
    fn annihilation_conserves_signed_population(
        parents in prop::collection::btree_map(0u64..16, -5i64..5, 0..10),
        spawned in prop::collection::btree_map(0u64..16, -5i64..5, 0..10),
    ) {
        let p = WalkerPopulation::from_counts(parents.clone());
        let s: Spawned = spawned.clone();
        let out = annihilate(p, &s);
        for k in 0..16u64 {
            let want = parents.get(&k).copied().unwrap_or(0) + spawned.get(&k).copied().unwrap_or(0);
            prop_assert_eq!(out.get(k), want);
        }
        let total: u64 = (0..16u64).map(|k| out.get(k).unsigned_abs()).sum();
        prop_assert_eq!(out.total_walkers(), total);
        prop_assert!(out.iter().all(|(_, n)| n != 0));
    }

    #[test]
    fn cache_is_symmetric(entries in prop::collection::vec((0u64..32, 0u64..32, -1.0f64..1.0), 1..20)) {
        let c = MatrixElementCache::new();
        for &(i, j, v) in &entries {
            let stored = c.insert_if_absent(i, j, v);
            prop_assert_eq!(c.lookup(j, i), Some(stored));
        }
        prop_assert!(c.sorted_entries().iter().all(|&(i, j, _)| i <= j));
    }

    #[test]
    fn blocking_keeps_the_sample_mean(x in prop::collection::vec(-10.0f64..10.0, 16..200)) {
        let r = blocking(&x).unwrap();
        let m = x.iter().sum::<f64>() / x.len() as f64;
        prop_assert!((r.mean - m).abs() < 1e-12);
        prop_assert!(r.std_error >= 0.0);
        prop_assert!(r.levels.iter().all(|l| l.n_blocks >= 2));
    }
}
