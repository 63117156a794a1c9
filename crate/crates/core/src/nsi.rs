//! Non-stoquasticity indicators.
//!
//! A real symmetric `H` is split as `H = H+ + H-`, where `H+` holds the
//! positive off-diagonal entries and `H-` the diagonal plus the negative
//! off-diagonals. The bosonic form `H~ = H- - H+` has every off-diagonal entry
//! non-positive. The indicators compare `exp(-beta H~)` with `exp(-beta H)`:
//!
//! * thermal: `(Tr e^{-beta H~} - Tr e^{-beta H}) / Tr e^{-beta H}`
//! * initial-state: the same with traces replaced by `<phi0| . |phi0>`
//!
//! Both are zero for stoquastic `H`. The thermal indicator is bounded by
//! `2 exp(beta |alpha I - H-|_1) sinh(beta |H+|_1)` with `alpha = max_i H_ii`
//! and `|M|_1 = sum_ij |M_ij|`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exactdiag::{
    diagonalize, matrix_exponential_quadratic_shifted, real_part_checked, thermal_trace_shifted, DEFAULT_MAX_DIM,
};
use crate::operators::pauli::PauliSum;
use crate::simulator::{amplitude_vector, prepare_circuit_state, Circuit};

/// Off-diagonal entries with magnitude at or below this are treated as zero.
pub const SPLIT_TOL: f64 = 1e-12;

/// Largest imaginary part tolerated in a transformed Hamiltonian.
pub const IMAG_TOL: f64 = 1e-9;

/// Largest amplitude allowed to leak out of a requested basis subset.
pub const LEAK_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct StoquasticSplit {
    pub h_minus: DMatrix<f64>,
    pub h_plus: DMatrix<f64>,
    pub alpha: f64,
}

impl StoquasticSplit {
    /// `sum_ij |H+_ij|`.
    pub fn l1_h_plus(&self) -> f64 {
        self.h_plus.iter().map(|v| v.abs()).sum()
    }

    /// `sum_ij |(alpha I - H-)_ij|`.
    pub fn l1_alpha_minus_h_minus(&self) -> f64 {
        let n = self.h_minus.nrows();
        let mut s = 0.0;
        for j in 0..n {
            for i in 0..n {
                let v = if i == j { self.alpha - self.h_minus[(i, j)] } else { -self.h_minus[(i, j)] };
                s += v.abs();
            }
        }
        s
    }

    pub fn is_stoquastic(&self) -> bool {
        self.h_plus.iter().all(|&v| v == 0.0)
    }
}

fn check_symmetric(h: &DMatrix<f64>) -> Result<()> {
    let n = h.nrows();
    if h.ncols() != n {
        return Err(Error::invalid(format!("matrix is {}x{}, not square", n, h.ncols())));
    }
    let scale = h.amax().max(1.0);
    for j in 0..n {
        for i in (j + 1)..n {
            let d = (h[(i, j)] - h[(j, i)]).abs();
            if d > 1e-10 * scale {
                return Err(Error::NotHermitian(d));
            }
        }
    }
    Ok(())
}

/// Split a real symmetric matrix into its sign-classified parts.
pub fn split(h: &DMatrix<f64>) -> Result<StoquasticSplit> {
    check_symmetric(h)?;
    let n = h.nrows();
    let mut h_minus = DMatrix::zeros(n, n);
    let mut h_plus = DMatrix::zeros(n, n);
    let mut alpha = f64::NEG_INFINITY;
    for j in 0..n {
        for i in 0..n {
            let v = h[(i, j)];
            if i == j {
                h_minus[(i, j)] = v;
                alpha = alpha.max(v);
            } else if v > SPLIT_TOL {
                h_plus[(i, j)] = v;
            } else if v < -SPLIT_TOL {
                h_minus[(i, j)] = v;
            }
        }
    }
    if n == 0 {
        alpha = 0.0;
    }
    Ok(StoquasticSplit { h_minus, h_plus, alpha })
}

/// Split of a complex matrix whose entries must be real to [`IMAG_TOL`].
pub fn split_complex(h: &DMatrix<Complex64>) -> Result<StoquasticSplit> {
    split(&real_part_checked(h, IMAG_TOL)?)
}

/// `H~ = H- - H+`.
pub fn bosonic_form(s: &StoquasticSplit) -> DMatrix<f64> {
    &s.h_minus - &s.h_plus
}

/// Thermal indicator.
pub fn nsi_thermal(h: &DMatrix<f64>, beta: f64) -> Result<f64> {
    Ok(nsi_report(h, beta, None)?.s_thermal)
}

/// Initial-state indicator for the basis state at position `phi0`.
pub fn nsi_initial(h: &DMatrix<f64>, phi0: usize, beta: f64) -> Result<f64> {
    nsi_report(h, beta, Some(phi0))?
        .s_initial
        .ok_or_else(|| Error::Numerical("initial-state indicator undefined".into()))
}

/// `2 exp(beta |alpha I - H-|_1) sinh(beta |H+|_1)`; `+inf` on overflow.
pub fn theorem1_bound(s: &StoquasticSplit, beta: f64) -> f64 {
    bound_from_norms(s.l1_h_plus(), s.l1_alpha_minus_h_minus(), beta)
}

fn bound_from_norms(l1_plus: f64, l1_rest: f64, beta: f64) -> f64 {
    if l1_plus == 0.0 {
        return 0.0;
    }
    let v = 2.0 * (beta * l1_rest).exp() * (beta * l1_plus).sinh();
    if v.is_nan() {
        f64::INFINITY
    } else {
        v
    }
}

/// `|| (1 - |phi0><phi0|) H |phi0> ||^2 = sum_{j != phi0} H_{j,phi0}^2`.
pub fn theorem2_indicator(h: &DMatrix<f64>, phi0: usize) -> Result<f64> {
    if phi0 >= h.ncols() {
        return Err(Error::invalid(format!("phi0 position {phi0} outside dimension {}", h.ncols())));
    }
    Ok(h.column(phi0).iter().enumerate().filter(|&(j, _)| j != phi0).map(|(_, v)| v * v).sum())
}

/// Indicators, bound and norms for one `(H, basis, beta)` triple.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NsiReport {
    pub beta: f64,
    pub s_thermal: f64,
    pub s_initial: Option<f64>,
    pub theorem1_bound: f64,
    pub theorem2_indicator: Option<f64>,
    pub avg_sign: f64,
    /// `-ln(avg_sign) / beta`.
    pub delta_f: f64,
    pub l1_h_plus: f64,
    pub l1_alpha_minus_h_minus: f64,
}

/// Full report on a real symmetric matrix; `phi0` is a row/column position.
pub fn nsi_report(h: &DMatrix<f64>, beta: f64, phi0: Option<usize>) -> Result<NsiReport> {
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::invalid(format!("beta must be positive, got {beta}")));
    }
    if let Some(p) = phi0 {
        if p >= h.ncols() {
            return Err(Error::invalid(format!("phi0 position {p} outside dimension {}", h.ncols())));
        }
    }
    let s = split(h)?;
    let l1_h_plus = s.l1_h_plus();
    let l1_rest = s.l1_alpha_minus_h_minus();
    let theorem1 = bound_from_norms(l1_h_plus, l1_rest, beta);

    let (s_thermal, s_initial) = if s.is_stoquastic() {
        // H~ = H, both indicators vanish identically.
        (0.0, phi0.map(|_| 0.0))
    } else {
        let spec_h = diagonalize(h)?;
        let spec_b = diagonalize(&bosonic_form(&s))?;
        // lambda_min(H~) <= lambda_min(H), so this shift keeps every exponent <= 0.
        let shift = spec_b.ground_energy();
        let z = thermal_trace_shifted(&spec_h, beta, shift);
        let zb = thermal_trace_shifted(&spec_b, beta, shift);
        if !(z.is_finite() && zb.is_finite()) || z <= 0.0 {
            return Err(Error::Numerical(format!("thermal traces overflowed (Z={z:e}, Z~={zb:e})")));
        }
        let initial = match phi0 {
            None => None,
            Some(p) => {
                let mut e = DVector::zeros(h.nrows());
                e[p] = 1.0;
                let g = matrix_exponential_quadratic_shifted(&spec_h, &e, beta, shift)?;
                let gb = matrix_exponential_quadratic_shifted(&spec_b, &e, beta, shift)?;
                if g <= 0.0 || !g.is_finite() {
                    return Err(Error::Numerical(format!("initial-state weight {g:e} not positive")));
                }
                Some((gb - g) / g)
            }
        };
        ((zb - z) / z, initial)
    };

    let avg_sign = 1.0 / (1.0 + s_thermal);
    Ok(NsiReport {
        beta,
        s_thermal,
        s_initial,
        theorem1_bound: theorem1,
        theorem2_indicator: phi0.map(|p| theorem2_indicator(h, p)).transpose()?,
        avg_sign,
        delta_f: -avg_sign.ln() / beta,
        l1_h_plus,
        l1_alpha_minus_h_minus: l1_rest,
    })
}

/// Dense `<b_i| U^dag H U |b_j>` over the listed basis states (all states
/// when `basis` is `None`). Columns are built in parallel, each as
/// `U^dag H U |b_j>`. Fails if any entry has an imaginary part above
/// [`IMAG_TOL`] or if a column leaks out of the subset.
pub fn transformed_matrix(
    h: &PauliSum,
    circuit: &Circuit,
    params: &[f64],
    basis: Option<&[u64]>,
) -> Result<DMatrix<f64>> {
    let n = h.n_qubits();
    if circuit.n_qubits() != n {
        return Err(Error::QubitMismatch(circuit.n_qubits(), n));
    }
    let full: Vec<u64>;
    let basis = match basis {
        Some(b) => b,
        None => {
            if n > crate::operators::pauli::DEFAULT_DENSE_LIMIT {
                return Err(Error::DenseLimit { n_qubits: n, limit: crate::operators::pauli::DEFAULT_DENSE_LIMIT });
            }
            full = (0..1u64 << n).collect();
            &full
        }
    };
    if basis.len() > DEFAULT_MAX_DIM {
        return Err(Error::DenseLimit { n_qubits: n, limit: crate::operators::pauli::DEFAULT_DENSE_LIMIT });
    }
    let columns: Vec<Result<Vec<f64>>> = basis
        .par_iter()
        .map(|&b| {
            let phi = prepare_circuit_state(circuit, params, b)?;
            let w = h.apply(phi.amplitudes());
            let w = crate::simulator::Statevector::from_amplitudes(n, w)?;
            let amps = amplitude_vector(&w, circuit, params)?;
            let mut col = Vec::with_capacity(basis.len());
            let mut inside = 0.0;
            for &r in basis {
                let z = amps[r as usize];
                if z.im.abs() > IMAG_TOL {
                    return Err(Error::ComplexElement(z.im.abs()));
                }
                inside += z.norm_sqr();
                col.push(z.re);
            }
            let total: f64 = amps.iter().map(|z| z.norm_sqr()).sum();
            let leak = (total - inside).max(0.0).sqrt();
            if leak > LEAK_TOL * total.sqrt().max(1.0) {
                return Err(Error::invalid(format!(
                    "transformed column {b:#x} leaks {leak:e} out of the basis subset"
                )));
            }
            Ok(col)
        })
        .collect();
    let d = basis.len();
    let mut m = DMatrix::zeros(d, d);
    for (j, col) in columns.into_iter().enumerate() {
        for (i, v) in col?.into_iter().enumerate() {
            m[(i, j)] = v;
        }
    }
    Ok(m)
}

/// Report for the walker basis `{U|b>}` restricted to `basis` (or the full
/// space), with `phi0` given as a basis index.
pub fn transformed_nsi(
    h: &PauliSum,
    circuit: &Circuit,
    params: &[f64],
    beta: f64,
    phi0: u64,
    basis: Option<&[u64]>,
) -> Result<NsiReport> {
    let m = transformed_matrix(h, circuit, params, basis)?;
    let pos = match basis {
        Some(b) => b
            .iter()
            .position(|&x| x == phi0)
            .ok_or_else(|| Error::invalid(format!("phi0 {phi0:#x} not in the basis subset")))?,
        None => {
            if phi0 as usize >= m.ncols() {
                return Err(Error::IndexOutOfRange { index: phi0, n_qubits: h.n_qubits() });
            }
            phi0 as usize
        }
    };
    nsi_report(&m, beta, Some(pos))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactdiag::spin_sector;
    use crate::operators::pauli::PauliWord;
    use crate::simulator::{Angle, Gate};
    use rand::{Rng, SeedableRng};

    fn m(rows: usize, v: &[f64]) -> DMatrix<f64> {
        DMatrix::from_row_slice(rows, rows, v)
    }

    fn random_symmetric(n: usize, rng: &mut impl Rng) -> DMatrix<f64> {
        let a = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        (&a + a.transpose()) * 0.5
    }

    /// Independent spectra via nalgebra, for the thermal ratio.
    fn thermal_oracle(h: &DMatrix<f64>, beta: f64) -> f64 {
        let hb = DMatrix::from_fn(h.nrows(), h.ncols(), |i, j| if i == j { h[(i, j)] } else { -h[(i, j)].abs() });
        let z = |x: &DMatrix<f64>| -> f64 {
            nalgebra::SymmetricEigen::new(x.clone()).eigenvalues.iter().map(|l| (-beta * l).exp()).sum()
        };
        (z(&hb) - z(h)) / z(h)
    }

    #[test]
    fn split_examples() {
        let x = m(2, &[0.0, 1.0, 1.0, 0.0]);
        let s = split(&x).unwrap();
        assert_eq!(s.h_plus, x);
        assert_eq!(s.h_minus, DMatrix::zeros(2, 2));
        assert_eq!(s.alpha, 0.0);
        assert_eq!(bosonic_form(&s), m(2, &[0.0, -1.0, -1.0, 0.0]));

        let stoq = m(3, &[1.0, -0.5, 0.0, -0.5, 2.0, -0.1, 0.0, -0.1, -1.0]);
        let s = split(&stoq).unwrap();
        assert!(s.is_stoquastic());
        assert_eq!(bosonic_form(&s), stoq);
        assert_eq!(s.alpha, 2.0);
    }

    #[test]
    fn split_reconstructs_and_is_signed() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            let h = random_symmetric(4, &mut rng);
            let s = split(&h).unwrap();
            assert_eq!(&s.h_plus + &s.h_minus, h);
            for i in 0..4 {
                assert_eq!(s.h_plus[(i, i)], 0.0);
                assert!(s.h_plus.row(i).iter().all(|&v| v >= 0.0));
            }
            let hb = bosonic_form(&s);
            for i in 0..4 {
                for j in 0..4 {
                    if i == j {
                        assert_eq!(hb[(i, j)], h[(i, j)]);
                    } else {
                        assert_eq!(hb[(i, j)], -h[(i, j)].abs());
                    }
                }
            }
            // Perron-Frobenius: the bosonic form has the lower ground energy.
            let e = diagonalize(&h).unwrap().ground_energy();
            let eb = diagonalize(&hb).unwrap().ground_energy();
            assert!(eb <= e + 1e-12);
        }
    }

    #[test]
    fn split_drops_float_noise() {
        let h = m(2, &[0.0, 1e-13, 1e-13, 0.0]);
        let s = split(&h).unwrap();
        assert!(s.is_stoquastic());
        assert_eq!(s.h_minus, DMatrix::zeros(2, 2));
        let c = DMatrix::from_element(2, 2, Complex64::new(0.0, 1e-6));
        assert!(matches!(split_complex(&c), Err(Error::ComplexElement(_))));
    }

    #[test]
    fn thermal_zero_cases() {
        let stoq = m(3, &[1.0, -0.5, 0.0, -0.5, 2.0, -0.1, 0.0, -0.1, -1.0]);
        assert!(nsi_thermal(&stoq, 0.3).unwrap().abs() < 1e-10);
        let diag = m(2, &[1.0, 0.0, 0.0, -2.0]);
        assert_eq!(nsi_thermal(&diag, 1.0).unwrap(), 0.0);
        // A positive bond on a bipartite graph can be gauged away: the spectra
        // of H and H~ coincide.
        let g = 0.7;
        let x = m(2, &[0.0, g, g, 0.0]);
        assert!(nsi_thermal(&x, 0.5).unwrap().abs() < 1e-12);
        let chain = m(3, &[0.0, g, 0.0, g, 0.0, g, 0.0, g, 0.0]);
        assert!(nsi_thermal(&chain, 0.5).unwrap().abs() < 1e-12);
    }

    #[test]
    fn frustrated_triangle_is_positive() {
        // A triangle with one positive bond cannot be gauged stoquastic.
        let g = 0.7;
        let tri = m(3, &[0.0, -g, -g, -g, 0.0, g, -g, g, 0.0]);
        let v = nsi_thermal(&tri, 0.5).unwrap();
        assert!(v > 1e-3);
        assert!((v - thermal_oracle(&tri, 0.5)).abs() < 1e-12);
    }

    #[test]
    fn thermal_matches_oracle_and_is_nonnegative() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        for n in [4, 8] {
            for _ in 0..20 {
                let h = random_symmetric(n, &mut rng);
                for beta in [0.05, 0.1, 0.5] {
                    let v = nsi_thermal(&h, beta).unwrap();
                    assert!(v >= -1e-10);
                    assert!((v - thermal_oracle(&h, beta)).abs() < 1e-10 * (1.0 + v));
                }
            }
        }
    }

    #[test]
    fn theorem1_examples() {
        let x = split(&m(2, &[0.0, 1.0, 1.0, 0.0])).unwrap();
        assert_eq!(x.l1_h_plus(), 2.0);
        assert_eq!(x.l1_alpha_minus_h_minus(), 0.0);
        assert!((theorem1_bound(&x, 0.1) - 2.0 * 0.2f64.sinh()).abs() < 1e-15);
        let stoq = split(&m(2, &[1.0, -1.0, -1.0, 3.0])).unwrap();
        assert_eq!(theorem1_bound(&stoq, 0.1), 0.0);
        let big = split(&m(2, &[-1e4, 1e3, 1e3, 1e4])).unwrap();
        assert_eq!(theorem1_bound(&big, 1.0), f64::INFINITY);
    }

    #[test]
    fn initial_state_cases() {
        // phi0 = 0 has a diagonal column: an exact eigenvector.
        let h = m(3, &[-1.0, 0.0, 0.0, 0.0, 0.5, 0.8, 0.0, 0.8, 0.2]);
        let r = nsi_report(&h, 0.7, Some(0)).unwrap();
        assert!(r.s_initial.unwrap().abs() < 1e-10);
        assert_eq!(r.theorem2_indicator, Some(0.0));
        let stoq = m(2, &[0.0, -1.0, -1.0, 1.0]);
        assert_eq!(nsi_initial(&stoq, 1, 0.3).unwrap(), 0.0);
        assert_eq!(theorem2_indicator(&m(2, &[0.0, 1.0, 1.0, 0.0]), 0).unwrap(), 1.0);
    }

    #[test]
    fn initial_state_matches_series() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let h = random_symmetric(4, &mut rng);
            let beta = 0.5 / h.norm();
            let hb = bosonic_form(&split(&h).unwrap());
            let series = |x: &DMatrix<f64>| -> f64 {
                let mut term = DMatrix::<f64>::identity(4, 4);
                let mut sum = 1.0;
                for n in 1..=20 {
                    term = &term * x * (-beta / n as f64);
                    sum += term[(0, 0)];
                }
                sum
            };
            let oracle = (series(&hb) - series(&h)) / series(&h);
            let v = nsi_initial(&h, 0, beta).unwrap();
            assert!(v >= -1e-10);
            assert!((v - oracle).abs() < 1e-8);
        }
    }

    #[test]
    fn theorem2_is_variance() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        for _ in 0..20 {
            let h = random_symmetric(6, &mut rng);
            let p = rng.random_range(0..6);
            let h2 = &h * &h;
            let var = h2[(p, p)] - h[(p, p)] * h[(p, p)];
            assert!((theorem2_indicator(&h, p).unwrap() - var).abs() < 1e-10);
        }
    }

    #[test]
    fn report_consistency() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let h = random_symmetric(5, &mut rng);
        let r = nsi_report(&h, 0.2, Some(1)).unwrap();
        assert!((r.avg_sign * (1.0 + r.s_thermal) - 1.0).abs() <= f64::EPSILON);
        assert!((r.delta_f + r.avg_sign.ln() / 0.2).abs() < 1e-15);
        assert!(r.theorem1_bound >= r.s_thermal);
        assert!(nsi_report(&h, 0.0, None).is_err());
        let json = serde_json::to_string(&r).unwrap();
        assert!(json.contains("\"s_thermal\""));
    }

    #[test]
    fn identity_circuit_matches_direct() {
        let h = crate::operators::fermion::jordan_wigner(
            &crate::operators::hubbard::build_hubbard(&crate::HubbardSpec::new(1, 2, 1.0, 4.0)).unwrap(),
        )
        .unwrap();
        let basis = spin_sector(2, 1, 1);
        let direct = real_part_checked(&h.to_dense_in_basis(&basis), 0.0).unwrap();
        let via = transformed_matrix(&h, &Circuit::new(4), &[], Some(&basis)).unwrap();
        assert_eq!(direct, via);
        let a = nsi_report(&direct, 0.1, Some(0)).unwrap();
        let b = transformed_nsi(&h, &Circuit::new(4), &[], 0.1, basis[0], Some(&basis)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn diagonalizing_circuit_removes_sign_problem() {
        // H = cos(phi) Z + sin(phi) X is rotated onto Z by exp(-i phi/2 Y).
        let phi = 0.9f64;
        let h = PauliSum::from_strs(&[(phi.cos(), "Z"), (phi.sin(), "X")]).unwrap();
        let mut c = Circuit::new(1);
        c.push(Gate::Rotation { word: PauliWord::parse("Y").unwrap(), angle: Angle::Fixed(phi) }).unwrap();
        let mt = transformed_matrix(&h, &c, &[], None).unwrap();
        assert!((mt[(0, 1)]).abs() < 1e-14);
        let r = transformed_nsi(&h, &c, &[], 0.1, 0, None).unwrap();
        assert_eq!(r.s_thermal, 0.0);
        let r0 = transformed_nsi(&h, &Circuit::new(1), &[], 0.1, 0, None).unwrap();
        assert!(r0.l1_h_plus > 0.0);
    }

    #[test]
    fn complex_transform_rejected() {
        let h = PauliSum::from_strs(&[(1.0, "X")]).unwrap();
        let mut c = Circuit::new(1);
        c.push(Gate::Rotation { word: PauliWord::parse("Z").unwrap(), angle: Angle::Fixed(0.5) }).unwrap();
        assert!(matches!(transformed_matrix(&h, &c, &[], None), Err(Error::ComplexElement(_))));
    }

    #[test]
    fn sector_leak_detected() {
        let h = PauliSum::from_strs(&[(1.0, "XI")]).unwrap();
        let err = transformed_matrix(&h, &Circuit::new(2), &[], Some(&[0b01, 0b10]));
        assert!(matches!(err, Err(Error::Invalid(_))));
    }
}
