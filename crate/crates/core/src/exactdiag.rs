//! Dense Hermitian eigendecomposition by cyclic Jacobi rotations, thermal
//! traces, and particle-number sectors.

use nalgebra::{ComplexField, DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::operators::pauli::{PauliSum, DEFAULT_DENSE_LIMIT};

/// Relative off-diagonal Frobenius norm at which Jacobi sweeps stop.
pub const JACOBI_TOL: f64 = 1e-12;

/// Hermiticity tolerance, relative to the largest entry (absolute below one).
pub const HERMITIAN_TOL: f64 = 1e-10;

const MAX_SWEEPS: usize = 100;

/// Matrices larger than this (the dense qubit limit) are refused.
pub const DEFAULT_MAX_DIM: usize = 1 << DEFAULT_DENSE_LIMIT;

#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum<T: nalgebra::Scalar> {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    /// Column `k` belongs to `eigenvalues[k]`.
    pub eigenvectors: DMatrix<T>,
}

impl<T: ComplexField<RealField = f64> + Copy> Spectrum<T> {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn ground_energy(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn ground_state(&self) -> DVector<T> {
        self.eigenvectors.column(0).into_owned()
    }

    /// `V diag(lambda) V^dag`.
    pub fn reconstruct(&self) -> DMatrix<T> {
        let mut scaled = self.eigenvectors.clone();
        for (k, &l) in self.eigenvalues.iter().enumerate() {
            scaled.column_mut(k).scale_mut(l);
        }
        scaled * self.eigenvectors.adjoint()
    }
}

fn hermiticity_defect<T: ComplexField<RealField = f64> + Copy>(h: &DMatrix<T>) -> f64 {
    let n = h.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((h[(i, j)] - h[(j, i)].conjugate()).modulus());
        }
    }
    worst
}

/// Eigendecomposition of a Hermitian (real symmetric or complex) matrix.
pub fn diagonalize<T: ComplexField<RealField = f64> + Copy>(h: &DMatrix<T>) -> Result<Spectrum<T>> {
    diagonalize_with_limit(h, DEFAULT_MAX_DIM)
}

pub fn diagonalize_with_limit<T: ComplexField<RealField = f64> + Copy>(
    h: &DMatrix<T>,
    max_dim: usize,
) -> Result<Spectrum<T>> {
    let n = h.nrows();
    if h.ncols() != n {
        return Err(Error::invalid(format!("matrix is {}x{}, not square", n, h.ncols())));
    }
    if n > max_dim {
        let q = (usize::BITS - n.leading_zeros()) as usize;
        return Err(Error::DenseLimit { n_qubits: q, limit: max_dim.trailing_zeros() as usize });
    }
    let scale = h.iter().map(|z| z.modulus()).fold(0.0, f64::max);
    if !scale.is_finite() {
        return Err(Error::Numerical("matrix has non-finite entries".into()));
    }
    let defect = hermiticity_defect(h);
    if defect > HERMITIAN_TOL * scale.max(1.0) {
        return Err(Error::NotHermitian(defect));
    }

    let mut a = h.clone();
    // Symmetrize exactly so the rotations see a Hermitian matrix.
    for i in 0..n {
        a[(i, i)] = T::from_real(a[(i, i)].real());
        for j in (i + 1)..n {
            let avg = (a[(i, j)] + a[(j, i)].conjugate()).scale(0.5);
            a[(i, j)] = avg;
            a[(j, i)] = avg.conjugate();
        }
    }
    let mut v = DMatrix::<T>::identity(n, n);
    let total = a.norm();
    let off_norm = |a: &DMatrix<T>| -> f64 {
        let mut s = 0.0;
        for j in 0..n {
            for i in 0..n {
                if i != j {
                    s += a[(i, j)].modulus_squared();
                }
            }
        }
        s.sqrt()
    };

    let mut converged = n <= 1 || off_norm(&a) <= JACOBI_TOL * total;
    let mut sweeps = 0;
    while !converged {
        if sweeps == MAX_SWEEPS {
            return Err(Error::Numerical(format!(
                "Jacobi did not converge in {MAX_SWEEPS} sweeps (off-diagonal {:e})",
                off_norm(&a)
            )));
        }
        sweeps += 1;
        for p in 0..n {
            for q in (p + 1)..n {
                rotate(&mut a, &mut v, p, q);
            }
        }
        converged = off_norm(&a) <= JACOBI_TOL * total;
    }

    let mut order: Vec<usize> = (0..n).collect();
    let diag: Vec<f64> = (0..n).map(|k| a[(k, k)].real()).collect();
    order.sort_by(|&x, &y| diag[x].total_cmp(&diag[y]));
    let eigenvalues = order.iter().map(|&k| diag[k]).collect();
    let mut vecs = DMatrix::<T>::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        let mut col = v.column(src).into_owned();
        fix_phase(&mut col);
        vecs.set_column(dst, &col);
    }
    Ok(Spectrum { eigenvalues, eigenvectors: vecs })
}

/// One two-sided Jacobi rotation zeroing `a[(p, q)]`.
fn rotate<T: ComplexField<RealField = f64> + Copy>(a: &mut DMatrix<T>, v: &mut DMatrix<T>, p: usize, q: usize) {
    let n = a.nrows();
    let apq = a[(p, q)];
    let g = apq.modulus();
    if g == 0.0 {
        return;
    }
    // Phase step: make a[(p, q)] real and positive by rescaling index q.
    let ph = apq.scale(1.0 / g);
    let cph = ph.conjugate();
    for k in 0..n {
        a[(k, q)] *= cph;
        v[(k, q)] *= cph;
    }
    for k in 0..n {
        a[(q, k)] *= ph;
    }

    let app = a[(p, p)].real();
    let aqq = a[(q, q)].real();
    let tau = (aqq - app) / (2.0 * g);
    let t = if tau >= 0.0 { 1.0 / (tau + (1.0 + tau * tau).sqrt()) } else { -1.0 / (-tau + (1.0 + tau * tau).sqrt()) };
    let c = 1.0 / (1.0 + t * t).sqrt();
    let s = t * c;

    for k in 0..n {
        let (akp, akq) = (a[(k, p)], a[(k, q)]);
        a[(k, p)] = akp.scale(c) - akq.scale(s);
        a[(k, q)] = akp.scale(s) + akq.scale(c);
        let (vkp, vkq) = (v[(k, p)], v[(k, q)]);
        v[(k, p)] = vkp.scale(c) - vkq.scale(s);
        v[(k, q)] = vkp.scale(s) + vkq.scale(c);
    }
    for k in 0..n {
        let (apk, aqk) = (a[(p, k)], a[(q, k)]);
        a[(p, k)] = apk.scale(c) - aqk.scale(s);
        a[(q, k)] = apk.scale(s) + aqk.scale(c);
    }
    a[(p, q)] = T::zero();
    a[(q, p)] = T::zero();
    a[(p, p)] = T::from_real(app - t * g);
    a[(q, q)] = T::from_real(aqq + t * g);
}

/// Make the largest-magnitude entry (first one, up to rounding) real positive.
fn fix_phase<T: ComplexField<RealField = f64> + Copy>(col: &mut DVector<T>) {
    let max = col.iter().map(|z| z.modulus()).fold(0.0, f64::max);
    if max == 0.0 {
        return;
    }
    let pivot = col.iter().position(|z| z.modulus() >= max * (1.0 - 1e-10)).unwrap_or(0);
    let z = col[pivot];
    let ph = z.scale(1.0 / z.modulus()).conjugate();
    for e in col.iter_mut() {
        *e *= ph;
    }
}

/// `sum_k exp(-beta (lambda_k - shift))`.
pub fn thermal_trace_shifted<T: nalgebra::Scalar>(spec: &Spectrum<T>, beta: f64, shift: f64) -> f64 {
    spec.eigenvalues.iter().map(|&l| (-beta * (l - shift)).exp()).sum()
}

/// `Tr exp(-beta H)`, summed relative to the lowest eigenvalue and rescaled.
pub fn thermal_trace<T: nalgebra::Scalar>(spec: &Spectrum<T>, beta: f64) -> f64 {
    let Some(&lmin) = spec.eigenvalues.first() else {
        return 0.0;
    };
    (-beta * lmin).exp() * thermal_trace_shifted(spec, beta, lmin)
}

/// `sum_k exp(-beta (lambda_k - shift)) |<v_k|v>|^2`.
pub fn matrix_exponential_quadratic_shifted<T: ComplexField<RealField = f64> + Copy>(
    spec: &Spectrum<T>,
    v: &DVector<T>,
    beta: f64,
    shift: f64,
) -> Result<f64> {
    if v.len() != spec.dim() {
        return Err(Error::invalid(format!("vector of length {} for dimension {}", v.len(), spec.dim())));
    }
    let overlaps = spec.eigenvectors.adjoint() * v;
    Ok(spec
        .eigenvalues
        .iter()
        .zip(overlaps.iter())
        .map(|(&l, o)| (-beta * (l - shift)).exp() * o.modulus_squared())
        .sum())
}

/// `<v| exp(-beta H) |v>`.
pub fn matrix_exponential_quadratic<T: ComplexField<RealField = f64> + Copy>(
    spec: &Spectrum<T>,
    v: &DVector<T>,
    beta: f64,
) -> Result<f64> {
    let lmin = spec.eigenvalues.first().copied().unwrap_or(0.0);
    Ok((-beta * lmin).exp() * matrix_exponential_quadratic_shifted(spec, v, beta, lmin)?)
}

/// Basis states with `n` set bits among `n_qubits`, ascending.
pub fn number_sector(n_qubits: usize, n: usize) -> Vec<u64> {
    assert!(n_qubits <= 32, "sector enumeration limited to 32 qubits");
    (0..1u64 << n_qubits).filter(|b| b.count_ones() as usize == n).collect()
}

/// Basis states with `n_up` electrons on even qubits and `n_dn` on odd
/// qubits (interleaved spin-orbitals), ascending.
pub fn spin_sector(n_orbitals: usize, n_up: usize, n_dn: usize) -> Vec<u64> {
    let up_mask = (0..n_orbitals).fold(0u64, |m, p| m | 1 << (2 * p));
    number_sector(2 * n_orbitals, n_up + n_dn)
        .into_iter()
        .filter(|b| (b & up_mask).count_ones() as usize == n_up)
        .collect()
}

/// Convert a complex matrix whose entries are real up to `tol`.
pub fn real_part_checked(m: &DMatrix<Complex64>, tol: f64) -> Result<DMatrix<f64>> {
    let worst = m.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
    if worst > tol {
        return Err(Error::ComplexElement(worst));
    }
    Ok(m.map(|z| z.re))
}

/// Dense matrix of `h`, on the full space or on the listed basis states.
pub fn dense_matrix(h: &PauliSum, basis: Option<&[u64]>) -> Result<DMatrix<Complex64>> {
    match basis {
        None => h.to_dense(),
        Some(b) => {
            if b.len() > DEFAULT_MAX_DIM {
                return Err(Error::DenseLimit { n_qubits: h.n_qubits(), limit: DEFAULT_DENSE_LIMIT });
            }
            Ok(h.to_dense_in_basis(b))
        }
    }
}

/// Spectrum of a qubit Hamiltonian, optionally restricted to a sector.
/// Real Hamiltonians are diagonalized in real arithmetic.
pub fn pauli_spectrum(h: &PauliSum, basis: Option<&[u64]>) -> Result<Spectrum<f64>> {
    let m = dense_matrix(h, basis)?;
    diagonalize(&real_part_checked(&m, 1e-12)?)
}
