//! Dense-matrix oracles and small-matrix helpers.
//!
//! Everything here is O(4^N) or worse and exists for exact reference values
//! (ground energies, spectra, test oracles) and for the 2x2 / 4x4 matrices of
//! the POVM machinery.  Qubit 0 is the most significant bit of the basis
//! index, so |1100> on four qubits is index 12.

use nalgebra::{DMatrix, DVector, Matrix2, Matrix4};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::pauli::{PauliString, PauliSum};

pub type C64 = Complex64;
pub type Mat2 = Matrix2<Complex64>;
pub type Mat4 = Matrix4<Complex64>;

/// Index-space bitmasks of a string: qubit q maps to index bit N-1-q.
pub fn index_masks(s: &PauliString) -> (u64, u64) {
    let n = s.n_qubits();
    let mut x = 0u64;
    let mut z = 0u64;
    for q in 0..n {
        if s.x_mask() >> q & 1 == 1 {
            x |= 1 << (n - 1 - q);
        }
        if s.z_mask() >> q & 1 == 1 {
            z |= 1 << (n - 1 - q);
        }
    }
    (x, z)
}

/// Phase of `S|b>` (the target index is `b ^ xbits`).
pub fn string_phase(s: &PauliString, b: u64, zbits: u64) -> Complex64 {
    let y_count = (s.x_mask() & s.z_mask()).count_ones();
    let mut phase = match y_count % 4 {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    };
    if (b & zbits).count_ones() % 2 == 1 {
        phase = -phase;
    }
    phase
}

pub fn string_matrix(s: &PauliString) -> DMatrix<Complex64> {
    let dim = 1usize << s.n_qubits();
    let (xbits, zbits) = index_masks(s);
    let mut m = DMatrix::zeros(dim, dim);
    for col in 0..dim as u64 {
        let row = col ^ xbits;
        m[(row as usize, col as usize)] = string_phase(s, col, zbits);
    }
    m
}

pub fn sum_matrix(a: &PauliSum) -> DMatrix<Complex64> {
    let dim = 1usize << a.n_qubits();
    let mut m = DMatrix::zeros(dim, dim);
    for (s, c) in a.terms() {
        let (xbits, zbits) = index_masks(s);
        for col in 0..dim as u64 {
            let row = col ^ xbits;
            m[(row as usize, col as usize)] += c * string_phase(s, col, zbits);
        }
    }
    m
}

/// Sorted eigenvalues of a Hermitian matrix.
pub fn eigenvalues(m: &DMatrix<Complex64>) -> Vec<f64> {
    let mut ev: Vec<f64> = m.clone().symmetric_eigen().eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| a.total_cmp(b));
    ev
}

/// Lowest eigenvalue and a matching eigenvector of a Hermitian matrix.
pub fn ground_pair(m: &DMatrix<Complex64>) -> (f64, DVector<Complex64>) {
    let eig = m.clone().symmetric_eigen();
    let mut best = 0;
    for i in 1..eig.eigenvalues.len() {
        if eig.eigenvalues[i] < eig.eigenvalues[best] {
            best = i;
        }
    }
    (eig.eigenvalues[best], eig.eigenvectors.column(best).into_owned())
}

/// All eigenpairs of a Hermitian matrix, ascending by eigenvalue.
pub fn eigenpairs(m: &DMatrix<Complex64>) -> Vec<(f64, DVector<Complex64>)> {
    let eig = m.clone().symmetric_eigen();
    let mut pairs: Vec<(f64, DVector<Complex64>)> = eig
        .eigenvalues
        .iter()
        .enumerate()
        .map(|(i, &v)| (v, eig.eigenvectors.column(i).into_owned()))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs
}

pub fn check_hermitian(m: &DMatrix<Complex64>, tol: f64) -> Result<()> {
    let d = m - m.adjoint();
    let worst = d.iter().map(|c| c.norm()).fold(0.0, f64::max);
    if worst > tol {
        return Err(Error::NotHermitian(worst));
    }
    Ok(())
}

/// exp(i H) for Hermitian 4x4 H, via eigendecomposition.
pub fn expi_hermitian4(h: &Mat4) -> Mat4 {
    let eig = nalgebra::SymmetricEigen::new(*h);
    let mut out = Mat4::zeros();
    for k in 0..4 {
        let v = eig.eigenvectors.column(k);
        let phase = Complex64::from_polar(1.0, eig.eigenvalues[k]);
        for r in 0..4 {
            for c in 0..4 {
                out[(r, c)] += phase * v[r] * v[c].conj();
            }
        }
    }
    out
}

/// Principal square root of a PSD 2x2 matrix (closed form).
pub fn sqrt_psd2(a: &Mat2) -> Mat2 {
    let tr = (a[(0, 0)] + a[(1, 1)]).re;
    let det = (a[(0, 0)] * a[(1, 1)] - a[(0, 1)] * a[(1, 0)]).re.max(0.0);
    let s = det.sqrt();
    let denom = (tr + 2.0 * s).max(0.0).sqrt();
    if denom < 1e-300 {
        return Mat2::zeros();
    }
    let mut out = *a;
    out[(0, 0)] += Complex64::new(s, 0.0);
    out[(1, 1)] += Complex64::new(s, 0.0);
    out / Complex64::new(denom, 0.0)
}

/// Pauli letter matrices in qubit (row, col) convention.
pub fn letter_matrix(letter: crate::pauli::Letter) -> Mat2 {
    use crate::pauli::Letter::*;
    let o = Complex64::new(0.0, 0.0);
    let l = Complex64::new(1.0, 0.0);
    let i = Complex64::new(0.0, 1.0);
    match letter {
        I => Mat2::new(l, o, o, l),
        X => Mat2::new(o, l, l, o),
        Y => Mat2::new(o, -i, i, o),
        Z => Mat2::new(l, o, o, -l),
    }
}
