//! Small dense complex matrix helpers on top of `nalgebra`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

pub type CMat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn zeros(rows: usize, cols: usize) -> CMat {
    CMat::zeros(rows, cols)
}

pub fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}

/// Matrix unit `E_kl` of shape `rows x cols`.
pub fn matrix_unit(rows: usize, cols: usize, k: usize, l: usize) -> CMat {
    let mut m = CMat::zeros(rows, cols);
    m[(k, l)] = ONE;
    m
}

/// The `p`-th matrix unit in row-major order.
pub fn basis_element(rows: usize, cols: usize, p: usize) -> CMat {
    matrix_unit(rows, cols, p / cols, p % cols)
}

/// Row-major flattening.
pub fn flatten(m: &CMat) -> Vec<Complex64> {
    let mut out = Vec::with_capacity(m.len());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            out.push(m[(i, j)]);
        }
    }
    out
}

pub fn unflatten(rows: usize, cols: usize, data: &[Complex64]) -> CMat {
    debug_assert_eq!(data.len(), rows * cols);
    CMat::from_row_slice(rows, cols, data)
}

pub fn frobenius(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn max_abs(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Largest singular value.
pub fn opnorm(m: &CMat) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone()
        .singular_values()
        .iter()
        .cloned()
        .fold(0.0, f64::max)
}

/// Eigen-decomposition of a Hermitian matrix (the input is symmetrised first).
pub fn hermitian_eigen(m: &CMat) -> (Vec<f64>, CMat) {
    let sym = (m + m.adjoint()) * c(0.5, 0.0);
    let eig = SymmetricEigen::new(sym);
    (eig.eigenvalues.iter().cloned().collect(), eig.eigenvectors)
}

pub fn min_hermitian_eigenvalue(m: &CMat) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    hermitian_eigen(m).0.into_iter().fold(f64::INFINITY, f64::min)
}

/// Numerical rank with a relative singular value cutoff.
pub fn rank(m: &CMat, rel_tol: f64) -> usize {
    if m.is_empty() {
        return 0;
    }
    let sv = m.clone().singular_values();
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    if smax == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > rel_tol * smax).count()
}

/// `m ⊗ I_n` with the identity factor varying fastest.
pub fn kron_identity(m: &CMat, n: usize) -> CMat {
    if n == 1 {
        return m.clone();
    }
    let mut out = CMat::zeros(m.nrows() * n, m.ncols() * n);
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            let z = m[(i, j)];
            if z == ZERO {
                continue;
            }
            for k in 0..n {
                out[(i * n + k, j * n + k)] = z;
            }
        }
    }
    out
}

/// Moore-Penrose pseudo-inverse via SVD, singular values below
/// `rel_tol * s_max` treated as zero.
pub fn pseudo_inverse(m: &CMat, rel_tol: f64) -> CMat {
    let (rows, cols) = m.shape();
    if m.is_empty() {
        return CMat::zeros(cols, rows);
    }
    let svd = m.clone().svd(true, true);
    let u = svd.u.expect("svd requested u");
    let v_t = svd.v_t.expect("svd requested v_t");
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let mut out = CMat::zeros(cols, rows);
    for (k, &s) in svd.singular_values.iter().enumerate() {
        if s <= rel_tol * smax || s == 0.0 {
            continue;
        }
        let vk = v_t.row(k).adjoint();
        let uk = u.column(k).adjoint();
        out += (vk * uk) * c(1.0 / s, 0.0);
    }
    out
}

pub fn conj_mat(m: &CMat) -> CMat {
    m.map(|z| z.conj())
}
