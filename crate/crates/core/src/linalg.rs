//! Dense complex linear algebra helpers on top of `nalgebra`.

use nalgebra::DMatrix;
pub use num_complex::Complex64 as C64;

pub type CMatrix = DMatrix<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn identity(dim: usize) -> CMatrix {
    CMatrix::identity(dim, dim)
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

pub fn diag(values: &[f64]) -> CMatrix {
    let n = values.len();
    CMatrix::from_fn(n, n, |i, j| if i == j { c(values[i], 0.0) } else { ZERO })
}

/// Hermitian eigendecomposition with eigenvalues in ascending order and the
/// matching eigenvectors as columns.
pub fn eigh(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let herm = hermitian_part(m);
    let eig = herm.symmetric_eigen();
    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMatrix::from_fn(n, n, |r, col| eig.eigenvectors[(r, order[col])]);
    (values, vectors)
}

/// `V diag(f(λ)) V†` for a Hermitian `m`.
pub fn hermitian_fn(m: &CMatrix, f: impl Fn(f64) -> f64) -> CMatrix {
    let (values, vectors) = eigh(m);
    let mapped: Vec<f64> = values.into_iter().map(f).collect();
    from_spectrum(&mapped, &vectors)
}

pub fn from_spectrum(values: &[f64], vectors: &CMatrix) -> CMatrix {
    let n = values.len();
    let scaled = CMatrix::from_fn(n, n, |r, col| vectors[(r, col)] * values[col]);
    scaled * vectors.adjoint()
}

pub fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()).scale(0.5)
}

pub fn trace(m: &CMatrix) -> C64 {
    m.diagonal().iter().sum()
}

pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    assert_eq!(a.shape(), b.shape());
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

pub fn is_hermitian(m: &CMatrix, tol: f64) -> bool {
    m.is_square() && max_abs_diff(m, &m.adjoint()) <= tol
}

pub fn is_unitary(m: &CMatrix, tol: f64) -> bool {
    m.is_square() && max_abs_diff(&(m * m.adjoint()), &identity(m.nrows())) <= tol
}

/// Spectral norm of a Hermitian matrix.
pub fn hermitian_norm(m: &CMatrix) -> f64 {
    let (values, _) = eigh(m);
    values.iter().fold(0.0, |acc, v| acc.max(v.abs()))
}

/// Number of qubits for a power-of-two dimension.
pub fn qubits_for_dim(dim: usize) -> Option<usize> {
    (dim.is_power_of_two() && dim > 0).then(|| dim.trailing_zeros() as usize)
}
