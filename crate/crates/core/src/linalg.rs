//! Dense complex linear algebra used throughout the crate.
//!
//! Everything here works on small dense matrices (d up to a few hundred) and
//! leans on nalgebra's Hermitian eigensolver and complex Schur form.

use nalgebra::{DMatrix, DVector, Schur, SymmetricEigen};
use num_complex::Complex64;

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

pub const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

/// Eigenvalues in ascending order with matching eigenvector columns.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: CMatrix,
}

/// Largest absolute entry of `a - a†`.
pub fn hermitian_deviation(a: &CMatrix) -> f64 {
    let n = a.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            worst = worst.max((a[(i, j)] - a[(j, i)].conj()).norm());
        }
    }
    worst
}

pub fn hermitian_part(a: &CMatrix) -> CMatrix {
    (a + a.adjoint()) * Complex64::new(0.5, 0.0)
}

pub fn hermitian_eigen(a: &CMatrix) -> HermitianEigen {
    let eig = SymmetricEigen::new(hermitian_part(a));
    let n = a.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    HermitianEigen { values, vectors }
}

/// Spectral norm of a Hermitian matrix.
pub fn hermitian_norm(a: &CMatrix) -> f64 {
    hermitian_eigen(a)
        .values
        .iter()
        .fold(0.0f64, |acc, v| acc.max(v.abs()))
}

/// Spectral norm of an arbitrary square matrix, via the eigenvalues of `a†a`.
pub fn operator_norm(a: &CMatrix) -> f64 {
    let gram = a.adjoint() * a;
    let top = hermitian_eigen(&gram).values.last().copied().unwrap_or(0.0);
    top.max(0.0).sqrt()
}

/// `V diag(f(λ)) V†` for a decomposed Hermitian matrix.
pub fn apply_function(eig: &HermitianEigen, f: impl Fn(f64) -> Complex64) -> CMatrix {
    let n = eig.vectors.nrows();
    let mut scaled = eig.vectors.clone();
    for (c, &v) in eig.values.iter().enumerate() {
        let fv = f(v);
        for r in 0..n {
            scaled[(r, c)] *= fv;
        }
    }
    scaled * eig.vectors.adjoint()
}

/// `exp(i s h)` for Hermitian `h`, computed through its eigendecomposition.
pub fn expm_i_hermitian(h: &CMatrix, s: f64) -> CMatrix {
    let eig = hermitian_eigen(h);
    apply_function(&eig, |v| Complex64::from_polar(1.0, s * v))
}

/// Largest entry of `|u†u - I|`.
pub fn unitarity_defect(u: &CMatrix) -> f64 {
    let gram = u.adjoint() * u;
    let n = u.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((gram[(i, j)] - Complex64::new(target, 0.0)).norm());
        }
    }
    worst
}

/// Eigenphases (in `[0, 1)`) and eigenvectors of a unitary matrix.
///
/// A unitary matrix is normal, so its complex Schur form is diagonal and the
/// Schur basis is an orthonormal eigenbasis.
pub fn unitary_eigen(u: &CMatrix) -> (Vec<f64>, CMatrix) {
    let (q, t) = Schur::new(u.clone()).unpack();
    let phases = (0..u.nrows())
        .map(|i| wrap_phase(t[(i, i)].arg() / TWO_PI))
        .collect();
    (phases, q)
}

/// Reduce a real number into `[0, 1)`.
pub fn wrap_phase(x: f64) -> f64 {
    let w = x - x.floor();
    if w >= 1.0 {
        0.0
    } else {
        w
    }
}

pub fn inner(a: &CVector, b: &CVector) -> Complex64 {
    a.dotc(b)
}

pub fn column(m: &CMatrix, c: usize) -> CVector {
    m.column(c).into_owned()
}

pub fn identity(d: usize) -> CMatrix {
    CMatrix::identity(d, d)
}
