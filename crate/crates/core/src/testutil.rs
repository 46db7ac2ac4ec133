use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::linalg::{hermitian_part, CMatrix, CVector};

pub fn diag(values: &[f64]) -> CMatrix {
    CMatrix::from_diagonal(&CVector::from_iterator(
        values.len(),
        values.iter().map(|&v| Complex64::new(v, 0.0)),
    ))
}

pub fn random_hermitian(d: usize, seed: u64) -> CMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = CMatrix::from_fn(d, d, |_, _| {
        Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    hermitian_part(&a)
}

pub fn random_unit_vector(d: usize, seed: u64) -> CVector {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let v = CVector::from_fn(d, |_, _| {
        Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    let n = v.norm();
    v / Complex64::new(n, 0.0)
}
