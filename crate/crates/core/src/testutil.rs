//! Shared helpers for unit tests: seeded random operators and states.

use ndarray::{self as nd};
use num_complex::Complex64 as C64;
use rand::rngs::StdRng;
use rand::Rng;

/// Random Hermitian matrix with entries of order one.
pub(crate) fn random_hermitian(dim: usize, rng: &mut StdRng) -> nd::Array2<C64> {
    let raw = nd::Array2::from_shape_fn((dim, dim), |_| {
        C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    });
    let adj = raw.t().mapv(|z| z.conj());
    (raw + adj) * C64::new(0.5, 0.0)
}

/// Random normalized state vector (not Haar, but fine for invariance tests).
pub(crate) fn random_state(dim: usize, rng: &mut StdRng) -> nd::Array1<C64> {
    let mut v = nd::Array1::from_shape_fn(dim, |_| {
        C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    });
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    v.mapv_inplace(|z| z / norm);
    v
}
