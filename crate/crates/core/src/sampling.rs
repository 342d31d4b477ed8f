//! Seeded random instances for the property suites.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::metric_algebra::{OrientedSubspace, SpdMetric};

/// Portable, seedable generator used everywhere randomness is needed.
pub type SeededRng = ChaCha8Rng;

pub fn rng(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent stream `stream` of the generator seeded with `seed`, so that
/// samples can be drawn in any order.
pub fn stream_rng(seed: u64, stream: u64) -> SeededRng {
    let mut r = rng(seed);
    r.set_stream(stream);
    r
}

pub fn gaussian_matrix(rng: &mut SeededRng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.sample::<f64, _>(StandardNormal))
}

pub fn gaussian_vector(rng: &mut SeededRng, len: usize) -> DVector<f64> {
    DVector::from_fn(len, |_, _| rng.sample::<f64, _>(StandardNormal))
}

/// Haar-ish random rotation in `SO(k)`.
pub fn random_rotation(rng: &mut SeededRng, k: usize) -> DMatrix<f64> {
    loop {
        let a = gaussian_matrix(rng, k, k);
        if let Ok(s) = OrientedSubspace::from_spanning(&a) {
            let mut q = s.frame().clone();
            if q.determinant() < 0.0 {
                q.column_mut(0).neg_mut();
            }
            return q;
        }
    }
}

/// SPD metric with eigenvalues log-uniform in `[1/lambda, lambda]`.
pub fn random_spd(rng: &mut SeededRng, d: usize, lambda: f64) -> SpdMetric {
    let q = random_rotation(rng, d);
    let ln = lambda.ln();
    let eig = DVector::from_fn(d, |_, _| (rng.random_range(-1.0..=1.0) * ln).exp());
    let gram = &q * DMatrix::from_diagonal(&eig) * q.transpose();
    SpdMetric::new((&gram + gram.transpose()) * 0.5).expect("eigenvalues bounded away from zero")
}

pub fn random_subspace(rng: &mut SeededRng, ambient: usize, d: usize) -> OrientedSubspace {
    loop {
        if let Ok(s) = OrientedSubspace::from_spanning(&gaussian_matrix(rng, ambient, d)) {
            return s;
        }
    }
}

/// Subspace spanned by a perturbation of `base`'s frame; `scale` controls
/// the closeness.
pub fn nearby_subspace(rng: &mut SeededRng, base: &OrientedSubspace, scale: f64) -> OrientedSubspace {
    loop {
        let noise = gaussian_matrix(rng, base.ambient_dim(), base.dim()) * scale;
        if let Ok(s) = OrientedSubspace::from_spanning(&(base.frame() + noise)) {
            return s;
        }
    }
}

/// Random `d x d` matrix with positive determinant.
pub fn random_orientation_preserving(rng: &mut SeededRng, d: usize) -> DMatrix<f64> {
    loop {
        let mut c = gaussian_matrix(rng, d, d);
        let det = c.determinant();
        if det.abs() < 1e-3 {
            continue;
        }
        if det < 0.0 {
            c.column_mut(0).neg_mut();
        }
        return c;
    }
}
