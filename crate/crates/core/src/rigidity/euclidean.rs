use nalgebra::DMatrix;

use crate::error::{check_exponent, Result, RigidityError};
use crate::metric_algebra::{euclidean_distance_to_so, rotation_maximizing_trace, LinMap};

use super::report::empirical_constant;

const INITIAL_STEP: f64 = 0.1;
const MIN_STEP: f64 = 1e-10;
const MAX_SWEEPS: usize = 100_000;

/// Output of [`euclidean_best_rotation`].
#[derive(Debug, Clone, PartialEq)]
pub struct EuclideanFit {
    pub rotation: DMatrix<f64>,
    /// `Σ w |Du - R|^p`.
    pub lhs: f64,
    /// `Σ w dist^p(Du, SO(d))`.
    pub rhs: f64,
    pub empirical_constant: f64,
}

fn objective(du: &[LinMap], weights: &[f64], r: &DMatrix<f64>, p: f64) -> f64 {
    du.iter().zip(weights).map(|(a, w)| w * (a - r).norm().powf(p)).sum()
}

fn rank_deficient(a: &LinMap) -> bool {
    let sv = a.singular_values();
    sv.min() <= 1e-12 * sv.max().max(1.0)
}

/// Rotation `R ∈ SO(d)` fitted to square cell maps with quadrature weights.
///
/// `p = 2` is solved in closed form from the weighted mean. Other exponents
/// start from that minimizer and run coordinate descent over Givens angles,
/// halving the step when no plane improves.
pub fn euclidean_best_rotation(du: &[LinMap], weights: &[f64], p: f64) -> Result<EuclideanFit> {
    check_exponent(p)?;
    if du.len() != weights.len() {
        return Err(RigidityError::DimensionMismatch { expected: du.len(), found: weights.len() });
    }
    let d = du.first().map(|a| a.ncols()).ok_or_else(|| RigidityError::Degenerate("no cells".into()))?;
    if let Some(bad) = du.iter().find(|a| a.nrows() != d || a.ncols() != d) {
        return Err(RigidityError::DimensionMismatch { expected: d, found: bad.nrows() });
    }
    if du.iter().all(rank_deficient) {
        return Err(RigidityError::Degenerate("all cells are rank-deficient".into()));
    }
    let total: f64 = weights.iter().sum();
    let mut mean = DMatrix::zeros(d, d);
    for (a, w) in du.iter().zip(weights) {
        mean += a * *w;
    }
    mean /= total;
    let (mut r, _) = rotation_maximizing_trace(&mean.transpose());
    let mut best = objective(du, weights, &r, p);
    if p != 2.0 && d > 1 {
        let mut step = INITIAL_STEP;
        for _ in 0..MAX_SWEEPS {
            if step < MIN_STEP {
                break;
            }
            let start = best;
            for i in 0..d {
                for j in (i + 1)..d {
                    for sign in [1.0, -1.0] {
                        let (s, c) = (sign * step).sin_cos();
                        let mut giv = DMatrix::<f64>::identity(d, d);
                        giv[(i, i)] = c;
                        giv[(j, j)] = c;
                        giv[(i, j)] = -s;
                        giv[(j, i)] = s;
                        let trial = &r * giv;
                        let value = objective(du, weights, &trial, p);
                        if value < best {
                            best = value;
                            r = trial;
                            break;
                        }
                    }
                }
            }
            if start - best <= 1e-10 * start.abs() {
                step *= 0.5;
            }
        }
        // Remove rounding drift accumulated by the Givens products.
        r = rotation_maximizing_trace(&r.transpose()).0;
        best = objective(du, weights, &r, p);
    }
    let rhs: f64 = du.iter().zip(weights).map(|(a, w)| w * euclidean_distance_to_so(a).powf(p)).sum();
    Ok(EuclideanFit { rotation: r, lhs: best, rhs, empirical_constant: empirical_constant(best, rhs) })
}
