use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{check_dim, Result, RigidityError};

/// Smallest eigenvalue accepted as positive.
const EIGENVALUE_FLOOR: f64 = 1e-14;
const SYMMETRY_TOL: f64 = 1e-12;

/// A constant symmetric positive-definite metric on `R^d`, stored through its
/// gram array `(e_i, e_j)_g`.
///
/// The symmetric square root and its inverse are computed once from the
/// eigendecomposition at construction.
#[derive(Debug, Clone, PartialEq)]
pub struct SpdMetric {
    gram: DMatrix<f64>,
    sqrt: DMatrix<f64>,
    inv_sqrt: DMatrix<f64>,
    eigenvalues: DVector<f64>,
}

impl SpdMetric {
    pub fn new(gram: DMatrix<f64>) -> Result<Self> {
        if !gram.is_square() || gram.nrows() == 0 {
            return Err(RigidityError::DimensionMismatch { expected: gram.nrows().max(1), found: gram.ncols() });
        }
        let scale = gram.amax().max(1.0);
        let asymmetry = (&gram - gram.transpose()).amax();
        if !asymmetry.is_finite() || asymmetry > SYMMETRY_TOL * scale {
            return Err(RigidityError::NotSymmetric { asymmetry });
        }
        let gram = (&gram + gram.transpose()) * 0.5;
        let eig = SymmetricEigen::new(gram.clone());
        let min = eig.eigenvalues.min();
        if !(min > EIGENVALUE_FLOOR) {
            return Err(RigidityError::NotPositiveDefinite { min_eigenvalue: min });
        }
        let q = &eig.eigenvectors;
        let root = eig.eigenvalues.map(f64::sqrt);
        let sqrt = q * DMatrix::from_diagonal(&root) * q.transpose();
        let inv_sqrt = q * DMatrix::from_diagonal(&root.map(|r| 1.0 / r)) * q.transpose();
        Ok(Self { gram, sqrt: symmetrize(sqrt), inv_sqrt: symmetrize(inv_sqrt), eigenvalues: eig.eigenvalues })
    }

    pub fn identity(d: usize) -> Self {
        Self::scaled_identity(d, 1.0)
    }

    pub fn scaled_identity(d: usize, s: f64) -> Self {
        Self::new(DMatrix::identity(d, d) * s).expect("positive multiple of the identity")
    }

    pub fn from_diagonal(diag: &[f64]) -> Result<Self> {
        Self::new(DMatrix::from_diagonal(&DVector::from_column_slice(diag)))
    }

    pub fn dim(&self) -> usize {
        self.gram.nrows()
    }

    pub fn gram(&self) -> &DMatrix<f64> {
        &self.gram
    }

    /// Symmetric positive square root `g^{1/2}`; an element of `SO(g, e_d)`.
    pub fn sqrt(&self) -> &DMatrix<f64> {
        &self.sqrt
    }

    pub fn inv_sqrt(&self) -> &DMatrix<f64> {
        &self.inv_sqrt
    }

    pub fn inverse(&self) -> DMatrix<f64> {
        &self.inv_sqrt * &self.inv_sqrt
    }

    pub fn eigenvalues(&self) -> &DVector<f64> {
        &self.eigenvalues
    }

    pub fn determinant(&self) -> f64 {
        self.eigenvalues.iter().product()
    }

    /// Smallest `lambda` with `(1/lambda) I <= g <= lambda I`.
    pub fn sandwich_constant(&self) -> f64 {
        self.eigenvalues.max().max(1.0 / self.eigenvalues.min())
    }

    pub fn within_sandwich(&self, lambda: f64) -> bool {
        let slack = 1e-12 * lambda;
        self.eigenvalues.iter().all(|&e| e <= lambda + slack && e >= 1.0 / lambda - slack)
    }

    /// `(v, w)_g`.
    pub fn inner(&self, v: &DVector<f64>, w: &DVector<f64>) -> f64 {
        v.dot(&(&self.gram * w))
    }
}

fn symmetrize(m: DMatrix<f64>) -> DMatrix<f64> {
    (&m + m.transpose()) * 0.5
}

/// `|T|_{g, e_D} = |T g^{-1/2}|_F`.
pub fn frobenius_norm(t: &DMatrix<f64>, g: &SpdMetric) -> Result<f64> {
    check_dim(g.dim(), t.ncols())?;
    Ok((t * g.inv_sqrt()).norm())
}

/// Entrywise Frobenius distance of two gram arrays.
pub fn metric_distance(g: &SpdMetric, g2: &SpdMetric) -> Result<f64> {
    check_dim(g.dim(), g2.dim())?;
    Ok((g.gram() - g2.gram()).norm())
}

/// Positive square root of the gram array.
pub fn spd_sqrt(g: &SpdMetric) -> DMatrix<f64> {
    g.sqrt().clone()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::dmatrix;

    #[test]
    fn frobenius_examples() {
        let id = DMatrix::<f64>::identity(2, 2);
        let e = SpdMetric::identity(2);
        assert_relative_eq!(frobenius_norm(&id, &e).unwrap(), 2f64.sqrt(), epsilon = 1e-15);
        let four = SpdMetric::scaled_identity(2, 4.0);
        assert_relative_eq!(frobenius_norm(&id, &four).unwrap(), 0.5f64.sqrt(), epsilon = 1e-15);
        let t = dmatrix![3.0, 0.0; 0.0, 0.0];
        assert_relative_eq!(frobenius_norm(&t, &e).unwrap(), 3.0, epsilon = 1e-15);
        assert!(frobenius_norm(&DMatrix::zeros(2, 3), &e).is_err());
    }

    #[test]
    fn metric_distance_examples() {
        let a = SpdMetric::identity(2);
        let b = SpdMetric::scaled_identity(2, 4.0);
        assert_eq!(metric_distance(&a, &a).unwrap(), 0.0);
        assert_relative_eq!(metric_distance(&a, &b).unwrap(), 3.0 * 2f64.sqrt(), epsilon = 1e-14);
        let c = SpdMetric::new(dmatrix![1.0, 0.1; 0.1, 1.0]).unwrap();
        assert_relative_eq!(metric_distance(&a, &c).unwrap(), 0.1 * 2f64.sqrt(), epsilon = 1e-15);
        assert!(metric_distance(&a, &SpdMetric::identity(3)).is_err());
    }

    #[test]
    fn sqrt_examples() {
        assert_eq!(spd_sqrt(&SpdMetric::identity(3)), DMatrix::identity(3, 3));
        let g = SpdMetric::from_diagonal(&[4.0, 9.0]).unwrap();
        let r = spd_sqrt(&g);
        assert_relative_eq!(r, dmatrix![2.0, 0.0; 0.0, 3.0], epsilon = 1e-14);
    }

    #[test]
    fn rejects_bad_grams() {
        assert!(matches!(SpdMetric::new(dmatrix![1.0, 0.2; 0.0, 1.0]), Err(RigidityError::NotSymmetric { .. })));
        assert!(matches!(
            SpdMetric::new(dmatrix![1.0, 0.0; 0.0, -1.0]),
            Err(RigidityError::NotPositiveDefinite { .. })
        ));
        assert!(SpdMetric::new(dmatrix![1.0, 0.0; 0.0, 1e-15]).is_err());
        assert!(SpdMetric::new(DMatrix::zeros(2, 3)).is_err());
    }

    #[test]
    fn sandwich_constant_of_diagonal() {
        let g = SpdMetric::from_diagonal(&[0.25, 2.0]).unwrap();
        assert_relative_eq!(g.sandwich_constant(), 4.0, epsilon = 1e-14);
        assert!(g.within_sandwich(4.0));
        assert!(!g.within_sandwich(3.9));
    }
}
