use nalgebra::{DMatrix, DVector};

use super::{LinMap, OrientedSubspace, SpdMetric, Tolerances};
use crate::error::{check_dim, Result, RigidityError};

/// Thin SVD `A = U diag(sigma) V^T` with singular values sorted descending.
#[derive(Debug, Clone)]
pub struct SortedSvd {
    pub u: DMatrix<f64>,
    pub sigma: DVector<f64>,
    pub v: DMatrix<f64>,
}

/// nalgebra's bidiagonal SVD returns wrong factors for some inputs with
/// clustered singular values (common here: cross-covariances of nearby
/// frames), so the factorization itself is delegated to faer.
pub fn sorted_svd(a: &DMatrix<f64>) -> SortedSvd {
    let (rows, cols) = a.shape();
    let k = rows.min(cols);
    let m = faer::Mat::<f64>::from_fn(rows, cols, |i, j| a[(i, j)]);
    let svd = m.thin_svd().expect("SVD of a finite matrix");
    let (u, s, v) = (svd.U(), svd.S().column_vector(), svd.V());
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&i, &j| s[j].partial_cmp(&s[i]).unwrap_or(std::cmp::Ordering::Equal).then(i.cmp(&j)));
    let sigma = DVector::from_iterator(k, order.iter().map(|&i| s[i]));
    let u = DMatrix::from_fn(rows, k, |r, c| u[(r, order[c])]);
    let v = DMatrix::from_fn(cols, k, |r, c| v[(r, order[c])]);
    SortedSvd { u, sigma, v }
}

/// Index of the singular direction flipped by the orientation correction:
/// the lowest index among those tied with the smallest singular value.
fn flip_index(sigma: &DVector<f64>) -> usize {
    let min = sigma.min();
    let tie = 1e-12 * sigma.max().max(1.0);
    sigma.iter().position(|&s| s <= min + tie).unwrap_or(sigma.len() - 1)
}

/// Rotation `R in SO(k)` maximizing `tr(R m)` for a square `m`, together
/// with the maximal trace.
pub fn rotation_maximizing_trace(m: &DMatrix<f64>) -> (DMatrix<f64>, f64) {
    let k = m.nrows();
    let SortedSvd { u, sigma, v } = sorted_svd(m);
    let mut r = &v * u.transpose();
    let mut value: f64 = sigma.iter().sum();
    if r.determinant() < 0.0 {
        let j = flip_index(&sigma);
        let mut v = v;
        v.column_mut(j).neg_mut();
        r = &v * u.transpose();
        value -= 2.0 * sigma[j];
    }
    debug_assert_eq!(r.nrows(), k);
    (r, value)
}

/// Distance `dist(A, SO(d))` in the Euclidean Frobenius norm for a square
/// `A`, from the signed singular values.
pub fn euclidean_distance_to_so(a: &DMatrix<f64>) -> f64 {
    let SortedSvd { u, sigma, v } = sorted_svd(a);
    let mut sq: f64 = sigma.iter().map(|s| (s - 1.0).powi(2)).sum();
    if (&u * v.transpose()).determinant() < 0.0 {
        let j = flip_index(&sigma);
        sq += (sigma[j] + 1.0).powi(2) - (sigma[j] - 1.0).powi(2);
    }
    sq.max(0.0).sqrt()
}

/// Minimizer of `|T - R|_{g, e_D}` over an isometry set and the minimum.
#[derive(Debug, Clone, PartialEq)]
pub struct IsometryFit {
    pub map: LinMap,
    pub distance: f64,
}

/// Nearest element of `O(g, e_D)` (or `SO(g, e_d)` when `oriented`) to `T`.
///
/// Works on the whitened map `T g^{-1/2} = U S V^T`: the minimizer is
/// `U V^T g^{1/2}` and the distance is `(sum (s_i - 1)^2)^{1/2}`. In the
/// oriented case the smallest singular direction is flipped when
/// `det(U V^T) < 0`, which adds `(s_j + 1)^2 - (s_j - 1)^2`.
pub fn nearest_isometry(t: &LinMap, g: &SpdMetric, oriented: bool) -> Result<IsometryFit> {
    check_dim(g.dim(), t.ncols())?;
    if t.nrows() < t.ncols() {
        return Err(RigidityError::DimensionMismatch { expected: t.ncols(), found: t.nrows() });
    }
    if oriented {
        check_dim(t.ncols(), t.nrows())?;
    }
    let a = t * g.inv_sqrt();
    let SortedSvd { mut u, sigma, v } = sorted_svd(&a);
    let mut sq: f64 = sigma.iter().map(|s| (s - 1.0).powi(2)).sum();
    if oriented && (&u * v.transpose()).determinant() < 0.0 {
        let j = flip_index(&sigma);
        u.column_mut(j).neg_mut();
        sq += (sigma[j] + 1.0).powi(2) - (sigma[j] - 1.0).powi(2);
    }
    let w = &u * v.transpose();
    Ok(IsometryFit { map: w * g.sqrt(), distance: sq.max(0.0).sqrt() })
}

/// Nearest isometry from `(R^d, g)` onto the plane `Π`, for `T` mapping into
/// `Π`. Solves the square problem in plane coordinates and lifts back.
pub fn nearest_isometry_into_plane(
    t: &LinMap,
    g: &SpdMetric,
    plane: &OrientedSubspace,
    oriented: bool,
) -> Result<IsometryFit> {
    check_dim(plane.ambient_dim(), t.nrows())?;
    check_dim(plane.dim(), t.ncols())?;
    check_dim(g.dim(), t.ncols())?;
    let frame = plane.frame();
    let coords = frame.transpose() * t;
    let residual = (t - frame * &coords).norm();
    if !Tolerances::default().accepts(residual, t.norm()) {
        return Err(RigidityError::NotContainedInPlane { residual });
    }
    let fit = nearest_isometry(&coords, g, oriented)?;
    Ok(IsometryFit { map: frame * fit.map, distance: fit.distance })
}

/// `dist(SO(g_x, e_d), SO(g_y, e_d))`, exact.
///
/// Elements of `SO(g, e_d)` are `Q g^{1/2}` with `Q in SO(d)`, so the value is
/// `min_Q |Q gx^{1/2} - gy^{1/2}|_F`, an orientation-constrained Procrustes
/// problem.
pub fn so_set_distance(gx: &SpdMetric, gy: &SpdMetric) -> Result<f64> {
    check_dim(gx.dim(), gy.dim())?;
    let (sx, sy) = (gx.sqrt(), gy.sqrt());
    let (_, best) = rotation_maximizing_trace(&(sx * sy.transpose()));
    let sq = sx.norm_squared() + sy.norm_squared() - 2.0 * best;
    Ok(sq.max(0.0).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::dmatrix;

    fn rot(theta: f64) -> DMatrix<f64> {
        dmatrix![theta.cos(), -theta.sin(); theta.sin(), theta.cos()]
    }

    #[test]
    fn nearest_isometry_examples() {
        let e = SpdMetric::identity(2);
        let fit = nearest_isometry(&dmatrix![2.0, 0.0; 0.0, 1.0], &e, false).unwrap();
        assert_relative_eq!(fit.distance, 1.0, epsilon = 1e-14);
        assert_relative_eq!(fit.map, DMatrix::identity(2, 2), epsilon = 1e-14);

        let r = rot(0.7);
        let fit = nearest_isometry(&r, &e, true).unwrap();
        assert!(fit.distance < 1e-14);
        assert_relative_eq!(fit.map, r, epsilon = 1e-14);

        let fit = nearest_isometry(&dmatrix![1.0, 0.0; 0.0, -1.0], &e, true).unwrap();
        assert_relative_eq!(fit.distance, 2.0, epsilon = 1e-14);
        assert!(fit.map.determinant() > 0.0);
    }

    #[test]
    fn metric_isometry_is_fixed_point() {
        let g = SpdMetric::new(dmatrix![2.0, 0.3; 0.3, 1.0]).unwrap();
        let t = rot(-1.1) * g.sqrt();
        let fit = nearest_isometry(&t, &g, true).unwrap();
        assert!(fit.distance < 1e-12);
        assert_relative_eq!(fit.map.transpose() * &fit.map, g.gram().clone(), epsilon = 1e-12);
    }

    #[test]
    fn oriented_requires_square() {
        let e = SpdMetric::identity(2);
        assert!(nearest_isometry(&DMatrix::zeros(3, 2), &e, true).is_err());
        assert!(nearest_isometry(&DMatrix::zeros(3, 2), &e, false).is_ok());
        assert!(nearest_isometry(&DMatrix::zeros(1, 2), &e, false).is_err());
    }

    #[test]
    fn rank_deficient_oriented_has_unit_gap() {
        let e = SpdMetric::identity(2);
        let fit = nearest_isometry(&dmatrix![1.0, 0.0; 0.0, 0.0], &e, true).unwrap();
        assert_relative_eq!(fit.distance, 1.0, epsilon = 1e-14);
        assert!(fit.map.determinant() > 0.0);
    }

    #[test]
    fn in_plane_examples() {
        let e = SpdMetric::identity(2);
        let plane = OrientedSubspace::standard(3, 2);
        let t = dmatrix![2.0, 0.0; 0.0, 1.0; 0.0, 0.0];
        let fit = nearest_isometry_into_plane(&t, &e, &plane, false).unwrap();
        assert_relative_eq!(fit.distance, 1.0, epsilon = 1e-14);
        assert_eq!(fit.map[(2, 0)], 0.0);

        let iso = dmatrix![0.6, -0.8; 0.8, 0.6; 0.0, 0.0];
        let fit = nearest_isometry_into_plane(&iso, &e, &plane, true).unwrap();
        assert!(fit.distance < 1e-14);

        let off = dmatrix![1.0, 0.0; 0.0, 1.0; 0.1, 0.0];
        assert!(matches!(
            nearest_isometry_into_plane(&off, &e, &plane, false),
            Err(RigidityError::NotContainedInPlane { .. })
        ));
    }

    #[test]
    fn so_set_distance_examples() {
        let e = SpdMetric::identity(2);
        let four = SpdMetric::scaled_identity(2, 4.0);
        assert!(so_set_distance(&e, &e).unwrap() < 1e-14);
        let v = so_set_distance(&e, &four).unwrap();
        assert_relative_eq!(v, 2f64.sqrt(), epsilon = 1e-14);
        let bound = (4f64.sqrt() / 2.0) * super::super::metric_distance(&e, &four).unwrap();
        assert_relative_eq!(bound, 3.0 * 2f64.sqrt(), epsilon = 1e-14);
        assert!(v <= bound);
    }

    #[test]
    fn distance_to_so_of_reflection() {
        assert_relative_eq!(euclidean_distance_to_so(&dmatrix![1.0, 0.0; 0.0, -1.0]), 2.0, epsilon = 1e-14);
        assert!(euclidean_distance_to_so(&rot(0.3)) < 1e-14);
    }

    #[test]
    fn trace_maximizer_is_rotation() {
        let m = dmatrix![0.2, 1.0, 0.0; -0.5, 0.1, 0.3; 0.0, 0.4, -2.0];
        let (r, value) = rotation_maximizing_trace(&m);
        assert_relative_eq!(r.determinant(), 1.0, epsilon = 1e-12);
        assert_relative_eq!((&r * &m).trace(), value, epsilon = 1e-12);
    }

    #[test]
    fn svd_with_clustered_singular_values() {
        // Two singular values at 1: nalgebra 0.35 reconstructs this with error ~2e-3.
        let m = dmatrix![
            -0.3930657758906825, 0.18078910864264489, 0.19974865955883128;
            -0.7073630051941359, -0.47920732212572215, 0.4154384075854159;
            -0.587474153351949, 0.46013284191086445, -0.6303409015950344
        ];
        let s = sorted_svd(&m);
        let back = &s.u * DMatrix::from_diagonal(&s.sigma) * s.v.transpose();
        assert!((back - &m).norm() < 1e-13);
        assert_relative_eq!(s.sigma.product(), m.determinant().abs(), epsilon = 1e-13);
        let (_, value) = rotation_maximizing_trace(&m);
        let (_, value_t) = rotation_maximizing_trace(&m.transpose());
        assert_relative_eq!(value, value_t, epsilon = 1e-13);
    }
}
