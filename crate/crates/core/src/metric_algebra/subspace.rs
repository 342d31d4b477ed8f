use nalgebra::{DMatrix, DVector};

use super::{orthonormality_defect, rotation_maximizing_trace, LinMap};
use crate::error::{check_dim, Result, RigidityError};

const ORTHONORMAL_TOL: f64 = 1e-10;

/// A `d`-dimensional oriented subspace of `R^D`, stored as an ordered
/// orthonormal frame (`D x d`, one column per frame vector). The orientation
/// is the one of the frame order.
#[derive(Debug, Clone, PartialEq)]
pub struct OrientedSubspace {
    frame: DMatrix<f64>,
}

impl OrientedSubspace {
    pub fn new(frame: DMatrix<f64>) -> Result<Self> {
        if frame.ncols() == 0 || frame.ncols() > frame.nrows() {
            return Err(RigidityError::DimensionMismatch { expected: frame.nrows(), found: frame.ncols() });
        }
        let defect = orthonormality_defect(&frame);
        if !(defect <= ORTHONORMAL_TOL) {
            return Err(RigidityError::NotOrthonormal { defect });
        }
        Ok(Self { frame })
    }

    /// Orthonormalizes the columns of `spanning` in order (modified
    /// Gram-Schmidt, run twice). The triangular factor has positive diagonal,
    /// so the orientation of the column order is kept.
    pub fn from_spanning(spanning: &DMatrix<f64>) -> Result<Self> {
        let (rows, cols) = spanning.shape();
        if cols == 0 || cols > rows {
            return Err(RigidityError::DimensionMismatch { expected: rows, found: cols });
        }
        let scale = spanning.amax().max(f64::MIN_POSITIVE);
        let mut frame = spanning.clone();
        for j in 0..cols {
            for _ in 0..2 {
                for i in 0..j {
                    let c = frame.column(i).dot(&frame.column(j));
                    let qi = frame.column(i).clone_owned();
                    frame.column_mut(j).axpy(-c, &qi, 1.0);
                }
            }
            let norm = frame.column(j).norm();
            if !(norm > 1e-12 * scale) {
                return Err(RigidityError::Degenerate(format!("spanning set has rank below {cols}")));
            }
            frame.column_mut(j).unscale_mut(norm);
        }
        Self::new(frame)
    }

    /// `span+(e_1, ..., e_d)` in `R^D`.
    pub fn standard(ambient_dim: usize, dim: usize) -> Self {
        Self::new(DMatrix::identity(ambient_dim, dim)).expect("coordinate frame")
    }

    pub fn ambient_dim(&self) -> usize {
        self.frame.nrows()
    }

    pub fn dim(&self) -> usize {
        self.frame.ncols()
    }

    pub fn frame(&self) -> &DMatrix<f64> {
        &self.frame
    }

    /// Same subspace, opposite orientation.
    pub fn reversed(&self) -> Self {
        let mut frame = self.frame.clone();
        let last = frame.ncols() - 1;
        frame.column_mut(last).neg_mut();
        Self { frame }
    }

    /// Orthogonal projector `F F^T`.
    pub fn projector(&self) -> DMatrix<f64> {
        &self.frame * self.frame.transpose()
    }
}

/// Distance between oriented frames stored column-major in flat slices:
/// `min_{R in SO(k)} |A - B R|_F` for `ambient x k` frames.
///
/// Closed forms for `k = 1, 2`; the general case goes through the SVD.
pub fn frame_distance(a: &[f64], b: &[f64], ambient: usize, k: usize) -> f64 {
    debug_assert_eq!(a.len(), ambient * k);
    debug_assert_eq!(b.len(), ambient * k);
    // m_{ij} = (a_i, b_j)
    let dot = |i: usize, j: usize| -> f64 {
        let (ai, bj) = (&a[i * ambient..(i + 1) * ambient], &b[j * ambient..(j + 1) * ambient]);
        ai.iter().zip(bj).map(|(x, y)| x * y).sum()
    };
    // Optimal R, then |A - B R| evaluated directly; going through
    // 2k - 2 tr(m R) loses half the digits near zero distance.
    let r = match k {
        1 => return a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt(),
        2 => {
            let (m00, m01, m10, m11) = (dot(0, 0), dot(0, 1), dot(1, 0), dot(1, 1));
            let (c, s) = (m00 + m11, m01 - m10);
            let norm = c.hypot(s);
            let (c, s) = if norm > 0.0 { (c / norm, s / norm) } else { (1.0, 0.0) };
            DMatrix::from_row_slice(2, 2, &[c, -s, s, c])
        }
        _ => rotation_maximizing_trace(&DMatrix::from_fn(k, k, dot)).0,
    };
    let mut total = 0.0;
    for i in 0..k {
        for row in 0..ambient {
            let br: f64 = (0..k).map(|j| b[j * ambient + row] * r[(j, i)]).sum();
            total += (a[i * ambient + row] - br).powi(2);
        }
    }
    total.sqrt()
}

/// `|Π_a - Π_b|`: infimum of the frame distance over positively oriented
/// orthonormal frames of both subspaces.
pub fn subspace_distance(a: &OrientedSubspace, b: &OrientedSubspace) -> Result<f64> {
    check_dim(a.ambient_dim(), b.ambient_dim())?;
    check_dim(a.dim(), b.dim())?;
    Ok(frame_distance(a.frame.as_slice(), b.frame.as_slice(), a.ambient_dim(), a.dim()))
}

/// Oriented orthogonal complement: `det[frame_a | frame_perp] > 0`.
///
/// Built by Gram-Schmidt on the coordinate vectors, always taking the one
/// with the largest residual next, then fixing the sign of the last vector.
pub fn oriented_complement(a: &OrientedSubspace) -> Result<OrientedSubspace> {
    let (ambient, d) = (a.ambient_dim(), a.dim());
    if d >= ambient {
        return Err(RigidityError::DimensionMismatch { expected: ambient - 1, found: d });
    }
    let mut basis: Vec<DVector<f64>> = a.frame.column_iter().map(|c| c.clone_owned()).collect();
    let mut picked: Vec<DVector<f64>> = Vec::with_capacity(ambient - d);
    let mut used = vec![false; ambient];
    while picked.len() < ambient - d {
        let mut best: Option<(usize, DVector<f64>, f64)> = None;
        for i in (0..ambient).filter(|&i| !used[i]) {
            let mut r = DVector::<f64>::zeros(ambient);
            r[i] = 1.0;
            for _ in 0..2 {
                for q in &basis {
                    let c = q.dot(&r);
                    r.axpy(-c, q, 1.0);
                }
            }
            let n = r.norm();
            if best.as_ref().is_none_or(|(_, _, bn)| n > *bn) {
                best = Some((i, r, n));
            }
        }
        let (i, r, n) = best.expect("complement has positive dimension");
        used[i] = true;
        let w = r / n;
        basis.push(w.clone());
        picked.push(w);
    }
    let mut frame = DMatrix::from_columns(&picked);
    let full = DMatrix::from_columns(&basis);
    if full.determinant() < 0.0 {
        let last = frame.ncols() - 1;
        frame.column_mut(last).neg_mut();
    }
    OrientedSubspace::new(frame)
}

/// Orthogonal projection `P_Π v`.
pub fn project_onto(a: &OrientedSubspace, v: &DVector<f64>) -> Result<DVector<f64>> {
    check_dim(a.ambient_dim(), v.len())?;
    Ok(&a.frame * (a.frame.transpose() * v))
}

/// Whether `P_{Π0}` restricted to `Π` preserves orientation: the coordinate
/// array `F0^T F` has positive determinant. Rank-deficient projections are
/// reported as not preserving.
pub fn orientation_preserved_under_projection(p0: &OrientedSubspace, p: &OrientedSubspace) -> Result<bool> {
    check_dim(p0.ambient_dim(), p.ambient_dim())?;
    check_dim(p0.dim(), p.dim())?;
    let det = (p0.frame.transpose() * &p.frame).determinant();
    Ok(det > 1e-12)
}

/// Sign of `det(F^T T)`: whether `T: R^d -> Π` is orientation preserving
/// (`Some(true)`), reversing (`Some(false)`) or singular (`None`).
pub fn map_orientation_in(plane: &OrientedSubspace, t: &LinMap) -> Result<Option<bool>> {
    check_dim(plane.ambient_dim(), t.nrows())?;
    check_dim(plane.dim(), t.ncols())?;
    let det = (plane.frame.transpose() * t).determinant();
    let scale = t.norm().powi(t.ncols() as i32).max(f64::MIN_POSITIVE);
    Ok(if det.abs() <= 1e-12 * scale { None } else { Some(det > 0.0) })
}
