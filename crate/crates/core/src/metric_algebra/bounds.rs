use serde::Serialize;

use super::{
    frobenius_norm, map_orientation_in, nearest_isometry, nearest_isometry_into_plane, oriented_complement,
    subspace_distance, LinMap, OrientedSubspace, SpdMetric, Tolerances,
};
use crate::error::{check_dim, Result, RigidityError};

/// Both sides of one inequality `lhs <= rhs`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InequalityCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
}

impl InequalityCheck {
    pub fn new(lhs: f64, rhs: f64) -> Self {
        Self { lhs, rhs, slack: rhs - lhs }
    }

    pub fn holds(&self, tol: f64) -> bool {
        self.slack >= -tol
    }
}

/// Evaluation of the projection error estimates for one `(T, g, Π0, Π)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProjectionBoundReport {
    /// `|P_{Π0} T - T|_{g,e} <= |T|_{g,e} |Π0^⊥ - Π^⊥|`.
    pub projection_error: InequalityCheck,
    /// `dist(P_{Π0} T, SO((R^d,g),(Π0,e))) <= dist(T, O(g,e_D)) + C |Π0^⊥ - Π^⊥|`.
    pub oriented_distance: InequalityCheck,
    /// `|Π0^⊥ - Π^⊥|`.
    pub complement_distance: f64,
    /// Whether `P_{Π0} T` is orientation preserving as a map into `Π0`.
    pub projected_orientation_preserved: bool,
    /// Constant used on the right of the oriented bound: `sqrt(d)` when the
    /// projected map preserves orientation; otherwise the check uses the
    /// unconditional additive bound `2 sqrt(d)`.
    pub constant: f64,
    /// `(lhs - dist(T, O)) / |Π0^⊥ - Π^⊥|` when the denominator is positive.
    pub implied_constant: Option<f64>,
}

/// Evaluates both projection inequalities. `T` must map into `Π`.
pub fn projection_error_bound_check(
    t: &LinMap,
    g: &SpdMetric,
    p0: &OrientedSubspace,
    p: &OrientedSubspace,
) -> Result<ProjectionBoundReport> {
    check_dim(p0.ambient_dim(), p.ambient_dim())?;
    check_dim(p0.dim(), p.dim())?;
    check_dim(p.ambient_dim(), t.nrows())?;
    check_dim(g.dim(), t.ncols())?;
    let in_plane = p.frame() * (p.frame().transpose() * t);
    let residual = (t - &in_plane).norm();
    if !Tolerances::default().accepts(residual, t.norm()) {
        return Err(RigidityError::NotContainedInPlane { residual });
    }

    let delta = subspace_distance(&oriented_complement(p0)?, &oriented_complement(p)?)?;
    let projected = p0.projector() * t;
    let projection_error = InequalityCheck::new(frobenius_norm(&(&projected - t), g)?, frobenius_norm(t, g)? * delta);

    let dist_t = nearest_isometry(t, g, false)?.distance;
    let lhs = nearest_isometry_into_plane(&projected, g, p0, true)?.distance;
    let d = t.ncols() as f64;
    let preserved = map_orientation_in(p0, &projected)? == Some(true);
    let (constant, rhs) =
        if preserved { (d.sqrt(), dist_t + d.sqrt() * delta) } else { (2.0 * d.sqrt(), dist_t + 2.0 * d.sqrt()) };
    Ok(ProjectionBoundReport {
        projection_error,
        oriented_distance: InequalityCheck::new(lhs, rhs),
        complement_distance: delta,
        projected_orientation_preserved: preserved,
        constant,
        implied_constant: (delta > 0.0).then(|| (lhs - dist_t) / delta),
    })
}
