//! Small dense linear-algebra kernels for constant metrics, isometry sets and
//! oriented subspaces.
//!
//! Linear maps are plain `DMatrix<f64>` values (`D x d`, columns are the
//! images of the coordinate vectors). A metric `g` on `R^d` is stored through
//! its gram array; the metric Frobenius norm of `T` is the Euclidean Frobenius
//! norm of `T g^{-1/2}`.

mod bounds;
mod procrustes;
mod spd;
mod subspace;

pub use bounds::{projection_error_bound_check, InequalityCheck, ProjectionBoundReport};
pub use procrustes::{
    euclidean_distance_to_so, nearest_isometry, nearest_isometry_into_plane, rotation_maximizing_trace,
    so_set_distance, sorted_svd, IsometryFit, SortedSvd,
};
pub use spd::{frobenius_norm, metric_distance, spd_sqrt, SpdMetric};
pub use subspace::{
    frame_distance, map_orientation_in, orientation_preserved_under_projection, oriented_complement, project_onto,
    subspace_distance, OrientedSubspace,
};

use nalgebra::DMatrix;

/// A linear map `R^d -> R^D` stored as a `D x d` array.
pub type LinMap = DMatrix<f64>;

/// Absolute/relative tolerances used by containment and orthonormality checks.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Tolerances {
    pub abs: f64,
    pub rel: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { abs: 1e-10, rel: 1e-8 }
    }
}

impl Tolerances {
    /// `|value| <= abs + rel * scale`.
    pub fn accepts(&self, value: f64, scale: f64) -> bool {
        value.abs() <= self.abs + self.rel * scale.abs()
    }
}

/// Orthonormality defect `|F^T F - I|_F` of a frame.
pub(crate) fn orthonormality_defect(frame: &DMatrix<f64>) -> f64 {
    let k = frame.ncols();
    (frame.transpose() * frame - DMatrix::<f64>::identity(k, k)).norm()
}
