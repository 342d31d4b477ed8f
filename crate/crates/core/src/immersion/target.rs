use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Result, RigidityError};

const ON_MANIFOLD_TOL: f64 = 1e-8;

/// Target manifold `N` of dimension `d + 1` with its embedding in `R^D`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TargetSpace {
    /// `N = R^{d+1}`, `D = d + 1`.
    EuclideanFull { d: usize },
    /// `N = S^{d+1}(rho)` in `R^{d+2}`.
    Sphere { d: usize, rho: f64 },
}

/// Serialized form `{kind, D, rho?}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TargetSpec {
    pub kind: TargetKind,
    #[serde(rename = "D")]
    pub ambient_dim: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetKind {
    EuclideanFull,
    Sphere,
}

impl TargetSpace {
    pub fn euclidean(d: usize) -> Self {
        Self::EuclideanFull { d }
    }

    pub fn sphere(d: usize, rho: f64) -> Result<Self> {
        if !(rho > 0.0 && rho.is_finite()) {
            return Err(RigidityError::InvalidScenario(format!("sphere radius {rho} <= 0")));
        }
        Ok(Self::Sphere { d, rho })
    }

    /// Dimension `d` of the immersed chart.
    pub fn chart_dim(&self) -> usize {
        match *self {
            Self::EuclideanFull { d } | Self::Sphere { d, .. } => d,
        }
    }

    pub fn manifold_dim(&self) -> usize {
        self.chart_dim() + 1
    }

    pub fn ambient_dim(&self) -> usize {
        match *self {
            Self::EuclideanFull { d } => d + 1,
            Self::Sphere { d, .. } => d + 2,
        }
    }

    pub fn to_spec(&self) -> TargetSpec {
        match *self {
            Self::EuclideanFull { d } => TargetSpec { kind: TargetKind::EuclideanFull, ambient_dim: d + 1, rho: None },
            Self::Sphere { d, rho } => TargetSpec { kind: TargetKind::Sphere, ambient_dim: d + 2, rho: Some(rho) },
        }
    }

    pub fn from_spec(spec: &TargetSpec, d: usize) -> Result<Self> {
        let target = match spec.kind {
            TargetKind::EuclideanFull => Self::euclidean(d),
            TargetKind::Sphere => Self::sphere(
                d,
                spec.rho.ok_or_else(|| RigidityError::InvalidScenario("sphere target needs rho".into()))?,
            )?,
        };
        if target.ambient_dim() != spec.ambient_dim {
            return Err(RigidityError::DimensionMismatch { expected: target.ambient_dim(), found: spec.ambient_dim });
        }
        Ok(target)
    }

    /// Distance of `q` from the embedded manifold.
    pub fn manifold_defect(&self, q: &DVector<f64>) -> f64 {
        match *self {
            Self::EuclideanFull { .. } => 0.0,
            Self::Sphere { rho, .. } => (q.norm() - rho).abs(),
        }
    }

    /// Nearest point of the embedded manifold (radial projection on spheres).
    pub fn retract(&self, q: &DVector<f64>) -> DVector<f64> {
        match *self {
            Self::EuclideanFull { .. } => q.clone(),
            Self::Sphere { rho, .. } => q * (rho / q.norm()),
        }
    }

    /// Orthogonal projector of `R^D` onto the tangent space at `q`.
    pub fn tangent_projection(&self, q: &DVector<f64>) -> Result<DMatrix<f64>> {
        let dim = self.ambient_dim();
        if q.len() != dim {
            return Err(RigidityError::DimensionMismatch { expected: dim, found: q.len() });
        }
        let defect = self.manifold_defect(q);
        if defect > ON_MANIFOLD_TOL {
            return Err(RigidityError::OffManifold { defect });
        }
        Ok(self.tangent_projection_unchecked(q))
    }

    pub(crate) fn tangent_projection_unchecked(&self, q: &DVector<f64>) -> DMatrix<f64> {
        let dim = self.ambient_dim();
        match self {
            Self::EuclideanFull { .. } => DMatrix::identity(dim, dim),
            Self::Sphere { .. } => {
                let n = q.normalize();
                DMatrix::identity(dim, dim) - &n * n.transpose()
            }
        }
    }

    /// Oriented unit normal of the tangent frame `du` (`D x d`) at `q`:
    /// the generalized cross product, `c_i = det[du | e_i]` for Euclidean
    /// targets and `c_i = det[q/|q| | du | e_i]` on spheres (the outward
    /// normal leads the orientation of the sphere). Returns `None` when `du`
    /// is rank-deficient.
    pub fn unit_normal(&self, du: &DMatrix<f64>, q: &DVector<f64>) -> Option<DVector<f64>> {
        let dim = self.ambient_dim();
        let d = du.ncols();
        let lead = match self {
            Self::EuclideanFull { .. } => 0,
            Self::Sphere { .. } => 1,
        };
        let mut m = DMatrix::<f64>::zeros(dim, dim);
        if lead == 1 {
            m.set_column(0, &q.normalize());
        }
        for k in 0..d {
            m.set_column(lead + k, &du.column(k));
        }
        let c = DVector::from_fn(dim, |i, _| {
            m.column_mut(dim - 1).fill(0.0);
            m[(i, dim - 1)] = 1.0;
            m.determinant()
        });
        let volume: f64 = du.column_iter().map(|col| col.norm()).product();
        let norm = c.norm();
        if !(volume > 0.0) || !(norm > 1e-10 * volume) {
            return None;
        }
        Some(c / norm)
    }
}
