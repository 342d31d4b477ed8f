use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::grid::GridDomain;
use super::target::TargetSpace;
use crate::error::{Result, RigidityError};
use crate::metric_algebra::LinMap;
use crate::par;

const ON_MANIFOLD_TOL: f64 = 1e-8;

/// Cell differentiation scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiffScheme {
    /// Differences along the edges leaving the lower corner of the cell.
    #[default]
    Forward,
    /// Mean over all parallel edges of the cell (centered at the cell center).
    Central,
}

/// Per-cell `D x d` differentials of node values (`D x node_count`).
pub fn cell_differentials(grid: &GridDomain, values: &DMatrix<f64>, scheme: DiffScheme) -> Vec<LinMap> {
    let d = grid.d;
    let h = grid.h();
    let rows = values.nrows();
    par::map_range(grid.cell_count(), |c| {
        let base = grid.cell_multi(c);
        let mut du = DMatrix::zeros(rows, d);
        for k in 0..d {
            let masks: Vec<usize> = match scheme {
                DiffScheme::Forward => vec![0],
                DiffScheme::Central => (0..1usize << d).filter(|m| m & (1 << k) == 0).collect(),
            };
            for &mask in &masks {
                let mut lo = base;
                for (j, x) in lo.iter_mut().enumerate().take(d) {
                    *x += (mask >> j) & 1;
                }
                let mut hi = lo;
                hi[k] += 1;
                let (a, b) = (grid.node_index(&lo), grid.node_index(&hi));
                let mut col = du.column_mut(k);
                col += (values.column(b) - values.column(a)) / (h * masks.len() as f64);
            }
        }
        du
    })
}

/// Per-node `D x d` differentials: central differences inside, second-order
/// one-sided differences on the boundary.
pub fn node_differentials(grid: &GridDomain, values: &DMatrix<f64>) -> Vec<LinMap> {
    let d = grid.d;
    let n = grid.n;
    let h = grid.h();
    par::map_range(grid.node_count(), |i| {
        let m = grid.node_multi(i);
        let mut du = DMatrix::zeros(values.nrows(), d);
        for k in 0..d {
            let at = |offset: isize| {
                let mut mm = m;
                mm[k] = (m[k] as isize + offset) as usize;
                values.column(grid.node_index(&mm))
            };
            let col = if m[k] == 0 {
                (at(0) * -3.0 + at(1) * 4.0 - at(2)) / (2.0 * h)
            } else if m[k] == n {
                (at(0) * 3.0 - at(-1) * 4.0 + at(-2)) / (2.0 * h)
            } else {
                (at(1) - at(-1)) / (2.0 * h)
            };
            du.set_column(k, &col);
        }
        du
    })
}

/// Grid-sampled map `Q -> R^D` with cached cell differentials.
#[derive(Debug, Clone)]
pub struct MapField {
    grid: GridDomain,
    values: DMatrix<f64>,
    scheme: DiffScheme,
    du: Vec<LinMap>,
}

impl MapField {
    pub fn new(grid: GridDomain, values: DMatrix<f64>, scheme: DiffScheme) -> Result<Self> {
        grid.validate()?;
        if values.ncols() != grid.node_count() {
            return Err(RigidityError::DimensionMismatch { expected: grid.node_count(), found: values.ncols() });
        }
        if values.iter().any(|x| !x.is_finite()) {
            return Err(RigidityError::InvalidScenario("non-finite node value".into()));
        }
        let du = cell_differentials(&grid, &values, scheme);
        Ok(Self { grid, values, scheme, du })
    }

    /// Samples `f` at every node.
    pub fn from_fn(
        grid: GridDomain,
        out_dim: usize,
        scheme: DiffScheme,
        f: impl Fn(&[f64]) -> DVector<f64> + Sync + Send,
    ) -> Result<Self> {
        grid.validate()?;
        let cols = par::map_range(grid.node_count(), |i| f(&grid.node_coords(i)));
        if let Some(bad) = cols.iter().find(|c| c.len() != out_dim) {
            return Err(RigidityError::DimensionMismatch { expected: out_dim, found: bad.len() });
        }
        Self::new(grid, DMatrix::from_columns(&cols), scheme)
    }

    pub fn grid(&self) -> &GridDomain {
        &self.grid
    }

    pub fn out_dim(&self) -> usize {
        self.values.nrows()
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn scheme(&self) -> DiffScheme {
        self.scheme
    }

    pub fn differentials(&self) -> &[LinMap] {
        &self.du
    }
}

/// Grid-sampled immersion `ū: Q -> N ⊂ R^D` with its differential, oriented
/// unit normal, tangent projector and shape operator cached per cell.
#[derive(Debug, Clone)]
pub struct ImmersionField {
    map: MapField,
    target: TargetSpace,
    node_normals: DMatrix<f64>,
    cells: Vec<CellGeometry>,
}

/// Cached per-cell quantities of an immersion.
#[derive(Debug, Clone)]
pub struct CellGeometry {
    /// Point of the target attached to the cell (mean of the corners,
    /// retracted onto the manifold).
    pub point: DVector<f64>,
    /// `P_u`.
    pub projector: DMatrix<f64>,
    /// `ν̄`, zero on degenerate cells.
    pub normal: DVector<f64>,
    /// `Dν̄` from the node normals with the field's scheme.
    pub dnormal: LinMap,
    /// `S_u`, absent on degenerate cells.
    pub shape: Option<DMatrix<f64>>,
    /// `|Dū S_u - P_u Dν̄|_F`.
    pub shape_residual: f64,
    pub degenerate: bool,
}

impl ImmersionField {
    pub fn new(grid: GridDomain, target: TargetSpace, values: DMatrix<f64>, scheme: DiffScheme) -> Result<Self> {
        if target.chart_dim() != grid.d {
            return Err(RigidityError::DimensionMismatch { expected: grid.d, found: target.chart_dim() });
        }
        if values.nrows() != target.ambient_dim() {
            return Err(RigidityError::DimensionMismatch { expected: target.ambient_dim(), found: values.nrows() });
        }
        let worst = values.column_iter().map(|c| target.manifold_defect(&c.clone_owned())).fold(0.0, f64::max);
        if worst > ON_MANIFOLD_TOL {
            return Err(RigidityError::OffManifold { defect: worst });
        }
        let map = MapField::new(grid, values, scheme)?;
        let node_du = node_differentials(&grid, map.values());
        let normals = par::map_range(grid.node_count(), |i| {
            let q = map.values().column(i).clone_owned();
            target.unit_normal(&node_du[i], &q).unwrap_or_else(|| DVector::zeros(target.ambient_dim()))
        });
        let node_normals = DMatrix::from_columns(&normals);
        let dnormals = cell_differentials(&grid, &node_normals, scheme);
        let cells = par::map_range(grid.cell_count(), |c| {
            let corners = grid.cell_corners(c);
            let mut mean = DVector::zeros(target.ambient_dim());
            for &i in &corners {
                mean += map.values().column(i);
            }
            let point = target.retract(&(mean / corners.len() as f64));
            let projector = target.tangent_projection_unchecked(&point);
            let du = &map.differentials()[c];
            let dnormal = dnormals[c].clone();
            match target.unit_normal(du, &point) {
                Some(normal) => {
                    let tangential = &projector * &dnormal;
                    let gram = du.transpose() * du;
                    let shape = gram.try_inverse().map(|inv| inv * du.transpose() * &tangential);
                    let shape_residual = shape.as_ref().map_or(f64::NAN, |s| (du * s - &tangential).norm());
                    CellGeometry {
                        point,
                        projector,
                        normal,
                        dnormal,
                        degenerate: shape.is_none(),
                        shape,
                        shape_residual,
                    }
                }
                None => CellGeometry {
                    point,
                    projector,
                    normal: DVector::zeros(target.ambient_dim()),
                    dnormal,
                    shape: None,
                    shape_residual: f64::NAN,
                    degenerate: true,
                },
            }
        });
        Ok(Self { map, target, node_normals, cells })
    }

    /// Samples `f` at the nodes; sphere targets are checked, not retracted.
    pub fn from_fn(
        grid: GridDomain,
        target: TargetSpace,
        scheme: DiffScheme,
        f: impl Fn(&[f64]) -> DVector<f64> + Sync + Send,
    ) -> Result<Self> {
        let map = MapField::from_fn(grid, target.ambient_dim(), scheme, f)?;
        Self::new(grid, target, map.values, scheme)
    }

    pub fn grid(&self) -> &GridDomain {
        self.map.grid()
    }

    pub fn target(&self) -> &TargetSpace {
        &self.target
    }

    pub fn values(&self) -> &DMatrix<f64> {
        self.map.values()
    }

    pub fn scheme(&self) -> DiffScheme {
        self.map.scheme()
    }

    pub fn map_field(&self) -> &MapField {
        &self.map
    }

    pub fn differentials(&self) -> &[LinMap] {
        self.map.differentials()
    }

    pub fn node_normals(&self) -> &DMatrix<f64> {
        &self.node_normals
    }

    pub fn cells(&self) -> &[CellGeometry] {
        &self.cells
    }

    pub fn cell(&self, c: usize) -> &CellGeometry {
        &self.cells[c]
    }

    pub fn degenerate_count(&self) -> usize {
        self.cells.iter().filter(|c| c.degenerate).count()
    }

    /// Same node values differentiated with another scheme.
    pub fn with_scheme(&self, scheme: DiffScheme) -> Result<Self> {
        Self::new(*self.grid(), self.target, self.values().clone(), scheme)
    }
}

/// Per-cell differential `Dū`.
pub fn differential(u: &ImmersionField) -> &[LinMap] {
    u.differentials()
}

/// Per-cell oriented unit normal `ν̄` (zero on degenerate cells).
pub fn unit_normal(u: &ImmersionField) -> Vec<DVector<f64>> {
    u.cells().iter().map(|c| c.normal.clone()).collect()
}

/// Per-cell shape operator `S_u` (absent on degenerate cells).
pub fn shape_operator(u: &ImmersionField) -> Vec<Option<DMatrix<f64>>> {
    u.cells().iter().map(|c| c.shape.clone()).collect()
}

/// Tangent projector of a target at `q`.
pub fn tangent_projection(target: &TargetSpace, q: &DVector<f64>) -> Result<DMatrix<f64>> {
    target.tangent_projection(q)
}

/// Per cell and coordinate direction `j`, the slack of
/// `|∂_j ν̄|^2 <= |P_u ∂_j ν̄|^2 + C |∂_j ū|^2`.
pub fn normal_derivative_slack(u: &ImmersionField, constant: f64) -> Vec<f64> {
    let d = u.grid().d;
    u.cells()
        .iter()
        .zip(u.differentials())
        .filter(|(cell, _)| !cell.degenerate)
        .flat_map(|(cell, du)| {
            (0..d).map(move |j| {
                let dnu = cell.dnormal.column(j);
                let tangential = &cell.projector * dnu;
                tangential.norm_squared() + constant * du.column(j).norm_squared() - dnu.norm_squared()
            })
        })
        .collect()
}
