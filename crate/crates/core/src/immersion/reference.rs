use nalgebra::DMatrix;

use super::grid::GridDomain;
use super::metric_field::MetricField;
use crate::error::{Result, RigidityError};

const SYMMETRY_TOL: f64 = 1e-12;

/// Node-sampled symmetric 2-tensor `b`; the reference shape operator is
/// `S = g^{-1} b`.
#[derive(Debug, Clone)]
pub struct ReferenceShape {
    grid: GridDomain,
    b: Vec<DMatrix<f64>>,
}

impl ReferenceShape {
    pub fn new(grid: GridDomain, b: Vec<DMatrix<f64>>) -> Result<Self> {
        grid.validate()?;
        if b.len() != grid.node_count() {
            return Err(RigidityError::DimensionMismatch { expected: grid.node_count(), found: b.len() });
        }
        for m in &b {
            if m.nrows() != grid.d || m.ncols() != grid.d {
                return Err(RigidityError::DimensionMismatch { expected: grid.d, found: m.nrows() });
            }
            let asym = (m - m.transpose()).amax();
            if asym > SYMMETRY_TOL * m.amax().max(1.0) {
                return Err(RigidityError::NotSymmetric { asymmetry: asym });
            }
        }
        Ok(Self { grid, b })
    }

    pub fn zero(grid: GridDomain) -> Self {
        let b = vec![DMatrix::zeros(grid.d, grid.d); grid.node_count()];
        Self { grid, b }
    }

    pub fn constant(grid: GridDomain, b: DMatrix<f64>) -> Result<Self> {
        Self::new(grid, vec![b; grid.node_count()])
    }

    /// `b = kappa * g`, so that `S = kappa * I`.
    pub fn scaled_metric(g: &MetricField, kappa: f64) -> Self {
        let b = g.nodes().iter().map(|m| m.gram() * kappa).collect();
        Self { grid: *g.grid(), b }
    }

    pub fn grid(&self) -> &GridDomain {
        &self.grid
    }

    pub fn b(&self, node: usize) -> &DMatrix<f64> {
        &self.b[node]
    }

    /// `b` at a cell: mean of the corner values.
    pub fn cell_b(&self, cell: usize) -> DMatrix<f64> {
        let corners = self.grid.cell_corners(cell);
        let mut acc = DMatrix::zeros(self.grid.d, self.grid.d);
        for &i in &corners {
            acc += &self.b[i];
        }
        acc / corners.len() as f64
    }
}

fn check_shared_grid(a: &GridDomain, b: &GridDomain) -> Result<()> {
    if a != b {
        return Err(RigidityError::InvalidGrid("reference and metric grids differ".into()));
    }
    Ok(())
}

/// `S(x) = g(x)^{-1} b(x)` at every node.
pub fn reference_shape(reference: &ReferenceShape, g: &MetricField) -> Result<Vec<DMatrix<f64>>> {
    check_shared_grid(reference.grid(), g.grid())?;
    Ok(g.nodes().iter().zip(&reference.b).map(|(m, b)| m.inverse() * b).collect())
}

/// `S` at every cell, from the cell-averaged `g` and `b`.
pub fn reference_shape_cells(reference: &ReferenceShape, g: &MetricField) -> Result<Vec<DMatrix<f64>>> {
    check_shared_grid(reference.grid(), g.grid())?;
    Ok((0..g.grid().cell_count()).map(|c| g.cell(c).inverse() * reference.cell_b(c)).collect())
}
