use serde::{Deserialize, Serialize};

use crate::error::{Result, RigidityError};

/// Largest chart dimension supported by the grid code.
pub const MAX_DIM: usize = 3;

pub type MultiIndex = [usize; MAX_DIM];

/// Regular grid on the cube `[0, l]^d`: `n` cells and `n + 1` nodes per axis.
///
/// Nodes and cells are numbered row-major (the last axis varies fastest).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridDomain {
    pub d: usize,
    pub l: f64,
    pub n: usize,
}

impl GridDomain {
    pub fn new(d: usize, l: f64, n: usize) -> Result<Self> {
        let grid = Self { d, l, n };
        grid.validate()?;
        Ok(grid)
    }

    pub fn validate(&self) -> Result<()> {
        if self.d == 0 || self.d > MAX_DIM {
            return Err(RigidityError::InvalidGrid(format!("dimension {} outside 1..={MAX_DIM}", self.d)));
        }
        if self.n < 2 {
            return Err(RigidityError::InvalidGrid(format!("resolution {} < 2", self.n)));
        }
        if !(self.l.is_finite() && self.l > 0.0) {
            return Err(RigidityError::InvalidGrid(format!("side length {} <= 0", self.l)));
        }
        Ok(())
    }

    pub fn h(&self) -> f64 {
        self.l / self.n as f64
    }

    pub fn cell_volume(&self) -> f64 {
        self.h().powi(self.d as i32)
    }

    pub fn volume(&self) -> f64 {
        self.l.powi(self.d as i32)
    }

    pub fn diameter(&self) -> f64 {
        (self.d as f64).sqrt() * self.l
    }

    pub fn node_count(&self) -> usize {
        (self.n + 1).pow(self.d as u32)
    }

    pub fn cell_count(&self) -> usize {
        self.n.pow(self.d as u32)
    }

    pub fn node_index(&self, m: &MultiIndex) -> usize {
        linear(m, self.d, self.n + 1)
    }

    pub fn node_multi(&self, i: usize) -> MultiIndex {
        multi(i, self.d, self.n + 1)
    }

    pub fn cell_index(&self, m: &MultiIndex) -> usize {
        linear(m, self.d, self.n)
    }

    pub fn cell_multi(&self, i: usize) -> MultiIndex {
        multi(i, self.d, self.n)
    }

    pub fn node_coords(&self, i: usize) -> Vec<f64> {
        let m = self.node_multi(i);
        (0..self.d).map(|k| m[k] as f64 * self.h()).collect()
    }

    pub fn cell_center(&self, i: usize) -> Vec<f64> {
        let m = self.cell_multi(i);
        (0..self.d).map(|k| (m[k] as f64 + 0.5) * self.h()).collect()
    }

    /// Node indices of the `2^d` corners of a cell.
    pub fn cell_corners(&self, cell: usize) -> Vec<usize> {
        let c = self.cell_multi(cell);
        (0..1usize << self.d)
            .map(|mask| {
                let mut m = c;
                for (k, mk) in m.iter_mut().enumerate().take(self.d) {
                    *mk += (mask >> k) & 1;
                }
                self.node_index(&m)
            })
            .collect()
    }

    pub fn full_box(&self) -> CellBox {
        let mut hi = [1; MAX_DIM];
        hi[..self.d].fill(self.n);
        CellBox { d: self.d, lo: [0; MAX_DIM], hi }
    }
}

fn linear(m: &MultiIndex, d: usize, per_axis: usize) -> usize {
    m[..d].iter().fold(0, |acc, &x| acc * per_axis + x)
}

fn multi(mut i: usize, d: usize, per_axis: usize) -> MultiIndex {
    let mut m = [0; MAX_DIM];
    for k in (0..d).rev() {
        m[k] = i % per_axis;
        i /= per_axis;
    }
    m
}

/// Box of cells `lo[k] <= c[k] < hi[k]`; its nodes are `lo[k] <= i[k] <= hi[k]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellBox {
    pub d: usize,
    pub lo: MultiIndex,
    pub hi: MultiIndex,
}

impl CellBox {
    pub fn new(grid: &GridDomain, lo: &[usize], hi: &[usize]) -> Result<Self> {
        if lo.len() != grid.d || hi.len() != grid.d {
            return Err(RigidityError::InvalidBox(format!("box corners must have {} coordinates", grid.d)));
        }
        let mut b = CellBox { d: grid.d, lo: [0; MAX_DIM], hi: [1; MAX_DIM] };
        for k in 0..grid.d {
            if lo[k] >= hi[k] || hi[k] > grid.n {
                return Err(RigidityError::InvalidBox(format!(
                    "axis {k}: [{}, {}) is empty or exceeds {} cells",
                    lo[k], hi[k], grid.n
                )));
            }
            b.lo[k] = lo[k];
            b.hi[k] = hi[k];
        }
        Ok(b)
    }

    pub fn extent(&self, k: usize) -> usize {
        self.hi[k] - self.lo[k]
    }

    pub fn cell_count(&self) -> usize {
        (0..self.d).map(|k| self.extent(k)).product()
    }

    /// Cell indices in the box, in grid order.
    pub fn cells(&self, grid: &GridDomain) -> Vec<usize> {
        self.collect(grid, false)
    }

    /// Node indices in the closed box, in grid order.
    pub fn nodes(&self, grid: &GridDomain) -> Vec<usize> {
        self.collect(grid, true)
    }

    fn collect(&self, grid: &GridDomain, nodes: bool) -> Vec<usize> {
        let extra = usize::from(nodes);
        let shape: Vec<usize> = (0..self.d).map(|k| self.extent(k) + extra).collect();
        let total: usize = shape.iter().product();
        (0..total)
            .map(|mut i| {
                let mut m = [0; MAX_DIM];
                for k in (0..self.d).rev() {
                    m[k] = self.lo[k] + i % shape[k];
                    i /= shape[k];
                }
                if nodes {
                    grid.node_index(&m)
                } else {
                    grid.cell_index(&m)
                }
            })
            .collect()
    }

    pub fn side_lengths(&self, grid: &GridDomain) -> Vec<f64> {
        (0..self.d).map(|k| self.extent(k) as f64 * grid.h()).collect()
    }

    pub fn volume(&self, grid: &GridDomain) -> f64 {
        self.side_lengths(grid).iter().product()
    }

    pub fn diameter(&self, grid: &GridDomain) -> f64 {
        self.side_lengths(grid).iter().map(|s| s * s).sum::<f64>().sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn indexing_round_trips() {
        let g = GridDomain::new(3, 1.0, 4).unwrap();
        for i in 0..g.node_count() {
            assert_eq!(g.node_index(&g.node_multi(i)), i);
        }
        for i in 0..g.cell_count() {
            assert_eq!(g.cell_index(&g.cell_multi(i)), i);
        }
        assert_eq!(g.cell_corners(0), vec![0, 25, 5, 30, 1, 26, 6, 31]);
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(GridDomain::new(0, 1.0, 4).is_err());
        assert!(GridDomain::new(2, 1.0, 1).is_err());
        assert!(GridDomain::new(2, -1.0, 4).is_err());
        assert!(GridDomain::new(4, 1.0, 4).is_err());
    }

    #[test]
    fn boxes() {
        let g = GridDomain::new(2, 2.0, 4).unwrap();
        let b = CellBox::new(&g, &[1, 2], &[3, 4]).unwrap();
        assert_eq!(b.cells(&g), vec![6, 7, 10, 11]);
        assert_eq!(b.nodes(&g).len(), 9);
        assert!((b.diameter(&g) - 2f64.sqrt()).abs() < 1e-15);
        assert!(CellBox::new(&g, &[1, 2], &[1, 4]).is_err());
        assert!((g.full_box().diameter(&g) - g.diameter()).abs() < 1e-15);
    }
}
