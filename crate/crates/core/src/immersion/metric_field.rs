use nalgebra::DMatrix;
use rand::Rng;

use super::grid::{CellBox, GridDomain};
use crate::error::{Result, RigidityError};
use crate::metric_algebra::SpdMetric;
use crate::par;
use crate::sampling;

/// Node-sampled metric on the chart cube together with its sandwich
/// constant `lambda` and Lipschitz constant `L`.
///
/// Cell metrics are the arithmetic mean of the corner grams.
#[derive(Debug, Clone)]
pub struct MetricField {
    grid: GridDomain,
    nodes: Vec<SpdMetric>,
    cells: Vec<SpdMetric>,
    lambda: f64,
    lipschitz: f64,
}

impl MetricField {
    pub fn new(grid: GridDomain, grams: Vec<DMatrix<f64>>, lambda: f64, lipschitz: f64) -> Result<Self> {
        grid.validate()?;
        if grams.len() != grid.node_count() {
            return Err(RigidityError::DimensionMismatch { expected: grid.node_count(), found: grams.len() });
        }
        if !(lambda >= 1.0) {
            return Err(RigidityError::InvalidScenario(format!("lambda = {lambda} < 1")));
        }
        let nodes = grams
            .into_iter()
            .map(|gram| {
                if gram.nrows() != grid.d {
                    return Err(RigidityError::DimensionMismatch { expected: grid.d, found: gram.nrows() });
                }
                SpdMetric::new(gram)
            })
            .collect::<Result<Vec<_>>>()?;
        if let Some(bad) = nodes.iter().find(|g| !g.within_sandwich(lambda)) {
            let e = bad.eigenvalues();
            let eigenvalue = if e.max() > lambda { e.max() } else { e.min() };
            return Err(RigidityError::SandwichViolation { lambda, eigenvalue });
        }
        let field = Self::assemble(grid, nodes, lambda, lipschitz);
        let measured = field.measured_lipschitz();
        if measured > lipschitz * (1.0 + 1e-6) + 1e-12 {
            return Err(RigidityError::InvalidScenario(format!(
                "measured Lipschitz quotient {measured} exceeds L = {lipschitz}"
            )));
        }
        Ok(field)
    }

    fn assemble(grid: GridDomain, nodes: Vec<SpdMetric>, lambda: f64, lipschitz: f64) -> Self {
        let cells = par::map_range(grid.cell_count(), |c| {
            let corners = grid.cell_corners(c);
            let mut mean = DMatrix::zeros(grid.d, grid.d);
            for &i in &corners {
                mean += nodes[i].gram();
            }
            SpdMetric::new(mean / corners.len() as f64).expect("convex combination of SPD grams")
        });
        Self { grid, nodes, cells, lambda, lipschitz }
    }

    pub fn flat(grid: GridDomain) -> Self {
        Self::constant(grid, SpdMetric::identity(grid.d))
    }

    pub fn constant(grid: GridDomain, g: SpdMetric) -> Self {
        let lambda = g.sandwich_constant();
        Self::assemble(grid, vec![g; grid.node_count()], lambda, 0.0)
    }

    /// `g(x) = (1 + a x_1) I`, requiring `1 + a l > 0`.
    pub fn linear(grid: GridDomain, slope: f64) -> Result<Self> {
        let end = 1.0 + slope * grid.l;
        if !(end > 0.0) {
            return Err(RigidityError::InvalidScenario(format!("linear metric degenerates: 1 + a l = {end}")));
        }
        let lambda = end.max(1.0 / end);
        let lipschitz = slope.abs() * (grid.d as f64).sqrt();
        let grams = (0..grid.node_count())
            .map(|i| DMatrix::identity(grid.d, grid.d) * (1.0 + slope * grid.node_coords(i)[0]))
            .collect();
        Self::new(grid, grams, lambda, lipschitz)
    }

    /// Seeded smooth metric `Q diag(exp(phi_i(x))) Q^T` with `|phi_i| < ln lambda`;
    /// the amplitude is shrunk until the discrete Lipschitz quotient is at most `L`.
    pub fn random_smooth(grid: GridDomain, lambda: f64, lipschitz: f64, seed: u64) -> Result<Self> {
        grid.validate()?;
        if !(lambda >= 1.0) || !(lipschitz >= 0.0) {
            return Err(RigidityError::InvalidScenario(format!(
                "random metric needs lambda >= 1 and L >= 0 (got {lambda}, {lipschitz})"
            )));
        }
        let d = grid.d;
        let mut rng = sampling::rng(seed);
        let q = sampling::random_rotation(&mut rng, d);
        const MODES: usize = 3;
        // (coefficient, wave vector, phase) per eigenvalue and mode
        let modes: Vec<Vec<(f64, Vec<f64>, f64)>> = (0..d)
            .map(|_| {
                let raw: Vec<f64> = (0..MODES).map(|_| rng.random_range(-1.0..1.0)).collect();
                let total: f64 = raw.iter().map(|c: &f64| c.abs()).sum::<f64>().max(1e-12);
                raw.into_iter()
                    .map(|c| {
                        let k: Vec<f64> =
                            (0..d).map(|_| rng.random_range(-2.0..2.0) * std::f64::consts::PI / grid.l).collect();
                        (c / total, k, rng.random_range(0.0..std::f64::consts::TAU))
                    })
                    .collect()
            })
            .collect();
        let build = |amplitude: f64| -> Vec<DMatrix<f64>> {
            par::map_range(grid.node_count(), |i| {
                let x = grid.node_coords(i);
                let diag = nalgebra::DVector::from_fn(d, |r, _| {
                    let phi: f64 = modes[r]
                        .iter()
                        .map(|(c, k, ph)| c * (k.iter().zip(&x).map(|(a, b)| a * b).sum::<f64>() + ph).sin())
                        .sum();
                    (amplitude * phi).exp()
                });
                let g = &q * DMatrix::from_diagonal(&diag) * q.transpose();
                (&g + g.transpose()) * 0.5
            })
        };
        let mut amplitude = 0.9 * lambda.ln();
        for _ in 0..200 {
            let grams = build(amplitude);
            let measured = discrete_lipschitz(&grid, &grams);
            if measured <= lipschitz {
                return Self::new(grid, grams, lambda, lipschitz);
            }
            amplitude *= 0.95 * lipschitz / measured;
        }
        Err(RigidityError::InvalidScenario(format!("could not meet Lipschitz bound {lipschitz}")))
    }

    pub fn grid(&self) -> &GridDomain {
        &self.grid
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    pub fn node(&self, i: usize) -> &SpdMetric {
        &self.nodes[i]
    }

    pub fn cell(&self, c: usize) -> &SpdMetric {
        &self.cells[c]
    }

    pub fn nodes(&self) -> &[SpdMetric] {
        &self.nodes
    }

    /// `max |g(x) - g(y)| / |x - y|` over axis-neighbouring nodes.
    pub fn measured_lipschitz(&self) -> f64 {
        let grams: Vec<DMatrix<f64>> = self.nodes.iter().map(|g| g.gram().clone()).collect();
        discrete_lipschitz(&self.grid, &grams)
    }

    /// `(osc, diam)` over the nodes of a cell box: the largest pairwise gram
    /// distance and the Euclidean diameter of the box.
    pub fn oscillation_and_diameter(&self, cell_box: &CellBox) -> Result<(f64, f64)> {
        if cell_box.d != self.grid.d || cell_box.cell_count() == 0 {
            return Err(RigidityError::InvalidBox("box does not match the grid".into()));
        }
        for k in 0..cell_box.d {
            if cell_box.hi[k] > self.grid.n || cell_box.lo[k] >= cell_box.hi[k] {
                return Err(RigidityError::InvalidBox(format!("axis {k} out of range")));
            }
        }
        let mut points: Vec<Vec<f64>> =
            cell_box.nodes(&self.grid).into_iter().map(|i| self.nodes[i].gram().as_slice().to_vec()).collect();
        points.sort_by(|a, b| {
            a.iter().zip(b).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(std::cmp::Ordering::Equal)
        });
        points.dedup();
        let maxima = par::map_range(points.len(), |i| {
            points[i + 1..]
                .iter()
                .map(|q| q.iter().zip(&points[i]).map(|(a, b)| (a - b) * (a - b)).sum::<f64>())
                .fold(0.0, f64::max)
        });
        let osc = maxima.into_iter().fold(0.0, f64::max).sqrt();
        Ok((osc, cell_box.diameter(&self.grid)))
    }
}

fn discrete_lipschitz(grid: &GridDomain, grams: &[DMatrix<f64>]) -> f64 {
    let h = grid.h();
    let per_node = par::map_range(grid.node_count(), |i| {
        let m = grid.node_multi(i);
        let mut best: f64 = 0.0;
        for k in 0..grid.d {
            if m[k] < grid.n {
                let mut next = m;
                next[k] += 1;
                let j = grid.node_index(&next);
                best = best.max((&grams[j] - &grams[i]).norm() / h);
            }
        }
        best
    });
    per_node.into_iter().fold(0.0, f64::max)
}
