use serde::{Deserialize, Serialize};

use crate::error::{check_exponent, Result, RigidityError};
use crate::immersion::{CellBox, GridDomain, ImmersionField, MetricField, MAX_DIM};
use crate::io::matrix_rows;
use crate::metric_algebra::LinMap;
use crate::par;

use super::local::{local_rigidity_with, tangent_plane_field};
use super::report::RigidityReport;

/// Relative slack for the containment tests of tripled cubes.
const CONTAINMENT_TOL: f64 = 1e-12;

/// Fit on one cube of the partition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubcubeFit {
    /// Multi-index of the cube in the `t^d` partition.
    pub index: Vec<usize>,
    pub cell_box: CellBox,
    #[serde(with = "matrix_rows")]
    pub fitted: LinMap,
    /// `∫_{Q'} |Dū - R_{Q'}|^p_{g,e} dx`.
    pub residual: f64,
    pub report: RigidityReport,
}

/// Piecewise-constant field `G_t` over a partition into `t^d` cubes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RotationField {
    pub t: usize,
    pub p: f64,
    pub grid: GridDomain,
    pub subcubes: Vec<SubcubeFit>,
    /// `Σ_{Q'} ∫_{Q'} |Dū - G_t|^p_{g,e} dx`.
    pub residual: f64,
}

impl RotationField {
    /// Cells per cube side.
    pub fn cells_per_cube(&self) -> usize {
        self.grid.n / self.t
    }

    /// Linear index of a cube multi-index (last axis fastest).
    pub fn cube_index(&self, m: &[usize]) -> usize {
        m.iter().fold(0, |acc, &x| acc * self.t + x)
    }

    /// Cube containing a fine cell.
    pub fn cube_of_cell(&self, cell: usize) -> usize {
        let m = self.grid.cell_multi(cell);
        let s = self.cells_per_cube();
        let cube: Vec<usize> = m[..self.grid.d].iter().map(|x| x / s).collect();
        self.cube_index(&cube)
    }

    pub fn map_at_cell(&self, cell: usize) -> &LinMap {
        &self.subcubes[self.cube_of_cell(cell)].fitted
    }
}

fn cube_multi(mut i: usize, t: usize, d: usize) -> Vec<usize> {
    let mut m = vec![0; d];
    for k in (0..d).rev() {
        m[k] = i % t;
        i /= t;
    }
    m
}

/// Runs the local rigidity pipeline on every cube of the `t^d` partition.
pub fn multiscale_fit(u: &ImmersionField, g: &MetricField, t: usize, p: f64, seed: u64) -> Result<RotationField> {
    check_exponent(p)?;
    let grid = *u.grid();
    if t == 0 || !grid.n.is_multiple_of(t) {
        return Err(RigidityError::PartitionMismatch { t, n: grid.n });
    }
    let s = grid.n / t;
    let d = grid.d;
    let planes = tangent_plane_field(u);
    let fits = par::map_range(t.pow(d as u32), |i| -> Result<SubcubeFit> {
        let index = cube_multi(i, t, d);
        let lo: Vec<usize> = index.iter().map(|m| m * s).collect();
        let hi: Vec<usize> = index.iter().map(|m| (m + 1) * s).collect();
        let cell_box = CellBox::new(&grid, &lo, &hi)?;
        let report = local_rigidity_with(u, g, &planes, p, &cell_box, seed.wrapping_add(i as u64))?;
        Ok(SubcubeFit { index, cell_box, fitted: report.fitted.clone(), residual: report.lhs, report })
    });
    let subcubes = fits.into_iter().collect::<Result<Vec<_>>>()?;
    let residual = subcubes.iter().map(|f| f.residual).sum();
    Ok(RotationField { t, p, grid, subcubes, residual })
}

/// Shifted-difference integral of a rotation field over the admissible cubes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranslationModulus {
    pub zeta: Vec<f64>,
    /// `∫_{𝓠(ζ)} |G(x + ζ) - G(x)|^p_{g,e} dx`.
    pub value: f64,
    /// `|𝓠(ζ)| / |Q|`.
    pub covered_fraction: f64,
    pub admissible_cubes: usize,
}

/// Whether `3Q' ∪ (ζ + 3Q') ⊂ Q` for the cube with multi-index `m`.
fn admissible(m: &[usize], side: f64, l: f64, zeta: &[f64]) -> bool {
    let tol = CONTAINMENT_TOL * l;
    m.iter().zip(zeta).all(|(&mk, &z)| {
        let lo = (mk as f64 - 1.0) * side;
        let hi = (mk as f64 + 2.0) * side;
        lo >= -tol && hi <= l + tol && lo + z >= -tol && hi + z <= l + tol
    })
}

/// Overlaps of `[a, a + h)` with the cubes `[j s, (j + 1) s)` as
/// `(cube, fraction of h)` pairs.
fn axis_overlaps(a: f64, h: f64, side: f64, t: usize) -> Vec<(usize, f64)> {
    let first = ((a / side).floor().max(0.0) as usize).min(t - 1);
    let mut out = Vec::with_capacity(2);
    for j in first..t {
        let lo = (j as f64 * side).max(a);
        let hi = ((j + 1) as f64 * side).min(a + h);
        if hi > lo {
            out.push((j, (hi - lo) / h));
        }
        if (j + 1) as f64 * side >= a + h {
            break;
        }
    }
    out
}

/// `∫_{𝓠(ζ)} |G(x + ζ) - G(x)|^p_{g,e} dx`, integrated exactly on every fine
/// cell using the overlap of the shifted cell with the cubes.
pub fn translation_modulus(field: &RotationField, g: &MetricField, zeta: &[f64]) -> Result<TranslationModulus> {
    let grid = field.grid;
    if g.grid() != &grid {
        return Err(RigidityError::InvalidGrid("rotation field and metric grids differ".into()));
    }
    let d = grid.d;
    if zeta.len() != d {
        return Err(RigidityError::DimensionMismatch { expected: d, found: zeta.len() });
    }
    let empty = TranslationModulus { zeta: zeta.to_vec(), value: 0.0, covered_fraction: 0.0, admissible_cubes: 0 };
    if zeta.iter().map(|z| z * z).sum::<f64>().sqrt() >= grid.l {
        return Ok(empty);
    }
    let t = field.t;
    let side = grid.l / t as f64;
    let h = grid.h();
    let p = field.p;
    let chosen: Vec<&SubcubeFit> = field.subcubes.iter().filter(|f| admissible(&f.index, side, grid.l, zeta)).collect();
    let values = par::map_slice(&chosen, |fit| {
        let mut sum = 0.0;
        for c in fit.cell_box.cells(&grid) {
            let m = grid.cell_multi(c);
            let gc = g.cell(c);
            let per_axis: Vec<Vec<(usize, f64)>> =
                (0..d).map(|k| axis_overlaps(m[k] as f64 * h + zeta[k], h, side, t)).collect();
            let combos: usize = per_axis.iter().map(Vec::len).product();
            for mut i in 0..combos {
                let mut cube = [0usize; MAX_DIM];
                let mut frac = 1.0;
                for k in (0..d).rev() {
                    let (j, f) = per_axis[k][i % per_axis[k].len()];
                    i /= per_axis[k].len();
                    cube[k] = j;
                    frac *= f;
                }
                let other = &field.subcubes[field.cube_index(&cube[..d])].fitted;
                if other != &fit.fitted {
                    sum += frac * ((other - &fit.fitted) * gc.inv_sqrt()).norm().powf(p);
                }
            }
        }
        sum * grid.cell_volume()
    });
    Ok(TranslationModulus {
        zeta: zeta.to_vec(),
        value: values.iter().sum::<f64>() + 0.0,
        covered_fraction: chosen.len() as f64 * side.powi(d as i32) / grid.volume(),
        admissible_cubes: chosen.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::immersion::{DiffScheme, TargetSpace};
    use nalgebra::dvector;

    fn arc(n: usize) -> ImmersionField {
        let grid = GridDomain::new(1, 1.0, n).unwrap();
        ImmersionField::from_fn(grid, TargetSpace::euclidean(1), DiffScheme::Forward, |x| {
            dvector![x[0].cos(), x[0].sin()]
        })
        .unwrap()
    }

    #[test]
    fn affine_isometry_has_zero_residual() {
        let grid = GridDomain::new(2, 1.0, 8).unwrap();
        let u = ImmersionField::from_fn(grid, TargetSpace::euclidean(2), DiffScheme::Forward, |x| {
            dvector![x[1], -x[0], 0.5]
        })
        .unwrap();
        let g = MetricField::flat(grid);
        for t in [1, 2, 4, 8] {
            let field = multiscale_fit(&u, &g, t, 2.0, 0).unwrap();
            assert!(field.residual < 1e-24);
            assert_eq!(field.subcubes.len(), t * t);
            let m = translation_modulus(&field, &g, &[0.1, 0.05]).unwrap();
            assert!(m.value < 1e-24);
        }
    }

    #[test]
    fn residual_decreases_with_refinement() {
        let u = arc(64);
        let g = MetricField::flat(*u.grid());
        let residuals: Vec<f64> =
            [1, 2, 4, 8, 64].iter().map(|&t| multiscale_fit(&u, &g, t, 2.0, 0).unwrap().residual).collect();
        assert!(residuals.windows(2).all(|w| w[1] < w[0]), "{residuals:?}");
    }

    #[test]
    fn partition_must_divide_resolution() {
        let u = arc(10);
        let g = MetricField::flat(*u.grid());
        assert!(matches!(multiscale_fit(&u, &g, 3, 2.0, 0), Err(RigidityError::PartitionMismatch { .. })));
    }

    #[test]
    fn zero_shift_and_large_shift() {
        let u = arc(64);
        let g = MetricField::flat(*u.grid());
        let field = multiscale_fit(&u, &g, 8, 2.0, 0).unwrap();
        let zero = translation_modulus(&field, &g, &[0.0]).unwrap();
        assert_eq!(zero.value, 0.0);
        assert!((zero.covered_fraction - 6.0 / 8.0).abs() < 1e-12);
        let far = translation_modulus(&field, &g, &[1.0]).unwrap();
        assert_eq!((far.value, far.covered_fraction), (0.0, 0.0));
    }

    #[test]
    fn overlap_fractions_sum_to_one() {
        for a in [0.0, 0.013, 0.124, 0.3749] {
            let parts = axis_overlaps(a, 0.01, 0.125, 8);
            let total: f64 = parts.iter().map(|x| x.1).sum();
            assert!((total - 1.0).abs() < 1e-12, "{a} {parts:?}");
        }
    }
}
