use nalgebra::DMatrix;

use crate::error::{check_exponent, Result, RigidityError};
use crate::immersion::{CellBox, MapField, MetricField};
use crate::metric_algebra::{nearest_isometry, LinMap, SpdMetric};

use super::euclidean::euclidean_best_rotation;
use super::report::{empirical_constant, RhsComponents, RigidityReport};

/// Result of the equidimensional metric fit on a set of cells.
#[derive(Debug, Clone)]
pub(crate) struct MetricFit {
    /// `R = R̄ g_{x0}^{1/2} ∈ SO(g_{x0}, e_d)`.
    pub fitted: DMatrix<f64>,
    /// `Σ h^d |Dv - R|^p_{g_x, e}`.
    pub lhs: f64,
    /// `Σ h^d dist^p_{g_x, e}(Dv, SO(g_x, e_d))`.
    pub stretch: f64,
}

/// Fits `R ∈ SO(g_base, e_d)` to square cell maps `dv[i]` living on
/// `cells[i]`, with Lebesgue weights.
pub(crate) fn fit_metric_rotation(
    dv: &[LinMap],
    cells: &[usize],
    g: &MetricField,
    base: &SpdMetric,
    p: f64,
) -> Result<MetricFit> {
    let h_d = g.grid().cell_volume();
    let whitened: Vec<LinMap> = dv.iter().map(|a| a * base.inv_sqrt()).collect();
    let weights = vec![h_d; dv.len()];
    let rbar = euclidean_best_rotation(&whitened, &weights, p)?.rotation;
    let fitted = rbar * base.sqrt();
    let mut lhs = 0.0;
    let mut stretch = 0.0;
    for (a, &c) in dv.iter().zip(cells) {
        let gc = g.cell(c);
        lhs += h_d * ((a - &fitted) * gc.inv_sqrt()).norm().powf(p);
        stretch += h_d * nearest_isometry(a, gc, true)?.distance.powf(p);
    }
    Ok(MetricFit { fitted, lhs, stretch })
}

/// `|R^T R - g|_F`.
pub(crate) fn gram_defect(r: &DMatrix<f64>, g: &SpdMetric) -> f64 {
    (r.transpose() * r - g.gram()).norm()
}

/// Non-Euclidean rigidity fit of an equidimensional map `u: Q -> R^d` on
/// `cell_box`, anchored at the metric of `base_cell`.
pub fn metric_rigidity_on(
    u: &MapField,
    g: &MetricField,
    base_cell: usize,
    p: f64,
    cell_box: &CellBox,
) -> Result<RigidityReport> {
    check_exponent(p)?;
    let grid = u.grid();
    if grid != g.grid() {
        return Err(RigidityError::InvalidGrid("map and metric grids differ".into()));
    }
    if u.out_dim() != grid.d {
        return Err(RigidityError::DimensionMismatch { expected: grid.d, found: u.out_dim() });
    }
    if base_cell >= grid.cell_count() {
        return Err(RigidityError::InvalidBox(format!("base cell {base_cell} outside the grid")));
    }
    let cells = cell_box.cells(grid);
    let dv: Vec<LinMap> = cells.iter().map(|&c| u.differentials()[c].clone()).collect();
    let base = g.cell(base_cell);
    let fit = fit_metric_rotation(&dv, &cells, g, base, p)?;
    let (oscillation, diameter) = g.oscillation_and_diameter(cell_box)?;
    let volume = cell_box.volume(grid);
    let rhs = RhsComponents { osc_term: volume * oscillation.powf(p), stretch: fit.stretch, bend_scale: 0.0 };
    Ok(RigidityReport {
        p,
        base_cell,
        base_point: grid.cell_center(base_cell),
        constraint_defect: gram_defect(&fit.fitted, base),
        fitted: fit.fitted,
        lhs: fit.lhs,
        empirical_constant: empirical_constant(fit.lhs, rhs.total()),
        rhs,
        oscillation,
        diameter,
        volume,
        plane_variation: None,
        energies: None,
        degenerate_cells: 0,
    })
}

/// [`metric_rigidity_on`] over the whole chart.
pub fn metric_rigidity(u: &MapField, g: &MetricField, base_cell: usize, p: f64) -> Result<RigidityReport> {
    metric_rigidity_on(u, g, base_cell, p, &u.grid().full_box())
}
