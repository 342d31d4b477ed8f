use nalgebra::DMatrix;

use crate::error::{check_exponent, Result, RigidityError};
use crate::immersion::{energies_on, CellBox, ImmersionField, Measure, MetricField};
use crate::metric_algebra::{frame_distance, oriented_complement, LinMap, OrientedSubspace};
use crate::par;
use crate::sampling;

use super::metric::{fit_metric_rotation, gram_defect};
use super::report::{empirical_constant, RhsComponents, RigidityReport};

/// Base-point candidates are subsampled above this many cells.
pub const MAX_BASE_CANDIDATES: usize = 4096;

/// Oriented tangent planes `Π_x = Dū(x)(R^d)` and their oriented complements,
/// `None` on degenerate cells.
#[derive(Debug, Clone)]
pub struct PlaneField {
    pub planes: Vec<Option<OrientedSubspace>>,
    pub complements: Vec<Option<OrientedSubspace>>,
}

impl PlaneField {
    pub fn len(&self) -> usize {
        self.planes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.planes.is_empty()
    }
}

/// Orthonormalized column spans of `Dū` with the orientation of the columns.
pub fn tangent_plane_field(u: &ImmersionField) -> PlaneField {
    let pairs = par::map_range(u.grid().cell_count(), |c| {
        if u.cell(c).degenerate {
            return (None, None);
        }
        let plane = OrientedSubspace::from_spanning(&u.differentials()[c]).ok();
        let complement = plane.as_ref().and_then(|p| oriented_complement(p).ok());
        (plane, complement)
    });
    let (planes, complements) = pairs.into_iter().unzip();
    PlaneField { planes, complements }
}

/// Cell among `cells` minimizing `Σ_y |Π_y^⊥ - Π_x^⊥|^p`, with `y` ranging
/// over the non-degenerate cells of `cells`. Ties go to the lowest index.
pub(crate) fn choose_base_point_among(
    complements: &[Option<OrientedSubspace>],
    cells: &[usize],
    p: f64,
    seed: u64,
) -> Result<(usize, f64)> {
    let valid: Vec<usize> = cells.iter().copied().filter(|&c| complements[c].is_some()).collect();
    let first = valid.first().ok_or_else(|| RigidityError::Degenerate("every cell is degenerate".into()))?;
    let reference = complements[*first].as_ref().expect("filtered");
    let (ambient, k) = (reference.ambient_dim(), reference.dim());
    let frames: Vec<&[f64]> =
        valid.iter().map(|&c| complements[c].as_ref().expect("filtered").frame().as_slice()).collect();
    let candidates: Vec<usize> = if valid.len() <= MAX_BASE_CANDIDATES {
        (0..valid.len()).collect()
    } else {
        let mut rng = sampling::rng(seed);
        let mut picked = rand::seq::index::sample(&mut rng, valid.len(), MAX_BASE_CANDIDATES).into_vec();
        picked.sort_unstable();
        picked
    };
    let sums = par::map_slice(&candidates, |&i| {
        frames.iter().map(|f| frame_distance(f, frames[i], ambient, k).powf(p)).sum::<f64>()
    });
    let mut best = (candidates[0], sums[0]);
    for (&i, &s) in candidates.iter().zip(&sums).skip(1) {
        if s < best.1 {
            best = (i, s);
        }
    }
    Ok((valid[best.0], best.1))
}

/// Chebyshev base point of a plane field over all cells.
pub fn choose_base_point(planes: &PlaneField, p: f64, seed: u64) -> Result<usize> {
    check_exponent(p)?;
    let cells: Vec<usize> = (0..planes.len()).collect();
    Ok(choose_base_point_among(&planes.complements, &cells, p, seed)?.0)
}

/// Codimension-1 rigidity pipeline on `cell_box`, reusing the differentials
/// and planes of the full field.
pub(crate) fn local_rigidity_with(
    u: &ImmersionField,
    g: &MetricField,
    planes: &PlaneField,
    p: f64,
    cell_box: &CellBox,
    seed: u64,
) -> Result<RigidityReport> {
    check_exponent(p)?;
    let grid = u.grid();
    if grid != g.grid() {
        return Err(RigidityError::InvalidGrid("immersion and metric grids differ".into()));
    }
    let cells = cell_box.cells(grid);
    let (base_cell, _) = choose_base_point_among(&planes.complements, &cells, p, seed)?;
    let base_plane = planes.planes[base_cell].as_ref().expect("base cell is non-degenerate");
    let base_complement = planes.complements[base_cell].as_ref().expect("base cell is non-degenerate");
    let frame: &DMatrix<f64> = base_plane.frame();
    let frame_t = frame.transpose();
    let dv: Vec<LinMap> = cells.iter().map(|&c| &frame_t * &u.differentials()[c]).collect();
    let base_metric = g.cell(base_cell);
    let fit = fit_metric_rotation(&dv, &cells, g, base_metric, p)?;
    let fitted = frame * &fit.fitted;

    let h_d = grid.cell_volume();
    let (ambient, k) = (base_complement.ambient_dim(), base_complement.dim());
    let per_cell = par::map_slice(&cells, |&c| {
        let gc = g.cell(c);
        let lhs = h_d * ((&u.differentials()[c] - &fitted) * gc.inv_sqrt()).norm().powf(p);
        let variation = planes.complements[c].as_ref().map_or(0.0, |pc| {
            h_d * frame_distance(pc.frame().as_slice(), base_complement.frame().as_slice(), ambient, k).powf(p)
        });
        (lhs, variation)
    });
    let lhs: f64 = per_cell.iter().map(|x| x.0).sum();
    let plane_variation: f64 = per_cell.iter().map(|x| x.1).sum();

    let energy = energies_on(u, g, None, p, Measure::Riemannian, cell_box)?;
    let (oscillation, diameter) = g.oscillation_and_diameter(cell_box)?;
    let volume = cell_box.volume(grid);
    let rhs = RhsComponents {
        osc_term: volume * oscillation.powf(p),
        stretch: energy.stretch,
        bend_scale: diameter.powf(p) * energy.excess,
    };
    Ok(RigidityReport {
        p,
        base_cell,
        base_point: grid.cell_center(base_cell),
        constraint_defect: gram_defect(&fitted, base_metric),
        fitted,
        lhs,
        empirical_constant: empirical_constant(lhs, rhs.total()),
        rhs,
        oscillation,
        diameter,
        volume,
        plane_variation: Some(plane_variation),
        degenerate_cells: energy.degenerate_cells,
        energies: Some(energy),
    })
}

/// Codimension-1 rigidity pipeline on a sub-box of the chart.
pub fn local_rigidity_on(
    u: &ImmersionField,
    g: &MetricField,
    p: f64,
    cell_box: &CellBox,
    seed: u64,
) -> Result<RigidityReport> {
    local_rigidity_with(u, g, &tangent_plane_field(u), p, cell_box, seed)
}

/// Codimension-1 rigidity pipeline on the whole chart: tangent planes,
/// Chebyshev base point `x0`, projection onto `Π_{x0}`, metric fit there, and
/// the terms of the rigidity inequality.
pub fn local_rigidity(u: &ImmersionField, g: &MetricField, p: f64) -> Result<RigidityReport> {
    local_rigidity_on(u, g, p, &u.grid().full_box(), 0)
}
