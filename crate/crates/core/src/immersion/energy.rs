use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::field::ImmersionField;
use super::grid::CellBox;
use super::metric_field::MetricField;
use super::reference::{reference_shape_cells, ReferenceShape};
use crate::error::{check_exponent, Result, RigidityError};
use crate::metric_algebra::nearest_isometry;
use crate::par;

/// Integration measure for cell-midpoint quadrature.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Measure {
    /// `sqrt(det g) h^d` per cell.
    #[default]
    Riemannian,
    /// `h^d` per cell.
    Lebesgue,
}

/// Stretching, bending and Dirichlet energies of an immersion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    pub p: f64,
    pub measure: Measure,
    /// `E_s = ∫ dist^p(Dū, O(g, e_D))`.
    pub stretch: f64,
    /// `E_b = ∫ |P_u Dν̄|^p`.
    pub bend: f64,
    /// `∫ |Dū S_u|^p`, the other form of the bending energy.
    pub bend_shape: f64,
    /// `|bend - bend_shape|`.
    pub bend_gap: f64,
    /// `E_b^S = ∫ |Dū (S_u - S)|^p`, when a reference shape is given.
    pub bend_reference: Option<f64>,
    /// `∫ |Dū|^p`.
    pub dirichlet: f64,
    /// `E_b + dirichlet`.
    pub excess: f64,
    pub cells: usize,
    pub degenerate_cells: usize,
}

#[derive(Default, Clone, Copy)]
struct CellTerms {
    weight: f64,
    stretch: f64,
    bend: f64,
    bend_shape: f64,
    bend_reference: f64,
    dirichlet: f64,
    degenerate: bool,
}

/// Energies over the whole chart.
pub fn energies(
    u: &ImmersionField,
    g: &MetricField,
    reference: Option<&ReferenceShape>,
    p: f64,
    measure: Measure,
) -> Result<EnergyReport> {
    energies_on(u, g, reference, p, measure, &u.grid().full_box())
}

/// Energies restricted to the cells of `cell_box`.
pub fn energies_on(
    u: &ImmersionField,
    g: &MetricField,
    reference: Option<&ReferenceShape>,
    p: f64,
    measure: Measure,
    cell_box: &CellBox,
) -> Result<EnergyReport> {
    check_exponent(p)?;
    if u.grid() != g.grid() {
        return Err(RigidityError::InvalidGrid("immersion and metric grids differ".into()));
    }
    let reference_cells = reference.map(|r| reference_shape_cells(r, g)).transpose()?;
    let cells = cell_box.cells(u.grid());
    let h_d = u.grid().cell_volume();
    let terms = par::map_slice(&cells, |&c| -> Result<CellTerms> {
        let metric = g.cell(c);
        let du = &u.differentials()[c];
        let geometry = u.cell(c);
        let weight = match measure {
            Measure::Riemannian => metric.determinant().sqrt() * h_d,
            Measure::Lebesgue => h_d,
        };
        let whiten = |t: &DMatrix<f64>| (t * metric.inv_sqrt()).norm();
        let mut terms = CellTerms {
            weight,
            stretch: nearest_isometry(du, metric, false)?.distance.powf(p),
            dirichlet: whiten(du).powf(p),
            degenerate: geometry.degenerate,
            ..Default::default()
        };
        if let Some(shape) = &geometry.shape {
            terms.bend = whiten(&(&geometry.projector * &geometry.dnormal)).powf(p);
            terms.bend_shape = whiten(&(du * shape)).powf(p);
            if let Some(reference) = &reference_cells {
                terms.bend_reference = whiten(&(du * (shape - &reference[c]))).powf(p);
            }
        }
        Ok(terms)
    });
    let mut report = EnergyReport {
        p,
        measure,
        stretch: 0.0,
        bend: 0.0,
        bend_shape: 0.0,
        bend_gap: 0.0,
        bend_reference: reference_cells.as_ref().map(|_| 0.0),
        dirichlet: 0.0,
        excess: 0.0,
        cells: cells.len(),
        degenerate_cells: 0,
    };
    for t in terms {
        let t = t?;
        report.stretch += t.weight * t.stretch;
        report.dirichlet += t.weight * t.dirichlet;
        if t.degenerate {
            report.degenerate_cells += 1;
            continue;
        }
        report.bend += t.weight * t.bend;
        report.bend_shape += t.weight * t.bend_shape;
        if let Some(b) = report.bend_reference.as_mut() {
            *b += t.weight * t.bend_reference;
        }
    }
    report.bend_gap = (report.bend - report.bend_shape).abs();
    report.excess = report.bend + report.dirichlet;
    Ok(report)
}

/// `Σ f(cell) w(cell)` for a grid function `f` under the given measure.
pub fn integrate(g: &MetricField, values: &[f64], measure: Measure) -> f64 {
    let h_d = g.grid().cell_volume();
    values
        .iter()
        .enumerate()
        .map(|(c, f)| match measure {
            Measure::Riemannian => f * g.cell(c).determinant().sqrt() * h_d,
            Measure::Lebesgue => f * h_d,
        })
        .sum()
}
