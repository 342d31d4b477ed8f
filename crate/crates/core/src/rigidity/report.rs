use serde::{Deserialize, Serialize};

use crate::immersion::EnergyReport;
use crate::io::matrix_rows;
use crate::metric_algebra::LinMap;

/// Guard applied to right-hand sides before dividing.
pub const RHS_FLOOR: f64 = 1e-14;

/// `lhs / max(rhs, RHS_FLOOR)`, and 0 when both sides vanish.
pub fn empirical_constant(lhs: f64, rhs: f64) -> f64 {
    if lhs == 0.0 && rhs <= 0.0 {
        0.0
    } else {
        lhs / rhs.max(RHS_FLOOR)
    }
}

/// Right-hand-side terms of a rigidity inequality.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RhsComponents {
    /// `|Q| (osc_Q g)^p`.
    pub osc_term: f64,
    /// Stretching energy (or `∫ dist^p(Du, SO)` for equidimensional fits).
    pub stretch: f64,
    /// `diam^p(Q) 𝓔`; zero for equidimensional fits.
    pub bend_scale: f64,
}

impl RhsComponents {
    pub fn total(&self) -> f64 {
        self.osc_term + self.stretch + self.bend_scale
    }
}

/// One evaluation of a rigidity inequality.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RigidityReport {
    pub p: f64,
    /// Linear index of the base cell.
    pub base_cell: usize,
    /// Center of the base cell.
    pub base_point: Vec<f64>,
    #[serde(with = "matrix_rows")]
    pub fitted: LinMap,
    /// Defect of the fitted map in its constraint set.
    pub constraint_defect: f64,
    pub lhs: f64,
    pub rhs: RhsComponents,
    pub empirical_constant: f64,
    pub oscillation: f64,
    pub diameter: f64,
    pub volume: f64,
    /// `∫ |Π_x^⊥ - Π_{x0}^⊥|^p dx`, for immersions.
    pub plane_variation: Option<f64>,
    pub energies: Option<EnergyReport>,
    pub degenerate_cells: usize,
}
