//! Grid-sampled immersions of a metric cube into a target space.

mod energy;
mod field;
mod grid;
mod metric_field;
mod reference;
mod target;

pub use energy::{energies, energies_on, integrate, EnergyReport, Measure};
pub use field::{
    cell_differentials, differential, node_differentials, normal_derivative_slack, shape_operator, tangent_projection,
    unit_normal, CellGeometry, DiffScheme, ImmersionField, MapField,
};
pub use grid::{CellBox, GridDomain, MultiIndex, MAX_DIM};
pub use metric_field::MetricField;
pub use reference::{reference_shape, reference_shape_cells, ReferenceShape};
pub use target::{TargetKind, TargetSpace, TargetSpec};
