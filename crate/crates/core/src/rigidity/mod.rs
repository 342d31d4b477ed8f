//! Constructive rigidity fits: Euclidean and metric rotation fitting, the
//! codimension-1 local pipeline, the multiscale piecewise-rotation field and
//! asymptotic sequences.

mod asymptotic;
mod euclidean;
mod local;
mod metric;
mod multiscale;
mod report;

pub use asymptotic::{asymptotic_sequence_run, geometric_schedule, SequenceMember, SequenceReport};
pub use euclidean::{euclidean_best_rotation, EuclideanFit};
pub use local::{
    choose_base_point, local_rigidity, local_rigidity_on, tangent_plane_field, PlaneField, MAX_BASE_CANDIDATES,
};
pub use metric::{metric_rigidity, metric_rigidity_on};
pub use multiscale::{multiscale_fit, translation_modulus, RotationField, SubcubeFit, TranslationModulus};
pub use report::{empirical_constant, RhsComponents, RigidityReport, RHS_FLOOR};
