//! Quantitative rigidity of codimension-1 isometric immersions, numerically.
//!
//! * [`metric_algebra`]: metric Frobenius norms, nearest isometries,
//!   oriented subspaces and the associated inequalities.
//! * [`immersion`]: grid-sampled immersions of a metric cube into a target
//!   (Euclidean space or a sphere), their normals, shape operators and
//!   energies.
//! * [`rigidity`]: the constructive rigidity pipelines and the multiscale
//!   piecewise-rotation approximation.
//! * [`scenario`], [`lemmas`], [`experiments`], [`io`]: built-in test
//!   families, the randomized lemma suite, sweep drivers and report formats.

#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0.0)` also rejects NaN

pub mod error;
pub mod experiments;
pub mod immersion;
pub mod io;
pub mod lemmas;
pub mod metric_algebra;
pub mod par;
pub mod rigidity;
pub mod sampling;
pub mod scenario;

pub use error::{Result, RigidityError};
