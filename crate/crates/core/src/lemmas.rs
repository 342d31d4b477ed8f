//! Randomized property suite for the pointwise inequalities.

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Result, RigidityError};
use crate::immersion::{normal_derivative_slack, GridDomain};
use crate::metric_algebra::{
    frobenius_norm, map_orientation_in, metric_distance, nearest_isometry, nearest_isometry_into_plane,
    oriented_complement, projection_error_bound_check, so_set_distance, subspace_distance, OrientedSubspace,
};
use crate::par;
use crate::sampling::{self, SeededRng};
use crate::scenario::{scenario_generate, Family, PerturbationBase, ScenarioSpec};

/// Cells per sample in the volume comparison.
const VOLUME_CELLS: usize = 16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LemmaConfig {
    pub samples: usize,
    pub max_dim: usize,
    pub max_ambient: usize,
    pub max_lambda: f64,
    pub seed: u64,
    /// Slack tolerance for the linear-algebra inequalities.
    pub tolerance: f64,
    /// Slack tolerance for the normal-derivative inequality.
    pub normal_tolerance: f64,
    /// Resolution of the sphere-target curve.
    pub sphere_resolution: usize,
    pub sphere_radius: f64,
}

impl Default for LemmaConfig {
    fn default() -> Self {
        Self {
            samples: 10_000,
            max_dim: 3,
            max_ambient: 6,
            max_lambda: 10.0,
            seed: 42,
            tolerance: 1e-10,
            normal_tolerance: 1e-8,
            sphere_resolution: 1024,
            sphere_radius: 1.5,
        }
    }
}

impl LemmaConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(RigidityError::InvalidConfig(msg));
        if !(self.tolerance >= 0.0 && self.tolerance.is_finite()) {
            return bad(format!("tolerance must be a non-negative number, got {}", self.tolerance));
        }
        if !(self.normal_tolerance >= 0.0 && self.normal_tolerance.is_finite()) {
            return bad(format!("normal_tolerance must be a non-negative number, got {}", self.normal_tolerance));
        }
        if !(1..=3).contains(&self.max_dim) {
            return bad(format!("max_dim must be in 1..=3, got {}", self.max_dim));
        }
        if self.max_ambient <= self.max_dim || self.max_ambient > 16 {
            return bad(format!("max_ambient must be in {}..=16, got {}", self.max_dim + 1, self.max_ambient));
        }
        if !(self.max_lambda >= 1.0 && self.max_lambda.is_finite()) {
            return bad(format!("max_lambda must be >= 1, got {}", self.max_lambda));
        }
        if self.sphere_resolution < 2 {
            return bad("sphere_resolution must be at least 2".into());
        }
        if !(self.sphere_radius > 0.0) {
            return bad("sphere_radius must be positive".into());
        }
        Ok(())
    }
}

/// Smallest slack of one property over its samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropertySummary {
    pub name: String,
    pub samples: usize,
    /// `None` when no sample was drawn.
    pub min_slack: Option<f64>,
    pub tolerance: f64,
    pub passed: bool,
}

impl PropertySummary {
    fn from_slacks(name: &str, slacks: &[f64], tolerance: f64) -> Self {
        let min_slack = slacks.iter().copied().reduce(f64::min);
        Self {
            name: name.to_string(),
            samples: slacks.len(),
            min_slack,
            tolerance,
            passed: min_slack.is_none_or(|s| s >= -tolerance),
        }
    }
}

/// How often `P_{Π0}` kept a map orientation preserving when
/// `|Π0^⊥ - Π^⊥|` was below `threshold`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrientationStability {
    pub threshold: f64,
    pub samples: usize,
    pub preserved: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LemmaReport {
    pub config: LemmaConfig,
    pub properties: Vec<PropertySummary>,
    /// Largest `(lhs - dist) / |Π0^⊥ - Π^⊥|` seen in the oriented projection bound.
    pub max_implied_projection_constant: Option<f64>,
    /// Stability sampling at `1/(2d)` and `1/(4d)`, per dimension `d`; reported only.
    pub orientation_stability: Vec<(usize, OrientationStability)>,
    pub warnings: Vec<String>,
    pub passed: bool,
}

fn dims(rng: &mut SeededRng, cfg: &LemmaConfig) -> (usize, usize) {
    let d = rng.random_range(1..=cfg.max_dim);
    let big_d = rng.random_range(d + 1..=cfg.max_ambient);
    (d, big_d)
}

fn lambda(rng: &mut SeededRng, cfg: &LemmaConfig) -> f64 {
    rng.random_range(1.0..=cfg.max_lambda)
}

fn sample<T: Send>(cfg: &LemmaConfig, salt: u64, f: impl Fn(&mut SeededRng) -> T + Sync + Send) -> Vec<T> {
    par::map_range(cfg.samples, |i| f(&mut sampling::stream_rng(cfg.seed, (salt << 40) | i as u64)))
}

/// `(1/√λ)|T|_{g,e} <= |T|_F <= √λ |T|_{g,e}`.
pub fn norm_equivalence(cfg: &LemmaConfig) -> PropertySummary {
    let slacks = sample(cfg, 1, |rng| {
        let (d, big_d) = dims(rng, cfg);
        let lam = lambda(rng, cfg);
        let g = sampling::random_spd(rng, d, lam);
        let t = sampling::gaussian_matrix(rng, big_d, d);
        let metric = frobenius_norm(&t, &g).expect("matching dims");
        let plain = t.norm();
        (lam.sqrt() * metric - plain).min(plain - metric / lam.sqrt())
    });
    PropertySummary::from_slacks("norm_equivalence", &slacks, cfg.tolerance)
}

/// `dist(SO(g_x, e), SO(g_y, e)) <= (√λ/2)|g_x - g_y|`.
pub fn so_set_distance_bound(cfg: &LemmaConfig) -> PropertySummary {
    let slacks = sample(cfg, 2, |rng| {
        let (d, _) = dims(rng, cfg);
        let lam = lambda(rng, cfg);
        let gx = sampling::random_spd(rng, d, lam);
        let gy = sampling::random_spd(rng, d, lam);
        let dist = so_set_distance(&gx, &gy).expect("matching dims");
        0.5 * lam.sqrt() * metric_distance(&gx, &gy).expect("matching dims") - dist
    });
    PropertySummary::from_slacks("so_set_distance_bound", &slacks, cfg.tolerance)
}

fn plane_instance(rng: &mut SeededRng, cfg: &LemmaConfig) -> (OrientedSubspace, DMatrix<f64>, f64) {
    let (d, big_d) = dims(rng, cfg);
    let lam = lambda(rng, cfg);
    let plane = sampling::random_subspace(rng, big_d, d);
    let t = plane.frame() * sampling::random_orientation_preserving(rng, d);
    (plane, t, lam)
}

/// Both projection estimates; returns the summaries and the largest implied
/// constant.
pub fn projection_bounds(cfg: &LemmaConfig) -> (PropertySummary, PropertySummary, Option<f64>) {
    let results = sample(cfg, 3, |rng| {
        let (plane, t, lam) = plane_instance(rng, cfg);
        let g = sampling::random_spd(rng, plane.dim(), lam);
        let scale = 10f64.powf(rng.random_range(-3.0..=0.5));
        let p0 = sampling::nearby_subspace(rng, &plane, scale);
        let r = projection_error_bound_check(&t, &g, &p0, &plane).expect("T maps into its plane");
        (r.projection_error.slack, r.oriented_distance.slack, r.implied_constant)
    });
    let first: Vec<f64> = results.iter().map(|r| r.0).collect();
    let second: Vec<f64> = results.iter().map(|r| r.1).collect();
    let implied = results.iter().filter_map(|r| r.2).reduce(f64::max);
    (
        PropertySummary::from_slacks("projection_error", &first, cfg.tolerance),
        PropertySummary::from_slacks("oriented_projection_distance", &second, cfg.tolerance),
        implied,
    )
}

/// `dist(T, O(g, e_D)) = dist(T, SO((R^d, g), (Π, e_D)))` for orientation
/// preserving `T` with image in `Π`; slack is minus the gap.
pub fn in_plane_equality(cfg: &LemmaConfig) -> PropertySummary {
    let slacks = sample(cfg, 4, |rng| {
        let (plane, t, lam) = plane_instance(rng, cfg);
        let g = sampling::random_spd(rng, plane.dim(), lam);
        let full = nearest_isometry(&t, &g, false).expect("valid").distance;
        let inside = nearest_isometry_into_plane(&t, &g, &plane, true).expect("contained").distance;
        -(full - inside).abs()
    });
    PropertySummary::from_slacks("in_plane_equality", &slacks, cfg.tolerance)
}

/// `λ^{-d/2} Σ f h^d <= Σ f √det(g) h^d <= λ^{d/2} Σ f h^d`.
pub fn volume_comparison(cfg: &LemmaConfig) -> PropertySummary {
    let slacks = sample(cfg, 5, |rng| {
        let (d, _) = dims(rng, cfg);
        let lam = lambda(rng, cfg);
        let h_d = 1.0 / VOLUME_CELLS as f64;
        let mut plain = 0.0;
        let mut weighted = 0.0;
        for _ in 0..VOLUME_CELLS {
            let f: f64 = rng.random_range(0.0..10.0);
            let g = sampling::random_spd(rng, d, lam);
            plain += f * h_d;
            weighted += f * g.determinant().sqrt() * h_d;
        }
        let factor = lam.powf(d as f64 / 2.0);
        (weighted - plain / factor).min(factor * plain - weighted)
    });
    PropertySummary::from_slacks("volume_comparison", &slacks, cfg.tolerance)
}

/// `|∂_j ν̄|² <= |P_u ∂_j ν̄|² + |∂_j ū|²/ρ²` on a perturbed latitude of `S²(ρ)`.
pub fn normal_derivative_bound(cfg: &LemmaConfig) -> Result<PropertySummary> {
    let rho = cfg.sphere_radius;
    let grid = GridDomain::new(1, 1.0, cfg.sphere_resolution)?;
    let spec = ScenarioSpec::new(
        Family::Perturbation { base: PerturbationBase::Latitude { rho, polar: 1.0 }, epsilon: 1.0, amplitude: 0.2 },
        grid,
    );
    let scenario = scenario_generate(&spec)?;
    let u = scenario.field.immersion().expect("latitude is an immersion");
    let slacks = normal_derivative_slack(u, 1.0 / (rho * rho));
    Ok(PropertySummary::from_slacks("normal_derivative_bound", &slacks, cfg.normal_tolerance))
}

/// Orientation of `P_{Π0} T` when `|Π0^⊥ - Π^⊥| < threshold_factor / d`.
pub fn orientation_stability(cfg: &LemmaConfig, threshold_factor: f64, d: usize) -> OrientationStability {
    let threshold = threshold_factor / d as f64;
    let outcomes = sample(cfg, 6 + d as u64 * 8 + (threshold_factor * 4.0) as u64, |rng| {
        let big_d = rng.random_range(d + 1..=cfg.max_ambient);
        let plane = sampling::random_subspace(rng, big_d, d);
        let t = plane.frame() * sampling::random_orientation_preserving(rng, d);
        let perp = oriented_complement(&plane).expect("proper subspace");
        loop {
            let scale = rng.random_range(0.0..threshold);
            let p0 = sampling::nearby_subspace(rng, &plane, scale);
            let delta = subspace_distance(&oriented_complement(&p0).expect("proper subspace"), &perp).expect("dims");
            if delta < threshold {
                return map_orientation_in(&p0, &(p0.projector() * &t)).expect("dims") == Some(true);
            }
        }
    });
    OrientationStability { threshold, samples: outcomes.len(), preserved: outcomes.iter().filter(|&&b| b).count() }
}

/// Runs every property.
pub fn run_lemma_suite(cfg: &LemmaConfig) -> Result<LemmaReport> {
    cfg.validate()?;
    let mut warnings = Vec::new();
    if cfg.samples == 0 {
        warnings.push("sample count is 0: sampled properties pass vacuously".to_string());
    }
    let (projection, oriented, implied) = projection_bounds(cfg);
    let properties = vec![
        norm_equivalence(cfg),
        so_set_distance_bound(cfg),
        projection,
        oriented,
        in_plane_equality(cfg),
        volume_comparison(cfg),
        normal_derivative_bound(cfg)?,
    ];
    let mut stability = Vec::new();
    for d in 1..=cfg.max_dim {
        for factor in [0.5, 0.25] {
            stability.push((d, orientation_stability(cfg, factor, d)));
        }
    }
    let passed = properties.iter().all(|p| p.passed);
    Ok(LemmaReport {
        config: cfg.clone(),
        properties,
        max_implied_projection_constant: implied,
        orientation_stability: stability,
        warnings,
        passed,
    })
}
