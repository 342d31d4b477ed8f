//! Built-in scenario families.
//!
//! Plane curves use signed curvature with the convention `S_u = κ`: a curve
//! with constant `κ > 0` runs clockwise around the origin and its oriented
//! normal points away from the center.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Result, RigidityError};
use crate::immersion::{DiffScheme, GridDomain, ImmersionField, MapField, MetricField, ReferenceShape, TargetSpace};
use crate::metric_algebra::SpdMetric;

/// Substeps per grid interval when integrating a curvature profile.
const CURVE_SUBSTEPS: usize = 32;

fn default_p() -> f64 {
    2.0
}

fn default_amplitude() -> f64 {
    0.2
}

/// Full description of one scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    #[serde(default)]
    pub name: String,
    pub family: Family,
    pub grid: GridDomain,
    #[serde(default)]
    pub metric: MetricSpec,
    #[serde(default)]
    pub reference: Option<ReferenceSpec>,
    #[serde(default)]
    pub scheme: DiffScheme,
    #[serde(default = "default_p")]
    pub p: f64,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Family {
    /// Unit-speed plane curve with prescribed curvature (d = 1, D = 2).
    PlaneCurve { curvature: CurvatureProfile },
    /// `ū(x) = (x, ε f(x))` with `f(x) = (l/π) Π_k sin(π x_k / l)`.
    GraphSurface { epsilon: f64 },
    /// Unit-speed circle of latitude at polar angle `polar` on `S²(ρ)`.
    Latitude { rho: f64, polar: f64 },
    /// `ū_ε = ū_0 + ε φ` with `φ = amplitude · a · Π_k sin²(π x_k / l)` and
    /// `a = (1, 1/2, 1/4, ...)`; sphere results are retracted radially.
    Perturbation {
        base: PerturbationBase,
        epsilon: f64,
        #[serde(default = "default_amplitude")]
        amplitude: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CurvatureProfile {
    Constant {
        kappa: f64,
    },
    /// `κ(s) = kappa0 + (kappa1 - kappa0) s / l`.
    Linear {
        kappa0: f64,
        kappa1: f64,
    },
    /// `κ(s) = mean + amplitude sin(2π s / l)`.
    Sine {
        mean: f64,
        amplitude: f64,
    },
}

impl CurvatureProfile {
    pub fn at(&self, s: f64, l: f64) -> f64 {
        match *self {
            Self::Constant { kappa } => kappa,
            Self::Linear { kappa0, kappa1 } => kappa0 + (kappa1 - kappa0) * s / l,
            Self::Sine { mean, amplitude } => mean + amplitude * (2.0 * PI * s / l).sin(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PerturbationBase {
    /// `x ↦ R x` in `R^d`, `R` the rotation by `angle` in the `(e_1, e_2)` plane.
    Rotation {
        angle: f64,
    },
    /// `x ↦ (x, 0)` in `R^{d+1}`.
    FlatInclusion,
    /// Constant-curvature plane curve.
    Circle {
        kappa: f64,
    },
    Latitude {
        rho: f64,
        polar: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MetricSpec {
    #[default]
    Flat,
    Constant {
        gram: Vec<Vec<f64>>,
    },
    /// `g = (1 + slope x_1) I`.
    Linear {
        slope: f64,
    },
    /// Seeded smooth field with sandwich constant `lambda` and Lipschitz bound.
    RandomSmooth {
        lambda: f64,
        lipschitz: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ReferenceSpec {
    Zero,
    /// `b = kappa g`.
    ScaledMetric {
        kappa: f64,
    },
    Constant {
        b: Vec<Vec<f64>>,
    },
}

/// Sampled scenario field: an immersion into a target, or an equidimensional
/// map `Q -> R^d`.
#[derive(Debug, Clone)]
pub enum ScenarioField {
    Immersion(ImmersionField),
    Equidimensional(MapField),
}

impl ScenarioField {
    pub fn immersion(&self) -> Option<&ImmersionField> {
        match self {
            Self::Immersion(u) => Some(u),
            Self::Equidimensional(_) => None,
        }
    }

    pub fn map(&self) -> &MapField {
        match self {
            Self::Immersion(u) => u.map_field(),
            Self::Equidimensional(m) => m,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub spec: ScenarioSpec,
    pub field: ScenarioField,
    pub metric: MetricField,
    pub reference: Option<ReferenceShape>,
}

impl ScenarioSpec {
    pub fn new(family: Family, grid: GridDomain) -> Self {
        Self {
            name: family.label().to_string(),
            family,
            grid,
            metric: MetricSpec::Flat,
            reference: None,
            scheme: DiffScheme::Forward,
            p: 2.0,
            seed: 0,
        }
    }

    pub fn with_metric(mut self, metric: MetricSpec) -> Self {
        self.metric = metric;
        self
    }

    pub fn with_reference(mut self, reference: ReferenceSpec) -> Self {
        self.reference = Some(reference);
        self
    }

    pub fn with_scheme(mut self, scheme: DiffScheme) -> Self {
        self.scheme = scheme;
        self
    }

    pub fn with_p(mut self, p: f64) -> Self {
        self.p = p;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// Perturbation parameter of the family, if it has one.
    pub fn epsilon(&self) -> Option<f64> {
        match self.family {
            Family::GraphSurface { epsilon } | Family::Perturbation { epsilon, .. } => Some(epsilon),
            _ => None,
        }
    }

    /// Same spec with the perturbation parameter replaced.
    pub fn with_epsilon(mut self, eps: f64) -> Result<Self> {
        match &mut self.family {
            Family::GraphSurface { epsilon } | Family::Perturbation { epsilon, .. } => *epsilon = eps,
            _ => return Err(RigidityError::InvalidScenario(format!("family {} has no epsilon", self.family.label()))),
        }
        Ok(self)
    }

    pub fn with_resolution(mut self, n: usize) -> Result<Self> {
        self.grid = GridDomain::new(self.grid.d, self.grid.l, n)?;
        Ok(self)
    }

    pub fn label(&self) -> &str {
        if self.name.is_empty() {
            self.family.label()
        } else {
            &self.name
        }
    }
}

impl Family {
    pub fn label(&self) -> &'static str {
        match self {
            Self::PlaneCurve { .. } => "plane_curve",
            Self::GraphSurface { .. } => "graph_surface",
            Self::Latitude { .. } => "latitude",
            Self::Perturbation { .. } => "perturbation",
        }
    }
}

fn matrix_from_rows(rows: &[Vec<f64>], d: usize) -> Result<DMatrix<f64>> {
    if rows.len() != d || rows.iter().any(|r| r.len() != d) {
        return Err(RigidityError::InvalidScenario(format!("expected a {d}x{d} array")));
    }
    Ok(DMatrix::from_fn(d, d, |i, j| rows[i][j]))
}

fn build_metric(spec: &MetricSpec, grid: GridDomain, seed: u64) -> Result<MetricField> {
    match spec {
        MetricSpec::Flat => Ok(MetricField::flat(grid)),
        MetricSpec::Constant { gram } => {
            Ok(MetricField::constant(grid, SpdMetric::new(matrix_from_rows(gram, grid.d)?)?))
        }
        MetricSpec::Linear { slope } => MetricField::linear(grid, *slope),
        MetricSpec::RandomSmooth { lambda, lipschitz } => MetricField::random_smooth(grid, *lambda, *lipschitz, seed),
    }
}

fn build_reference(spec: &ReferenceSpec, g: &MetricField) -> Result<ReferenceShape> {
    let grid = *g.grid();
    match spec {
        ReferenceSpec::Zero => Ok(ReferenceShape::zero(grid)),
        ReferenceSpec::ScaledMetric { kappa } => Ok(ReferenceShape::scaled_metric(g, *kappa)),
        ReferenceSpec::Constant { b } => ReferenceShape::constant(grid, matrix_from_rows(b, grid.d)?),
    }
}

fn circle_point(kappa: f64, s: f64) -> DVector<f64> {
    if kappa == 0.0 {
        DVector::from_vec(vec![s, 0.0])
    } else {
        DVector::from_vec(vec![(kappa * s).cos() / kappa, -(kappa * s).sin() / kappa])
    }
}

fn latitude_point(rho: f64, polar: f64, s: f64) -> DVector<f64> {
    let r = rho * polar.sin();
    DVector::from_vec(vec![r * (s / r).cos(), r * (s / r).sin(), rho * polar.cos()])
}

/// Node positions of a unit-speed curve with tangent angle `θ(s) = -∫κ`,
/// starting at the origin along `e_1`, by composite Simpson integration.
fn integrate_curve(profile: &CurvatureProfile, grid: &GridDomain) -> Vec<DVector<f64>> {
    let l = grid.l;
    let step = grid.h() / CURVE_SUBSTEPS as f64;
    let mut points = Vec::with_capacity(grid.n + 1);
    let mut pos = [0.0f64; 2];
    let mut theta = 0.0f64;
    let mut s = 0.0f64;
    points.push(DVector::from_column_slice(&pos));
    for _ in 0..grid.n {
        for _ in 0..CURVE_SUBSTEPS {
            let k0 = profile.at(s, l);
            let km = profile.at(s + 0.5 * step, l);
            let k1 = profile.at(s + step, l);
            let theta_m = theta - step * (5.0 * k0 + 8.0 * km - k1) / 24.0;
            let theta_1 = theta - step * (k0 + 4.0 * km + k1) / 6.0;
            pos[0] += step * (theta.cos() + 4.0 * theta_m.cos() + theta_1.cos()) / 6.0;
            pos[1] += step * (theta.sin() + 4.0 * theta_m.sin() + theta_1.sin()) / 6.0;
            theta = theta_1;
            s += step;
        }
        points.push(DVector::from_column_slice(&pos));
    }
    points
}

fn bump(x: &[f64], l: f64) -> f64 {
    x.iter().map(|xi| (PI * xi / l).sin().powi(2)).product()
}

fn direction(len: usize) -> DVector<f64> {
    DVector::from_fn(len, |i, _| 0.5f64.powi(i as i32))
}

fn check_polar(rho: f64, polar: f64) -> Result<()> {
    if !(rho > 0.0 && polar > 0.0 && polar < PI) {
        return Err(RigidityError::InvalidScenario(format!(
            "latitude needs rho > 0 and polar in (0, π), got rho = {rho}, polar = {polar}"
        )));
    }
    Ok(())
}

fn require_dim(grid: &GridDomain, d: usize, family: &str) -> Result<()> {
    if grid.d != d {
        return Err(RigidityError::InvalidScenario(format!("{family} needs d = {d}, got {}", grid.d)));
    }
    Ok(())
}

fn build_field(spec: &ScenarioSpec) -> Result<ScenarioField> {
    let grid = spec.grid;
    let scheme = spec.scheme;
    let l = grid.l;
    let field = match &spec.family {
        Family::PlaneCurve { curvature } => {
            require_dim(&grid, 1, "plane_curve")?;
            let values = match curvature {
                CurvatureProfile::Constant { kappa } => DMatrix::from_columns(
                    &(0..=grid.n).map(|i| circle_point(*kappa, grid.node_coords(i)[0])).collect::<Vec<_>>(),
                ),
                other => DMatrix::from_columns(&integrate_curve(other, &grid)),
            };
            ScenarioField::Immersion(ImmersionField::new(grid, TargetSpace::euclidean(1), values, scheme)?)
        }
        Family::GraphSurface { epsilon } => {
            let eps = *epsilon;
            ScenarioField::Immersion(ImmersionField::from_fn(grid, TargetSpace::euclidean(grid.d), scheme, |x| {
                let f = l / PI * x.iter().map(|xi| (PI * xi / l).sin()).product::<f64>();
                let mut v = DVector::zeros(x.len() + 1);
                v.rows_mut(0, x.len()).copy_from_slice(x);
                v[x.len()] = eps * f;
                v
            })?)
        }
        Family::Latitude { rho, polar } => {
            require_dim(&grid, 1, "latitude")?;
            check_polar(*rho, *polar)?;
            let target = TargetSpace::sphere(1, *rho)?;
            ScenarioField::Immersion(ImmersionField::from_fn(grid, target, scheme, |x| {
                latitude_point(*rho, *polar, x[0])
            })?)
        }
        Family::Perturbation { base, epsilon, amplitude } => {
            let scale = epsilon * amplitude;
            match base {
                PerturbationBase::Rotation { angle } => {
                    let d = grid.d;
                    let mut rot = DMatrix::<f64>::identity(d, d);
                    if d >= 2 {
                        let (s, c) = angle.sin_cos();
                        rot[(0, 0)] = c;
                        rot[(0, 1)] = -s;
                        rot[(1, 0)] = s;
                        rot[(1, 1)] = c;
                    }
                    let a = direction(d);
                    ScenarioField::Equidimensional(MapField::from_fn(grid, d, scheme, |x| {
                        &rot * DVector::from_column_slice(x) + &a * (scale * bump(x, l))
                    })?)
                }
                PerturbationBase::FlatInclusion => {
                    let a = direction(grid.d + 1);
                    ScenarioField::Immersion(ImmersionField::from_fn(
                        grid,
                        TargetSpace::euclidean(grid.d),
                        scheme,
                        |x| {
                            let mut v = DVector::zeros(x.len() + 1);
                            v.rows_mut(0, x.len()).copy_from_slice(x);
                            v + &a * (scale * bump(x, l))
                        },
                    )?)
                }
                PerturbationBase::Circle { kappa } => {
                    require_dim(&grid, 1, "circle perturbation")?;
                    let a = direction(2);
                    ScenarioField::Immersion(ImmersionField::from_fn(grid, TargetSpace::euclidean(1), scheme, |x| {
                        circle_point(*kappa, x[0]) + &a * (scale * bump(x, l))
                    })?)
                }
                PerturbationBase::Latitude { rho, polar } => {
                    require_dim(&grid, 1, "latitude perturbation")?;
                    check_polar(*rho, *polar)?;
                    let target = TargetSpace::sphere(1, *rho)?;
                    let a = direction(3);
                    ScenarioField::Immersion(ImmersionField::from_fn(grid, target, scheme, |x| {
                        target.retract(&(latitude_point(*rho, *polar, x[0]) + &a * (scale * bump(x, l))))
                    })?)
                }
            }
        }
    };
    Ok(field)
}

/// Samples the scenario described by `spec`.
pub fn scenario_generate(spec: &ScenarioSpec) -> Result<Scenario> {
    spec.grid.validate()?;
    crate::error::check_exponent(spec.p)?;
    let field = build_field(spec)?;
    let metric = build_metric(&spec.metric, spec.grid, spec.seed)?;
    let reference = spec.reference.as_ref().map(|r| build_reference(r, &metric)).transpose()?;
    Ok(Scenario { spec: spec.clone(), field, metric, reference })
}
