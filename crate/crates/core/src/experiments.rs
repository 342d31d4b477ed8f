//! Sweep drivers shared by the command-line front end and the test suites.

use serde::{Deserialize, Serialize};

use crate::error::{Result, RigidityError};
use crate::immersion::{energies, EnergyReport, Measure};
use crate::io::{CheckResult, CsvRow};
use crate::par;
use crate::rigidity::{
    asymptotic_sequence_run, local_rigidity_on, metric_rigidity, multiscale_fit, translation_modulus, RigidityReport,
    SequenceReport, TranslationModulus,
};
use crate::scenario::{scenario_generate, Scenario, ScenarioField, ScenarioSpec};

/// Least-squares slope of `ln y` against `ln x`; `None` when the `x` values
/// do not spread or some value is not positive.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() != y.len() || x.len() < 2 || x.iter().chain(y).any(|v| !(*v > 0.0) || !v.is_finite()) {
        return None;
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    if sxx <= 1e-24 {
        return None;
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    Some(sxy / sxx)
}

/// `max / min` of positive values.
pub fn spread(values: &[f64]) -> Option<f64> {
    let min = values.iter().copied().reduce(f64::min)?;
    let max = values.iter().copied().reduce(f64::max)?;
    (min > 0.0).then(|| max / min)
}

fn strictly_decreasing(values: &[f64]) -> bool {
    values.windows(2).all(|w| w[1] < w[0])
}

/// Rigidity fit of one scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RigidityRun {
    pub scenario: String,
    pub epsilon: Option<f64>,
    pub n: usize,
    pub energies: Option<EnergyReport>,
    /// Codimension-1 pipeline, for immersions.
    pub local: Option<RigidityReport>,
    /// Equidimensional metric fit, for maps `Q -> R^d`.
    pub metric: Option<RigidityReport>,
}

impl RigidityRun {
    /// The report whose inequality the run is about.
    pub fn primary(&self) -> &RigidityReport {
        self.local.as_ref().or(self.metric.as_ref()).expect("one report is always present")
    }

    /// `lhs / (osc_term + stretch + plane variation)`: the constant of the
    /// intermediate bound before the plane variation is traded for `𝓔`.
    pub fn plane_constant(&self) -> Option<f64> {
        let r = self.local.as_ref()?;
        let rhs = r.rhs.osc_term + r.rhs.stretch + r.plane_variation?;
        Some(crate::rigidity::empirical_constant(r.lhs, rhs))
    }

    pub fn csv_row(&self) -> CsvRow {
        let r = self.primary();
        CsvRow {
            scenario: self.scenario.clone(),
            p: r.p,
            t: Some(1),
            epsilon: self.epsilon,
            lhs: Some(r.lhs),
            osc_term: Some(r.rhs.osc_term),
            stretch: Some(r.rhs.stretch),
            bend_scale: Some(r.rhs.bend_scale),
            constant: Some(r.empirical_constant),
            residual: Some(r.lhs),
            covered_fraction: None,
        }
    }
}

/// Base cell for equidimensional fits: the cell at the center of the chart.
fn central_cell(scenario: &Scenario) -> usize {
    let grid = scenario.spec.grid;
    let mut m = [0; crate::immersion::MAX_DIM];
    for x in m.iter_mut().take(grid.d) {
        *x = grid.n / 2;
    }
    grid.cell_index(&m)
}

pub fn run_rigidity_on(scenario: &Scenario) -> Result<RigidityRun> {
    let spec = &scenario.spec;
    let p = spec.p;
    let (energies, local, metric) = match &scenario.field {
        ScenarioField::Immersion(u) => {
            let e = energies(u, &scenario.metric, scenario.reference.as_ref(), p, Measure::Riemannian)?;
            if e.degenerate_cells == e.cells {
                return Err(RigidityError::Degenerate("every cell of the immersion is degenerate".into()));
            }
            let local = local_rigidity_on(u, &scenario.metric, p, &u.grid().full_box(), spec.seed)?;
            (Some(e), Some(local), None)
        }
        ScenarioField::Equidimensional(m) => {
            (None, None, Some(metric_rigidity(m, &scenario.metric, central_cell(scenario), p)?))
        }
    };
    Ok(RigidityRun {
        scenario: spec.label().to_string(),
        epsilon: spec.epsilon(),
        n: spec.grid.n,
        energies,
        local,
        metric,
    })
}

pub fn run_rigidity(spec: &ScenarioSpec) -> Result<RigidityRun> {
    run_rigidity_on(&scenario_generate(spec)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScalingConfig {
    pub scenario: ScenarioSpec,
    pub epsilons: Vec<f64>,
    /// Resolutions to sweep; the scenario's own resolution when empty.
    #[serde(default)]
    pub resolutions: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingPoint {
    pub run: RigidityRun,
    /// `lhs^{1/p}`, i.e. `‖Dū - R‖_p`.
    pub lhs_norm: f64,
    /// `stretch^{1/p}`, i.e. `‖dist(Dū, isometries)‖_p`.
    pub stretch_norm: f64,
    pub plane_constant: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingReport {
    pub points: Vec<ScalingPoint>,
    /// Slope of `‖Dū - R‖_p` against `ε`, per resolution.
    pub slope_vs_epsilon: Vec<(usize, Option<f64>)>,
    /// Slope of `‖Dū - R‖_p` against `‖dist‖_p`, per resolution.
    pub slope_vs_stretch: Vec<(usize, Option<f64>)>,
    /// `max/min` of the empirical constants, per resolution.
    pub constant_spread: Vec<(usize, Option<f64>)>,
    /// `max/min` of the plane-variation constants, per resolution.
    pub plane_constant_spread: Vec<(usize, Option<f64>)>,
    /// Largest relative change of `lhs` between consecutive resolutions at
    /// equal `ε`.
    pub resolution_change: Option<f64>,
    pub warnings: Vec<String>,
}

impl ScalingReport {
    pub fn csv_rows(&self) -> Vec<CsvRow> {
        self.points.iter().map(|p| p.run.csv_row()).collect()
    }

    /// `epsilon n lhs_norm stretch_norm constant` per point.
    pub fn gnuplot_rows(&self) -> Vec<Vec<f64>> {
        self.points
            .iter()
            .map(|p| {
                vec![
                    p.run.epsilon.unwrap_or(f64::NAN),
                    p.run.n as f64,
                    p.lhs_norm,
                    p.stretch_norm,
                    p.run.primary().empirical_constant,
                ]
            })
            .collect()
    }
}

pub fn run_scaling(cfg: &ScalingConfig) -> Result<ScalingReport> {
    if cfg.epsilons.len() < 2 {
        return Err(RigidityError::InvalidConfig("a scaling sweep needs at least two epsilon values".into()));
    }
    let resolutions = if cfg.resolutions.is_empty() { vec![cfg.scenario.grid.n] } else { cfg.resolutions.clone() };
    let mut specs = Vec::new();
    for &n in &resolutions {
        for &eps in &cfg.epsilons {
            specs.push(cfg.scenario.clone().with_resolution(n)?.with_epsilon(eps)?);
        }
    }
    let runs = par::map_slice(&specs, run_rigidity);
    let p = cfg.scenario.p;
    let points = runs
        .into_iter()
        .map(|run| {
            let run = run?;
            let r = run.primary();
            Ok(ScalingPoint {
                lhs_norm: r.lhs.powf(1.0 / p),
                stretch_norm: r.rhs.stretch.powf(1.0 / p),
                plane_constant: run.plane_constant(),
                run,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut report = ScalingReport {
        points,
        slope_vs_epsilon: Vec::new(),
        slope_vs_stretch: Vec::new(),
        constant_spread: Vec::new(),
        plane_constant_spread: Vec::new(),
        resolution_change: None,
        warnings: Vec::new(),
    };
    let k = cfg.epsilons.len();
    for (i, &n) in resolutions.iter().enumerate() {
        let block = &report.points[i * k..(i + 1) * k];
        let eps: Vec<f64> = cfg.epsilons.clone();
        let lhs: Vec<f64> = block.iter().map(|p| p.lhs_norm).collect();
        let stretch: Vec<f64> = block.iter().map(|p| p.stretch_norm).collect();
        let s_eps = log_log_slope(&eps, &lhs);
        if s_eps.is_none() {
            report.warnings.push(format!("n = {n}: slope against epsilon is undefined"));
        }
        report.slope_vs_epsilon.push((n, s_eps));
        report.slope_vs_stretch.push((n, log_log_slope(&stretch, &lhs)));
        let constants: Vec<f64> = block.iter().map(|p| p.run.primary().empirical_constant).collect();
        report.constant_spread.push((n, spread(&constants)));
        let plane: Vec<f64> = block.iter().filter_map(|p| p.plane_constant).collect();
        report.plane_constant_spread.push((n, if plane.len() == k { spread(&plane) } else { None }));
    }
    if resolutions.len() > 1 {
        let mut worst: f64 = 0.0;
        for i in 1..resolutions.len() {
            for j in 0..k {
                let a = report.points[(i - 1) * k + j].run.primary().lhs;
                let b = report.points[i * k + j].run.primary().lhs;
                if a > 0.0 {
                    worst = worst.max((b - a).abs() / a);
                }
            }
        }
        report.resolution_change = Some(worst);
    }
    Ok(report)
}

fn default_joint_factor() -> f64 {
    4.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MultiscaleConfig {
    pub scenario: ScenarioSpec,
    /// Partition sizes, increasing.
    pub ts: Vec<usize>,
    /// Shift lengths along `direction`.
    pub zetas: Vec<f64>,
    /// Shift direction; `e_1` when absent.
    #[serde(default)]
    pub direction: Option<Vec<f64>>,
    /// For the joint sweep the partition size is `factor · l / |ζ|`.
    #[serde(default = "default_joint_factor")]
    pub joint_factor: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModulusEntry {
    pub t: usize,
    pub modulus: TranslationModulus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiscaleReport {
    pub scenario: String,
    pub p: f64,
    pub residuals: Vec<(usize, f64)>,
    /// Per `(t, ζ)` in the order of the configuration.
    pub moduli: Vec<ModulusEntry>,
    /// Per `ζ` with `t = factor · l / |ζ|`; skipped shifts whose `t` does
    /// not divide the resolution.
    pub joint: Vec<ModulusEntry>,
    /// `osc_{Q'} g · t / (L l)` maximized over cubes, per `t`.
    pub oscillation_ratio: Vec<(usize, f64)>,
    pub checks: Vec<CheckResult>,
}

impl MultiscaleReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn csv_rows(&self) -> Vec<CsvRow> {
        let mut rows: Vec<CsvRow> = self
            .residuals
            .iter()
            .map(|&(t, residual)| CsvRow {
                scenario: self.scenario.clone(),
                p: self.p,
                t: Some(t),
                residual: Some(residual),
                ..Default::default()
            })
            .collect();
        for entry in self.moduli.iter().chain(&self.joint) {
            rows.push(CsvRow {
                scenario: self.scenario.clone(),
                p: self.p,
                t: Some(entry.t),
                epsilon: None,
                lhs: Some(entry.modulus.value),
                covered_fraction: Some(entry.modulus.covered_fraction),
                ..Default::default()
            });
        }
        rows
    }
}

pub fn run_multiscale(cfg: &MultiscaleConfig) -> Result<MultiscaleReport> {
    let scenario = scenario_generate(&cfg.scenario)?;
    let u = scenario
        .field
        .immersion()
        .ok_or_else(|| RigidityError::InvalidConfig("multiscale runs need an immersion scenario".into()))?;
    let grid = *u.grid();
    if cfg.ts.is_empty() || cfg.zetas.is_empty() {
        return Err(RigidityError::InvalidConfig("ts and zetas must be non-empty".into()));
    }
    if let Some(&t) = cfg.ts.iter().find(|&&t| t == 0 || grid.n % t != 0) {
        return Err(RigidityError::PartitionMismatch { t, n: grid.n });
    }
    let direction = match &cfg.direction {
        Some(v) if v.len() == grid.d => {
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if !(norm > 0.0) {
                return Err(RigidityError::InvalidConfig("direction must be non-zero".into()));
            }
            v.iter().map(|x| x / norm).collect::<Vec<_>>()
        }
        Some(_) => return Err(RigidityError::InvalidConfig(format!("direction must have {} entries", grid.d))),
        None => (0..grid.d).map(|k| if k == 0 { 1.0 } else { 0.0 }).collect(),
    };
    let shift = |z: f64| direction.iter().map(|x| x * z).collect::<Vec<_>>();
    let p = cfg.scenario.p;
    let g = &scenario.metric;
    let fields = cfg.ts.iter().map(|&t| multiscale_fit(u, g, t, p, cfg.scenario.seed)).collect::<Result<Vec<_>>>()?;
    let residuals: Vec<(usize, f64)> = fields.iter().map(|f| (f.t, f.residual)).collect();
    let mut moduli = Vec::new();
    for field in &fields {
        for &z in &cfg.zetas {
            moduli.push(ModulusEntry { t: field.t, modulus: translation_modulus(field, g, &shift(z))? });
        }
    }
    let mut joint = Vec::new();
    for &z in &cfg.zetas {
        let t = (cfg.joint_factor * grid.l / z.abs()).round() as usize;
        if t > 0 && grid.n % t == 0 {
            let field = multiscale_fit(u, g, t, p, cfg.scenario.seed)?;
            joint.push(ModulusEntry { t, modulus: translation_modulus(&field, g, &shift(z))? });
        }
    }
    let lip = g.lipschitz();
    let oscillation_ratio = fields
        .iter()
        .map(|f| {
            let worst = f.subcubes.iter().map(|s| s.report.oscillation).fold(0.0, f64::max);
            let ratio = if lip > 0.0 { worst * f.t as f64 / (lip * grid.l) } else { 0.0 };
            (f.t, ratio)
        })
        .collect();

    let mut checks = Vec::new();
    let res: Vec<f64> = residuals.iter().map(|r| r.1).collect();
    checks.push(CheckResult::new("residual_strictly_decreasing_in_t", strictly_decreasing(&res), format!("{res:?}")));
    let finest = fields.last().expect("non-empty").t;
    let at_finest: Vec<&TranslationModulus> = moduli.iter().filter(|m| m.t == finest).map(|m| &m.modulus).collect();
    let values: Vec<f64> = at_finest.iter().map(|m| m.value).collect();
    checks.push(CheckResult::new(
        "modulus_strictly_decreasing_as_shift_shrinks",
        cfg.zetas.windows(2).all(|w| w[1].abs() < w[0].abs()) && strictly_decreasing(&values),
        format!("t = {finest}: {values:?}"),
    ));
    let fractions: Vec<f64> = at_finest.iter().map(|m| m.covered_fraction).collect();
    checks.push(CheckResult::new(
        "covered_fraction_non_decreasing_at_fixed_t",
        fractions.windows(2).all(|w| w[1] >= w[0]),
        format!("t = {finest}: {fractions:?}"),
    ));
    let joint_fractions: Vec<f64> = joint.iter().map(|m| m.modulus.covered_fraction).collect();
    checks.push(CheckResult::new(
        "covered_fraction_increasing_under_joint_refinement",
        joint.len() >= 2 && joint_fractions.windows(2).all(|w| w[1] > w[0]),
        format!("{:?}", joint.iter().map(|m| (m.t, m.modulus.covered_fraction)).collect::<Vec<_>>()),
    ));
    Ok(MultiscaleReport {
        scenario: cfg.scenario.label().to_string(),
        p,
        residuals,
        moduli,
        joint,
        oscillation_ratio,
        checks,
    })
}

fn default_defect_threshold() -> f64 {
    1e-4
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AsymptoticConfig {
    /// Perturbation-family scenario with a reference shape.
    pub scenario: ScenarioSpec,
    /// `ε_k`, non-increasing.
    pub epsilons: Vec<f64>,
    #[serde(default = "default_defect_threshold")]
    pub defect_threshold: f64,
    /// Also rerun the final member at twice the resolution and half the `ε`.
    #[serde(default)]
    pub joint_refinement: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointRefinement {
    pub coarse: (usize, f64, f64),
    pub fine: (usize, f64, f64),
    /// Coarse error over fine error.
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticReport {
    pub scenario: String,
    pub sequence: SequenceReport,
    pub joint: Option<JointRefinement>,
    pub checks: Vec<CheckResult>,
}

impl AsymptoticReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn csv_rows(&self) -> Vec<CsvRow> {
        self.sequence
            .members
            .iter()
            .map(|m| CsvRow {
                scenario: self.scenario.clone(),
                p: self.sequence.p,
                t: None,
                epsilon: Some(m.epsilon),
                lhs: Some(m.gap_to_final),
                osc_term: None,
                stretch: Some(m.energies.stretch),
                bend_scale: Some(m.energies.bend),
                constant: None,
                residual: Some(m.shape_error),
                covered_fraction: None,
            })
            .collect()
    }
}

/// S-recovery error of a single member.
fn shape_error(spec: &ScenarioSpec) -> Result<f64> {
    Ok(asymptotic_sequence_run(std::slice::from_ref(spec), spec.p)?.final_shape_error)
}

/// S-recovery error of the last member at `(n, ε)` and `(2n, ε/2)`.
pub fn joint_refinement(spec: &ScenarioSpec) -> Result<JointRefinement> {
    let eps = spec
        .epsilon()
        .ok_or_else(|| RigidityError::InvalidConfig("joint refinement needs an epsilon family".into()))?;
    let n = spec.grid.n;
    let fine_spec = spec.clone().with_resolution(2 * n)?.with_epsilon(eps / 2.0)?;
    let coarse = shape_error(spec)?;
    let fine = shape_error(&fine_spec)?;
    Ok(JointRefinement { coarse: (n, eps, coarse), fine: (2 * n, eps / 2.0, fine), ratio: coarse / fine })
}

pub fn run_asymptotic(cfg: &AsymptoticConfig) -> Result<AsymptoticReport> {
    if cfg.epsilons.is_empty() {
        return Err(RigidityError::InvalidConfig("the epsilon schedule is empty".into()));
    }
    if !(cfg.defect_threshold >= 0.0) {
        return Err(RigidityError::InvalidConfig("defect_threshold must be non-negative".into()));
    }
    let specs = cfg.epsilons.iter().map(|&e| cfg.scenario.clone().with_epsilon(e)).collect::<Result<Vec<_>>>()?;
    let sequence = asymptotic_sequence_run(&specs, cfg.scenario.p)?;
    let joint = if cfg.joint_refinement { Some(joint_refinement(specs.last().expect("non-empty"))?) } else { None };
    let mut checks = vec![
        CheckResult::new(
            "stretch_strictly_decreasing",
            sequence.stretch_decreasing,
            format!("{:?}", sequence.members.iter().map(|m| m.energies.stretch).collect::<Vec<_>>()),
        ),
        CheckResult::new(
            "shape_error_strictly_decreasing",
            sequence.shape_error_decreasing,
            format!("{:?}", sequence.members.iter().map(|m| m.shape_error).collect::<Vec<_>>()),
        ),
        CheckResult::new(
            "final_defect_below_threshold",
            sequence.final_defect <= cfg.defect_threshold,
            format!("{:e} <= {:e}", sequence.final_defect, cfg.defect_threshold),
        ),
    ];
    if let Some(j) = &joint {
        checks.push(CheckResult::new(
            "joint_refinement_ratio_reported",
            j.ratio.is_finite(),
            format!("{:.4}", j.ratio),
        ));
    }
    Ok(AsymptoticReport { scenario: cfg.scenario.label().to_string(), sequence, joint, checks })
}
