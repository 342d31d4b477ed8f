//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits with
//! a non-zero status when any criterion fails.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rigidity_core::experiments::{
    joint_refinement, log_log_slope, run_asymptotic, run_multiscale, run_scaling, spread, AsymptoticConfig,
    MultiscaleConfig, ScalingConfig,
};
use rigidity_core::immersion::{energies, GridDomain, MapField, Measure};
use rigidity_core::lemmas::{self, LemmaConfig};
use rigidity_core::metric_algebra::{nearest_isometry, so_set_distance, subspace_distance};
use rigidity_core::rigidity::euclidean_best_rotation;
use rigidity_core::sampling;
use rigidity_core::scenario::{
    scenario_generate, CurvatureProfile, Family, PerturbationBase, ReferenceSpec, ScenarioField, ScenarioSpec,
};

const LEMMA_SAMPLES: usize = 10_000;
const LEMMA_TOL: f64 = 1e-10;
const LEMMA_BUDGET: Duration = Duration::from_secs(30);

const ORACLE_INSTANCES: usize = 1_000;
const ORACLE_STEP: f64 = 1e-4;
const ORACLE_TOL: f64 = 1e-3;
const ORACLE_BUDGET: Duration = Duration::from_secs(60);

const IN_PLANE_INSTANCES: usize = 1_000;
const IN_PLANE_TOL: f64 = 1e-10;

const SPHERE_N: usize = 1024;
const NORMAL_TOL: f64 = 1e-8;

const SWEEP: [f64; 4] = [1e-1, 3e-2, 1e-2, 3e-3];
const FJM_N: usize = 128;
const FJM_SLOPE: (f64, f64) = (0.95, 1.05);
const FJM_SPREAD: f64 = 2.0;
const SCALING_TOL: f64 = 1e-8;
const FJM_BUDGET: Duration = Duration::from_secs(60);

const CODIM_N: usize = 128;
const CODIM_SPREAD: f64 = 4.0;
const CODIM_MIN_ORDER: f64 = 1.0;
const CODIM_BUDGET: Duration = Duration::from_secs(120);

const MULTISCALE_N: usize = 512;
const MULTISCALE_BUDGET: Duration = Duration::from_secs(60);

const ASYMPTOTIC_N: usize = 512;
const ASYMPTOTIC_K: i32 = 8;
const DEFECT_THRESHOLD: f64 = 1e-4;
const HALVING: (f64, f64) = (1.6, 2.6);
const ASYMPTOTIC_BUDGET: Duration = Duration::from_secs(120);

type Criterion = (u32, &'static str, fn() -> Outcome);

struct Outcome {
    passed: bool,
    detail: String,
}

fn verdict(id: u32, title: &str, elapsed: Duration, outcome: &Outcome) {
    let tag = if outcome.passed { "PASS" } else { "FAIL" };
    println!("[{tag}] criterion {id} ({title}, {:.1}s): {}", elapsed.as_secs_f64(), outcome.detail);
}

fn sci(values: &[f64]) -> String {
    let parts: Vec<String> = values.iter().map(|v| format!("{v:.3e}")).collect();
    format!("[{}]", parts.join(", "))
}

fn info(line: &str) {
    println!("       {line}");
}

fn within(budget: Duration, elapsed: Duration) -> bool {
    elapsed <= budget
}

fn lemma_suite() -> Outcome {
    let start = Instant::now();
    let cfg = LemmaConfig { samples: LEMMA_SAMPLES, tolerance: LEMMA_TOL, ..Default::default() };
    let (projection, _, _) = lemmas::projection_bounds(&cfg);
    let props = [
        lemmas::norm_equivalence(&cfg),
        lemmas::so_set_distance_bound(&cfg),
        projection,
        lemmas::volume_comparison(&cfg),
    ];
    let elapsed = start.elapsed();
    let all = props.iter().all(|p| p.passed && p.samples == LEMMA_SAMPLES);
    let detail: Vec<String> =
        props.iter().map(|p| format!("{} min slack {:.3e}", p.name, p.min_slack.unwrap_or(f64::NAN))).collect();
    Outcome {
        passed: all && within(LEMMA_BUDGET, elapsed),
        detail: format!("{} samples each; {}", LEMMA_SAMPLES, detail.join(", ")),
    }
}

fn rotation(theta: f64) -> DMatrix<f64> {
    let (s, c) = theta.sin_cos();
    DMatrix::from_row_slice(2, 2, &[c, -s, s, c])
}

fn reflection(theta: f64) -> DMatrix<f64> {
    let (s, c) = theta.sin_cos();
    DMatrix::from_row_slice(2, 2, &[c, s, s, -c])
}

/// `sqrt` of a 2x2 SPD matrix: `(A + √det I) / √(tr A + 2√det)`.
fn sqrt2(a: &DMatrix<f64>) -> DMatrix<f64> {
    let s = a.determinant().sqrt();
    (a + DMatrix::identity(2, 2) * s) / (a.trace() + 2.0 * s).sqrt()
}

fn brute_min(f: impl Fn(f64) -> f64) -> f64 {
    let steps = (2.0 * PI / ORACLE_STEP).ceil() as usize;
    (0..steps).map(|i| f(i as f64 * ORACLE_STEP)).fold(f64::INFINITY, f64::min)
}

fn oracle_equivalence() -> Outcome {
    let start = Instant::now();
    let errors = rigidity_core::par::map_range(ORACLE_INSTANCES, |i| {
        let mut rng = sampling::stream_rng(7, i as u64);
        let lam = rng.random_range(1.0..10.0);
        let t = sampling::gaussian_matrix(&mut rng, 2, 2);
        let g = sampling::random_spd(&mut rng, 2, lam);
        let gy = sampling::random_spd(&mut rng, 2, lam);
        let g_half_inv = sqrt2(g.gram()).try_inverse().expect("spd");
        let a = &t * &g_half_inv;
        // Nearest isometry in the metric norm: R = Q g^{1/2}, so the
        // objective is |T g^{-1/2} - Q|_F.
        let brute_o = brute_min(|th| (&a - rotation(th)).norm()).min(brute_min(|th| (&a - reflection(th)).norm()));
        let brute_so = brute_min(|th| (&a - rotation(th)).norm());
        let e1 = (nearest_isometry(&t, &g, false).unwrap().distance - brute_o).abs();
        let e2 = (nearest_isometry(&t, &g, true).unwrap().distance - brute_so).abs();
        let (sx, sy) = (sqrt2(g.gram()), sqrt2(gy.gram()));
        let brute_set = brute_min(|th| (rotation(th) * &sx - &sy).norm());
        let e3 = (so_set_distance(&g, &gy).unwrap() - brute_set).abs();
        let a_plane = sampling::random_subspace(&mut rng, 3, 2);
        let b_plane = sampling::random_subspace(&mut rng, 3, 2);
        let (fa, fb) = (a_plane.frame(), b_plane.frame());
        let brute_sub = brute_min(|th| (fa - fb * rotation(th)).norm());
        let e4 = (subspace_distance(&a_plane, &b_plane).unwrap() - brute_sub).abs();
        [e1, e2, e3, e4]
    });
    let worst = |k: usize| errors.iter().map(|e| e[k]).fold(0.0, f64::max);
    let w = [worst(0), worst(1), worst(2), worst(3)];
    Outcome {
        passed: w.iter().all(|&e| e <= ORACLE_TOL) && within(ORACLE_BUDGET, start.elapsed()),
        detail: format!(
            "{ORACLE_INSTANCES} instances; max |error| nearest_isometry O {:.2e}, SO {:.2e}, so_set_distance {:.2e}, subspace_distance {:.2e} (tol {ORACLE_TOL:e})",
            w[0], w[1], w[2], w[3]
        ),
    }
}

fn in_plane() -> Outcome {
    let cfg = LemmaConfig { samples: IN_PLANE_INSTANCES, seed: 11, ..Default::default() };
    let p = lemmas::in_plane_equality(&cfg);
    let gap = -p.min_slack.unwrap_or(f64::NAN);
    Outcome {
        passed: p.samples == IN_PLANE_INSTANCES && gap <= IN_PLANE_TOL,
        detail: format!("{} instances; max |dist_full - dist_in_plane| = {gap:.3e}", p.samples),
    }
}

fn normal_derivative() -> Outcome {
    let cfg = LemmaConfig { sphere_resolution: SPHERE_N, normal_tolerance: NORMAL_TOL, ..Default::default() };
    let p = lemmas::normal_derivative_bound(&cfg).expect("sphere scenario");
    Outcome {
        passed: p.passed && p.samples == SPHERE_N,
        detail: format!(
            "{} cells on S^2({}), C = 1/rho^2; min slack {:.3e}",
            p.samples,
            cfg.sphere_radius,
            p.min_slack.unwrap_or(f64::NAN)
        ),
    }
}

/// Empirical FJM constant of `x ↦ s ū(x / s) + c` sampled on the rescaled grid.
fn rescaled_constant(base: &MapField, s: f64, shift: &[f64]) -> f64 {
    let grid = base.grid();
    let scaled_grid = GridDomain::new(grid.d, s * grid.l, grid.n).unwrap();
    let mut values = base.values() * s;
    for mut col in values.column_iter_mut() {
        col += DVector::from_column_slice(shift);
    }
    let field = MapField::new(scaled_grid, values, base.scheme()).unwrap();
    let w = vec![scaled_grid.cell_volume(); scaled_grid.cell_count()];
    euclidean_best_rotation(field.differentials(), &w, 2.0).unwrap().empirical_constant
}

fn fjm_scaling() -> Outcome {
    let start = Instant::now();
    let grid = GridDomain::new(2, 1.0, FJM_N).unwrap();
    let spec = ScenarioSpec::new(
        Family::Perturbation { base: PerturbationBase::Rotation { angle: 0.3 }, epsilon: SWEEP[0], amplitude: 0.2 },
        grid,
    );
    let report = run_scaling(&ScalingConfig { scenario: spec.clone(), epsilons: SWEEP.to_vec(), resolutions: vec![] })
        .expect("scaling sweep");
    let slope = report.slope_vs_stretch[0].1.unwrap_or(f64::NAN);
    let constants: Vec<f64> = report.points.iter().map(|p| p.run.primary().empirical_constant).collect();
    let spread_value = spread(&constants).unwrap_or(f64::INFINITY);

    let scenario = scenario_generate(&spec).unwrap();
    let ScenarioField::Equidimensional(base) = &scenario.field else { panic!("rotation base is equidimensional") };
    let reference = rescaled_constant(base, 1.0, &[0.0, 0.0]);
    let invariance = [(0.5, [0.0, 0.0]), (3.0, [1.0, -2.0]), (0.1, [-5.0, 0.25])]
        .iter()
        .map(|(s, c)| (rescaled_constant(base, *s, c) - reference).abs() / reference)
        .fold(0.0, f64::max);
    let elapsed = start.elapsed();
    Outcome {
        passed: (FJM_SLOPE.0..=FJM_SLOPE.1).contains(&slope)
            && spread_value <= FJM_SPREAD
            && invariance <= SCALING_TOL
            && within(FJM_BUDGET, elapsed),
        detail: format!(
            "slope {slope:.5} in [{}, {}], constant spread {spread_value:.5} <= {FJM_SPREAD}, scaling change {invariance:.2e} <= {SCALING_TOL:e}",
            FJM_SLOPE.0, FJM_SLOPE.1
        ),
    }
}

/// Observed order from errors at successive halvings of `h`.
fn orders(errors: &[f64]) -> Vec<f64> {
    errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
}

fn codimension_one() -> Outcome {
    let start = Instant::now();
    let grid = GridDomain::new(2, 1.0, CODIM_N).unwrap();
    let spec = ScenarioSpec::new(Family::GraphSurface { epsilon: SWEEP[0] }, grid);
    let report = run_scaling(&ScalingConfig { scenario: spec.clone(), epsilons: SWEEP.to_vec(), resolutions: vec![] })
        .expect("scaling sweep");
    let lhs: Vec<f64> = report.points.iter().map(|p| p.run.primary().lhs).collect();
    let lhs_slope = log_log_slope(&SWEEP, &lhs).unwrap_or(f64::NAN);
    let lhs_vanishes = lhs.windows(2).all(|w| w[1] < w[0]) && lhs_slope > 0.0;
    let constants: Vec<f64> = report.points.iter().map(|p| p.run.primary().empirical_constant).collect();
    let spread_value = spread(&constants).unwrap_or(f64::INFINITY);

    let ns = [32usize, 64, 128];
    let mut residuals = Vec::new();
    let mut bends = Vec::new();
    for &n in ns.iter().chain(&[256, 512]) {
        let sc = scenario_generate(&spec.clone().with_resolution(n).unwrap()).unwrap();
        let u = sc.field.immersion().unwrap();
        residuals.push(u.cells().iter().map(|c| c.shape_residual).fold(0.0, f64::max));
        bends.push(energies(u, &sc.metric, None, 2.0, Measure::Riemannian).unwrap().bend);
    }
    // Richardson extrapolation of the two finest bending energies.
    let exact = (4.0 * bends[4] - bends[3]) / 3.0;
    let quad_errors: Vec<f64> = bends[..3].iter().map(|b| (b - exact).abs()).collect();
    let residual_orders = orders(&residuals[..3]);
    let quad_orders = orders(&quad_errors);
    let min_residual_order = residual_orders.iter().copied().fold(f64::INFINITY, f64::min);
    let min_quad_order = quad_orders.iter().copied().fold(f64::INFINITY, f64::min);
    let elapsed = start.elapsed();

    let plane: Vec<f64> = report.points.iter().filter_map(|p| p.plane_constant).collect();
    info(&format!("codim-1 constants per epsilon: {}", sci(&constants)));
    info(&format!(
        "lhs / (osc + E_s + plane variation) per epsilon: {plane:.4?}, spread {:.4}",
        spread(&plane).unwrap_or(f64::NAN)
    ));
    Outcome {
        passed: lhs_vanishes
            && spread_value <= CODIM_SPREAD
            && min_residual_order >= CODIM_MIN_ORDER
            && min_quad_order >= CODIM_MIN_ORDER
            && within(CODIM_BUDGET, elapsed),
        detail: format!(
            "lhs {} -> 0: {lhs_vanishes} (slope {lhs_slope:.3}); constant spread {spread_value:.1} (limit {CODIM_SPREAD}); shape residual orders {residual_orders:.3?}; E_b quadrature orders {quad_orders:.3?} (min {CODIM_MIN_ORDER})",
            sci(&lhs)
        ),
    }
}

fn multiscale() -> Outcome {
    let start = Instant::now();
    let grid = GridDomain::new(1, 1.0, MULTISCALE_N).unwrap();
    let spec = ScenarioSpec::new(Family::PlaneCurve { curvature: CurvatureProfile::Constant { kappa: 1.0 } }, grid);
    let l = grid.l;
    let report = run_multiscale(&MultiscaleConfig {
        scenario: spec,
        ts: vec![1, 2, 4, 8],
        zetas: vec![l / 4.0, l / 8.0, l / 16.0],
        direction: None,
        joint_factor: 4.0,
    })
    .expect("multiscale run");
    let elapsed = start.elapsed();
    for c in &report.checks {
        info(&format!("{}: {} {}", c.name, if c.passed { "ok" } else { "FAILED" }, c.detail));
    }
    Outcome {
        passed: report.passed() && report.joint.len() == 3 && within(MULTISCALE_BUDGET, elapsed),
        detail: format!(
            "residuals {}; covered fraction under joint refinement {:?}",
            sci(&report.residuals.iter().map(|r| r.1).collect::<Vec<_>>()),
            report.joint.iter().map(|j| (j.t, j.modulus.covered_fraction)).collect::<Vec<_>>()
        ),
    }
}

fn asymptotic() -> Outcome {
    let start = Instant::now();
    let grid = GridDomain::new(1, 1.0, ASYMPTOTIC_N).unwrap();
    let kappa = 1.0;
    let spec = ScenarioSpec::new(
        Family::Perturbation { base: PerturbationBase::Circle { kappa }, epsilon: 1.0, amplitude: 0.2 },
        grid,
    )
    .with_reference(ReferenceSpec::ScaledMetric { kappa });
    let epsilons: Vec<f64> = (0..=ASYMPTOTIC_K).map(|k| 0.5f64.powi(k)).collect();
    let report = run_asymptotic(&AsymptoticConfig {
        scenario: spec.clone(),
        epsilons,
        defect_threshold: DEFECT_THRESHOLD,
        joint_refinement: false,
    })
    .expect("asymptotic run");
    let coarse =
        spec.clone().with_resolution(ASYMPTOTIC_N / 2).unwrap().with_epsilon(0.5f64.powi(ASYMPTOTIC_K - 1)).unwrap();
    let joint = joint_refinement(&coarse).expect("joint refinement");
    let exact = joint_refinement(&coarse.clone().with_epsilon(0.0).unwrap()).expect("exact family");
    let elapsed = start.elapsed();
    let seq = &report.sequence;
    info(&format!(
        "epsilon = 0 member: S error {:.3e} at n = {}, {:.3e} at n = {} (observed order {:.2})",
        exact.coarse.2,
        exact.coarse.0,
        exact.fine.2,
        exact.fine.0,
        exact.ratio.log2()
    ));
    info(&format!(
        "gap to final member decreasing: {}; slope of E_s against epsilon {:.3}",
        seq.gap_decreasing,
        log_log_slope(
            &seq.members.iter().map(|m| m.epsilon).collect::<Vec<_>>(),
            &seq.members.iter().map(|m| m.energies.stretch).collect::<Vec<_>>()
        )
        .unwrap_or(f64::NAN)
    ));
    Outcome {
        passed: seq.stretch_decreasing
            && seq.final_defect <= DEFECT_THRESHOLD
            && (HALVING.0..=HALVING.1).contains(&joint.ratio)
            && within(ASYMPTOTIC_BUDGET, elapsed),
        detail: format!(
            "E_s strictly decreasing: {}; final defect {:.3e} <= {DEFECT_THRESHOLD:e}; S error {:.3e} -> {:.3e}, ratio {:.3} in [{}, {}]",
            seq.stretch_decreasing, seq.final_defect, joint.coarse.2, joint.fine.2, joint.ratio, HALVING.0, HALVING.1
        ),
    }
}

fn main() {
    let criteria: [Criterion; 8] = [
        (1, "lemma suite", lemma_suite),
        (2, "oracle equivalence", oracle_equivalence),
        (3, "in-plane equality", in_plane),
        (4, "normal-derivative inequality", normal_derivative),
        (5, "FJM scaling", fjm_scaling),
        (6, "codimension-1 rigidity", codimension_one),
        (7, "multiscale and compactness", multiscale),
        (8, "asymptotic rigidity", asymptotic),
    ];
    let mut failed = Vec::new();
    for (id, title, run) in criteria {
        let start = Instant::now();
        let outcome = run();
        verdict(id, title, start.elapsed(), &outcome);
        if !outcome.passed {
            failed.push(id);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all criteria passed");
    } else {
        println!("acceptance: failed criteria {failed:?}");
        std::process::exit(1);
    }
}
