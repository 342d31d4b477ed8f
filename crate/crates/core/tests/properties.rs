use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rigidity_core::experiments::run_rigidity;
use rigidity_core::immersion::{
    energies, integrate, DiffScheme, GridDomain, ImmersionField, MapField, Measure, MetricField, TargetSpace,
};
use rigidity_core::metric_algebra::{
    frobenius_norm, metric_distance, nearest_isometry, project_onto, so_set_distance, sorted_svd, subspace_distance,
};
use rigidity_core::rigidity::{local_rigidity, multiscale_fit, translation_modulus};
use rigidity_core::sampling;
use rigidity_core::scenario::{
    scenario_generate, CurvatureProfile, Family, MetricSpec, PerturbationBase, ScenarioSpec,
};

fn config() -> ProptestConfig {
    ProptestConfig { cases: 64, ..ProptestConfig::default() }
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn norm_equivalence(seed in any::<u64>(), d in 1usize..=3, rows in 1usize..=4, lambda in 1.0f64..10.0) {
        let mut rng = sampling::rng(seed);
        let t = sampling::gaussian_matrix(&mut rng, rows, d);
        let g = sampling::random_spd(&mut rng, d, lambda);
        let n = frobenius_norm(&t, &g).unwrap();
        let f = t.norm();
        prop_assert!(n / lambda.sqrt() <= f + 1e-10);
        prop_assert!(f <= lambda.sqrt() * n + 1e-10);
    }

    #[test]
    fn svd_reconstructs(seed in any::<u64>(), rows in 1usize..=5, cols in 1usize..=5) {
        let mut rng = sampling::rng(seed);
        let m = sampling::gaussian_matrix(&mut rng, rows, cols);
        let s = sorted_svd(&m);
        let back = &s.u * DMatrix::from_diagonal(&s.sigma) * s.v.transpose();
        prop_assert!((back - &m).norm() <= 1e-12 * m.norm().max(1.0));
        prop_assert!(s.sigma.as_slice().windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn spd_square_root(seed in any::<u64>(), d in 1usize..=4, lambda in 1.0f64..10.0) {
        let mut rng = sampling::rng(seed);
        let g = sampling::random_spd(&mut rng, d, lambda);
        prop_assert!((g.sqrt() * g.sqrt() - g.gram()).norm() <= 1e-12 * lambda);
        prop_assert!((g.sqrt() * g.inv_sqrt() - DMatrix::identity(d, d)).norm() <= 1e-12 * lambda);
        prop_assert!(g.within_sandwich(lambda * (1.0 + 1e-12)));
    }

    #[test]
    fn so_set_distance_bounded_by_metric_distance(seed in any::<u64>(), d in 1usize..=3, lambda in 1.0f64..10.0) {
        let mut rng = sampling::rng(seed);
        let gx = sampling::random_spd(&mut rng, d, lambda);
        let gy = sampling::random_spd(&mut rng, d, lambda);
        let lhs = so_set_distance(&gx, &gy).unwrap();
        let rhs = lambda.sqrt() / 2.0 * metric_distance(&gx, &gy).unwrap();
        prop_assert!(lhs <= rhs + 1e-10, "{lhs} > {rhs}");
    }

    #[test]
    fn nearest_isometry_satisfies_constraint(seed in any::<u64>(), d in 1usize..=3, extra in 0usize..=2, oriented in any::<bool>()) {
        let mut rng = sampling::rng(seed);
        let big = d + if oriented { 0 } else { extra };
        let t = sampling::gaussian_matrix(&mut rng, big, d);
        let g = sampling::random_spd(&mut rng, d, 5.0);
        let fit = nearest_isometry(&t, &g, oriented).unwrap();
        let defect = (fit.map.transpose() * &fit.map - g.gram()).norm();
        prop_assert!(defect <= 1e-10 * g.gram().norm().max(1.0), "defect {defect}");
        if oriented {
            prop_assert!(fit.map.determinant() > 0.0);
        }
        prop_assert!(fit.distance <= frobenius_norm(&(&t - &fit.map), &g).unwrap() + 1e-12);
    }

    #[test]
    fn subspace_distance_is_a_metric(seed in any::<u64>(), ambient in 2usize..=5, dim_frac in 0.0f64..1.0) {
        let d = 1 + ((ambient - 1) as f64 * dim_frac) as usize;
        let mut rng = sampling::rng(seed);
        let a = sampling::random_subspace(&mut rng, ambient, d);
        let b = sampling::random_subspace(&mut rng, ambient, d);
        let c = sampling::random_subspace(&mut rng, ambient, d);
        let ab = subspace_distance(&a, &b).unwrap();
        let ba = subspace_distance(&b, &a).unwrap();
        prop_assert!((ab - ba).abs() <= 1e-12, "{ab} vs {ba}");
        prop_assert!(subspace_distance(&a, &a).unwrap() <= 1e-12);
        let ac = subspace_distance(&a, &c).unwrap();
        let cb = subspace_distance(&c, &b).unwrap();
        prop_assert!(ab <= ac + cb + 1e-10);
    }

    #[test]
    fn projection_is_idempotent_and_self_adjoint(seed in any::<u64>(), ambient in 2usize..=5) {
        let mut rng = sampling::rng(seed);
        let a = sampling::random_subspace(&mut rng, ambient, ambient - 1);
        let v = sampling::gaussian_vector(&mut rng, ambient);
        let w = sampling::gaussian_vector(&mut rng, ambient);
        let pv = project_onto(&a, &v).unwrap();
        prop_assert!((project_onto(&a, &pv).unwrap() - &pv).norm() <= 1e-12);
        let pw = project_onto(&a, &w).unwrap();
        prop_assert!((pv.dot(&w) - v.dot(&pw)).abs() <= 1e-12);
    }

    #[test]
    fn volume_comparison(seed in any::<u64>(), d in 1usize..=2, lambda in 1.0f64..6.0) {
        let grid = GridDomain::new(d, 1.0, 8).unwrap();
        let g = MetricField::random_smooth(grid, lambda, 1.0, seed).unwrap();
        let mut rng = sampling::rng(seed ^ 0x5eed);
        let f: Vec<f64> = sampling::gaussian_vector(&mut rng, grid.cell_count()).iter().map(|x| x.abs()).collect();
        let lebesgue = integrate(&g, &f, Measure::Lebesgue);
        let riemann = integrate(&g, &f, Measure::Riemannian);
        let k = lambda.powf(d as f64 / 2.0);
        prop_assert!(lebesgue / k <= riemann + 1e-10);
        prop_assert!(riemann <= k * lebesgue + 1e-10);
    }

    #[test]
    fn excess_energy_is_bend_plus_dirichlet(kappa in -3.0f64..3.0, p in 1.2f64..4.0) {
        let grid = GridDomain::new(1, 1.0, 64).unwrap();
        let spec = ScenarioSpec::new(Family::PlaneCurve { curvature: CurvatureProfile::Sine { mean: kappa, amplitude: 0.5 } }, grid);
        let sc = scenario_generate(&spec).unwrap();
        let e = energies(sc.field.immersion().unwrap(), &sc.metric, None, p, Measure::Riemannian).unwrap();
        prop_assert!((e.excess - (e.bend + e.dirichlet)).abs() <= 1e-12 * e.excess.max(1.0));
        prop_assert!(e.stretch >= 0.0 && e.bend >= 0.0 && e.dirichlet >= 0.0);
    }

    #[test]
    fn rigid_motions_have_zero_lhs(seed in any::<u64>(), lambda in 1.0f64..4.0) {
        let grid = GridDomain::new(2, 1.0, 6).unwrap();
        let mut rng = sampling::rng(seed);
        let g = sampling::random_spd(&mut rng, 2, lambda);
        let q = sampling::random_rotation(&mut rng, 3);
        let shift = sampling::gaussian_vector(&mut rng, 3);
        // Dū = Q [g^{1/2}; 0] is an isometry of (R^2, g) into R^3.
        let mut r = DMatrix::zeros(3, 2);
        r.view_mut((0, 0), (2, 2)).copy_from(g.sqrt());
        let r = &q * r;
        let u = ImmersionField::from_fn(grid, TargetSpace::euclidean(2), DiffScheme::Forward, |x| {
            &r * DVector::from_column_slice(x) + &shift
        })
        .unwrap();
        let metric = MetricField::constant(grid, g);
        let e = energies(&u, &metric, None, 2.0, Measure::Riemannian).unwrap();
        prop_assert!(e.stretch <= 1e-20);
        let report = local_rigidity(&u, &metric, 2.0).unwrap();
        prop_assert!(report.lhs <= 1e-20, "lhs {}", report.lhs);
        prop_assert!(report.constraint_defect <= 1e-10);
    }

    #[test]
    fn scaling_and_translation_invariance(s in 0.05f64..20.0, cx in -5.0f64..5.0, cy in -5.0f64..5.0) {
        let grid = GridDomain::new(2, 1.0, 16).unwrap();
        let spec = ScenarioSpec::new(
            Family::Perturbation { base: PerturbationBase::Rotation { angle: 0.7 }, epsilon: 0.05, amplitude: 0.2 },
            grid,
        );
        let base = run_rigidity(&spec).unwrap().primary().empirical_constant;
        let sc = scenario_generate(&spec).unwrap();
        let u = sc.field.map();
        let scaled = GridDomain::new(2, s * grid.l, grid.n).unwrap();
        let mut values = u.values() * s;
        for mut col in values.column_iter_mut() {
            col += DVector::from_column_slice(&[cx, cy]);
        }
        let v = MapField::new(scaled, values, u.scheme()).unwrap();
        let w = vec![scaled.cell_volume(); scaled.cell_count()];
        let c = rigidity_core::rigidity::euclidean_best_rotation(v.differentials(), &w, 2.0).unwrap().empirical_constant;
        prop_assert!((c - base).abs() <= 1e-8 * base, "{c} vs {base}");
    }
}

#[test]
fn multiscale_residual_non_increasing_as_t_doubles() {
    let grid = GridDomain::new(1, 1.0, 64).unwrap();
    let specs = [
        ScenarioSpec::new(
            Family::PlaneCurve { curvature: CurvatureProfile::Linear { kappa0: 0.5, kappa1: 2.0 } },
            grid,
        ),
        ScenarioSpec::new(Family::Latitude { rho: 1.5, polar: 1.0 }, grid),
        ScenarioSpec::new(Family::PlaneCurve { curvature: CurvatureProfile::Constant { kappa: 1.0 } }, grid)
            .with_metric(MetricSpec::RandomSmooth { lambda: 2.0, lipschitz: 1.0 }),
    ];
    for spec in specs {
        let sc = scenario_generate(&spec).unwrap();
        let u = sc.field.immersion().unwrap();
        let residuals: Vec<f64> =
            [1, 2, 4, 8, 16].iter().map(|&t| multiscale_fit(u, &sc.metric, t, 2.0, 0).unwrap().residual).collect();
        for w in residuals.windows(2) {
            assert!(w[1] <= w[0] * (1.0 + 1e-12), "{}: {residuals:?}", spec.label());
        }
    }
}

#[test]
fn zero_shift_has_zero_modulus() {
    let grid = GridDomain::new(2, 1.0, 16).unwrap();
    let spec = ScenarioSpec::new(Family::GraphSurface { epsilon: 0.1 }, grid);
    let sc = scenario_generate(&spec).unwrap();
    let field = multiscale_fit(sc.field.immersion().unwrap(), &sc.metric, 8, 2.0, 0).unwrap();
    let m = translation_modulus(&field, &sc.metric, &[0.0, 0.0]).unwrap();
    assert_eq!(m.value, 0.0);
    assert!((0.0..=1.0).contains(&m.covered_fraction));
    let far = translation_modulus(&field, &sc.metric, &[1.5, 0.0]).unwrap();
    assert_eq!((far.value, far.covered_fraction), (0.0, 0.0));
}

#[test]
fn runs_are_reproducible_bit_for_bit() {
    let grid = GridDomain::new(2, 1.0, 16).unwrap();
    let spec = ScenarioSpec::new(Family::GraphSurface { epsilon: 0.05 }, grid)
        .with_metric(MetricSpec::RandomSmooth { lambda: 3.0, lipschitz: 2.0 })
        .with_seed(9);
    let a = serde_json::to_string(&run_rigidity(&spec).unwrap()).unwrap();
    let b = serde_json::to_string(&run_rigidity(&spec).unwrap()).unwrap();
    assert_eq!(a, b);
}

#[test]
fn single_thread_pool_matches_default_pool() {
    let grid = GridDomain::new(2, 1.0, 24).unwrap();
    let spec = ScenarioSpec::new(Family::GraphSurface { epsilon: 0.05 }, grid)
        .with_metric(MetricSpec::RandomSmooth { lambda: 2.0, lipschitz: 1.0 });
    let parallel = serde_json::to_string(&run_rigidity(&spec).unwrap()).unwrap();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let sequential = pool.install(|| serde_json::to_string(&run_rigidity(&spec).unwrap()).unwrap());
    assert_eq!(parallel, sequential);
}
