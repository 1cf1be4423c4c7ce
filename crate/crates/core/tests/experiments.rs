use galerkin_rk::{
    builtin, compare_schemes, fit_order, strong_error, BuiltinProblem, LevelPlan, SchemeKind,
};
use proptest::prelude::*;

proptest! {
    #[test]
    fn fit_recovers_exact_power_laws(slope in -3.0..-0.25f64, c in 1e-6..1e3f64) {
        let pts: Vec<(f64, f64)> = [2.0, 4.0, 8.0, 16.0, 32.0]
            .iter()
            .map(|&n: &f64| (n, c * n.powf(slope)))
            .collect();
        let (s, se) = fit_order(&pts).unwrap();
        prop_assert!((s - slope).abs() < 1e-10);
        prop_assert!(se < 1e-8);
    }

    #[test]
    fn fit_ignores_error_scale(
        errs in prop::collection::vec(1e-6..1.0f64, 4),
        c in 1e-8..1e8f64,
    ) {
        let pts: Vec<(f64, f64)> = [4.0, 8.0, 16.0, 32.0].into_iter().zip(errs).collect();
        let scaled: Vec<(f64, f64)> = pts.iter().map(|&(n, e)| (n, c * e)).collect();
        let (a, sa) = fit_order(&pts).unwrap();
        let (b, sb) = fit_order(&scaled).unwrap();
        prop_assert!((a - b).abs() < 1e-12 * (1.0 + a.abs()));
        prop_assert!((sa - sb).abs() < 1e-10 * (1.0 + sa));
    }
}

#[test]
fn errors_decrease_along_the_ladder() {
    let spec = builtin(BuiltinProblem::HeatSine);
    let plan = LevelPlan::paired(&[4, 8, 16], 2, 32, 400, 11);
    let report = strong_error(&spec, SchemeKind::RungeKutta, &plan).unwrap();
    let errs: Vec<f64> = report.levels.iter().map(|l| l.rms_error).collect();
    assert!(errs.windows(2).all(|w| w[1] < w[0]), "{errs:?}");
    for l in &report.levels {
        assert!(l.mc_standard_error < 0.2 * l.rms_error);
    }
}

#[test]
fn runge_kutta_approaches_milstein_at_first_order_in_steps() {
    let spec = builtin(BuiltinProblem::HeatSine);
    let plan = LevelPlan::paired(&[4, 8, 16], 2, 32, 50, 3);
    let report = compare_schemes(&spec, &plan).unwrap();
    let pts: Vec<(f64, f64)> = report
        .rows
        .iter()
        .map(|r| (r.level.m as f64, r.rk_mil_distance))
        .collect();
    let (slope, _) = fit_order(&pts).unwrap();
    assert!(slope <= -0.9, "distance order in M is {}", -slope);
}

#[test]
fn results_do_not_depend_on_thread_count() {
    let spec = builtin(BuiltinProblem::HeatCosine);
    let plan = LevelPlan::paired(&[2, 4], 2, 8, 24, 5);
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| strong_error(&spec, SchemeKind::RungeKutta, &plan).unwrap())
    };
    let (a, b) = (run(1), run(4));
    for (x, y) in a.levels.iter().zip(&b.levels) {
        assert_eq!(x.rms_error.to_bits(), y.rms_error.to_bits());
        assert_eq!(x.mc_standard_error.to_bits(), y.mc_standard_error.to_bits());
    }
}

#[test]
fn zero_noise_errors_are_path_independent() {
    let spec = builtin(BuiltinProblem::ZeroNoise);
    let one = strong_error(
        &spec,
        SchemeKind::Euler,
        &LevelPlan::paired(&[4, 8], 3, 16, 1, 0),
    )
    .unwrap();
    let many = strong_error(
        &spec,
        SchemeKind::Euler,
        &LevelPlan::paired(&[4, 8], 3, 16, 7, 9),
    )
    .unwrap();
    for (a, b) in one.levels.iter().zip(&many.levels) {
        assert!((a.rms_error - b.rms_error).abs() < 1e-14);
        assert!(b.mc_standard_error < 1e-12);
    }
}
