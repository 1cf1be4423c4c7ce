use std::f64::consts::{PI, SQRT_2};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use galerkin_rk::problems::heat_sine_g;
use galerkin_rk::{
    builtin, initial_state, integrate, sample_lattice, BuiltinProblem, CoefficientFn, Error,
    RunConfig, SchemeKind, SineBasis,
};

#[derive(Default)]
struct Counter {
    sweeps: AtomicUsize,
    points: AtomicUsize,
}

/// Wraps a coefficient and counts grid sweeps and point evaluations.
struct Counted<F> {
    inner: F,
    count: Arc<Counter>,
}

impl<F: Fn(f64, f64) -> f64 + Send + Sync> CoefficientFn for Counted<F> {
    fn eval(&self, x: f64, y: f64) -> f64 {
        self.count.points.fetch_add(1, Ordering::Relaxed);
        (self.inner)(x, y)
    }

    fn eval_field(&self, grid: &[f64], values: &[f64], out: &mut [f64]) {
        self.count.sweeps.fetch_add(1, Ordering::Relaxed);
        for ((o, &x), &y) in out.iter_mut().zip(grid).zip(values) {
            *o = self.eval(x, y);
        }
    }
}

fn counted<F>(inner: F) -> (Counted<F>, Arc<Counter>) {
    let count = Arc::new(Counter::default());
    (
        Counted {
            inner,
            count: count.clone(),
        },
        count,
    )
}

#[test]
fn evaluation_counts_per_scheme() {
    let (n, m, k) = (8, 20, 5);
    let expected = [
        (SchemeKind::RungeKutta, 1, 2, 0),
        (SchemeKind::Milstein, 1, 1, 1),
        (SchemeKind::Euler, 1, 1, 0),
    ];
    for (scheme, f_per_step, g_per_step, dg_per_step) in expected {
        let (f, fc) = counted(|_x: f64, y: f64| 1.0 - 2.0 * y);
        let (g, gc) = counted(|_x: f64, y: f64| heat_sine_g(y));
        let (dg, dgc) = counted(|_x: f64, y: f64| galerkin_rk::problems::heat_sine_dg(y));
        let spec = builtin(BuiltinProblem::HeatSine)
            .with_drift(f)
            .with_diffusion(g, Some(Arc::new(dg)));
        let cfg = RunConfig::new(spec.horizon, n, m, k, scheme).unwrap();
        let basis = SineBasis::new(n, spec.diffusivity).unwrap();
        let lattice = sample_lattice(m, k, cfg.h, 1, 0).unwrap();
        integrate(&spec, &cfg, &lattice, &basis).unwrap();

        for (c, per_step, what) in [
            (&fc, f_per_step, "f"),
            (&gc, g_per_step, "g"),
            (&dgc, dg_per_step, "dg"),
        ] {
            assert_eq!(
                c.sweeps.load(Ordering::Relaxed),
                per_step * m,
                "{scheme} {what} sweeps"
            );
            assert_eq!(
                c.points.load(Ordering::Relaxed),
                per_step * m * n,
                "{scheme} {what} points"
            );
        }
    }
}

/// With one mode and one grid point `x = 1/2` the scheme is a scalar
/// recurrence in the coefficient `c`, with `y = √2 c` on the grid.
fn scalar_rk(m: usize, dbeta: &[f64]) -> f64 {
    let spec = builtin(BuiltinProblem::HeatSine);
    let h = spec.horizon / m as f64;
    let lambda = spec.diffusivity * PI * PI;
    let mu: f64 = 1.0;
    let phi = SQRT_2; // e_1(1/2) = η_1(1/2)
    let mut c = 0.0;
    for &db in dbeta {
        let y = phi * c;
        let dw = mu.sqrt() * phi * db;
        let comp = h * mu * phi * phi;
        let gy = heat_sine_g(y);
        let bilinear = (heat_sine_g(y + h.sqrt() * gy) - gy) / h.sqrt();
        let zeta = y + h * (1.0 - 2.0 * y) + gy * dw + 0.5 * bilinear * (dw * dw - comp);
        c = (-lambda * h).exp() * zeta * phi / 2.0;
    }
    c
}

#[test]
fn single_mode_matches_scalar_recurrence() {
    let spec = builtin(BuiltinProblem::HeatSine);
    let basis = SineBasis::new(1, spec.diffusivity).unwrap();
    for m in [1, 2, 7] {
        for path in 0..5 {
            let cfg = RunConfig::new(spec.horizon, 1, m, 1, SchemeKind::RungeKutta).unwrap();
            let lattice = sample_lattice(m, 1, cfg.h, 99, path).unwrap();
            let dbeta: Vec<f64> = (0..m).map(|s| lattice.get(s, 0)).collect();
            let got = integrate(&spec, &cfg, &lattice, &basis).unwrap().as_slice()[0];
            let want = scalar_rk(m, &dbeta);
            assert!(
                (got - want).abs() <= 1e-12 * (1.0 + want.abs()),
                "{got} vs {want}"
            );
        }
    }
}

#[test]
fn pure_heat_decays_first_mode_exactly() {
    let spec = builtin(BuiltinProblem::ZeroNoise)
        .with_drift(|_x: f64, _y: f64| 0.0)
        .with_initial(|x| SQRT_2 * (PI * x).sin());
    let lambda1 = spec.diffusivity * PI * PI;
    for (n, m) in [(1, 1), (4, 16), (16, 64)] {
        let basis = SineBasis::new(n, spec.diffusivity).unwrap();
        for scheme in SchemeKind::ALL {
            let cfg = RunConfig::new(spec.horizon, n, m, n, scheme).unwrap();
            let lattice = sample_lattice(m, n, cfg.h, 0, 0).unwrap();
            let y = integrate(&spec, &cfg, &lattice, &basis).unwrap();
            let want = match scheme {
                SchemeKind::Euler => (1.0 + lambda1 * cfg.h).powi(-(m as i32)),
                _ => (-lambda1 * spec.horizon).exp(),
            };
            assert!((y.as_slice()[0] - want).abs() < 1e-12, "{scheme} N={n}");
            assert!(y.as_slice()[1..].iter().all(|v| v.abs() < 1e-14));
        }
    }
}

#[test]
fn linear_drift_without_noise_matches_closed_form_per_mode() {
    let a = 0.7;
    let spec = builtin(BuiltinProblem::ZeroNoise)
        .with_drift(move |_x: f64, y: f64| -a * y)
        .with_initial(|x| {
            (PI * x).sin() + 0.5 * (3.0 * PI * x).sin() - 0.25 * (6.0 * PI * x).sin()
        });
    let (n, m) = (8, 40);
    let basis = SineBasis::new(n, spec.diffusivity).unwrap();
    let c0 = initial_state(&spec, &basis).unwrap();
    for (j, want) in [(1, 1.0), (3, 0.5), (6, -0.25)] {
        assert!((c0.as_slice()[j - 1] - want / SQRT_2).abs() < 1e-14);
    }
    for scheme in SchemeKind::ALL {
        let cfg = RunConfig::new(spec.horizon, n, m, n, scheme).unwrap();
        let mult = match scheme {
            SchemeKind::Euler => basis.resolvent_multipliers(cfg.h).unwrap(),
            _ => basis.semigroup_multipliers(cfg.h).unwrap(),
        };
        let lattice = sample_lattice(m, n, cfg.h, 3, 0).unwrap();
        let y = integrate(&spec, &cfg, &lattice, &basis).unwrap();
        for (j, ((&got, &c), &mj)) in y
            .as_slice()
            .iter()
            .zip(c0.as_slice())
            .zip(&mult)
            .enumerate()
        {
            let want = c * ((1.0 - a * cfg.h) * mj).powi(m as i32);
            assert!((got - want).abs() < 1e-13, "{scheme} mode {}", j + 1);
        }
    }
}

#[test]
fn linear_diffusion_makes_runge_kutta_and_milstein_agree() {
    let spec = builtin(BuiltinProblem::LinearG);
    for (n, m, k) in [(1, 1, 1), (4, 16, 4), (8, 64, 5), (16, 256, 16)] {
        let basis = SineBasis::new(n, spec.diffusivity).unwrap();
        for path in 0..3 {
            let lattice = sample_lattice(m, k, spec.horizon / m as f64, 8, path).unwrap();
            let run = |scheme| {
                let cfg = RunConfig::new(spec.horizon, n, m, k, scheme).unwrap();
                integrate(&spec, &cfg, &lattice, &basis).unwrap()
            };
            let rk = run(SchemeKind::RungeKutta);
            let mil = run(SchemeKind::Milstein);
            for (a, b) in rk.as_slice().iter().zip(mil.as_slice()) {
                assert!(
                    (a - b).abs() <= 1e-12 * (1.0 + b.abs()),
                    "({n},{m},{k}): {a} vs {b}"
                );
            }
        }
    }
}

#[test]
fn milstein_without_derivative_is_an_error() {
    let spec =
        builtin(BuiltinProblem::HeatSine).with_diffusion(|_x: f64, y: f64| heat_sine_g(y), None);
    let basis = SineBasis::new(4, spec.diffusivity).unwrap();
    let cfg = RunConfig::new(1.0, 4, 16, 4, SchemeKind::Milstein).unwrap();
    let lattice = sample_lattice(16, 4, cfg.h, 0, 0).unwrap();
    assert_eq!(
        integrate(&spec, &cfg, &lattice, &basis),
        Err(Error::MissingDerivative)
    );
    let cfg = RunConfig::new(1.0, 4, 16, 4, SchemeKind::RungeKutta).unwrap();
    assert!(integrate(&spec, &cfg, &lattice, &basis).is_ok());
}

#[test]
fn blow_up_reports_the_failing_step() {
    let spec =
        builtin(BuiltinProblem::ZeroNoise).with_drift(|_x: f64, y: f64| 1e3 * y * y * y + 1.0);
    let basis = SineBasis::new(4, spec.diffusivity).unwrap();
    let cfg = RunConfig::new(1.0, 4, 50, 4, SchemeKind::RungeKutta).unwrap();
    let lattice = sample_lattice(50, 4, cfg.h, 0, 0).unwrap();
    match integrate(&spec, &cfg, &lattice, &basis) {
        Err(Error::Overflow { step }) => assert!(step < 50),
        Err(Error::NonFiniteCoefficient { .. }) => {}
        other => panic!("expected a blow-up error, got {other:?}"),
    }
}
