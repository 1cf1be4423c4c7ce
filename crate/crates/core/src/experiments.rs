//! Monte-Carlo strong error estimation and related experiments.
//!
//! Every path samples one fine Brownian lattice at the reference resolution.
//! The reference terminal state is the Runge-Kutta solution on that lattice;
//! each level reuses the same path by summing time blocks and dropping
//! trailing modes, and errors are measured in coefficient space after
//! zero-padding to the reference basis.

use std::time::Instant;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::noise::sample_lattice;
use crate::problems::{predicted_rates, ProblemSpec};
use crate::schemes::{gg_factor, integrate, milstein_factor, RunConfig, SchemeKind};
use crate::spectral::{grid_norm, PhysicalField, SineBasis, SpectralField};

/// Spatial modes `n`, time steps `m` and noise modes `k` of one resolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Level {
    pub n: usize,
    pub m: usize,
    pub k: usize,
}

impl Level {
    pub fn new(n: usize, m: usize, k: usize) -> Self {
        Self { n, m, k }
    }

    /// `M = N^exponent`, `K = N`.
    pub fn paired(n: usize, exponent: u32) -> Self {
        Self {
            n,
            m: n.pow(exponent),
            k: n,
        }
    }

    pub fn rng_draws(&self) -> usize {
        self.m * self.k
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LevelPlan {
    pub levels: Vec<Level>,
    pub reference: Level,
    pub paths: usize,
    pub base_seed: u64,
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

impl LevelPlan {
    /// Levels `(N, N^exponent, N)` against a reference with `N_ref` modes,
    /// `K_ref = N_ref` and the smallest multiple of every level's steps that
    /// is at least `N_ref²`.
    pub fn paired(
        ns: &[usize],
        exponent: u32,
        reference_n: usize,
        paths: usize,
        base_seed: u64,
    ) -> Self {
        let levels: Vec<Level> = ns.iter().map(|&n| Level::paired(n, exponent)).collect();
        let m_ref = levels.iter().fold(reference_n * reference_n, |acc, l| {
            acc / gcd(acc, l.m) * l.m
        });
        Self {
            levels,
            reference: Level::new(reference_n, m_ref, reference_n),
            paths,
            base_seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidPlan(msg));
        let r = self.reference;
        if self.paths == 0 {
            return bad("at least one path is required".into());
        }
        if r.n == 0 || r.m == 0 || r.k == 0 {
            return bad(format!("reference {r:?} has a zero entry"));
        }
        for l in &self.levels {
            if l.n == 0 || l.m == 0 || l.k == 0 {
                return bad(format!("level {l:?} has a zero entry"));
            }
            if r.m % l.m != 0 {
                return bad(format!(
                    "reference steps {} not divisible by level steps {}",
                    r.m, l.m
                ));
            }
            if l.k > r.k {
                return bad(format!(
                    "level noise modes {} exceed reference {}",
                    l.k, r.k
                ));
            }
            if l.n > r.n {
                return bad(format!("level modes {} exceed reference {}", l.n, r.n));
            }
        }
        if self.levels.windows(2).any(|w| w[0].n > w[1].n) {
            return bad("levels must be sorted by N".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LevelError {
    pub level: Level,
    /// `(E‖X_T - Y‖²_H)^{1/2}` estimated over the paths.
    pub rms_error: f64,
    /// Standard error of `rms_error` (delta method).
    pub mc_standard_error: f64,
    /// Normal draws per path, `M·K`.
    pub rng_draws: usize,
    /// Mean wall-clock seconds per path for this level.
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorReport {
    pub problem: String,
    pub scheme: SchemeKind,
    pub paths: usize,
    pub base_seed: u64,
    pub levels: Vec<LevelError>,
    /// Slope of `log₂ error` against `log₂ N`.
    pub fitted_slope: Option<f64>,
    pub slope_stderr: Option<f64>,
    pub predicted_slope: Option<f64>,
}

/// Slope of the error against `N` predicted by the regularity exponents
/// under `M = N^exponent`, `K = N` and power-law noise eigenvalues.
///
/// Euler uses a temporal rate of `min(γ, 1/2)`.
pub fn predicted_slope(spec: &ProblemSpec, scheme: SchemeKind, exponent: u32) -> Option<f64> {
    let rates = predicted_rates(spec).ok()?;
    let gamma = spec.regularity?.gamma;
    let temporal = match scheme {
        SchemeKind::Euler => gamma.min(0.5),
        SchemeKind::Milstein | SchemeKind::RungeKutta => rates.temporal,
    };
    let noise = spec.noise.decay * rates.noise;
    Some(-rates.spatial.min(noise).min(exponent as f64 * temporal))
}

/// Least-squares slope of `log₂ error` against `log₂ resolution` and its
/// standard error. The standard error is NaN for exactly two points.
pub fn fit_order(points: &[(f64, f64)]) -> Result<(f64, f64)> {
    if points.len() < 2 {
        return Err(Error::InvalidParameter(
            "fit needs at least two points".into(),
        ));
    }
    if let Some(&(r, e)) = points
        .iter()
        .find(|&&(r, e)| !(r.is_finite() && e.is_finite()) || r <= 0.0 || e <= 0.0)
    {
        return Err(Error::InvalidParameter(format!(
            "cannot fit non-positive point ({r}, {e})"
        )));
    }
    let n = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|p| p.0.log2()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.log2()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidParameter(
            "fit needs at least two distinct resolutions".into(),
        ));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let stderr = if points.len() > 2 {
        let ssr: f64 = xs
            .iter()
            .zip(&ys)
            .map(|(x, y)| (y - my - slope * (x - mx)).powi(2))
            .sum();
        (ssr / (n - 2.0) / sxx).sqrt()
    } else {
        f64::NAN
    };
    Ok((slope, stderr))
}

struct Bases {
    reference: SineBasis,
    levels: Vec<SineBasis>,
}

impl Bases {
    fn new(spec: &ProblemSpec, plan: &LevelPlan) -> Result<Self> {
        Ok(Self {
            reference: SineBasis::new(plan.reference.n, spec.diffusivity)?,
            levels: plan
                .levels
                .iter()
                .map(|l| SineBasis::new(l.n, spec.diffusivity))
                .collect::<Result<_>>()?,
        })
    }
}

fn level_config(spec: &ProblemSpec, level: Level, scheme: SchemeKind) -> Result<RunConfig> {
    RunConfig::new(spec.horizon, level.n, level.m, level.k, scheme)
}

fn squared_distance(a: &SpectralField, b: &SpectralField) -> f64 {
    a.as_slice()
        .iter()
        .zip(b.as_slice())
        .map(|(x, y)| (x - y).powi(2))
        .sum()
}

/// Terminal states of one path: the reference and, for every level and every
/// requested scheme, the level solution padded to the reference basis.
struct PathResult {
    reference: SpectralField,
    /// `levels[l][s]`.
    levels: Vec<Vec<SpectralField>>,
    seconds: Vec<Vec<f64>>,
}

fn simulate_path(
    spec: &ProblemSpec,
    plan: &LevelPlan,
    bases: &Bases,
    schemes: &[SchemeKind],
    path: u64,
) -> Result<PathResult> {
    let r = plan.reference;
    let ref_cfg = level_config(spec, r, SchemeKind::RungeKutta)?;
    let fine = sample_lattice(r.m, r.k, ref_cfg.h, plan.base_seed, path)?;
    let reference = integrate(spec, &ref_cfg, &fine, &bases.reference)?;

    let mut levels = Vec::with_capacity(plan.levels.len());
    let mut seconds = Vec::with_capacity(plan.levels.len());
    for (level, basis) in plan.levels.iter().zip(&bases.levels) {
        let coarse = fine.coarsen_time(r.m / level.m)?;
        let mut states = Vec::with_capacity(schemes.len());
        let mut times = Vec::with_capacity(schemes.len());
        for &scheme in schemes {
            let start = Instant::now();
            let cfg = level_config(spec, *level, scheme)?;
            let y = integrate(spec, &cfg, &coarse, basis)?;
            times.push(start.elapsed().as_secs_f64());
            states.push(basis.resample(&y, &bases.reference)?);
        }
        levels.push(states);
        seconds.push(times);
    }
    Ok(PathResult {
        reference,
        levels,
        seconds,
    })
}

fn run_paths(
    spec: &ProblemSpec,
    plan: &LevelPlan,
    schemes: &[SchemeKind],
) -> Result<Vec<PathResult>> {
    plan.validate()?;
    if schemes.contains(&SchemeKind::Milstein) && spec.diffusion_dy.is_none() {
        return Err(Error::MissingDerivative);
    }
    let bases = Bases::new(spec, plan)?;
    // Indexed collection keeps results in path order regardless of scheduling.
    (0..plan.paths as u64)
        .into_par_iter()
        .map(|p| {
            simulate_path(spec, plan, &bases, schemes, p).map_err(|e| Error::PathFailed {
                path: p,
                source: Box::new(e),
            })
        })
        .collect()
}

/// RMS and delta-method standard error from per-path squared errors.
fn rms_with_stderr(squared: &[f64]) -> (f64, f64) {
    let n = squared.len() as f64;
    let mean = squared.iter().sum::<f64>() / n;
    let rms = mean.sqrt();
    if squared.len() < 2 || rms == 0.0 {
        return (rms, 0.0);
    }
    let var = squared.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (rms, (var / n).sqrt() / (2.0 * rms))
}

fn fit_levels(levels: &[LevelError]) -> (Option<f64>, Option<f64>) {
    let points: Vec<(f64, f64)> = levels
        .iter()
        .map(|l| (l.level.n as f64, l.rms_error))
        .collect();
    match fit_order(&points) {
        Ok((slope, stderr)) => (Some(slope), Some(stderr)),
        Err(_) => (None, None),
    }
}

fn step_exponent(levels: &[Level]) -> Option<u32> {
    let first = levels.first()?;
    (1..=6)
        .find(|&p| levels.iter().all(|l| l.n.checked_pow(p) == Some(l.m)))
        .filter(|_| first.n > 1)
}

/// Strong error of `scheme` at every level of `plan`.
pub fn strong_error(
    spec: &ProblemSpec,
    scheme: SchemeKind,
    plan: &LevelPlan,
) -> Result<ErrorReport> {
    let results = run_paths(spec, plan, &[scheme])?;
    let levels: Vec<LevelError> = plan
        .levels
        .iter()
        .enumerate()
        .map(|(l, level)| {
            let squared: Vec<f64> = results
                .iter()
                .map(|r| squared_distance(&r.levels[l][0], &r.reference))
                .collect();
            let (rms_error, mc_standard_error) = rms_with_stderr(&squared);
            let seconds = results.iter().map(|r| r.seconds[l][0]).sum::<f64>() / plan.paths as f64;
            LevelError {
                level: *level,
                rms_error,
                mc_standard_error,
                rng_draws: level.rng_draws(),
                seconds,
            }
        })
        .collect();
    let (fitted_slope, slope_stderr) = fit_levels(&levels);
    let predicted = step_exponent(&plan.levels).and_then(|p| predicted_slope(spec, scheme, p));
    Ok(ErrorReport {
        problem: spec.name.clone(),
        scheme,
        paths: plan.paths,
        base_seed: plan.base_seed,
        levels,
        fitted_slope,
        slope_stderr,
        predicted_slope: predicted,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub level: Level,
    pub err_rk: f64,
    pub err_mil: f64,
    pub err_euler: f64,
    /// RMS over paths of `‖Y_RK - Y_Milstein‖_H`.
    pub rk_mil_distance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport {
    pub problem: String,
    pub paths: usize,
    pub base_seed: u64,
    pub rows: Vec<ComparisonRow>,
}

impl ComparisonReport {
    /// `max_l |err_rk - err_mil| / err_mil`.
    pub fn max_relative_gap(&self) -> f64 {
        self.rows
            .iter()
            .map(|r| (r.err_rk - r.err_mil).abs() / r.err_mil)
            .fold(0.0, f64::max)
    }

    pub fn slope(&self, scheme: SchemeKind) -> Result<(f64, f64)> {
        let points: Vec<(f64, f64)> = self
            .rows
            .iter()
            .map(|r| {
                let e = match scheme {
                    SchemeKind::Euler => r.err_euler,
                    SchemeKind::Milstein => r.err_mil,
                    SchemeKind::RungeKutta => r.err_rk,
                };
                (r.level.n as f64, e)
            })
            .collect();
        fit_order(&points)
    }
}

/// Runs all three schemes on common noise against one shared reference.
pub fn compare_schemes(spec: &ProblemSpec, plan: &LevelPlan) -> Result<ComparisonReport> {
    const ORDER: [SchemeKind; 3] = [
        SchemeKind::RungeKutta,
        SchemeKind::Milstein,
        SchemeKind::Euler,
    ];
    let results = run_paths(spec, plan, &ORDER)?;
    let rms = |values: Vec<f64>| (values.iter().sum::<f64>() / values.len() as f64).sqrt();
    let rows = plan
        .levels
        .iter()
        .enumerate()
        .map(|(l, level)| {
            let err = |s: usize| {
                rms(results
                    .iter()
                    .map(|r| squared_distance(&r.levels[l][s], &r.reference))
                    .collect())
            };
            ComparisonRow {
                level: *level,
                err_rk: err(0),
                err_mil: err(1),
                err_euler: err(2),
                rk_mil_distance: rms(results
                    .iter()
                    .map(|r| squared_distance(&r.levels[l][0], &r.levels[l][1]))
                    .collect()),
            }
        })
        .collect();
    Ok(ComparisonReport {
        problem: spec.name.clone(),
        paths: plan.paths,
        base_seed: plan.base_seed,
        rows,
    })
}

/// Step sizes probed by [`check_gg_assumption`]: `2^-2, …, 2^-10`.
pub const GG_CHECK_STEPS: [f64; 9] = [
    0.25,
    0.125,
    0.0625,
    0.031_25,
    0.015_625,
    0.007_812_5,
    0.003_906_25,
    0.001_953_125,
    0.000_976_562_5,
];

/// Fitted constants below this are treated as exact zeros.
pub const NUMERICAL_ZERO: f64 = 1e-20;

#[derive(Debug, Clone, PartialEq)]
pub struct GgCheck {
    pub steps: Vec<f64>,
    /// Per step: `max ‖GG(v,h) - GG(w,h)‖²_HS / ‖v - w‖²` over the pairs.
    pub lipschitz: Vec<f64>,
    /// Per step: `max ‖GG₁(v,h)‖²_HS / (h (1 + ‖v‖⁴_∞))` over the pairs.
    pub remainder: Vec<f64>,
    pub lipschitz_ok: bool,
    pub remainder_ok: bool,
}

impl GgCheck {
    pub fn passed(&self) -> bool {
        self.lipschitz_ok && self.remainder_ok
    }

    /// Smallest `C₀` with `‖GG(v,h) - GG(w,h)‖² ≤ (C₀/h)‖v - w‖²` on the samples.
    pub fn lipschitz_c0(&self) -> f64 {
        self.steps
            .iter()
            .zip(&self.lipschitz)
            .map(|(h, l)| h * l)
            .fold(0.0, f64::max)
    }

    pub fn remainder_c0(&self) -> f64 {
        self.remainder.iter().copied().fold(0.0, f64::max)
    }
}

fn stable_within_two(values: &[f64]) -> bool {
    let max = values.iter().copied().fold(0.0, f64::max);
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    max <= NUMERICAL_ZERO || max <= 2.0 * min
}

/// Truncated `HS^(2)` norm squared of the pointwise bilinear operator
/// `(u, ũ) ↦ factor · u · ũ`: `Σ_{i,j≤K} μ_i μ_j ‖factor η_i η_j‖²_H`, with
/// the norm evaluated by grid quadrature.
pub fn pointwise_hs_norm_sq(
    factor: &[f64],
    spec: &ProblemSpec,
    modes: usize,
    basis: &SineBasis,
) -> f64 {
    let grid = basis.grid();
    let noise = &spec.noise;
    let mut total = 0.0;
    for i in 1..=modes {
        for j in 1..=modes {
            let weight = noise.mu(i) * noise.mu(j);
            if weight == 0.0 {
                continue;
            }
            let product: Vec<f64> = grid
                .iter()
                .zip(factor)
                .map(|(&x, f)| f * noise.eta(i, x) * noise.eta(j, x))
                .collect();
            total += weight * grid_norm(&PhysicalField::from_vec_unchecked(product)).powi(2);
        }
    }
    total
}

fn random_field(rng: &mut ChaCha8Rng, basis: &SineBasis) -> Result<PhysicalField> {
    let coeffs = (1..=basis.n_modes())
        .map(|j| rng.sample::<f64, _>(StandardNormal) / j as f64)
        .collect();
    basis.to_physical(&SpectralField::new(coeffs)?)
}

/// Brute-force check of the Lipschitz and remainder bounds on `GG` over
/// `trials` random field pairs and the step sizes in [`GG_CHECK_STEPS`].
///
/// Each bound passes when its per-step constants agree within a factor of
/// two. The Lipschitz constant is measured without the `1/h` allowance, so a
/// pass means the `C₀/h` bound holds with room to spare.
pub fn check_gg_assumption(
    spec: &ProblemSpec,
    modes: usize,
    basis: &SineBasis,
    trials: usize,
    seed: u64,
) -> Result<GgCheck> {
    if modes == 0 || modes > basis.n_modes() {
        return Err(Error::InvalidParameter(format!(
            "noise modes {modes} must be in 1..={}",
            basis.n_modes()
        )));
    }
    if trials == 0 {
        return Err(Error::InvalidParameter(
            "at least one trial is required".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pairs: Vec<(PhysicalField, PhysicalField)> = (0..trials)
        .map(|_| {
            Ok((
                random_field(&mut rng, basis)?,
                random_field(&mut rng, basis)?,
            ))
        })
        .collect::<Result<_>>()?;
    let mil: Vec<PhysicalField> = pairs
        .iter()
        .map(|(v, _)| milstein_factor(spec, v, basis))
        .collect::<Result<_>>()?;

    let mut lipschitz = Vec::with_capacity(GG_CHECK_STEPS.len());
    let mut remainder = Vec::with_capacity(GG_CHECK_STEPS.len());
    for &h in &GG_CHECK_STEPS {
        let mut lip: f64 = 0.0;
        let mut rem: f64 = 0.0;
        for ((v, w), mv) in pairs.iter().zip(&mil) {
            let gv = gg_factor(spec, v, h, basis)?;
            let gw = gg_factor(spec, w, h, basis)?;
            let diff: Vec<f64> = gv
                .values()
                .iter()
                .zip(gw.values())
                .map(|(a, b)| a - b)
                .collect();
            let vw: Vec<f64> = v
                .as_slice()
                .iter()
                .zip(w.as_slice())
                .map(|(a, b)| a - b)
                .collect();
            let dist = grid_norm(&PhysicalField::from_vec_unchecked(vw)).powi(2);
            if dist > 0.0 {
                lip = lip.max(pointwise_hs_norm_sq(&diff, spec, modes, basis) / dist);
            }

            let gg1: Vec<f64> = gv
                .values()
                .iter()
                .zip(mv.as_slice())
                .map(|(a, b)| a - b)
                .collect();
            let vmax = v.as_slice().iter().fold(0.0f64, |a, b| a.max(b.abs()));
            rem = rem
                .max(pointwise_hs_norm_sq(&gg1, spec, modes, basis) / (h * (1.0 + vmax.powi(4))));
        }
        lipschitz.push(lip);
        remainder.push(rem);
    }
    Ok(GgCheck {
        steps: GG_CHECK_STEPS.to_vec(),
        lipschitz_ok: stable_within_two(&lipschitz),
        remainder_ok: stable_within_two(&remainder),
        lipschitz,
        remainder,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RuntimeRow {
    pub scheme: SchemeKind,
    pub level: Level,
    pub rng_draws: usize,
    pub median_seconds: f64,
}

/// Median wall-clock seconds for one path (lattice sampling plus
/// integration) per scheme and `N`, with `M = N³` for Euler and `M = N²`
/// otherwise. Milstein is skipped when `∂g/∂y` is unavailable.
pub fn runtime_table(spec: &ProblemSpec, ns: &[usize], repeats: usize) -> Result<Vec<RuntimeRow>> {
    let repeats = repeats.max(1);
    let mut rows = Vec::new();
    for scheme in SchemeKind::ALL {
        if scheme == SchemeKind::Milstein && spec.diffusion_dy.is_none() {
            continue;
        }
        for &n in ns {
            let level = Level::paired(n, scheme.default_step_exponent());
            let cfg = level_config(spec, level, scheme)?;
            let basis = SineBasis::new(n, spec.diffusivity)?;
            let mut times = Vec::with_capacity(repeats);
            for r in 0..repeats {
                let start = Instant::now();
                let lattice = sample_lattice(level.m, level.k, cfg.h, 0, r as u64)?;
                integrate(spec, &cfg, &lattice, &basis)?;
                times.push(start.elapsed().as_secs_f64());
            }
            times.sort_by(f64::total_cmp);
            let mid = times.len() / 2;
            let median = if times.len() % 2 == 1 {
                times[mid]
            } else {
                0.5 * (times[mid - 1] + times[mid])
            };
            rows.push(RuntimeRow {
                scheme,
                level,
                rng_draws: level.rng_draws(),
                median_seconds: median,
            });
        }
    }
    Ok(rows)
}

/// Distance between two terminal states in `H`.
pub fn h_distance(a: &SpectralField, b: &SpectralField) -> f64 {
    squared_distance(a, b).sqrt()
}
