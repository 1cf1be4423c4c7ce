//! SPDE problem definitions and the built-in registry.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::noise::NoiseSpectrum;
use crate::spectral::{PhysicalField, SineBasis};

/// A coefficient function `φ(x, y)` applied pointwise to a field.
///
/// Schemes only ever call [`CoefficientFn::eval_field`], once per sweep over
/// the grid.
pub trait CoefficientFn: Send + Sync {
    fn eval(&self, x: f64, y: f64) -> f64;

    fn eval_field(&self, grid: &[f64], values: &[f64], out: &mut [f64]) {
        for ((o, &x), &y) in out.iter_mut().zip(grid).zip(values) {
            *o = self.eval(x, y);
        }
    }
}

impl<F> CoefficientFn for F
where
    F: Fn(f64, f64) -> f64 + Send + Sync,
{
    fn eval(&self, x: f64, y: f64) -> f64 {
        self(x, y)
    }
}

pub type Coefficient = Arc<dyn CoefficientFn>;
pub type InitialData = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Regularity exponents of the convergence theory.
///
/// Open intervals such as `γ ∈ (1/2, 3/4)` are stored by their supremum;
/// rates derived from them hold up to an arbitrarily small loss.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Regularity {
    pub beta: f64,
    pub gamma: f64,
    pub delta: f64,
    pub alpha: f64,
    /// Never assigned a value for the built-in problems; echoed only.
    pub theta: Option<f64>,
}

impl Regularity {
    pub fn new(beta: f64, gamma: f64, delta: f64, alpha: f64, theta: Option<f64>) -> Result<Self> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if !(delta > 0.0 && delta <= 0.5) {
            return bad(format!("delta = {delta} outside (0, 1/2)"));
        }
        if beta > delta + 0.5 {
            return bad(format!("beta = {beta} exceeds delta + 1/2"));
        }
        if gamma < delta.max(beta) || gamma > delta + 0.5 {
            return bad(format!(
                "gamma = {gamma} outside [max(delta, beta), delta + 1/2)"
            ));
        }
        if alpha <= 0.0 {
            return bad(format!("alpha = {alpha} must be positive"));
        }
        Ok(Self {
            beta,
            gamma,
            delta,
            alpha,
            theta,
        })
    }
}

/// Exponents of the three error contributions `λ_N^{-γ}`, `(sup μ)^α` and `M^{-r}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PredictedRates {
    /// Exponent of `N^{-1}` coming from `λ_{N+1}^{-γ}`, i.e. `2γ`.
    pub spatial: f64,
    /// Exponent `α` applied to the largest neglected noise eigenvalue.
    pub noise: f64,
    /// Exponent of `M^{-1}`: `min(2(γ - β), γ)`.
    pub temporal: f64,
}

/// Everything needed to simulate `dX = [k X'' + f(x, X)] dt + g(x, X) dW` on (0, 1).
#[derive(Clone)]
pub struct ProblemSpec {
    pub name: String,
    pub diffusivity: f64,
    pub horizon: f64,
    pub drift: Coefficient,
    pub diffusion: Coefficient,
    pub diffusion_dy: Option<Coefficient>,
    pub initial: InitialData,
    pub noise: NoiseSpectrum,
    pub regularity: Option<Regularity>,
}

impl fmt::Debug for ProblemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemSpec")
            .field("name", &self.name)
            .field("diffusivity", &self.diffusivity)
            .field("horizon", &self.horizon)
            .field("has_diffusion_dy", &self.diffusion_dy.is_some())
            .field("noise", &self.noise)
            .field("regularity", &self.regularity)
            .finish_non_exhaustive()
    }
}

impl ProblemSpec {
    pub fn with_drift(mut self, f: impl CoefficientFn + 'static) -> Self {
        self.drift = Arc::new(f);
        self
    }

    /// Replaces `g`; pass `Some(∂g/∂y)` to keep the Milstein scheme available.
    pub fn with_diffusion(
        mut self,
        g: impl CoefficientFn + 'static,
        dg: Option<Coefficient>,
    ) -> Self {
        self.diffusion = Arc::new(g);
        self.diffusion_dy = dg;
        self
    }

    pub fn with_initial(mut self, xi: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        self.initial = Arc::new(xi);
        self
    }

    pub fn with_noise(mut self, noise: NoiseSpectrum) -> Self {
        self.noise = noise;
        self
    }

    pub fn with_horizon(mut self, horizon: f64) -> Self {
        self.horizon = horizon;
        self
    }

    /// `ξ` sampled on the grid of `basis`.
    pub fn initial_field(&self, basis: &SineBasis) -> Result<PhysicalField> {
        PhysicalField::new(basis.grid().iter().map(|&x| (self.initial)(x)).collect())
    }
}

/// The problems shipped with the library.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BuiltinProblem {
    /// `k = 1/200`, `f = 1 - 2y`, `g = (y + sin³y)/(1 + y²)²`, `μ_j = j⁻²`, sine noise.
    HeatSine,
    /// `k = 1/50`, `f = 1 - y`, `g = y/(1 + y²)`, `μ_j = j⁻³`, cosine noise.
    HeatCosine,
    /// `HeatSine` with `g(x, y) = y`.
    LinearG,
    /// `HeatSine` with `g ≡ 0`.
    ZeroNoise,
}

impl BuiltinProblem {
    pub const ALL: [BuiltinProblem; 4] = [
        BuiltinProblem::HeatSine,
        BuiltinProblem::HeatCosine,
        BuiltinProblem::LinearG,
        BuiltinProblem::ZeroNoise,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BuiltinProblem::HeatSine => "heat-sine",
            BuiltinProblem::HeatCosine => "heat-cosine",
            BuiltinProblem::LinearG => "linear-g",
            BuiltinProblem::ZeroNoise => "zero-noise",
        }
    }

    pub fn spec(self) -> ProblemSpec {
        builtin(self)
    }
}

impl fmt::Display for BuiltinProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BuiltinProblem {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        BuiltinProblem::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::UnknownProblem(s.to_string()))
    }
}

pub fn heat_sine_g(y: f64) -> f64 {
    let s = y.sin();
    let d = 1.0 + y * y;
    (y + s * s * s) / (d * d)
}

pub fn heat_sine_dg(y: f64) -> f64 {
    let (s, c) = y.sin_cos();
    let d = 1.0 + y * y;
    (3.0 * d * s * s * c - 4.0 * y * s * s * s - 3.0 * y * y + 1.0) / (d * d * d)
}

pub fn heat_cosine_g(y: f64) -> f64 {
    y / (1.0 + y * y)
}

pub fn heat_cosine_dg(y: f64) -> f64 {
    let d = 1.0 + y * y;
    (1.0 - y * y) / (d * d)
}

fn heat_sine() -> ProblemSpec {
    ProblemSpec {
        name: BuiltinProblem::HeatSine.name().into(),
        diffusivity: 1.0 / 200.0,
        horizon: 1.0,
        drift: Arc::new(|_x: f64, y: f64| 1.0 - 2.0 * y),
        diffusion: Arc::new(|_x: f64, y: f64| heat_sine_g(y)),
        diffusion_dy: Some(Arc::new(|_x: f64, y: f64| heat_sine_dg(y))),
        initial: Arc::new(|_| 0.0),
        noise: NoiseSpectrum::sine(2.0),
        regularity: Some(Regularity {
            beta: 0.2,
            gamma: 0.75,
            delta: 0.25,
            alpha: 0.75,
            theta: None,
        }),
    }
}

/// Resolves a built-in problem.
pub fn builtin(problem: BuiltinProblem) -> ProblemSpec {
    match problem {
        BuiltinProblem::HeatSine => heat_sine(),
        BuiltinProblem::HeatCosine => ProblemSpec {
            name: problem.name().into(),
            diffusivity: 1.0 / 50.0,
            horizon: 1.0,
            drift: Arc::new(|_x: f64, y: f64| 1.0 - y),
            diffusion: Arc::new(|_x: f64, y: f64| heat_cosine_g(y)),
            // Only the Milstein comparator needs it.
            diffusion_dy: Some(Arc::new(|_x: f64, y: f64| heat_cosine_dg(y))),
            initial: Arc::new(|_| 0.0),
            noise: NoiseSpectrum::cosine(3.0),
            regularity: Some(Regularity {
                beta: 0.2,
                gamma: 1.0,
                delta: 0.5,
                alpha: 2.0 / 3.0,
                theta: None,
            }),
        },
        BuiltinProblem::LinearG => ProblemSpec {
            name: problem.name().into(),
            ..heat_sine()
                .with_diffusion(|_x: f64, y: f64| y, Some(Arc::new(|_x: f64, _y: f64| 1.0)))
        },
        BuiltinProblem::ZeroNoise => ProblemSpec {
            name: problem.name().into(),
            ..heat_sine().with_diffusion(
                |_x: f64, _y: f64| 0.0,
                Some(Arc::new(|_x: f64, _y: f64| 0.0)),
            )
        },
    }
}

/// `w(x_k) = φ(x_k, v(x_k))`.
pub fn apply_pointwise(
    fun: &dyn CoefficientFn,
    v: &PhysicalField,
    basis: &SineBasis,
) -> Result<PhysicalField> {
    if v.len() != basis.n_modes() {
        return Err(Error::LengthMismatch {
            expected: basis.n_modes(),
            actual: v.len(),
        });
    }
    let mut out = vec![0.0; v.len()];
    fun.eval_field(basis.grid(), v.as_slice(), &mut out);
    check_coefficient_output(basis.grid(), v.as_slice(), &out)?;
    Ok(PhysicalField::from_vec_unchecked(out))
}

pub(crate) fn check_coefficient_output(grid: &[f64], input: &[f64], out: &[f64]) -> Result<()> {
    match out.iter().position(|o| !o.is_finite()) {
        Some(k) => Err(Error::NonFiniteCoefficient {
            x: grid[k],
            y: input[k],
        }),
        None => Ok(()),
    }
}

/// Error exponents of the Runge-Kutta scheme for `spec`.
pub fn predicted_rates(spec: &ProblemSpec) -> Result<PredictedRates> {
    let r = spec.regularity.ok_or(Error::MissingRegularity)?;
    Ok(PredictedRates {
        spatial: 2.0 * r.gamma,
        noise: r.alpha,
        temporal: (2.0 * (r.gamma - r.beta)).min(r.gamma),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn heat_sine_values() {
        let p = builtin(BuiltinProblem::HeatSine);
        assert_eq!(p.diffusion.eval(0.3, 0.0), 0.0);
        assert_eq!(p.drift.eval(0.3, 0.0), 1.0);
        assert_eq!(p.diffusion_dy.as_ref().unwrap().eval(0.3, 0.0), 1.0);
        assert_eq!(p.diffusivity, 1.0 / 200.0);
        assert_eq!(p.noise.mu(3), 1.0 / 9.0);
    }

    #[test]
    fn heat_cosine_values() {
        let p = builtin(BuiltinProblem::HeatCosine);
        assert_eq!(p.noise.mu(0), 0.0);
        assert_eq!(p.noise.mu(2), 0.125);
        assert_eq!(p.drift.eval(0.5, 1.0), 0.0);
        assert_eq!(p.diffusion.eval(0.5, 1.0), 0.5);
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let eps = 1e-6;
        for i in -40..=40 {
            let y = i as f64 * 0.25;
            let fd = (heat_sine_g(y + eps) - heat_sine_g(y - eps)) / (2.0 * eps);
            assert!((fd - heat_sine_dg(y)).abs() < 1e-8, "y = {y}");
            let fd = (heat_cosine_g(y + eps) - heat_cosine_g(y - eps)) / (2.0 * eps);
            assert!((fd - heat_cosine_dg(y)).abs() < 1e-8, "y = {y}");
        }
    }

    #[test]
    fn names_round_trip() {
        for p in BuiltinProblem::ALL {
            assert_eq!(p.name().parse::<BuiltinProblem>().unwrap(), p);
            assert_eq!(p.spec().name, p.name());
        }
        assert!(matches!(
            "heat".parse::<BuiltinProblem>(),
            Err(Error::UnknownProblem(_))
        ));
    }

    #[test]
    fn pointwise_application() {
        let basis = SineBasis::new(6, 0.1).unwrap();
        let p = builtin(BuiltinProblem::HeatSine);
        let ones = apply_pointwise(p.drift.as_ref(), &PhysicalField::zeros(6), &basis).unwrap();
        assert!(ones.as_slice().iter().all(|&v| v == 1.0));

        let v = PhysicalField::new(vec![0.5, -1.0, 2.0, 0.0, 3.0, 1.5]).unwrap();
        let id = |_x: f64, y: f64| y;
        assert_eq!(apply_pointwise(&id, &v, &basis).unwrap(), v);
        let zero = |_x: f64, _y: f64| 0.0;
        assert_eq!(
            apply_pointwise(&zero, &v, &basis).unwrap(),
            PhysicalField::zeros(6)
        );

        let bad = |_x: f64, y: f64| 1.0 / y;
        assert!(matches!(
            apply_pointwise(&bad, &v, &basis),
            Err(Error::NonFiniteCoefficient { .. })
        ));
        assert!(apply_pointwise(&id, &PhysicalField::zeros(3), &basis).is_err());
    }

    #[test]
    fn rates() {
        let r = predicted_rates(&builtin(BuiltinProblem::HeatSine)).unwrap();
        assert!((r.temporal - 0.75).abs() < 1e-15);
        assert!((r.spatial - 1.5).abs() < 1e-15);
        let r = predicted_rates(&builtin(BuiltinProblem::HeatCosine)).unwrap();
        // M = N², K = N: min(2γ, 3α, 2·temporal) = 2.
        let overall = r.spatial.min(3.0 * r.noise).min(2.0 * r.temporal);
        assert!((overall - 2.0).abs() < 1e-12);

        let mut p = builtin(BuiltinProblem::HeatSine);
        p.regularity = Some(Regularity::new(0.4, 0.4, 0.25, 0.5, None).unwrap());
        assert_eq!(predicted_rates(&p).unwrap().temporal, 0.0);
        p.regularity = None;
        assert_eq!(predicted_rates(&p), Err(Error::MissingRegularity));
    }

    #[test]
    fn regularity_validation() {
        assert!(Regularity::new(0.2, 0.75, 0.25, 0.75, None).is_ok());
        assert!(Regularity::new(0.2, 0.9, 0.25, 0.75, None).is_err());
        assert!(Regularity::new(0.2, 0.1, 0.25, 0.75, None).is_err());
        assert!(Regularity::new(0.2, 0.5, 0.0, 0.75, None).is_err());
        assert!(Regularity::new(0.2, 0.5, 0.25, 0.0, None).is_err());
    }

    #[test]
    fn g_is_lipschitz_on_samples() {
        // Fit the constant on one sample set, check it on another.
        let fit = |g: fn(f64) -> f64, offset: f64| {
            let mut c: f64 = 0.0;
            for i in 0..400 {
                let y = -10.0 + 0.05 * i as f64 + offset;
                let z = 10.0 - 0.037 * i as f64 - offset;
                if (y - z).abs() > 1e-9 {
                    c = c.max((g(y) - g(z)).abs() / (y - z).abs());
                }
            }
            c
        };
        for g in [heat_sine_g as fn(f64) -> f64, heat_cosine_g] {
            let a = fit(g, 0.0);
            let b = fit(g, 0.013);
            assert!(a.is_finite() && a <= 2.0 * b && b <= 2.0 * a);
        }
    }

    #[test]
    fn evaluation_is_deterministic() {
        let p = builtin(BuiltinProblem::HeatSine);
        for y in [-3.0, 0.1, 7.5] {
            assert_eq!(
                p.diffusion.eval(0.2, y).to_bits(),
                p.diffusion.eval(0.2, y).to_bits()
            );
        }
    }
}
