//! Time stepping for the spectral Galerkin discretization.
//!
//! All three schemes form an intermediate grid field
//!
//! ```text
//! ζ_m = y + h f(·, y) + g(·, y) ΔW_m + ½ B(y) ((ΔW_m)² - h Σ_{j≤K} μ_j η_j²)
//! ```
//!
//! from `y = Y_m` on the grid, project it onto the sine modes with one
//! transform and apply a diagonal multiplier:
//!
//! | scheme        | `B(y)`                                  | multiplier        |
//! |---------------|-----------------------------------------|-------------------|
//! | `Euler`       | `0`                                     | `1/(1 + λ_j h)`   |
//! | `Milstein`    | `(∂g/∂y)(·, y) g(·, y)`                 | `e^{-λ_j h}`      |
//! | `RungeKutta`  | `(g(·, y + √h g(·, y)) - g(·, y))/√h`   | `e^{-λ_j h}`      |

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::noise::{compensator_field, BrownianLattice, IncrementSynth};
use crate::problems::{check_coefficient_output, ProblemSpec};
use crate::spectral::{PhysicalField, SineBasis, SpectralField, TransformScratch};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SchemeKind {
    /// Linear implicit Euler.
    Euler,
    Milstein,
    /// Derivative-free Runge-Kutta.
    RungeKutta,
}

impl SchemeKind {
    pub const ALL: [SchemeKind; 3] = [
        SchemeKind::Euler,
        SchemeKind::Milstein,
        SchemeKind::RungeKutta,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SchemeKind::Euler => "euler",
            SchemeKind::Milstein => "milstein",
            SchemeKind::RungeKutta => "runge-kutta",
        }
    }

    /// Time steps as a power of `N` that balances the spatial error on the
    /// first test problem (`M = N³` for Euler, `M = N²` otherwise).
    pub fn default_step_exponent(self) -> u32 {
        match self {
            SchemeKind::Euler => 3,
            SchemeKind::Milstein | SchemeKind::RungeKutta => 2,
        }
    }
}

impl fmt::Display for SchemeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SchemeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "euler" => Ok(SchemeKind::Euler),
            "milstein" => Ok(SchemeKind::Milstein),
            "runge-kutta" | "rk" => Ok(SchemeKind::RungeKutta),
            _ => Err(Error::UnknownScheme(s.to_string())),
        }
    }
}

/// Resolution and scheme of one trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunConfig {
    pub n_modes: usize,
    pub steps: usize,
    pub noise_modes: usize,
    pub scheme: SchemeKind,
    /// `T / M`; zero when `steps == 0`.
    pub h: f64,
}

impl RunConfig {
    pub fn new(
        horizon: f64,
        n_modes: usize,
        steps: usize,
        noise_modes: usize,
        scheme: SchemeKind,
    ) -> Result<Self> {
        if n_modes == 0 || noise_modes == 0 {
            return Err(Error::InvalidParameter("N and K must be positive".into()));
        }
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "horizon {horizon} must be positive"
            )));
        }
        let h = if steps == 0 {
            0.0
        } else {
            horizon / steps as f64
        };
        Ok(Self {
            n_modes,
            steps,
            noise_modes,
            scheme,
            h,
        })
    }

    /// Normal draws one trajectory consumes, `M·K`.
    pub fn rng_draws(&self) -> usize {
        self.steps * self.noise_modes
    }
}

/// Pointwise factor of the derivative-free bilinear operator
/// `GG(v, h)(u, ũ) = factor · u · ũ`.
#[derive(Debug, Clone, PartialEq)]
pub struct GGFactor(pub PhysicalField);

impl GGFactor {
    pub fn values(&self) -> &[f64] {
        self.0.as_slice()
    }
}

fn check_field_len(v: &PhysicalField, basis: &SineBasis) -> Result<()> {
    if v.len() == basis.n_modes() {
        Ok(())
    } else {
        Err(Error::LengthMismatch {
            expected: basis.n_modes(),
            actual: v.len(),
        })
    }
}

/// `(g(x, v + √h g(x, v)) - g(x, v)) / √h` at every grid point.
pub fn gg_factor(
    spec: &ProblemSpec,
    v: &PhysicalField,
    h: f64,
    basis: &SineBasis,
) -> Result<GGFactor> {
    check_field_len(v, basis)?;
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "step size must be positive, got {h}"
        )));
    }
    let n = v.len();
    let sqrt_h = h.sqrt();
    let mut gv = vec![0.0; n];
    spec.diffusion
        .eval_field(basis.grid(), v.as_slice(), &mut gv);
    check_coefficient_output(basis.grid(), v.as_slice(), &gv)?;
    let shifted: Vec<f64> = v
        .as_slice()
        .iter()
        .zip(&gv)
        .map(|(y, g)| y + sqrt_h * g)
        .collect();
    let mut gs = vec![0.0; n];
    spec.diffusion.eval_field(basis.grid(), &shifted, &mut gs);
    check_coefficient_output(basis.grid(), &shifted, &gs)?;
    let factor = gs.iter().zip(&gv).map(|(a, b)| (a - b) / sqrt_h).collect();
    Ok(GGFactor(PhysicalField::new(factor)?))
}

/// `(∂g/∂y)(x, v) g(x, v)` at every grid point.
pub fn milstein_factor(
    spec: &ProblemSpec,
    v: &PhysicalField,
    basis: &SineBasis,
) -> Result<PhysicalField> {
    check_field_len(v, basis)?;
    let dg = spec.diffusion_dy.as_ref().ok_or(Error::MissingDerivative)?;
    let n = v.len();
    let mut gv = vec![0.0; n];
    let mut dgv = vec![0.0; n];
    spec.diffusion
        .eval_field(basis.grid(), v.as_slice(), &mut gv);
    dg.eval_field(basis.grid(), v.as_slice(), &mut dgv);
    check_coefficient_output(basis.grid(), v.as_slice(), &gv)?;
    check_coefficient_output(basis.grid(), v.as_slice(), &dgv)?;
    PhysicalField::new(gv.iter().zip(&dgv).map(|(g, d)| g * d).collect())
}

/// Reusable state for advancing one trajectory in place.
pub struct Stepper<'a> {
    spec: &'a ProblemSpec,
    basis: &'a SineBasis,
    scheme: SchemeKind,
    h: f64,
    sqrt_h: f64,
    multipliers: Vec<f64>,
    y: Vec<f64>,
    fy: Vec<f64>,
    gy: Vec<f64>,
    extra: Vec<f64>,
    zeta: Vec<f64>,
    scratch: TransformScratch,
}

impl<'a> Stepper<'a> {
    pub fn new(spec: &'a ProblemSpec, cfg: &RunConfig, basis: &'a SineBasis) -> Result<Self> {
        if cfg.n_modes != basis.n_modes() {
            return Err(Error::LengthMismatch {
                expected: cfg.n_modes,
                actual: basis.n_modes(),
            });
        }
        if cfg.scheme == SchemeKind::Milstein && spec.diffusion_dy.is_none() {
            return Err(Error::MissingDerivative);
        }
        let multipliers = match cfg.scheme {
            SchemeKind::Euler => basis.resolvent_multipliers(cfg.h)?,
            SchemeKind::Milstein | SchemeKind::RungeKutta => basis.semigroup_multipliers(cfg.h)?,
        };
        let n = basis.n_modes();
        Ok(Self {
            spec,
            basis,
            scheme: cfg.scheme,
            h: cfg.h,
            sqrt_h: cfg.h.sqrt(),
            multipliers,
            y: vec![0.0; n],
            fy: vec![0.0; n],
            gy: vec![0.0; n],
            extra: vec![0.0; n],
            zeta: vec![0.0; n],
            scratch: TransformScratch::default(),
        })
    }

    /// Advances `state` (sine coefficients) by one step with increment `dw`.
    /// `index` is reported if the new state is not finite.
    #[allow(clippy::needless_range_loop)]
    pub fn advance(
        &mut self,
        state: &mut [f64],
        dw: &[f64],
        compensator: &[f64],
        index: usize,
    ) -> Result<()> {
        let grid = self.basis.grid();
        let transform = self.basis.transform();
        let h = self.h;

        transform.apply(
            state,
            &mut self.y,
            std::f64::consts::SQRT_2,
            &mut self.scratch,
        );
        self.spec.drift.eval_field(grid, &self.y, &mut self.fy);
        self.spec.diffusion.eval_field(grid, &self.y, &mut self.gy);

        match self.scheme {
            SchemeKind::Euler => {
                for k in 0..self.y.len() {
                    self.zeta[k] = self.y[k] + h * self.fy[k] + self.gy[k] * dw[k];
                }
            }
            SchemeKind::Milstein => {
                let dg = self
                    .spec
                    .diffusion_dy
                    .as_ref()
                    .ok_or(Error::MissingDerivative)?;
                dg.eval_field(grid, &self.y, &mut self.extra);
                for k in 0..self.y.len() {
                    let bracket = dw[k] * dw[k] - compensator[k];
                    let factor = self.extra[k] * self.gy[k];
                    self.zeta[k] =
                        self.y[k] + h * self.fy[k] + self.gy[k] * dw[k] + 0.5 * factor * bracket;
                }
            }
            SchemeKind::RungeKutta => {
                // The shifted argument is staged in `zeta` before it is overwritten.
                for k in 0..self.y.len() {
                    self.zeta[k] = self.y[k] + self.sqrt_h * self.gy[k];
                }
                self.spec
                    .diffusion
                    .eval_field(grid, &self.zeta, &mut self.extra);
                for k in 0..self.y.len() {
                    let bracket = dw[k] * dw[k] - compensator[k];
                    let factor = (self.extra[k] - self.gy[k]) / self.sqrt_h;
                    self.zeta[k] =
                        self.y[k] + h * self.fy[k] + self.gy[k] * dw[k] + 0.5 * factor * bracket;
                }
            }
        }

        let scale = self.basis.coefficient_scale();
        transform.apply(&self.zeta, state, scale, &mut self.scratch);
        for (c, m) in state.iter_mut().zip(&self.multipliers) {
            *c *= m;
        }
        if state.iter().any(|c| !c.is_finite()) {
            return Err(Error::Overflow { step: index });
        }
        Ok(())
    }
}

/// One step of `cfg.scheme` from `state` given this step's increment and the
/// precomputed compensator.
pub fn step(
    spec: &ProblemSpec,
    cfg: &RunConfig,
    state: &SpectralField,
    dw: &PhysicalField,
    compensator: &PhysicalField,
    basis: &SineBasis,
) -> Result<SpectralField> {
    let n = basis.n_modes();
    for len in [state.len(), dw.len(), compensator.len()] {
        if len != n {
            return Err(Error::LengthMismatch {
                expected: n,
                actual: len,
            });
        }
    }
    let mut stepper = Stepper::new(spec, cfg, basis)?;
    let mut next = state.as_slice().to_vec();
    stepper.advance(&mut next, dw.as_slice(), compensator.as_slice(), 0)?;
    Ok(SpectralField::from_vec_unchecked(next))
}

/// `P_N ξ`.
pub fn initial_state(spec: &ProblemSpec, basis: &SineBasis) -> Result<SpectralField> {
    basis.to_coefficients(&spec.initial_field(basis)?)
}

/// Runs `cfg.steps` steps from `P_N ξ` driven by the first `cfg.noise_modes`
/// columns of `lattice` and returns `Y_M`.
pub fn integrate(
    spec: &ProblemSpec,
    cfg: &RunConfig,
    lattice: &BrownianLattice,
    basis: &SineBasis,
) -> Result<SpectralField> {
    let mut state = initial_state(spec, basis)?.into_vec();
    if cfg.steps == 0 {
        return Ok(SpectralField::from_vec_unchecked(state));
    }
    if lattice.steps() != cfg.steps {
        return Err(Error::InvalidParameter(format!(
            "lattice has {} steps, run needs {}",
            lattice.steps(),
            cfg.steps
        )));
    }
    if lattice.modes() < cfg.noise_modes {
        return Err(Error::TooManyModes {
            requested: cfg.noise_modes,
            available: lattice.modes(),
        });
    }
    if (lattice.h() - cfg.h).abs() > 1e-12 * cfg.h {
        return Err(Error::InvalidParameter(format!(
            "lattice step {} differs from run step {}",
            lattice.h(),
            cfg.h
        )));
    }

    let mut stepper = Stepper::new(spec, cfg, basis)?;
    let synth = IncrementSynth::new(&spec.noise, cfg.noise_modes, basis);
    let compensator = compensator_field(&spec.noise, cfg.noise_modes, cfg.h, basis)?;
    let mut dw = vec![0.0; basis.n_modes()];
    let mut folded = Vec::new();
    let mut scratch = TransformScratch::default();
    for m in 0..cfg.steps {
        synth.synthesize(lattice.row(m), basis, &mut dw, &mut folded, &mut scratch);
        stepper.advance(&mut state, &dw, compensator.as_slice(), m)?;
    }
    Ok(SpectralField::from_vec_unchecked(state))
}
