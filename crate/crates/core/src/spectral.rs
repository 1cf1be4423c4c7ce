//! Sine eigenbasis of the Dirichlet Laplacian on (0, 1).
//!
//! The operator `A = k ∂²/∂x²` with homogeneous Dirichlet boundary conditions
//! has the orthonormal eigenfunctions `e_j(x) = √2 sin(jπx)` and eigenvalues
//! `-λ_j` with `λ_j = kπ²j²`. A field is carried either as its first `N`
//! coefficients against `e_j` ([`SpectralField`]) or as its values on the
//! interior grid `x_k = k/(N+1)` ([`PhysicalField`]). The two are related by
//! the discrete sine transform pair
//!
//! ```text
//! dst:  y(j) = Σ_k z(k) sin(jπk/(N+1))
//! idst: y(j) = 2/(N+1) Σ_k z(k) sin(jπk/(N+1))
//! ```
//!
//! and `idst` applied to grid values is the composite trapezoidal rule for
//! `√2⟨v, e_j⟩`. Aliasing of that quadrature is not corrected.

use std::f64::consts::{PI, SQRT_2};
use std::fmt;
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

fn check_finite(values: &[f64]) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(index) => Err(Error::NonFinite { index }),
        None => Ok(()),
    }
}

fn check_len(expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(Error::LengthMismatch { expected, actual })
    }
}

/// Coefficients `c_j = ⟨Y, e_j⟩`, `j = 1..N`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField(Vec<f64>);

impl SpectralField {
    pub fn new(coeffs: Vec<f64>) -> Result<Self> {
        check_finite(&coeffs)?;
        Ok(Self(coeffs))
    }

    pub fn zeros(n: usize) -> Self {
        Self(vec![0.0; n])
    }

    /// The coefficient vector of `e_j` (1-based mode index).
    pub fn unit(n: usize, j: usize) -> Self {
        assert!(j >= 1 && j <= n, "mode {j} outside 1..={n}");
        let mut c = vec![0.0; n];
        c[j - 1] = 1.0;
        Self(c)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub(crate) fn from_vec_unchecked(coeffs: Vec<f64>) -> Self {
        Self(coeffs)
    }
}

/// Grid values `v(x_k)`, `k = 1..N`. The zero boundary values are implicit.
#[derive(Debug, Clone, PartialEq)]
pub struct PhysicalField(Vec<f64>);

impl PhysicalField {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        check_finite(&values)?;
        Ok(Self(values))
    }

    pub fn zeros(n: usize) -> Self {
        Self(vec![0.0; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub(crate) fn from_vec_unchecked(values: Vec<f64>) -> Self {
        Self(values)
    }
}

/// Work buffers for [`SineTransform`]; reuse one per thread to avoid
/// allocating on every transform.
#[derive(Debug, Default, Clone)]
pub struct TransformScratch {
    buffer: Vec<Complex<f64>>,
    fft: Vec<Complex<f64>>,
}

/// Fast DST-I of length `N`, computed through an FFT of the odd extension
/// of length `2(N+1)`.
#[derive(Clone)]
pub struct SineTransform {
    n: usize,
    fft: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for SineTransform {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SineTransform").field("n", &self.n).finish()
    }
}

impl SineTransform {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::EmptyInput);
        }
        let fft = FftPlanner::new().plan_fft_forward(2 * (n + 1));
        Ok(Self { n, fft })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Writes `Σ_k input(k) sin(jπk/(N+1))` into `output`, scaled by `scale`.
    pub fn apply(
        &self,
        input: &[f64],
        output: &mut [f64],
        scale: f64,
        scratch: &mut TransformScratch,
    ) {
        let n = self.n;
        debug_assert_eq!(input.len(), n);
        debug_assert_eq!(output.len(), n);
        let len = 2 * (n + 1);
        let buf = &mut scratch.buffer;
        buf.clear();
        buf.resize(len, Complex::new(0.0, 0.0));
        for (k, &z) in input.iter().enumerate() {
            buf[k + 1] = Complex::new(z, 0.0);
            buf[len - k - 1] = Complex::new(-z, 0.0);
        }
        let need = self.fft.get_inplace_scratch_len();
        if scratch.fft.len() < need {
            scratch.fft.resize(need, Complex::new(0.0, 0.0));
        }
        self.fft.process_with_scratch(buf, &mut scratch.fft[..need]);
        // FFT of the odd extension is -2i times the sine sum.
        let factor = -0.5 * scale;
        for (j, out) in output.iter_mut().enumerate() {
            *out = factor * buf[j + 1].im;
        }
    }

    fn transform(&self, z: &[f64], scale: f64) -> Result<Vec<f64>> {
        check_len(self.n, z.len())?;
        let mut out = vec![0.0; self.n];
        self.apply(z, &mut out, scale, &mut TransformScratch::default());
        Ok(out)
    }
}

/// `y(j) = Σ_{k=1..N} z(k) sin(jπk/(N+1))`.
pub fn dst(z: &[f64]) -> Result<Vec<f64>> {
    SineTransform::new(z.len())?.transform(z, 1.0)
}

/// `y(j) = 2/(N+1) Σ_{k=1..N} z(k) sin(jπk/(N+1))`, the inverse of [`dst`].
pub fn idst(z: &[f64]) -> Result<Vec<f64>> {
    let n = z.len();
    SineTransform::new(n)?.transform(z, 2.0 / (n as f64 + 1.0))
}

/// Spatial discretization with `N` sine modes and diffusivity `k`.
#[derive(Clone)]
pub struct SineBasis {
    diffusivity: f64,
    grid: Vec<f64>,
    eigenvalues: Vec<f64>,
    transform: SineTransform,
}

impl fmt::Debug for SineBasis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SineBasis")
            .field("n_modes", &self.n_modes())
            .field("diffusivity", &self.diffusivity)
            .finish()
    }
}

impl PartialEq for SineBasis {
    fn eq(&self, other: &Self) -> bool {
        self.n_modes() == other.n_modes() && self.diffusivity == other.diffusivity
    }
}

impl SineBasis {
    pub fn new(n_modes: usize, diffusivity: f64) -> Result<Self> {
        if n_modes == 0 {
            return Err(Error::InvalidParameter("n_modes must be positive".into()));
        }
        if !(diffusivity > 0.0 && diffusivity.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "diffusivity must be positive, got {diffusivity}"
            )));
        }
        let spacing = 1.0 / (n_modes as f64 + 1.0);
        let grid = (1..=n_modes).map(|k| k as f64 * spacing).collect();
        let eigenvalues = (1..=n_modes)
            .map(|j| diffusivity * PI * PI * (j * j) as f64)
            .collect();
        Ok(Self {
            diffusivity,
            grid,
            eigenvalues,
            transform: SineTransform::new(n_modes)?,
        })
    }

    pub fn n_modes(&self) -> usize {
        self.grid.len()
    }

    pub fn diffusivity(&self) -> f64 {
        self.diffusivity
    }

    /// Interior grid points `x_k = k/(N+1)`.
    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    /// `λ_j = kπ²j²`.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn transform(&self) -> &SineTransform {
        &self.transform
    }

    /// `e_j(x) = √2 sin(jπx)`.
    pub fn eigenfunction(j: usize, x: f64) -> f64 {
        SQRT_2 * (j as f64 * PI * x).sin()
    }

    pub fn to_physical(&self, c: &SpectralField) -> Result<PhysicalField> {
        check_len(self.n_modes(), c.len())?;
        let mut out = vec![0.0; self.n_modes()];
        self.transform.apply(
            c.as_slice(),
            &mut out,
            SQRT_2,
            &mut TransformScratch::default(),
        );
        Ok(PhysicalField(out))
    }

    /// Trapezoidal approximation of `⟨v, e_j⟩`, i.e. `idst(v)/√2`.
    pub fn to_coefficients(&self, v: &PhysicalField) -> Result<SpectralField> {
        check_len(self.n_modes(), v.len())?;
        let mut out = vec![0.0; self.n_modes()];
        self.transform.apply(
            v.as_slice(),
            &mut out,
            self.coefficient_scale(),
            &mut TransformScratch::default(),
        );
        Ok(SpectralField(out))
    }

    /// Scale turning a raw sine sum of grid values into coefficients.
    pub(crate) fn coefficient_scale(&self) -> f64 {
        SQRT_2 / (self.n_modes() as f64 + 1.0)
    }

    /// `(e^{-λ_j h})_j`.
    pub fn semigroup_multipliers(&self, h: f64) -> Result<Vec<f64>> {
        check_step(h)?;
        Ok(self.eigenvalues.iter().map(|l| (-l * h).exp()).collect())
    }

    /// `(1/(1 + λ_j h))_j`, the diagonal of `(I - hA)^{-1}`.
    pub fn resolvent_multipliers(&self, h: f64) -> Result<Vec<f64>> {
        check_step(h)?;
        Ok(self
            .eigenvalues
            .iter()
            .map(|l| 1.0 / (1.0 + l * h))
            .collect())
    }

    /// Projects (truncates) or zero-pads `c` from `self` onto `to`.
    pub fn resample(&self, c: &SpectralField, to: &SineBasis) -> Result<SpectralField> {
        if self.diffusivity != to.diffusivity {
            return Err(Error::DiffusivityMismatch {
                from: self.diffusivity,
                to: to.diffusivity,
            });
        }
        check_len(self.n_modes(), c.len())?;
        let mut out = vec![0.0; to.n_modes()];
        let keep = out.len().min(c.len());
        out[..keep].copy_from_slice(&c.as_slice()[..keep]);
        Ok(SpectralField(out))
    }
}

fn check_step(h: f64) -> Result<()> {
    if h > 0.0 && h.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "step size must be positive, got {h}"
        )))
    }
}

/// `‖c‖_H` for a field in the span of `e_1..e_N`: the ℓ² norm of its coefficients.
pub fn h_norm(c: &SpectralField) -> f64 {
    c.as_slice().iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Grid quadrature of the L² norm, `sqrt(Σ_k v(x_k)² / (N+1))`.
pub fn grid_norm(v: &PhysicalField) -> f64 {
    let n = v.len() as f64;
    (v.as_slice().iter().map(|x| x * x).sum::<f64>() / (n + 1.0)).sqrt()
}
