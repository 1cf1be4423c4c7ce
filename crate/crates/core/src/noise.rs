//! Q-Wiener process simulation.
//!
//! `W_t = Σ_j √μ_j β_t^j η_j` is truncated to its first `K` modes. The
//! Brownian increments `Δβ_m^j` of one path live in a [`BrownianLattice`],
//! generated from a counter-keyed stream so that every entry depends only on
//! `(base_seed, path_id, m, j)`. Coarser time grids are obtained by summing
//! blocks of fine increments and fewer modes by dropping trailing columns, so
//! every resolution of one path sees the same underlying noise.

use std::f64::consts::{PI, SQRT_2};

use rand::RngCore;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::spectral::{PhysicalField, SineBasis, TransformScratch};

/// Eigenfunction family of the covariance operator `Q`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseFamily {
    /// `η_j = √2 sin(jπx)`, shared with the Laplacian.
    SineEigen,
    /// `η_0 = 1` (with `μ_0 = 0`), `η_j = √2 cos(jπx)`.
    CosineEigen,
}

/// Spectrum of `Q` with power-law eigenvalues `μ_j = scale · j^{-decay}`.
///
/// Lattice column `c` always carries mode `j = c + 1`; the constant cosine
/// mode has `μ_0 = 0` and never receives a Brownian motion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpectrum {
    pub family: NoiseFamily,
    pub scale: f64,
    pub decay: f64,
}

impl NoiseSpectrum {
    pub fn new(family: NoiseFamily, scale: f64, decay: f64) -> Result<Self> {
        if !(scale >= 0.0 && scale.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "noise scale {scale} must be non-negative"
            )));
        }
        if scale > 0.0 && decay <= 1.0 {
            return Err(Error::InvalidParameter(format!(
                "decay {decay} does not give a trace-class covariance"
            )));
        }
        Ok(Self {
            family,
            scale,
            decay,
        })
    }

    pub fn sine(decay: f64) -> Self {
        Self {
            family: NoiseFamily::SineEigen,
            scale: 1.0,
            decay,
        }
    }

    pub fn cosine(decay: f64) -> Self {
        Self {
            family: NoiseFamily::CosineEigen,
            scale: 1.0,
            decay,
        }
    }

    pub fn zero(family: NoiseFamily) -> Self {
        Self {
            family,
            scale: 0.0,
            decay: 2.0,
        }
    }

    /// Eigenvalue `μ_j`; `μ_0 = 0`.
    pub fn mu(&self, j: usize) -> f64 {
        if j == 0 || self.scale == 0.0 {
            0.0
        } else {
            self.scale * (j as f64).powf(-self.decay)
        }
    }

    /// Eigenfunction `η_j(x)`.
    pub fn eta(&self, j: usize, x: f64) -> f64 {
        match self.family {
            NoiseFamily::SineEigen => SQRT_2 * (j as f64 * PI * x).sin(),
            NoiseFamily::CosineEigen if j == 0 => 1.0,
            NoiseFamily::CosineEigen => SQRT_2 * (j as f64 * PI * x).cos(),
        }
    }

    /// `sup_{j > k} μ_j`, the largest neglected eigenvalue after keeping `k` modes.
    pub fn tail_sup(&self, k: usize) -> f64 {
        self.mu(k + 1)
    }
}

/// Identifies the random stream a lattice was generated from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct LatticeSeed {
    pub base_seed: u64,
    pub path_id: u64,
}

/// `M × K` table of Brownian increments `Δβ_m^j ~ N(0, h)`, row-major in `m`.
#[derive(Debug, Clone, PartialEq)]
pub struct BrownianLattice {
    steps: usize,
    modes: usize,
    h: f64,
    increments: Vec<f64>,
    seed: LatticeSeed,
}

fn path_rng(seed: LatticeSeed) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.base_seed.to_le_bytes());
    key[8..16].copy_from_slice(&seed.path_id.to_le_bytes());
    ChaCha8Rng::from_seed(key)
}

// Box-Muller (cosine branch only) so every draw consumes exactly two u64 words.
fn standard_normal(rng: &mut ChaCha8Rng) -> f64 {
    const EPS: f64 = 1.0 / (1u64 << 53) as f64;
    let u1 = ((rng.next_u64() >> 11) + 1) as f64 * EPS;
    let u2 = (rng.next_u64() >> 11) as f64 * EPS;
    (-2.0 * u1.ln()).sqrt() * (2.0 * PI * u2).cos()
}

/// Standard normal draw for step `m` and mode column `j`, regenerated in isolation.
pub fn keyed_standard_normal(seed: LatticeSeed, m: usize, j: usize) -> f64 {
    let mut rng = path_rng(seed);
    rng.set_stream(m as u64);
    // Each draw occupies four 32-bit words of the stream.
    rng.set_word_pos(4 * j as u128);
    standard_normal(&mut rng)
}

/// Samples the increment table of one path.
pub fn sample_lattice(
    steps: usize,
    modes: usize,
    h: f64,
    base_seed: u64,
    path_id: u64,
) -> Result<BrownianLattice> {
    if steps == 0 || modes == 0 {
        return Err(Error::InvalidParameter(
            "lattice needs at least one step and one mode".into(),
        ));
    }
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "step size must be positive, got {h}"
        )));
    }
    let seed = LatticeSeed { base_seed, path_id };
    let sd = h.sqrt();
    let mut rng = path_rng(seed);
    let mut increments = Vec::with_capacity(steps * modes);
    for m in 0..steps {
        rng.set_stream(m as u64);
        rng.set_word_pos(0);
        increments.extend((0..modes).map(|_| sd * standard_normal(&mut rng)));
    }
    Ok(BrownianLattice {
        steps,
        modes,
        h,
        increments,
        seed,
    })
}

impl BrownianLattice {
    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn seed(&self) -> LatticeSeed {
        self.seed
    }

    /// Number of independent normal draws the table holds.
    pub fn draws(&self) -> usize {
        self.steps * self.modes
    }

    /// Increments of all modes at step `m`.
    pub fn row(&self, m: usize) -> &[f64] {
        &self.increments[m * self.modes..(m + 1) * self.modes]
    }

    /// `Δβ_m^{j+1}` for column `j`.
    pub fn get(&self, m: usize, j: usize) -> f64 {
        self.increments[m * self.modes + j]
    }

    /// Sums blocks of `factor` consecutive steps; the step size grows by `factor`.
    pub fn coarsen_time(&self, factor: usize) -> Result<BrownianLattice> {
        if factor == 0 || self.steps % factor != 0 {
            return Err(Error::NonDivisorFactor {
                factor,
                steps: self.steps,
            });
        }
        if factor == 1 {
            return Ok(self.clone());
        }
        let steps = self.steps / factor;
        let mut increments = vec![0.0; steps * self.modes];
        for (m, coarse) in increments.chunks_mut(self.modes).enumerate() {
            for fine in m * factor..(m + 1) * factor {
                for (c, f) in coarse.iter_mut().zip(self.row(fine)) {
                    *c += f;
                }
            }
        }
        Ok(BrownianLattice {
            steps,
            modes: self.modes,
            h: self.h * factor as f64,
            increments,
            seed: self.seed,
        })
    }

    /// Keeps the first `modes` columns.
    pub fn truncate_modes(&self, modes: usize) -> Result<BrownianLattice> {
        if modes == 0 || modes > self.modes {
            return Err(Error::TooManyModes {
                requested: modes,
                available: self.modes,
            });
        }
        let increments = (0..self.steps)
            .flat_map(|m| self.row(m)[..modes].iter().copied())
            .collect();
        Ok(BrownianLattice {
            steps: self.steps,
            modes,
            h: self.h,
            increments,
            seed: self.seed,
        })
    }
}

/// Turns a row of Brownian increments into `ΔW_m` on the grid of one basis.
#[derive(Debug, Clone)]
pub struct IncrementSynth {
    modes: usize,
    n: usize,
    kind: SynthKind,
}

#[derive(Debug, Clone)]
enum SynthKind {
    /// `√(2μ_j)` per mode; the sum over sine modes is one DST after folding
    /// modes beyond `N` back onto the grid frequencies.
    Sine { weights: Vec<f64> },
    /// `√μ_j η_j(x_k)`, one row per mode.
    Table { values: Vec<f64> },
}

impl IncrementSynth {
    pub fn new(spectrum: &NoiseSpectrum, modes: usize, basis: &SineBasis) -> Self {
        let n = basis.n_modes();
        let kind = match spectrum.family {
            NoiseFamily::SineEigen => SynthKind::Sine {
                weights: (1..=modes).map(|j| (2.0 * spectrum.mu(j)).sqrt()).collect(),
            },
            NoiseFamily::CosineEigen => SynthKind::Table {
                values: (1..=modes)
                    .flat_map(|j| {
                        let amp = spectrum.mu(j).sqrt();
                        basis.grid().iter().map(move |&x| amp * spectrum.eta(j, x))
                    })
                    .collect(),
            },
        };
        Self { modes, n, kind }
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    /// Writes `Σ_{j≤K} √μ_j Δβ^j η_j(x_k)` into `out`. Only the first `K`
    /// entries of `row` are read.
    pub fn synthesize(
        &self,
        row: &[f64],
        basis: &SineBasis,
        out: &mut [f64],
        folded: &mut Vec<f64>,
        scratch: &mut TransformScratch,
    ) {
        debug_assert!(row.len() >= self.modes);
        debug_assert_eq!(out.len(), self.n);
        match &self.kind {
            SynthKind::Sine { weights } => {
                let n = self.n;
                let period = 2 * (n + 1);
                folded.clear();
                folded.resize(n, 0.0);
                for (idx, (w, db)) in weights.iter().zip(row).enumerate() {
                    // sin(jπk/(N+1)) is 2(N+1)-periodic and odd in j.
                    let r = (idx + 1) % period;
                    if r == 0 || r == n + 1 {
                        continue;
                    } else if r <= n {
                        folded[r - 1] += w * db;
                    } else {
                        folded[period - r - 1] -= w * db;
                    }
                }
                basis.transform().apply(folded, out, 1.0, scratch);
            }
            SynthKind::Table { values } => {
                out.fill(0.0);
                for (db, col) in row[..self.modes].iter().zip(values.chunks(self.n)) {
                    for (o, v) in out.iter_mut().zip(col) {
                        *o += db * v;
                    }
                }
            }
        }
    }
}

/// `ΔW_m` on the grid, using every mode the lattice carries.
pub fn increment_field(
    spectrum: &NoiseSpectrum,
    lattice: &BrownianLattice,
    m: usize,
    basis: &SineBasis,
) -> Result<PhysicalField> {
    if m >= lattice.steps() {
        return Err(Error::StepOutOfRange {
            index: m,
            steps: lattice.steps(),
        });
    }
    let synth = IncrementSynth::new(spectrum, lattice.modes(), basis);
    let mut out = vec![0.0; basis.n_modes()];
    synth.synthesize(
        lattice.row(m),
        basis,
        &mut out,
        &mut Vec::new(),
        &mut TransformScratch::default(),
    );
    Ok(PhysicalField::from_vec_unchecked(out))
}

/// `h Σ_{j≤K} μ_j η_j(x_k)²`, the mean of `ΔW_m(x_k)²`.
pub fn compensator_field(
    spectrum: &NoiseSpectrum,
    modes: usize,
    h: f64,
    basis: &SineBasis,
) -> Result<PhysicalField> {
    if modes == 0 {
        return Err(Error::InvalidParameter(
            "compensator needs at least one mode".into(),
        ));
    }
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "step size must be positive, got {h}"
        )));
    }
    let values = basis
        .grid()
        .iter()
        .map(|&x| {
            h * (1..=modes)
                .map(|j| {
                    let eta = spectrum.eta(j, x);
                    spectrum.mu(j) * eta * eta
                })
                .sum::<f64>()
        })
        .collect();
    Ok(PhysicalField::from_vec_unchecked(values))
}
