//! Shared fixtures for the criterion benches in `benches/`.

use galerkin_rk::{
    builtin, sample_lattice, BrownianLattice, BuiltinProblem, ProblemSpec, RunConfig, SchemeKind,
    SineBasis,
};

/// Everything one path needs, built once outside the timed loop.
pub struct PathFixture {
    pub spec: ProblemSpec,
    pub cfg: RunConfig,
    pub basis: SineBasis,
    pub lattice: BrownianLattice,
}

/// HeatSine at `(N, N^p, N)` with the scheme's default pairing.
pub fn heat_sine_path(scheme: SchemeKind, n: usize) -> PathFixture {
    let spec = builtin(BuiltinProblem::HeatSine);
    let m = n.pow(scheme.default_step_exponent());
    let cfg = RunConfig::new(spec.horizon, n, m, n, scheme).expect("valid run");
    let basis = SineBasis::new(n, spec.diffusivity).expect("valid basis");
    let lattice = sample_lattice(m, n, cfg.h, 0, 0).expect("valid lattice");
    PathFixture {
        spec,
        cfg,
        basis,
        lattice,
    }
}
