//! Command-line front end for the `galerkin-rk` solvers.
//!
//! [`parse_args`] turns an argument vector into a [`CliConfig`] and
//! [`execute`] runs it, writing delimited text to stdout or `--out`.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use galerkin_rk::{
    check_gg_assumption, compare_schemes, initial_state, integrate, predicted_slope, runtime_table,
    sample_lattice, strong_error, BuiltinProblem, ComparisonReport, ErrorReport, GgCheck,
    LevelPlan, RunConfig, RuntimeRow, SchemeKind, SineBasis,
};

/// Exit status for a successful run.
pub const EXIT_OK: i32 = 0;
/// Exit status for I/O and numerical failures.
pub const EXIT_RUNTIME: i32 = 1;
/// Exit status for malformed or inconsistent arguments.
pub const EXIT_USAGE: i32 = 2;
/// Exit status when `check` finds an unstable constant.
pub const EXIT_CHECK_FAILED: i32 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Integrate one path and print the terminal field on the grid.
    Run,
    /// Strong error of one scheme over a ladder of levels.
    Convergence,
    /// Strong errors of all three schemes on common noise.
    Compare,
    /// Probe the Lipschitz and remainder bounds of the bilinear factor.
    Check,
    /// Median runtime per path for each scheme.
    Bench,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Tsv,
}

impl Format {
    fn separator(self) -> char {
        match self {
            Format::Csv => ',',
            Format::Tsv => '\t',
        }
    }
}

/// How the number of time steps follows from `N`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Pairing {
    #[value(name = "m=n2")]
    Square,
    #[value(name = "m=n3")]
    Cube,
    #[value(name = "m=n4")]
    Quartic,
}

impl Pairing {
    pub fn exponent(self) -> u32 {
        match self {
            Pairing::Square => 2,
            Pairing::Cube => 3,
            Pairing::Quartic => 4,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "galerkin-rk",
    version,
    about = "Spectral Galerkin solvers for 1-D parabolic SPDEs"
)]
#[command(subcommand_required = true, arg_required_else_help = true)]
struct Args {
    #[command(subcommand)]
    command: Command,

    /// Built-in problem: heat-sine, heat-cosine, linear-g or zero-noise.
    #[arg(long, global = true, default_value = "heat-sine")]
    problem: BuiltinProblem,

    /// Scheme: euler, milstein or runge-kutta (alias rk).
    #[arg(long, global = true, default_value = "runge-kutta")]
    scheme: SchemeKind,

    /// Galerkin modes (run: 16, check: 32).
    #[arg(long, global = true)]
    n: Option<usize>,

    /// Time steps for `run` (default from --pairing).
    #[arg(long, global = true)]
    m: Option<usize>,

    /// Noise modes (run: N, check: 16).
    #[arg(long, global = true)]
    k: Option<usize>,

    /// Step pairing; defaults to m=n3 for euler and m=n2 otherwise.
    #[arg(long, global = true)]
    pairing: Option<Pairing>,

    /// Comma-separated level sizes N, ascending. May be empty.
    #[arg(long, global = true, default_value = "4,8,16,32", value_parser = parse_levels)]
    levels: Levels,

    /// Reference modes (default: twice the largest level).
    #[arg(long = "ref-n", global = true)]
    ref_n: Option<usize>,

    /// Monte-Carlo paths.
    #[arg(long, global = true, default_value_t = 100)]
    paths: usize,

    /// Base seed for the noise lattice.
    #[arg(long, global = true, env = "SPDE_SEED", default_value_t = 42)]
    seed: u64,

    /// Output file (default: stdout).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,

    /// Worker threads for the path loop (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Fill the `seconds` column of convergence output.
    #[arg(long, global = true)]
    timing: bool,

    /// Random field pairs for `check`.
    #[arg(long, global = true, default_value_t = 50)]
    trials: usize,

    /// Repetitions per timing in `bench`.
    #[arg(long, global = true, default_value_t = 5)]
    repeats: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct Levels(Vec<usize>);

fn parse_levels(s: &str) -> Result<Levels, String> {
    let s = s.trim();
    if s.is_empty() {
        return Ok(Levels(Vec::new()));
    }
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<usize>()
                .map_err(|e| format!("bad level `{t}`: {e}"))
        })
        .collect::<Result<Vec<_>, _>>()
        .map(Levels)
}

/// Fully resolved command-line settings.
#[derive(Debug, Clone, PartialEq)]
pub struct CliConfig {
    pub command: Command,
    pub problem: BuiltinProblem,
    pub scheme: SchemeKind,
    pub n: Option<usize>,
    pub m: Option<usize>,
    pub k: Option<usize>,
    pub pairing: Option<Pairing>,
    pub levels: Vec<usize>,
    pub ref_n: Option<usize>,
    pub paths: usize,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub format: Format,
    pub threads: Option<usize>,
    pub timing: bool,
    pub trials: usize,
    pub repeats: usize,
}

/// Parses `argv` (including the program name).
///
/// Help and version requests come back as `Err` too; `clap::Error::exit`
/// prints them and picks the right status.
pub fn parse_args<I, T>(argv: I) -> Result<CliConfig, clap::Error>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let a = Args::try_parse_from(argv)?;
    Ok(CliConfig {
        command: a.command,
        problem: a.problem,
        scheme: a.scheme,
        n: a.n,
        m: a.m,
        k: a.k,
        pairing: a.pairing,
        levels: a.levels.0,
        ref_n: a.ref_n,
        paths: a.paths,
        seed: a.seed,
        out: a.out,
        format: a.format,
        threads: a.threads,
        timing: a.timing,
        trials: a.trials,
        repeats: a.repeats,
    })
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Solver(galerkin_rk::Error),
    #[error(
        "bound check failed (lipschitz stable: {lipschitz_ok}, remainder stable: {remainder_ok})"
    )]
    CheckFailed {
        lipschitz_ok: bool,
        remainder_ok: bool,
    },
}

impl From<galerkin_rk::Error> for CliError {
    fn from(e: galerkin_rk::Error) -> Self {
        use galerkin_rk::Error as E;
        match e {
            E::InvalidPlan(_)
            | E::InvalidParameter(_)
            | E::UnknownProblem(_)
            | E::UnknownScheme(_)
            | E::MissingDerivative
            | E::TooManyModes { .. }
            | E::NonDivisorFactor { .. } => CliError::Usage(e.to_string()),
            other => CliError::Solver(other),
        }
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Io(_) | CliError::Solver(_) => EXIT_RUNTIME,
            CliError::CheckFailed { .. } => EXIT_CHECK_FAILED,
        }
    }
}

impl CliConfig {
    /// Steps-per-mode exponent from `--pairing`, else the scheme default.
    pub fn step_exponent(&self) -> u32 {
        self.pairing
            .map(Pairing::exponent)
            .unwrap_or_else(|| self.scheme.default_step_exponent())
    }

    /// Level ladder for `convergence` and `compare`.
    pub fn level_plan(&self) -> Result<LevelPlan, CliError> {
        if self.levels.windows(2).any(|w| w[0] >= w[1]) {
            return Err(CliError::Usage(
                "--levels must be strictly increasing".into(),
            ));
        }
        let max = self.levels.iter().copied().max().unwrap_or(1);
        let ref_n = self.ref_n.unwrap_or(2 * max);
        let exponent = self.step_exponent();
        let too_big = self
            .levels
            .iter()
            .any(|&n| n.checked_pow(exponent).is_none())
            || ref_n.checked_mul(ref_n).is_none();
        if too_big {
            return Err(CliError::Usage(
                "level sizes overflow the step count".into(),
            ));
        }
        let plan = LevelPlan::paired(&self.levels, exponent, ref_n, self.paths, self.seed);
        plan.validate()?;
        Ok(plan)
    }

    /// `(N, M, K)` for `run`.
    pub fn run_triple(&self) -> Result<(usize, usize, usize), CliError> {
        let n = self.n.unwrap_or(16);
        let m = match self.m {
            Some(m) => m,
            None => n
                .checked_pow(self.step_exponent())
                .ok_or_else(|| CliError::Usage("N^p overflows".into()))?,
        };
        let k = self.k.unwrap_or(n);
        if n == 0 || k == 0 {
            return Err(CliError::Usage("--n and --k must be positive".into()));
        }
        Ok((n, m, k))
    }

    /// `(N, K)` for `check`.
    pub fn check_sizes(&self) -> Result<(usize, usize), CliError> {
        let n = self.n.unwrap_or(32);
        let k = self.k.unwrap_or(16.min(n));
        if n == 0 || k == 0 || k > n {
            return Err(CliError::Usage(format!(
                "check needs 1 <= K <= N, got N={n}, K={k}"
            )));
        }
        Ok((n, k))
    }
}

/// Runs `cfg`, writing to `--out` or stdout.
pub fn execute(cfg: &CliConfig) -> Result<(), CliError> {
    match cfg.threads {
        Some(0) => Err(CliError::Usage("--threads must be positive".into())),
        Some(t) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build()
                .map_err(|e| CliError::Usage(e.to_string()))?;
            pool.install(|| execute_inner(cfg))
        }
        None => execute_inner(cfg),
    }
}

fn execute_inner(cfg: &CliConfig) -> Result<(), CliError> {
    match cfg.out.as_ref() {
        Some(path) => {
            let mut w = BufWriter::new(File::create(path)?);
            execute_to(cfg, &mut w)?;
            w.flush()?;
            Ok(())
        }
        None => {
            let stdout = io::stdout();
            let mut w = BufWriter::new(stdout.lock());
            execute_to(cfg, &mut w)?;
            w.flush()?;
            Ok(())
        }
    }
}

/// Runs `cfg` and writes its output to `w`, ignoring `--out`.
pub fn execute_to<W: Write>(cfg: &CliConfig, w: &mut W) -> Result<(), CliError> {
    let spec = cfg.problem.spec();
    match cfg.command {
        Command::Run => {
            let (n, m, k) = cfg.run_triple()?;
            let basis = SineBasis::new(n, spec.diffusivity)?;
            let run = RunConfig::new(spec.horizon, n, m, k, cfg.scheme)?;
            let terminal = if m == 0 {
                initial_state(&spec, &basis)?
            } else {
                let lattice = sample_lattice(m, k, run.h, cfg.seed, 0)?;
                integrate(&spec, &run, &lattice, &basis)?
            };
            let field = basis.to_physical(&terminal)?;
            emit_field(w, cfg.format, basis.grid(), field.as_slice())?;
        }
        Command::Convergence => {
            let report = if cfg.levels.is_empty() {
                empty_report(cfg)
            } else {
                let plan = cfg.level_plan()?;
                let mut report = strong_error(&spec, cfg.scheme, &plan)?;
                report.predicted_slope = predicted_slope(&spec, cfg.scheme, cfg.step_exponent());
                report
            };
            emit_report(w, &report, cfg.format, cfg.timing)?;
        }
        Command::Compare => {
            let report = if cfg.levels.is_empty() {
                ComparisonReport {
                    problem: spec.name.clone(),
                    paths: cfg.paths,
                    base_seed: cfg.seed,
                    rows: Vec::new(),
                }
            } else {
                compare_schemes(&spec, &cfg.level_plan()?)?
            };
            emit_comparison(w, &report, cfg.format)?;
        }
        Command::Check => {
            let (n, k) = cfg.check_sizes()?;
            let basis = SineBasis::new(n, spec.diffusivity)?;
            let check = check_gg_assumption(&spec, k, &basis, cfg.trials, cfg.seed)?;
            emit_check(w, &check, cfg.format)?;
            w.flush()?;
            if !check.passed() {
                return Err(CliError::CheckFailed {
                    lipschitz_ok: check.lipschitz_ok,
                    remainder_ok: check.remainder_ok,
                });
            }
        }
        Command::Bench => {
            if cfg.levels.contains(&0) {
                return Err(CliError::Usage("level sizes must be positive".into()));
            }
            let rows = runtime_table(&spec, &cfg.levels, cfg.repeats)?;
            emit_runtime(w, cfg.problem.name(), &rows, cfg.format)?;
        }
    }
    Ok(())
}

fn empty_report(cfg: &CliConfig) -> ErrorReport {
    ErrorReport {
        problem: cfg.problem.name().to_string(),
        scheme: cfg.scheme,
        paths: cfg.paths,
        base_seed: cfg.seed,
        levels: Vec::new(),
        fitted_slope: None,
        slope_stderr: None,
        predicted_slope: None,
    }
}

/// Fixed 17-significant-digit scientific notation; `-0` prints as `0`.
fn num(x: f64) -> String {
    format!("{:.16e}", x + 0.0)
}

fn opt_num(x: Option<f64>) -> String {
    x.map(num).unwrap_or_else(|| "nan".to_string())
}

fn write_row<W: Write>(w: &mut W, format: Format, cells: &[String]) -> io::Result<()> {
    let sep = format.separator().to_string();
    writeln!(w, "{}", cells.join(&sep))
}

/// Header for [`emit_report`].
pub const REPORT_HEADER: [&str; 11] = [
    "problem",
    "scheme",
    "N",
    "M",
    "K",
    "paths",
    "seed",
    "rms_error",
    "mc_stderr",
    "rng_draws",
    "seconds",
];

/// One row per level, then `# fitted_slope=` and `# predicted_slope=` footers.
/// A report without levels produces the header alone.
pub fn emit_report<W: Write>(
    w: &mut W,
    report: &ErrorReport,
    format: Format,
    timing: bool,
) -> io::Result<()> {
    write_row(w, format, &REPORT_HEADER.map(String::from))?;
    if report.levels.is_empty() {
        return Ok(());
    }
    for l in &report.levels {
        write_row(
            w,
            format,
            &[
                report.problem.clone(),
                report.scheme.name().to_string(),
                l.level.n.to_string(),
                l.level.m.to_string(),
                l.level.k.to_string(),
                report.paths.to_string(),
                report.base_seed.to_string(),
                num(l.rms_error),
                num(l.mc_standard_error),
                l.rng_draws.to_string(),
                if timing {
                    num(l.seconds)
                } else {
                    String::new()
                },
            ],
        )?;
    }
    writeln!(w, "# fitted_slope={}", opt_num(report.fitted_slope))?;
    writeln!(w, "# predicted_slope={}", opt_num(report.predicted_slope))
}

pub fn emit_comparison<W: Write>(
    w: &mut W,
    report: &ComparisonReport,
    format: Format,
) -> io::Result<()> {
    let header = [
        "problem",
        "N",
        "M",
        "K",
        "paths",
        "seed",
        "err_rk",
        "err_mil",
        "err_euler",
        "rk_mil_distance",
    ];
    write_row(w, format, &header.map(String::from))?;
    if report.rows.is_empty() {
        return Ok(());
    }
    for r in &report.rows {
        write_row(
            w,
            format,
            &[
                report.problem.clone(),
                r.level.n.to_string(),
                r.level.m.to_string(),
                r.level.k.to_string(),
                report.paths.to_string(),
                report.base_seed.to_string(),
                num(r.err_rk),
                num(r.err_mil),
                num(r.err_euler),
                num(r.rk_mil_distance),
            ],
        )?;
    }
    writeln!(w, "# max_relative_gap={}", num(report.max_relative_gap()))?;
    for scheme in [
        SchemeKind::RungeKutta,
        SchemeKind::Milstein,
        SchemeKind::Euler,
    ] {
        let slope = report.slope(scheme).ok().map(|(s, _)| s);
        writeln!(w, "# fitted_slope_{}={}", scheme.name(), opt_num(slope))?;
    }
    Ok(())
}

pub fn emit_check<W: Write>(w: &mut W, check: &GgCheck, format: Format) -> io::Result<()> {
    write_row(
        w,
        format,
        &["h", "lipschitz", "remainder"].map(String::from),
    )?;
    for ((h, l), r) in check
        .steps
        .iter()
        .zip(&check.lipschitz)
        .zip(&check.remainder)
    {
        write_row(w, format, &[num(*h), num(*l), num(*r)])?;
    }
    writeln!(w, "# lipschitz_ok={}", check.lipschitz_ok)?;
    writeln!(w, "# remainder_ok={}", check.remainder_ok)?;
    writeln!(w, "# lipschitz_c0={}", num(check.lipschitz_c0()))?;
    writeln!(w, "# remainder_c0={}", num(check.remainder_c0()))
}

pub fn emit_runtime<W: Write>(
    w: &mut W,
    problem: &str,
    rows: &[RuntimeRow],
    format: Format,
) -> io::Result<()> {
    let header = ["problem", "scheme", "N", "M", "K", "rng_draws", "seconds"];
    write_row(w, format, &header.map(String::from))?;
    for r in rows {
        write_row(
            w,
            format,
            &[
                problem.to_string(),
                r.scheme.name().to_string(),
                r.level.n.to_string(),
                r.level.m.to_string(),
                r.level.k.to_string(),
                r.rng_draws.to_string(),
                num(r.median_seconds),
            ],
        )?;
    }
    Ok(())
}

/// `x,value` rows for the grid including both boundary zeros.
pub fn emit_field<W: Write>(
    w: &mut W,
    format: Format,
    grid: &[f64],
    values: &[f64],
) -> io::Result<()> {
    write_row(w, format, &["x", "value"].map(String::from))?;
    write_row(w, format, &[num(0.0), num(0.0)])?;
    for (x, v) in grid.iter().zip(values) {
        write_row(w, format, &[num(*x), num(*v)])?;
    }
    write_row(w, format, &[num(1.0), num(0.0)])
}

/// Exit status for `check` results.
pub fn check_exit_code(check: &GgCheck) -> i32 {
    if check.passed() {
        EXIT_OK
    } else {
        EXIT_CHECK_FAILED
    }
}
