//! Command-line parsing and dispatch.

use std::io::Write;
use std::path::PathBuf;
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use maxcon_core::simulate::{DecisionRule, ScenarioConfig};
use maxcon_core::{Method, PermutationConfig, QmcConfig, Tail};

use crate::contrasts::load_contrasts;
use crate::input::{parse_input, InputError, InputFormat};
use crate::manifest::{parse_pattern, Manifest};
use crate::screen::{budget_exhausted, screen, write_json, write_tsv, ScreenOptions};
use crate::tables::{cell_seed, jobs_from_manifest, write_bench, write_contours, write_power, write_simulation, PowerGrid, SimJob};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_BUDGET: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "maxcon", version, about = "Contrast tests for genotype response patterns")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Test every marker of a genotype/response table
    Test(TestArgs),
    /// Critical values, power and detection probabilities over a design grid
    Power(PowerArgs),
    /// Simulate scenarios and estimate rejection and detection rates
    Simulate(SimulateArgs),
    /// Time the p-value computations of the timing scenarios
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OnOff {
    On,
    Off,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ReportFormat {
    Tsv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TailArg {
    One,
    Two,
}

impl From<TailArg> for Tail {
    fn from(t: TailArg) -> Self {
        match t {
            TailArg::One => Tail::One,
            TailArg::Two => Tail::Two,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DecisionArg {
    CriticalValue,
    PValue,
}

#[derive(Args, Debug)]
pub struct TestArgs {
    /// Input table
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value = "long-csv")]
    pub input_format: InputFormat,
    /// Comma-separated methods or `all`
    #[arg(long, default_value = "all")]
    pub method: String,
    /// `default` or a contrast file
    #[arg(long, default_value = "default")]
    pub contrasts: String,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    #[arg(long, value_enum, default_value = "one")]
    pub tail: TailArg,
    /// Absolute error target of integrated and permutation p-values
    #[arg(long, default_value_t = 1e-3)]
    pub eps: f64,
    /// Integrand evaluation budget per p-value
    #[arg(long, default_value_t = 1 << 24)]
    pub max_points: usize,
    #[arg(long, default_value_t = 1000)]
    pub nresamp_min: usize,
    #[arg(long, default_value_t = 4_000_000)]
    pub nresamp_max: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Whether input values are raw and need a log transform
    #[arg(long, value_enum, default_value = "on")]
    pub log_transform: OnOff,
    /// Output file, stdout when absent
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "tsv")]
    pub format: ReportFormat,
}

#[derive(Args, Debug)]
pub struct PowerArgs {
    /// Comma-separated minor allele frequencies
    #[arg(long, default_value = "0.25")]
    pub maf: String,
    /// Comma-separated total sample sizes
    #[arg(long, default_value = "100")]
    pub n: String,
    /// Comma-separated effect sizes
    #[arg(long, default_value = "0.5")]
    pub delta: String,
    /// Comma-separated generating patterns (additive, dominant, recessive, valley, null)
    #[arg(long, default_value = "dominant")]
    pub pattern: String,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    #[arg(long, default_value_t = 1.0)]
    pub sigma2: f64,
    #[arg(long, default_value = "default")]
    pub contrasts: String,
    /// Absolute error target of the integrator
    #[arg(long, default_value_t = 1e-4)]
    pub eps: f64,
    /// Monte-Carlo draws for detection probabilities (0 skips them)
    #[arg(long, default_value_t = 1_000_000)]
    pub rtp_draws: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write contour plot data to this file
    #[arg(long)]
    pub contour: Option<PathBuf>,
    /// 1-based contrasts on the contour axes
    #[arg(long, default_value = "1,2")]
    pub contour_axes: String,
    #[arg(long, default_value = "-2,6")]
    pub contour_range: String,
    #[arg(long, default_value_t = 81)]
    pub contour_steps: usize,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    /// `bundled` or a manifest file; overrides the scenario flags
    #[arg(long)]
    pub manifest: Option<String>,
    /// Comma-separated manifest sets to run (all when empty)
    #[arg(long, default_value = "")]
    pub set: String,
    #[arg(long, default_value = "0.25")]
    pub maf: String,
    #[arg(long, default_value = "100")]
    pub n: String,
    #[arg(long, default_value = "null")]
    pub pattern: String,
    #[arg(long, default_value = "0")]
    pub delta: String,
    /// Comma-separated methods or `all`
    #[arg(long, default_value = "mcm,mmcm,kw")]
    pub methods: String,
    #[arg(long, default_value_t = 2000)]
    pub reps: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    #[arg(long, value_enum, default_value = "two")]
    pub tail: TailArg,
    #[arg(long, value_enum, default_value = "critical-value")]
    pub decision: DecisionArg,
    /// Absolute error target of p-values when they are computed
    #[arg(long, default_value_t = 1e-3)]
    pub eps: f64,
    /// Fill in the elapsed_s column (makes output timing dependent)
    #[arg(long)]
    pub timing: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct BenchArgs {
    /// `bundled` or a manifest file with timing entries
    #[arg(long, default_value = "bundled")]
    pub manifest: String,
    #[arg(long, default_value = "pmmcm,mmcm")]
    pub methods: String,
    #[arg(long, default_value_t = 100)]
    pub reps: usize,
    /// Absolute error tolerance of both methods
    #[arg(long, default_value_t = 1e-2)]
    pub eps: f64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Splits a comma-separated list; empty items are dropped.
pub fn parse_list<T: FromStr>(s: &str) -> Result<Vec<T>>
where
    T::Err: std::fmt::Display,
{
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<T>().map_err(|e| anyhow!("bad list item '{t}': {e}")))
        .collect()
}

pub fn parse_methods(s: &str) -> Result<Vec<Method>> {
    if s.trim() == "all" {
        return Ok(Method::ALL.to_vec());
    }
    let mut out = Vec::new();
    for t in s.split(',').map(str::trim).filter(|t| !t.is_empty()) {
        let m = Method::parse(t)?;
        if !out.contains(&m) {
            out.push(m);
        }
    }
    if out.is_empty() {
        bail!("no methods given");
    }
    Ok(out)
}

fn parse_patterns(s: &str) -> Result<Vec<Option<maxcon_core::Pattern>>> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(parse_pattern)
        .collect()
}

fn pair<T: FromStr + Copy>(s: &str) -> Result<(T, T)>
where
    T::Err: std::fmt::Display,
{
    match parse_list::<T>(s)?.as_slice() {
        [a, b] => Ok((*a, *b)),
        _ => bail!("expected two comma-separated values, got '{s}'"),
    }
}

/// Writes to `path`, or stdout when absent. Output is assembled in memory
/// so a failed run leaves no partial file.
fn emit(path: &Option<PathBuf>, f: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> Result<()> {
    let mut buf = Vec::new();
    f(&mut buf)?;
    match path {
        Some(p) => std::fs::write(p, &buf).with_context(|| format!("writing {}", p.display()))?,
        None => std::io::stdout().write_all(&buf)?,
    }
    Ok(())
}

fn cmd_test(a: &TestArgs) -> Result<i32> {
    let snps = parse_input(&a.input, a.input_format)?;
    let contrasts = load_contrasts(&a.contrasts)?;
    contrasts.check_groups(crate::input::GENOTYPES)?;
    let opts = ScreenOptions {
        methods: parse_methods(&a.method)?,
        contrasts,
        alpha: a.alpha,
        tail: a.tail.into(),
        qmc: QmcConfig {
            abs_error_tol: a.eps,
            max_points: a.max_points,
            ..QmcConfig::default()
        },
        perm: PermutationConfig {
            n_resamp_min: a.nresamp_min,
            n_resamp_max: a.nresamp_max,
            eps: a.eps,
            ..PermutationConfig::default()
        },
        seed: a.seed,
        log_transform: a.log_transform == OnOff::On,
    };
    opts.qmc.validate()?;
    opts.perm.validate()?;
    if !(a.alpha > 0.0 && a.alpha < 1.0) {
        bail!("alpha must lie in (0, 1)");
    }
    let rows = screen(&snps, &opts);
    emit(&a.out, |buf| match a.format {
        ReportFormat::Tsv => write_tsv(buf, &rows),
        ReportFormat::Json => write_json(buf, &rows),
    })?;
    Ok(if budget_exhausted(&rows) { EXIT_BUDGET } else { EXIT_OK })
}

fn cmd_power(a: &PowerArgs) -> Result<i32> {
    let grid = PowerGrid {
        mafs: parse_list(&a.maf)?,
        ns: parse_list(&a.n)?,
        patterns: parse_patterns(&a.pattern)?,
        deltas: parse_list(&a.delta)?,
        alpha: a.alpha,
        sigma2: a.sigma2,
        contrasts: load_contrasts(&a.contrasts)?,
        qmc: QmcConfig::with_tol(a.eps),
        rtp_draws: a.rtp_draws,
        seed: a.seed,
    };
    grid.contrasts.check_groups(crate::input::GENOTYPES)?;
    emit(&a.out, |buf| write_power(buf, &grid))?;
    if let Some(path) = &a.contour {
        let (i, j): (usize, usize) = pair(&a.contour_axes)?;
        if i == 0 || j == 0 {
            bail!("contour axes are 1-based");
        }
        let range: (f64, f64) = pair(&a.contour_range)?;
        emit(&Some(path.clone()), |buf| {
            write_contours(buf, &grid, (i - 1, j - 1), range, a.contour_steps)
        })?;
    }
    Ok(EXIT_OK)
}

fn cmd_simulate(a: &SimulateArgs) -> Result<i32> {
    let mut template = ScenarioConfig::new(0.25, 100, None, 0.0);
    template.methods = parse_methods(&a.methods)?;
    template.reps = a.reps;
    template.seed = a.seed;
    template.alpha = a.alpha;
    template.tail = a.tail.into();
    template.decision = match a.decision {
        DecisionArg::CriticalValue => DecisionRule::CriticalValue,
        DecisionArg::PValue => DecisionRule::PValue,
    };
    template.qmc = QmcConfig::with_tol(a.eps);
    template.perm.eps = a.eps;
    let jobs = match &a.manifest {
        Some(spec) => {
            let sets: Vec<String> = parse_list(&a.set)?;
            jobs_from_manifest(&Manifest::load(spec)?.filter_sets(&sets), &template)?
        }
        None => {
            let mut jobs = Vec::new();
            for maf in parse_list::<f64>(&a.maf)? {
                for n in parse_list::<usize>(&a.n)? {
                    for pattern in parse_patterns(&a.pattern)? {
                        for delta in parse_list::<f64>(&a.delta)? {
                            let config = ScenarioConfig {
                                maf,
                                n_total: n,
                                pattern,
                                delta,
                                seed: cell_seed(a.seed, maf, n, pattern, delta),
                                ..template.clone()
                            };
                            jobs.push(SimJob {
                                set: "custom".into(),
                                reference: config.methods.iter().map(|&m| (m, None, None)).collect(),
                                config,
                            });
                        }
                    }
                }
            }
            jobs
        }
    };
    emit(&a.out, |buf| write_simulation(buf, &jobs, a.timing))?;
    Ok(EXIT_OK)
}

fn cmd_bench(a: &BenchArgs) -> Result<i32> {
    let manifest = Manifest::load(&a.manifest)?;
    let scenarios = manifest.timing_scenarios()?;
    let methods = parse_methods(&a.methods)?;
    eprintln!(
        "note: timings depend on the machine; compare ratios between scenarios and methods, \
         not absolute seconds"
    );
    emit(&a.out, |buf| write_bench(buf, &scenarios, &methods, a.reps, a.eps, a.seed, &manifest))?;
    Ok(EXIT_OK)
}

/// Exit code for an error: numerical budget problems give 3, everything
/// else is treated as bad input.
pub fn exit_code(e: &anyhow::Error) -> i32 {
    for cause in e.chain() {
        if let Some(maxcon_core::Error::BudgetExhausted { .. }) = cause.downcast_ref() {
            return EXIT_BUDGET;
        }
    }
    EXIT_INPUT
}

/// Sets up the worker pool from `MAXCON_THREADS` (0 or unset = all cores).
pub fn init_threads() -> Result<()> {
    let n = match std::env::var("MAXCON_THREADS") {
        Ok(s) => s.trim().parse::<usize>().context("MAXCON_THREADS must be a number")?,
        Err(_) => 0,
    };
    // a second initialisation in the same process is harmless
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

pub fn run(cli: &Cli) -> Result<i32> {
    match &cli.command {
        Command::Test(a) => cmd_test(a),
        Command::Power(a) => cmd_power(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Bench(a) => cmd_bench(a),
    }
}

/// Parses `args`, runs the command and reports errors on stderr.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    if let Err(e) = init_threads() {
        eprintln!("error: {e:#}");
        return EXIT_INPUT;
    }
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            let code = match e.downcast_ref::<InputError>() {
                Some(_) => EXIT_INPUT,
                None => exit_code(&e),
            };
            eprintln!("error: {e:#}");
            code
        }
    }
}
