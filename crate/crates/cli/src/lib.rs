//! Command-line front end. [`execute`] runs one invocation and returns the
//! process exit code: 0 on pass, 2 when a verdict fails, 1 on usage, I/O or
//! configuration errors.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

mod commands;
pub mod ini;
pub mod run_config;

pub const THREADS_ENV: &str = "ENTROREACT_THREADS";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{}", io_message(path, source))]
    Io { path: PathBuf, source: std::io::Error },
    #[error("config: {0}")]
    Config(String),
    #[error("{context}: {source}")]
    Core {
        context: String,
        source: entroreact::Error,
    },
    #[error("verdict failed: {}", .0.join("; "))]
    Verdict(Vec<String>),
}

fn io_message(path: &Path, e: &std::io::Error) -> String {
    if e.kind() == std::io::ErrorKind::NotFound {
        format!("file not found: {}", path.display())
    } else {
        format!("{}: {e}", path.display())
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Verdict(_) => 2,
            _ => 1,
        }
    }

    pub(crate) fn core(context: impl Into<String>) -> impl FnOnce(entroreact::Error) -> CliError {
        let context = context.into();
        move |source| CliError::Core { context, source }
    }
}

pub(crate) fn read_file(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub(crate) fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    std::fs::write(path, bytes).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Comma-separated finite numbers.
pub fn parse_list(text: &str) -> Result<Vec<f64>, String> {
    let items: Vec<&str> = text.split(',').map(str::trim).collect();
    if items.iter().any(|s| s.is_empty()) {
        return Err(format!("expected comma-separated numbers, got `{text}`"));
    }
    items
        .iter()
        .map(|s| {
            s.parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| format!("`{s}` is not a finite number"))
        })
        .collect()
}

/// Shortest round-trip form, used to echo user-supplied numbers.
pub(crate) fn tuple(values: &[f64]) -> String {
    let v: Vec<String> = values.iter().map(|x| format!("{x}")).collect();
    format!("({})", v.join(","))
}

/// 17 significant digits.
pub(crate) fn tuple17(values: &[f64]) -> String {
    let v: Vec<String> = values.iter().map(|x| entroreact::grid::fmt_num(*x)).collect();
    format!("({})", v.join(", "))
}

#[derive(Debug, Parser)]
#[command(name = "entroreact", version, about = "Reaction-diffusion networks: analysis, simulation and inequality checks")]
struct Cli {
    /// Worker threads for the data-parallel kernels (0 = all cores).
    /// Falls back to ENTROREACT_THREADS, then 1.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Conservation laws, equilibria, boundary equilibria and condition verdicts.
    Analyze(AnalyzeArgs),
    /// Run a configured reaction-diffusion simulation.
    Simulate(SimulateArgs),
    /// Sample the quasi-positivity, entropy and growth conditions.
    VerifyConditions(ConditionArgs),
    /// Evaluate the truncated Gagliardo-Nirenberg chain on random fields.
    VerifyGn(GnArgs),
    /// Fit decay and growth laws to a diagnostics CSV.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
struct SamplingArgs {
    /// Spatial dimension for the growth condition.
    #[arg(long, default_value_t = 1)]
    dim: usize,
    /// Interior samples, and samples per boundary face.
    #[arg(long, default_value_t = 10_000)]
    samples: usize,
    /// Samples are drawn from (0, u_max]^N.
    #[arg(long, default_value_t = 10.0)]
    u_max: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Args)]
struct AnalyzeArgs {
    network: PathBuf,
    /// Conserved totals selecting a compatibility class, e.g. `2,7`.
    #[arg(long, allow_hyphen_values = true)]
    totals: Option<String>,
    #[command(flatten)]
    sampling: SamplingArgs,
    /// Write `species,u_inf,mu` for the equilibrium found.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    config: PathBuf,
    /// Stop at the first accepted step with t >= this time and checkpoint.
    #[arg(long)]
    halt_at: Option<f64>,
    /// Continue from a checkpoint, appending to the diagnostics CSV.
    #[arg(long)]
    resume: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ConditionArgs {
    network: PathBuf,
    /// `auto` (−log of the equilibrium), `0`, or one value per species.
    #[arg(long, default_value = "auto", allow_hyphen_values = true)]
    mu: String,
    /// Class used by `--mu auto`; defaults to the class of the all-ones state.
    #[arg(long, allow_hyphen_values = true)]
    totals: Option<String>,
    #[command(flatten)]
    sampling: SamplingArgs,
}

#[derive(Debug, Args)]
struct GnArgs {
    #[arg(long, default_value_t = 1)]
    dim: usize,
    #[arg(long, default_value_t = 1000)]
    samples: usize,
    /// Largest wave number and number of terms per field.
    #[arg(long, default_value_t = 8)]
    modes: usize,
    /// Term amplitudes are uniform in [0, amp].
    #[arg(long, default_value_t = 10.0)]
    amp: f64,
    /// Truncation level N (> 1).
    #[arg(long, default_value_t = 5.0)]
    threshold: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Cells per side; 256 in one dimension and 64 in two by default.
    #[arg(long)]
    cells: Option<usize>,
    /// Write the CSV here instead of standard output.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ReportArgs {
    diagnostics: PathBuf,
    /// Fit C exp(−λ t) to the summed distance to equilibrium.
    #[arg(long)]
    fit_decay: bool,
    /// Fit window `t0,t1`; the last 80% of records by default.
    #[arg(long, allow_hyphen_values = true)]
    window: Option<String>,
    /// Horizons for the sup-norm growth fit, e.g. `2.5,5,10,20`.
    #[arg(long)]
    fit_growth: Option<String>,
    /// Smallest acceptable R² of the decay fit.
    #[arg(long, default_value_t = 0.995, allow_hyphen_values = true)]
    min_r2: f64,
    /// Fail when the fitted growth degree reaches this value.
    #[arg(long, allow_hyphen_values = true)]
    max_degree: Option<f64>,
}

fn thread_count(flag: Option<usize>, env: Option<OsString>) -> Result<usize, CliError> {
    if let Some(n) = flag {
        return Ok(n);
    }
    match env {
        None => Ok(1),
        Some(v) => v
            .to_str()
            .and_then(|s| s.trim().parse::<usize>().ok())
            .ok_or_else(|| CliError::Usage(format!("{THREADS_ENV} must be a nonnegative integer, got {v:?}"))),
    }
}

/// Runs one invocation, writing reports to `out` and diagnostics to `err`.
pub fn execute<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{text}");
                    0
                }
                _ => {
                    let _ = write!(err, "{text}");
                    1
                }
            };
        }
    };
    let threads = match thread_count(cli.threads, std::env::var_os(THREADS_ENV)) {
        Ok(n) => n,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return 1;
        }
    };
    let (result, stdout, stderr) = entroreact::par::with_threads(threads, move || {
        let mut o = Vec::new();
        let mut e = Vec::new();
        let r = dispatch(cli.command, &mut o, &mut e);
        (r, o, e)
    });
    let _ = out.write_all(&stdout);
    let _ = err.write_all(&stderr);
    match result {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(command: Command, out: &mut Vec<u8>, err: &mut Vec<u8>) -> Result<(), CliError> {
    match command {
        Command::Analyze(a) => commands::analyze(
            &a.network,
            a.totals.as_deref(),
            &a.sampling.plan(),
            a.sampling.dim,
            a.output.as_deref(),
            out,
        ),
        Command::Simulate(a) => commands::simulate(&a.config, a.halt_at, a.resume.as_deref(), out),
        Command::VerifyConditions(a) => commands::verify_conditions(
            &a.network,
            &a.mu,
            a.totals.as_deref(),
            &a.sampling.plan(),
            a.sampling.dim,
            out,
        ),
        Command::VerifyGn(a) => commands::verify_gn(
            &commands::GnOptions {
                dim: a.dim,
                samples: a.samples,
                modes: a.modes,
                amp: a.amp,
                threshold: a.threshold,
                seed: a.seed,
                cells: a.cells,
            },
            a.output.as_deref(),
            out,
            err,
        ),
        Command::Report(a) => commands::report(
            &a.diagnostics,
            &commands::ReportOptions {
                fit_decay: a.fit_decay,
                window: a.window,
                fit_growth: a.fit_growth,
                min_r2: a.min_r2,
                max_degree: a.max_degree,
            },
            out,
        ),
    }
}

impl SamplingArgs {
    fn plan(&self) -> entroreact::analysis::SamplingPlan {
        entroreact::analysis::SamplingPlan {
            samples: self.samples,
            u_max: self.u_max,
            seed: self.seed,
            relaxation: None,
        }
    }
}
