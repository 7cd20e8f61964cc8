//! Command-line front end: `run`, `validate`, `quadric`, `residual`, `integrability`.

pub mod config;
mod pipeline;
pub mod report;

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

pub use config::{Config, ConfigError, Resolved};
pub use pipeline::equation;
pub use report::{strip_timestamp, Report};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_VERIFY: i32 = 3;
pub const EXIT_IO: i32 = 4;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("report could not be serialized: {0}")]
    Serialize(#[from] serde_json::Error),
    #[error("{0}")]
    Usage(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Usage(_) => EXIT_CONFIG,
            CliError::Io { .. } => EXIT_IO,
            CliError::Serialize(_) => EXIT_VERIFY,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "mageo",
    version,
    about = "Monge-Ampère structures and their generalized almost structures"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Full analysis of a configured structure.
    Run(RunArgs),
    /// Parse and check a configuration without running it.
    Validate { config: PathBuf },
    /// Sweep the sixteen family cells.
    Quadric(QuadricArgs),
    /// Residuals of the configured candidate solutions.
    Residual(RunArgs),
    /// Closedness and torsion checks.
    Integrability(RunArgs),
}

#[derive(Debug, Args)]
struct RunArgs {
    config: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides `tolerances.verification`.
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    points: Option<usize>,
}

#[derive(Debug, Args)]
struct QuadricArgs {
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    /// Admissible triples per cell.
    #[arg(long, default_value_t = 50)]
    points: usize,
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Loads a configuration and applies command-line overrides.
pub fn load(
    path: &Path,
    seed: Option<u64>,
    tol: Option<f64>,
    points: Option<usize>,
) -> Result<Resolved, CliError> {
    let mut cfg = Config::from_json(&read(path)?)?;
    if let Some(s) = seed {
        cfg.sampling.seed = s;
    }
    if let Some(t) = tol {
        cfg.tolerances.verification = t;
    }
    if let Some(n) = points {
        cfg.sampling.count = n;
    }
    Ok(cfg.resolve()?)
}

fn timestamp() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
}

fn emit(
    report: &mut Report,
    out: Option<&Path>,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Result<i32, CliError> {
    report.generated_at = timestamp();
    let json = report.to_json()?;
    match out {
        Some(p) => std::fs::write(p, &json).map_err(|source| CliError::Io {
            path: p.to_path_buf(),
            source,
        })?,
        None => stdout
            .write_all(json.as_bytes())
            .map_err(|source| CliError::Io {
                path: "<stdout>".into(),
                source,
            })?,
    }
    if report.verification.passed {
        Ok(EXIT_OK)
    } else {
        for f in &report.verification.failures {
            let _ = writeln!(stderr, "verification failure: {f}");
        }
        Ok(EXIT_VERIFY)
    }
}

fn dispatch(cli: Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<i32, CliError> {
    match cli.command {
        Command::Validate { config } => {
            let r = load(&config, None, None, None)?;
            let name = r.config.name.as_deref().unwrap_or("config");
            writeln!(stdout, "{name}: ok").map_err(|source| CliError::Io {
                path: "<stdout>".into(),
                source,
            })?;
            Ok(EXIT_OK)
        }
        Command::Quadric(a) => {
            if !(a.tol.is_finite() && a.tol > 0.0) {
                return Err(CliError::Usage(format!(
                    "--tol must be positive, got {}",
                    a.tol
                )));
            }
            let mut rep = pipeline::quadric_sweep(
                a.points,
                a.seed,
                a.tol,
                crate::phase::DEFAULT_PFAFFIAN_FLOOR,
            );
            emit(&mut rep, a.out.as_deref(), stdout, stderr)
        }
        Command::Run(a) => {
            let r = load(&a.config, a.seed, a.tol, a.points)?;
            emit(&mut pipeline::run(&r), a.out.as_deref(), stdout, stderr)
        }
        Command::Residual(a) => {
            let r = load(&a.config, a.seed, a.tol, a.points)?;
            emit(
                &mut pipeline::residual(&r),
                a.out.as_deref(),
                stdout,
                stderr,
            )
        }
        Command::Integrability(a) => {
            let r = load(&a.config, a.seed, a.tol, a.points)?;
            emit(
                &mut pipeline::integrability_only(&r),
                a.out.as_deref(),
                stdout,
                stderr,
            )
        }
    }
}

/// Runs the CLI on `args` (including the program name) and returns the exit code.
pub fn main_with<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                write!(stderr, "{text}")
            } else {
                write!(stdout, "{text}")
            };
            return code;
        }
    };
    match dispatch(cli, stdout, stderr) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}
