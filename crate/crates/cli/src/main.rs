//! `fbarron`: coefficient tables, rate studies and PDE point learning.
//!
//! Exit status: 0 success, 1 numerical or runtime failure, 2 bad configuration.

mod commands;
mod config;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use fbarron::report::Manifest;

use commands::{dispatch, Failure};

#[derive(Parser)]
#[command(name = "fbarron", version, about = "Fourier coefficients, Barron norms and shallow-network studies for functionals")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON run configuration.
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Parent directory for run directories.
    #[arg(long, value_name = "DIR", default_value = "runs")]
    out: PathBuf,
    /// Global seed; replaces the seeds in the configuration.
    #[arg(long, value_name = "U64")]
    seed: Option<u64>,
    /// Maximum number of worker threads.
    #[arg(long, value_name = "N")]
    jobs: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Fourier coefficient table and Barron/Hilbert norms of a zoo functional.
    Coefficients(Common),
    /// Run an experiment and write its report.
    Study {
        #[arg(value_enum)]
        kind: StudyKind,
        #[command(flatten)]
        common: Common,
    },
    /// Learn the Poisson solution at a point or on a grid.
    Pde {
        #[arg(value_enum)]
        mode: PdeMode,
        #[command(flatten)]
        common: Common,
    },
    /// Write labelled samples of a zoo functional.
    SampleData(Common),
    /// Repeat a finished run from its manifest.
    Rerun {
        /// `manifest.json` of an earlier run.
        #[arg(long, value_name = "PATH")]
        manifest: PathBuf,
        #[arg(long, value_name = "DIR", default_value = "runs")]
        out: PathBuf,
        #[arg(long, value_name = "N")]
        jobs: Option<usize>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum StudyKind {
    Convergence,
    Cutoff,
    PerCoordinate,
    Baseline,
}

#[derive(Clone, Copy, ValueEnum)]
enum PdeMode {
    Pointwise,
    Grid,
}

fn read_config(path: &Path) -> Result<serde_json::Value, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Config(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))
}

fn set_jobs(jobs: Option<usize>) -> Result<(), Failure> {
    if let Some(n) = jobs {
        if n == 0 {
            return Err(Failure::Config("--jobs must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Runtime(format!("thread pool: {e}")))?;
    }
    Ok(())
}

fn run_with(path: &[&str], common: &Common) -> Result<PathBuf, Failure> {
    set_jobs(common.jobs)?;
    let raw = read_config(&common.config)?;
    dispatch(path, raw, common.seed, &common.out)
}

fn run(cli: Cli) -> Result<PathBuf, Failure> {
    match cli.command {
        Command::Coefficients(c) => run_with(&["coefficients"], &c),
        Command::SampleData(c) => run_with(&["sample-data"], &c),
        Command::Study { kind, common } => {
            let name = match kind {
                StudyKind::Convergence => "convergence",
                StudyKind::Cutoff => "cutoff",
                StudyKind::PerCoordinate => "per-coordinate",
                StudyKind::Baseline => "baseline",
            };
            run_with(&["study", name], &common)
        }
        Command::Pde { mode, common } => {
            let name = match mode {
                PdeMode::Pointwise => "pointwise",
                PdeMode::Grid => "grid",
            };
            run_with(&["pde", name], &common)
        }
        Command::Rerun { manifest, out, jobs } => {
            set_jobs(jobs)?;
            let m = Manifest::load(&manifest)
                .map_err(|e| Failure::Config(format!("{}: {e}", manifest.display())))?;
            let path: Vec<&str> = m.command.iter().map(String::as_str).collect();
            dispatch(&path, m.config, None, &out)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    // Any panic is reported as a runtime failure rather than a backtrace.
    std::panic::set_hook(Box::new(|info| eprintln!("internal error: {info}")));
    match std::panic::catch_unwind(|| run(cli)) {
        Ok(Ok(path)) => {
            println!("{}", path.display());
            ExitCode::SUCCESS
        }
        Ok(Err(f)) => {
            eprintln!("{f}");
            ExitCode::from(f.exit_code() as u8)
        }
        Err(_) => ExitCode::from(1),
    }
}
