use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;

use commands::Outcome;

/// Environment variable holding the worker thread count.
pub const THREADS_ENV: &str = "CTXEXT_THREADS";

#[derive(Debug, Parser)]
#[command(name = "ctxext", version, about = "Context categories, limit extensions and their checks")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Global {
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    /// Numerical tolerance, in (0, 1e-3].
    #[arg(long, global = true, default_value_t = 1e-9, value_parser = parse_tol)]
    pub tol: f64,
    /// Seed for every randomized step.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Text,
    Dot,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ProviderKind {
    Measure,
    Quantum,
}

fn parse_tol(s: &str) -> Result<f64, String> {
    let t: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if t > 0.0 && t <= 1e-3 {
        Ok(t)
    } else {
        Err(format!("tolerance {t} is outside (0, 1e-3]"))
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check a finite category, functor, diagram or cone.
    CatCheck {
        #[arg(long)]
        category: Option<PathBuf>,
        #[arg(long)]
        functor: Option<PathBuf>,
        #[arg(long)]
        diagram: Option<PathBuf>,
        /// Cone over `--diagram`.
        #[arg(long, requires = "diagram")]
        cone: Option<PathBuf>,
        /// Largest apex of the test cones used for the universal property.
        #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u64).range(1..))]
        apex_bound: u64,
    },
    /// Build the limit extension of the contexts generated by named seeds.
    Limit {
        #[arg(long)]
        algebra: PathBuf,
        /// Comma-separated seed names; all seeds when omitted.
        #[arg(long, value_delimiter = ',')]
        seeds: Vec<String>,
        #[arg(long, default_value_t = 1_000_000, value_parser = clap::value_parser!(u64).range(1..))]
        carrier_cap: u64,
    },
    /// Extend a density matrix to a measure on the carrier and compare expectations.
    StateExtend {
        #[arg(long)]
        algebra: PathBuf,
        #[arg(long, value_delimiter = ',')]
        seeds: Vec<String>,
        #[arg(long)]
        state: PathBuf,
        #[arg(long, default_value_t = 1_000_000, value_parser = clap::value_parser!(u64).range(1..))]
        carrier_cap: u64,
    },
    /// Count global sections of the spectral presheaf of a ray family.
    KsCheck {
        /// Ray-family JSON file.
        #[arg(long, conflicts_with = "builtin")]
        fixture: Option<PathBuf>,
        /// Bundled family by name (`cabello18`).
        #[arg(long)]
        builtin: Option<String>,
        /// Stop after this many sections.
        #[arg(long, default_value_t = 16, value_parser = clap::value_parser!(u64).range(1..))]
        limit: u64,
    },
    /// Inner and outer daseinisation of an operator in every context.
    Daseinise {
        #[arg(long)]
        algebra: PathBuf,
        #[arg(long, value_delimiter = ',')]
        seeds: Vec<String>,
        /// Matrix file with a self-adjoint operator or projection.
        #[arg(long)]
        operator: PathBuf,
    },
    /// Isotony, locality, covariance and commuting squares of a chain net.
    NetCheck {
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..=6))]
        chain: Option<u64>,
        /// Net file; its chain length wins over `--chain`.
        #[arg(long)]
        net: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        shift: u64,
        /// Use non-cyclic translations.
        #[arg(long)]
        open: bool,
    },
    /// Canonical commutation defect of truncated field operators.
    GftCcr {
        #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u64).range(1..))]
        m: u64,
        #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u64).range(1..))]
        n: u64,
        #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u64).range(1..))]
        nmax: u64,
        #[arg(long, default_value_t = 20, value_parser = clap::value_parser!(u64).range(1..))]
        pairs: u64,
        /// Largest test-function norm.
        #[arg(long, default_value_t = 1.0)]
        radius: f64,
    },
    /// Weyl-relation defect, at one cutoff or along a sweep.
    GftWeyl {
        #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u64).range(1..))]
        m: u64,
        #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u64).range(1..))]
        n: u64,
        #[arg(long, default_value_t = 5, value_parser = clap::value_parser!(u64).range(1..))]
        nmax: u64,
        /// Tabulate every cutoff from 2 to `--nmax`.
        #[arg(long)]
        sweep: bool,
        /// Particle-number sector on which the defect is measured.
        #[arg(long, default_value_t = 1)]
        sector: u64,
        #[arg(long, default_value_t = 0.35)]
        radius: f64,
    },
    /// Minimise the correlation inequality over sign choices.
    Inequality {
        #[arg(long)]
        family: PathBuf,
        #[arg(long, value_enum)]
        provider: ProviderKind,
        /// Largest number of observables searched exhaustively.
        #[arg(long, default_value_t = 16, value_parser = clap::value_parser!(u64).range(1..=24))]
        sign_cap: u64,
    },
    /// Graphviz export of a category, or of a cone over a diagram.
    ExportDot {
        #[arg(long, conflicts_with = "diagram")]
        category: Option<PathBuf>,
        #[arg(long, requires = "cone")]
        diagram: Option<PathBuf>,
        #[arg(long)]
        cone: Option<PathBuf>,
    },
}

fn configure_threads() -> Result<(), String> {
    let Ok(value) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = value
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| format!("{THREADS_ENV} must be a positive integer, got `{value}`"))?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| e.to_string())
}

fn emit(outcome: &Outcome, format: Format) -> Result<(), String> {
    match format {
        Format::Json => {
            let text = serde_json::to_string_pretty(&outcome.json).map_err(|e| e.to_string())?;
            println!("{text}");
        }
        Format::Text => print!("{}", outcome.text),
        Format::Dot => match &outcome.dot {
            Some(dot) => print!("{dot}"),
            None => return Err("this command has no dot output".into()),
        },
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = configure_threads() {
        eprintln!("ctxext: {e}");
        return ExitCode::from(2);
    }
    let outcome = match commands::run(&cli.command, &cli.global) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("ctxext: {e}");
            return ExitCode::from(2);
        }
    };
    if let Err(e) = emit(&outcome, cli.global.format) {
        eprintln!("ctxext: {e}");
        return ExitCode::from(2);
    }
    if cli.global.format == Format::Dot {
        for v in &outcome.report.violations {
            eprintln!("violation: {} at {}: {}", v.invariant, v.location, v.detail);
        }
    }
    if outcome.report.is_valid() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
