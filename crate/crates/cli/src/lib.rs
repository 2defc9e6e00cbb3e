//! `hbac` command-line front end.
//!
//! Every command produces a [`Table`] with a metadata header (tool version,
//! effective config and its hash, seed, assumptions) and figure-ready rows.
//! Output contains no timestamps, so identical inputs give identical bytes.

pub mod commands;
pub mod config;
pub mod table;

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};

pub use table::{Cell, Format, Table};

pub const TOOL: &str = concat!("hbac ", env!("CARGO_PKG_VERSION"));
pub const DEFAULT_SEED: u64 = 42;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("parse: {0}")]
    Parse(String),
    #[error("invariant violated: {0}")]
    Invariant(String),
    #[error("io: {0}")]
    Io(String),
    #[error(transparent)]
    Core(#[from] hbac_core::Error),
}

impl CliError {
    /// 1 for numerical failures, 2 for bad input.
    pub fn exit_code(&self) -> i32 {
        use hbac_core::Error as E;
        match self {
            CliError::Invariant(_) | CliError::Io(_) => 1,
            CliError::Core(E::NonConvergence { .. } | E::CutoffTooSmall { .. }) => 1,
            _ => 2,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "hbac", version, about = "Heat-bath algorithmic cooling of bosonic modes")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Output format [default: csv].
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Shorthand for `--format json`.
    #[arg(long, global = true, conflicts_with = "format")]
    pub json: bool,
    /// Seed for every random draw [default: 42].
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads for parameter sweeps [default: all cores].
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Output file [default: stdout].
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Flat TOML file with defaults for any flag; flags win.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Gaussian cooling limit, verified by one swap-chain round.
    Limit(commands::limit::LimitArgs),
    /// Machine spectra minimizing entropy production.
    OptimizeSpectrum(commands::spectrum::SpectrumArgs),
    /// Repeated rounds of a Gaussian recharger.
    SimulateGaussian(commands::gaussian::GaussianArgs),
    /// p-excitation exchange: Fock-space simulation against closed forms.
    SimulatePexchange(commands::pexchange::PexchangeArgs),
    /// Randomized checks of the Gaussian cooling bounds.
    PropertySuite(commands::suite::SuiteArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Limit(_) => "limit",
            Command::OptimizeSpectrum(_) => "optimize-spectrum",
            Command::SimulateGaussian(_) => "simulate-gaussian",
            Command::SimulatePexchange(_) => "simulate-pexchange",
            Command::PropertySuite(_) => "property-suite",
        }
    }
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GlobalKeys {
    format: Option<Format>,
    seed: Option<u64>,
    jobs: Option<usize>,
    out: Option<PathBuf>,
}

/// What a command hands back: the table plus anything that should turn the
/// exit code nonzero or go to stderr.
#[derive(Debug, Default)]
pub struct Run {
    pub table: Table,
    pub failures: Vec<String>,
    pub warnings: Vec<String>,
}

#[derive(Debug)]
pub struct Outcome {
    pub run: Run,
    pub format: Format,
    pub out: Option<PathBuf>,
}

impl Outcome {
    pub fn render(&self) -> String {
        self.run.table.render(self.format)
    }

    pub fn exit_code(&self) -> i32 {
        i32::from(!self.run.failures.is_empty())
    }
}

pub struct Context {
    pub seed: u64,
}

pub fn execute(cli: &Cli) -> Result<Outcome, CliError> {
    let mut file = match &cli.config {
        Some(path) => config::load_file(path)?,
        None => toml::Table::new(),
    };
    let mut file_globals = toml::Table::new();
    for key in config::GLOBAL_KEYS {
        if let Some(v) = file.remove(key) {
            file_globals.insert(key.to_string(), v);
        }
    }
    let flags = GlobalKeys {
        format: if cli.json { Some(Format::Json) } else { cli.format },
        seed: cli.seed,
        jobs: cli.jobs,
        out: cli.out.clone(),
    };
    let (globals, _): (GlobalKeys, _) = config::merge(&file_globals, &flags)?;
    let seed = globals.seed.unwrap_or(DEFAULT_SEED);
    let jobs = match globals.jobs {
        Some(0) => return Err(CliError::Usage("--jobs must be at least 1".into())),
        Some(j) => j,
        None => std::thread::available_parallelism().map_or(1, |n| n.get()),
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| CliError::Usage(format!("thread pool: {e}")))?;
    let ctx = Context { seed };

    let (mut run, effective) = pool.install(|| dispatch(&cli.command, &file, &ctx))?;

    let mut header = Table::default();
    header.meta("tool", TOOL);
    header.meta("command", cli.command.name());
    header.meta("seed", seed);
    header.meta("config", config::canonical(&effective));
    header.meta("config_hash", config::config_hash(cli.command.name(), &effective));
    header.metadata.append(&mut run.table.metadata);
    run.table.metadata = header.metadata;
    Ok(Outcome { run, format: globals.format.unwrap_or(Format::Csv), out: globals.out })
}

fn dispatch(command: &Command, file: &toml::Table, ctx: &Context) -> Result<(Run, toml::Table), CliError> {
    use commands::*;
    match command {
        Command::Limit(a) => {
            let (args, eff) = config::merge(file, a)?;
            Ok((limit::run(&args)?, eff))
        }
        Command::OptimizeSpectrum(a) => {
            let (args, eff) = config::merge(file, a)?;
            Ok((spectrum::run(&args)?, eff))
        }
        Command::SimulateGaussian(a) => {
            let (args, eff) = config::merge(file, a)?;
            Ok((gaussian::run(&args, ctx)?, eff))
        }
        Command::SimulatePexchange(a) => {
            let (args, eff) = config::merge(file, a)?;
            Ok((pexchange::run(&args)?, eff))
        }
        Command::PropertySuite(a) => {
            let (args, eff) = config::merge(file, a)?;
            Ok((suite::run(&args, ctx)?, eff))
        }
    }
}

pub fn write_output(outcome: &Outcome) -> Result<(), CliError> {
    let text = outcome.render();
    match &outcome.out {
        Some(path) => write_file(path, &text),
        None => {
            use std::io::Write;
            std::io::stdout().write_all(text.as_bytes()).map_err(|e| CliError::Io(e.to_string()))
        }
    }
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

/// Parse `args` as a command line (program name included) and run it.
pub fn run_args<I, T>(args: I) -> Result<Outcome, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(|e| CliError::Usage(e.to_string()))?;
    execute(&cli)
}
