//! `pinlab`: pinning-interval sweeps, obstacle fronts, bending demos,
//! envelope transforms and the validation suites.

mod commands;
mod config;
mod output;
mod svg;
mod validate;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::RunConfig;
use output::Outputs;

#[derive(Parser, Debug)]
#[command(name = "pinlab", version, about = "Pinning intervals and limit shapes for free boundaries in periodic media")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads (default: available parallelism).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Output directory, overriding `out` in the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Also write solution fields where the command supports it.
    #[arg(long, global = true)]
    dump_field: bool,
    /// Seed for the randomized suites, overriding `seed` in the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Config override `section.key=value`; repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Pinning intervals over a set of lattice directions.
    Sweep,
    /// Pinning interval for one direction.
    Interval,
    /// Fronts around a convex obstacle for a list of ε.
    Shape,
    /// Variable-radius bending of a plane-like solution.
    BendDemo,
    /// Lipschitz envelopes of direction data.
    Envelope,
    /// Invariant and oracle suites.
    Validate,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Sweep => "sweep",
            Command::Interval => "interval",
            Command::Shape => "shape",
            Command::BendDemo => "bend-demo",
            Command::Envelope => "envelope",
            Command::Validate => "validate",
        }
    }
}

#[derive(Debug)]
pub enum Failure {
    Config(anyhow::Error),
    Solver(anyhow::Error),
    Validation(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Config(_) => 1,
            Failure::Solver(_) => 2,
            Failure::Validation(_) => 3,
        }
    }

    /// Parameter and input errors count as configuration errors, the rest as solver failures.
    pub fn from_core(e: pinlab_core::Error, context: &str) -> Self {
        use pinlab_core::Error as E;
        let err = anyhow::Error::new(e.clone()).context(context.to_string());
        match e {
            E::InvalidParameter(_) | E::Parse(_) | E::MediumRejected { .. } | E::DegeneratePolyline(_) => Failure::Config(err),
            _ => Failure::Solver(err),
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Config(e) => write!(f, "configuration error: {e:#}"),
            Failure::Solver(e) => write!(f, "solver failure: {e:#}"),
            Failure::Validation(m) => write!(f, "validation failed: {m}"),
        }
    }
}

pub trait ResultExt<T> {
    fn config(self) -> Result<T, Failure>;
    fn solver(self) -> Result<T, Failure>;
}

impl<T, E: Into<anyhow::Error>> ResultExt<T> for Result<T, E> {
    fn config(self) -> Result<T, Failure> {
        self.map_err(|e| Failure::Config(e.into()))
    }

    fn solver(self) -> Result<T, Failure> {
        self.map_err(|e| Failure::Solver(e.into()))
    }
}

fn run(cli: &Cli) -> Result<(), Failure> {
    let mut cfg = RunConfig::load(cli.config.as_deref(), &cli.overrides).config()?;
    if let Some(out) = &cli.out {
        cfg.out = out.clone();
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            return Err(Failure::Config(anyhow::anyhow!("--jobs must be at least 1")));
        }
        // Fails only if a pool already exists, which cannot happen this early.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global();
    }
    let mut out = Outputs::create(&cfg.out).config()?;
    let result = match cli.command {
        Command::Sweep => commands::sweep(&cfg, &mut out),
        Command::Interval => commands::interval(&cfg, &mut out, cli.dump_field),
        Command::Shape => commands::shape(&cfg, &mut out),
        Command::BendDemo => commands::bend_demo(&cfg, &mut out),
        Command::Envelope => commands::envelope(&cfg, &mut out),
        Command::Validate => validate::validate(&cfg, &mut out),
    };
    if let Err(e) = &result {
        out.note("error", e.to_string());
    }
    out.finish(cli.command.name(), &cfg).solver()?;
    result
}

fn main() -> ExitCode {
    let env = env_logger::Env::new().filter_or("PINLAB_LOG", "warn");
    env_logger::Builder::from_env(env).format_timestamp(None).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("pinlab: {e}");
            ExitCode::from(e.code())
        }
    }
}
