//! `ifs`: attractors, addresses and condition checks for iterated function
//! systems described by a JSON config.
//!
//! Exit codes: 0 success, 1 condition violations found, 2 usage or config
//! error, 3 internal or resource error.

mod commands;
mod parse;
mod raster;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use ifs_core::IfsError;

#[derive(Parser, Debug)]
#[command(name = "ifs", version, about = "Certified attractors and addresses of iterated function systems")]
struct Cli {
    /// Seed for every random choice.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads; 0 uses the rayon default.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Sample a condition (parent-child, orbital, regularity or φ) and report witnesses.
    Check(CheckArgs),
    /// Iterate the fractal operator to a certified radius and export the cloud.
    Attractor(AttractorArgs),
    /// π^t(α, x) for an infinite, finite or empty word.
    Address(AddressArgs),
    /// f_α(x) for a finite or empty word.
    Project(AddressArgs),
    /// Code-space distance d_c between two words, exactly.
    Dc(DcArgs),
    /// Attractors from several starts, clustered.
    Probe(ProbeArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Condition {
    /// From the config's mode: orbital for orbital systems, pc otherwise.
    Auto,
    Pc,
    Orbital,
    OrbitalIterated,
    Regularity,
    Phi,
}

#[derive(Args, Debug)]
struct CheckArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long, value_enum, default_value_t = Condition::Auto)]
    condition: Condition,
    /// Word length (pc) or orbit depth (orbital).
    #[arg(long, default_value_t = 6)]
    depth: usize,
    /// Random points in the working box, on top of its corners and center.
    #[arg(long, default_value_t = 20)]
    samples: usize,
    /// Random words per length when enumeration would be too large.
    #[arg(long, default_value_t = 256)]
    words: usize,
    /// Pairs per orbit for the orbital checks.
    #[arg(long, default_value_t = 2000)]
    pairs: usize,
    /// Longest word for the iterated orbital check.
    #[arg(long, default_value_t = 3)]
    word_len: usize,
}

#[derive(Args, Debug, Clone)]
struct OrbitalOpts {
    /// Certified bound on the orbit diameter (orbital mode); without it the
    /// diameter is probed and results are not certified.
    #[arg(long)]
    orbit_diam: Option<f64>,
    #[arg(long, default_value_t = 200)]
    max_iter: usize,
}

#[derive(Args, Debug)]
struct AttractorArgs {
    #[arg(long)]
    config: PathBuf,
    /// "box-corners" or "x=<c1,c2,...>[;<c1,c2,...>...]".
    #[arg(long, default_value = "box-corners")]
    start: String,
    #[arg(long)]
    eps: f64,
    /// CSV output with the radius in its header.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Presence raster (dimension 1 or 2).
    #[arg(long)]
    png: Option<PathBuf>,
    #[arg(long, default_value_t = 1024)]
    png_size: u32,
    /// Largest iterate held in memory.
    #[arg(long, default_value_t = 4_000_000)]
    point_budget: usize,
    /// Thin iterates over the budget with ε-nets and add the error to the radius.
    #[arg(long)]
    decimate: bool,
    #[command(flatten)]
    orbital: OrbitalOpts,
}

#[derive(Args, Debug)]
struct AddressArgs {
    #[arg(long)]
    config: PathBuf,
    /// Word: "1.2.3", "1.2:(3.1)", "(1)" or "@" for the empty word.
    #[arg(long)]
    word: String,
    /// Base point, comma-separated coordinates.
    #[arg(long, allow_hyphen_values = true)]
    x: String,
    #[arg(long, default_value_t = 1e-6)]
    eps: f64,
    #[command(flatten)]
    orbital: OrbitalOpts,
}

#[derive(Args, Debug)]
struct DcArgs {
    #[arg(long)]
    a: String,
    #[arg(long)]
    b: String,
    /// Weight in [0, 1) as "p/q" or a decimal; defaults to the config's default_c, else 1/2.
    #[arg(long)]
    c: Option<String>,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ProbeArgs {
    #[arg(long)]
    config: PathBuf,
    /// Start points separated by ';', coordinates by ','.
    #[arg(long, allow_hyphen_values = true)]
    starts: String,
    #[arg(long, default_value_t = 1e-6)]
    eps: f64,
    #[command(flatten)]
    orbital: OrbitalOpts,
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Core(IfsError),
    Io(String),
}

impl From<IfsError> for CliError {
    fn from(e: IfsError) -> Self {
        CliError::Core(e)
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Core(e) => match e {
                IfsError::Map(_) | IfsError::Resource(_) => 3,
                _ => 2,
            },
            CliError::Io(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Io(m) => write!(f, "{m}"),
        }
    }
}

/// JSON to print and the exit code it implies.
pub struct Outcome {
    pub json: String,
    pub code: u8,
}

fn run(cli: Cli) -> Result<Outcome, CliError> {
    if cli.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global()
            .map_err(|e| CliError::Io(format!("thread pool: {e}")))?;
    }
    let seed = cli.seed;
    match cli.command {
        Command::Check(a) => commands::check(&a, seed),
        Command::Attractor(a) => commands::attractor(&a),
        Command::Address(a) => commands::address(&a, false),
        Command::Project(a) => commands::address(&a, true),
        Command::Dc(a) => commands::dc(&a),
        Command::Probe(a) => commands::probe(&a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(out) => {
            println!("{}", out.json);
            ExitCode::from(out.code)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
