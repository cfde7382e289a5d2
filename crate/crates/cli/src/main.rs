//! `mmv`: recovery thresholds, bounds, decoding, lemma checks and
//! phase-transition sweeps for row-sparse signals observed through
//! multiple measurement vectors.
//!
//! Exit codes: 0 success, 1 domain error (bad input, infeasible budget,
//! failed check), 2 usage error. Errors go to stderr as one line of JSON.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use commands::{DecodeArgs, InstanceArgs, Lemma};
use mmv_core::{DecoderKind, WMode};
use serde_json::json;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    /// Every entry of W nonzero.
    Strict,
    /// No zero row and no zero column.
    Generalized,
}

impl From<ModeArg> for WMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Strict => WMode::Strict,
            ModeArg::Generalized => WMode::Generalized,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum DecoderArg {
    Ml,
    Net,
}

impl From<DecoderArg> for DecoderKind {
    fn from(d: DecoderArg) -> Self {
        match d {
            DecoderArg::Ml => DecoderKind::Ml,
            DecoderArg::Net => DecoderKind::Net,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "mmv", version, about = "Support recovery with multiple measurement vectors")]
struct Cli {
    /// Seed for every random draw [default: 0]. For `simulate` it replaces
    /// the schedule's master_seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output format [default: csv for bounds and simulate, json otherwise].
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,

    /// Log more to stderr (repeat for more detail).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    /// Worker threads; results do not depend on it [default: all cores].
    #[arg(long, global = true, env = "MMV_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Recovery threshold c(W) of a signal value matrix.
    Cw {
        /// CSV file with one row of W per line.
        w: PathBuf,
        #[arg(long = "sigma-a2", default_value_t = 1.0)]
        sigma_a2: f64,
        #[arg(long = "sigma-z2", default_value_t = 1.0)]
        sigma_z2: f64,
        #[arg(long, value_enum, default_value = "strict")]
        mode: ModeArg,
    },
    /// Measurement and column bounds for the single-vector and two
    /// multiple-vector cases.
    Bounds {
        #[arg(long)]
        k: usize,
        #[arg(long)]
        n: f64,
        #[arg(long)]
        m: f64,
        #[arg(long = "sigma-a2", default_value_t = 1.0)]
        sigma_a2: f64,
        #[arg(long = "sigma-z2", default_value_t = 1.0)]
        sigma_z2: f64,
    },
    /// Estimate the support of an instance.
    Decode {
        /// Instance JSON as written by `mmv instance`.
        instance: PathBuf,
        #[arg(long, value_enum, default_value = "ml")]
        decoder: DecoderArg,
        /// Net decoder tolerance [default: 0.25·σz/σa].
        #[arg(long)]
        epsilon: Option<f64>,
        /// Largest number of candidate tests.
        #[arg(long, default_value_t = 100_000_000)]
        budget: u128,
        /// Largest number of points in one net.
        #[arg(long = "net-cap", default_value_t = 10_000_000)]
        net_cap: usize,
        #[arg(long = "sigma-a2", default_value_t = 1.0)]
        sigma_a2: f64,
        #[arg(long = "sigma-z2", default_value_t = 1.0)]
        sigma_z2: f64,
    },
    /// Numerical check of a supporting inequality; exits 1 on violations.
    Verify {
        #[arg(long, value_enum)]
        lemma: Lemma,
        #[arg(long, default_value_t = 1000)]
        trials: u64,
    },
    /// Error-rate sweep over an (m, n) schedule.
    Simulate {
        /// Schedule JSON.
        #[arg(long)]
        config: PathBuf,
        /// Output file [default: stdout].
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Draw one instance Y = A·X + Z and print it as JSON.
    Instance {
        /// CSV file with one row of W per line.
        #[arg(long)]
        w: PathBuf,
        #[arg(long, value_enum, default_value = "strict")]
        mode: ModeArg,
        #[arg(long)]
        m: usize,
        #[arg(long)]
        n: usize,
        #[arg(long = "sigma-a2", default_value_t = 1.0)]
        sigma_a2: f64,
        #[arg(long = "sigma-z2", default_value_t = 1.0)]
        sigma_z2: f64,
        /// Output file [default: stdout].
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Domain(String),
}

impl From<mmv_core::Error> for CliError {
    fn from(e: mmv_core::Error) -> Self {
        CliError::Domain(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Domain(format!("I/O error: {e}"))
    }
}

impl CliError {
    fn report(&self) -> ExitCode {
        let (kind, message, code) = match self {
            CliError::Usage(m) => ("usage", m, 2),
            CliError::Domain(m) => ("domain", m, 1),
        };
        let message = message.split_whitespace().collect::<Vec<_>>().join(" ");
        eprintln!("{}", json!({ "error": kind, "message": message }));
        ExitCode::from(code)
    }
}

const SUBCOMMANDS: &str = "cw, bounds, decode, verify, simulate, instance";

fn init_logging(verbose: u8) {
    let level = match verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        2 => log::LevelFilter::Debug,
        _ => log::LevelFilter::Trace,
    };
    env_logger::Builder::new()
        .filter_level(level)
        .format_timestamp(None)
        .init();
}

fn run(cli: Cli) -> Result<ExitCode, CliError> {
    let seed = cli.seed.unwrap_or(0);
    let json_default = cli.format.unwrap_or(Format::Json);
    match cli.command {
        Command::Cw {
            w,
            sigma_a2,
            sigma_z2,
            mode,
        } => commands::cw(&w, sigma_a2, sigma_z2, mode.into(), json_default)?,
        Command::Bounds {
            k,
            n,
            m,
            sigma_a2,
            sigma_z2,
        } => commands::bounds(k, n, m, sigma_a2, sigma_z2, cli.format.unwrap_or(Format::Csv))?,
        Command::Decode {
            instance,
            decoder,
            epsilon,
            budget,
            net_cap,
            sigma_a2,
            sigma_z2,
        } => commands::decode(
            &DecodeArgs {
                instance,
                decoder: decoder.into(),
                epsilon,
                budget,
                net_cap,
                sigma_a_sq: sigma_a2,
                sigma_z_sq: sigma_z2,
            },
            json_default,
        )?,
        Command::Verify { lemma, trials } => {
            if !commands::verify(lemma, trials, seed)? {
                return Ok(ExitCode::from(1));
            }
        }
        Command::Simulate { config, out } => {
            commands::simulate(&config, out.as_deref(), cli.seed, cli.format.unwrap_or(Format::Csv))?
        }
        Command::Instance {
            w,
            mode,
            m,
            n,
            sigma_a2,
            sigma_z2,
            out,
        } => commands::instance(
            &InstanceArgs {
                w,
                mode: mode.into(),
                m,
                n,
                sigma_a_sq: sigma_a2,
                sigma_z_sq: sigma_z2,
                out,
            },
            seed,
        )?,
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = e.print();
                    ExitCode::SUCCESS
                }
                ErrorKind::InvalidSubcommand
                | ErrorKind::MissingSubcommand
                | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => {
                    CliError::Usage(format!("{e} (subcommands: {SUBCOMMANDS})"))
                        .report()
                }
                _ => CliError::Usage(e.to_string()).report(),
            };
        }
    };
    init_logging(cli.verbose);
    if let Some(threads) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global() {
            return CliError::Usage(format!("cannot configure {threads} threads: {e}")).report();
        }
    }
    match run(cli) {
        Ok(code) => code,
        Err(e) => e.report(),
    }
}
