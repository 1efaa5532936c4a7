use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use stochdd::commands::{self, Setup};
use stochdd::config::RunConfig;
use stochdd::Error;

#[derive(Parser)]
#[command(name = "stochdd", version, about = "Stochastic domain decomposition with basis adaptation")]
struct Cli {
    /// Configuration file; the built-in benchmark when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides `run.output_dir`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Eigenvalue tables of the input field and of every subdomain.
    Kl,
    /// Full-dimensional collocation.
    Full,
    /// Coarse Gaussian solve, subdomain adaptation and stitching.
    Adapt,
    /// Monte Carlo reference.
    Mc,
    /// Compare two run directories; `b` is the reference.
    Compare {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        /// Restrict metrics to one subdomain.
        #[arg(long)]
        region: Option<usize>,
    },
    /// kl, full, adapt and compare in one go.
    Bench,
}

fn run(cli: Cli) -> stochdd::Result<()> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(o) = cli.out {
        cfg.run.output_dir = o;
    }
    if let Some(s) = cli.seed {
        cfg.run.seed = s;
    }
    if let Some(w) = cli.workers {
        cfg.run.workers = w;
    }
    let setup = Setup::new(&cfg)?;
    match cli.command {
        Command::Kl => {
            let r = commands::cmd_kl(&setup)?;
            log::info!("{} global and {} subdomain spectra written", r.lambda.len(), r.mu.len());
        }
        Command::Full => {
            let r = commands::cmd_full(&setup)?;
            log::info!("full collocation: {} solves in {:.1} s", r.solves, r.seconds);
        }
        Command::Adapt => {
            let r = commands::cmd_adapt(&setup)?;
            log::info!("adapted pipeline: {} solves", r.cost.total());
        }
        Command::Mc => {
            let r = commands::cmd_mc(&setup)?;
            log::info!("monte carlo: {} samples", r.samples);
        }
        Command::Compare { a, b, region } => {
            let r = commands::cmd_compare(&setup, &a, &b, region)?;
            for (m, s, v) in &r.metrics {
                log::info!("{m} region {s}: {v:.3e}");
            }
        }
        Command::Bench => {
            let r = commands::cmd_bench(&setup)?;
            log::info!("bench: full {} solves, adapted {} solves", r.full.solves, r.adapt.cost.total());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            match &e {
                Error::Config(errs) => {
                    for m in errs {
                        eprintln!("config error: {m}");
                    }
                }
                other => eprintln!("error: {other}"),
            }
            let code = match e {
                Error::Config(_) | Error::Parse { .. } | Error::InvalidArgument(_) => 2,
                ref e if e.is_numerical() => 3,
                _ => 1,
            };
            ExitCode::from(code)
        }
    }
}
