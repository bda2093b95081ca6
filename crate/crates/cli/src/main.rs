//! `dipent`: sweeps, ring finding, pair-state evaluation, efficiency
//! comparison and Monte Carlo campaigns for two distant Lambda-type sources.
//!
//! Every command writes a CSV table with `#`-prefixed metadata to `--out`
//! (or stdout). Failures print a JSON record to stderr and exit with 2
//! (configuration), 3 (numerical contract) or 4 (I/O).

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod failure;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::commands::Output;
use crate::config::{Overrides, PairMethod, RunConfig};
use crate::failure::Failure;

#[derive(Parser, Debug)]
#[command(name = "dipent", version, about = "Postselected photon entanglement from two distant dipole sources")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    flags: Flags,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Entanglement of formation over a (theta, phi) grid of Bob directions.
    EfMap,
    /// Detector rings for Alice (plus) and Bob (minus).
    Rings,
    /// Photon pair state after a coincidence at Bob's direction.
    PairState,
    /// Pair probability from every selected estimator.
    Efficiency,
    /// Monte Carlo campaign: event stream and coincidence statistics.
    Simulate,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum MethodArg {
    Auto,
    Analytic,
    Conditional,
}

#[derive(Args, Debug)]
struct Flags {
    /// JSON run configuration; flags override its values.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output file (stdout when absent).
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
    #[arg(long, global = true, value_name = "F", allow_negative_numbers = true)]
    gamma0: Option<f64>,
    #[arg(long, global = true, value_name = "F", allow_negative_numbers = true)]
    gamma1: Option<f64>,
    #[arg(long, global = true, value_name = "F", allow_negative_numbers = true)]
    k0d: Option<f64>,
    #[arg(long, global = true, value_name = "F", allow_negative_numbers = true)]
    theta_b: Option<f64>,
    #[arg(long, global = true, value_name = "F", allow_negative_numbers = true)]
    phi_b: Option<f64>,
    #[arg(long, global = true, value_name = "N")]
    n_cycles: Option<u64>,
    #[arg(long, global = true, value_name = "N")]
    grid: Option<usize>,
    /// Place the sources so that Bob's direction lies on the first minus ring.
    #[arg(long, global = true)]
    auto_place: bool,
    /// Cycle sampler for `simulate` (analog, forced).
    #[arg(long, global = true)]
    sampler: Option<String>,
    /// Comma-separated estimator names for `efficiency`.
    #[arg(long, global = true, value_delimiter = ',')]
    estimators: Option<Vec<String>>,
    #[arg(long, global = true, value_enum)]
    method: Option<MethodArg>,
    /// Detector cone half-angle in radians.
    #[arg(long, global = true, value_name = "RAD")]
    cone: Option<f64>,
}

impl Flags {
    fn overrides(self) -> Overrides {
        Overrides {
            out: self.out,
            seed: self.seed,
            gamma0: self.gamma0,
            gamma1: self.gamma1,
            k0d: self.k0d,
            theta_b: self.theta_b,
            phi_b: self.phi_b,
            n_cycles: self.n_cycles,
            grid: self.grid,
            auto_place: self.auto_place,
            sampler: self.sampler,
            estimators: self.estimators,
            method: self.method.map(|m| match m {
                MethodArg::Auto => PairMethod::Auto,
                MethodArg::Analytic => PairMethod::Analytic,
                MethodArg::Conditional => PairMethod::Conditional,
            }),
            cone_half_angle: self.cone,
        }
    }
}

fn emit(cfg: &RunConfig, output: Output) -> Result<(), Failure> {
    match &cfg.out {
        Some(path) => {
            let file = File::create(path).map_err(|e| Failure::io(path, e))?;
            let mut w = BufWriter::new(file);
            output.table.write(&mut w).map_err(|e| Failure::io(path, e))?;
            w.flush().map_err(|e| Failure::io(path, e))?;
            if let Some(summary) = output.summary {
                println!("{summary}");
            }
        }
        None => {
            let stdout = std::io::stdout();
            output
                .table
                .write(stdout.lock())
                .map_err(|e| Failure::io(&PathBuf::from("<stdout>"), e))?;
            if let Some(summary) = output.summary {
                eprintln!("{summary}");
            }
        }
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    let config_path = cli.flags.config.clone();
    let cfg = RunConfig::load(config_path.as_deref(), cli.flags.overrides())?;
    let output = match cli.command {
        Command::EfMap => commands::ef_map(&cfg)?,
        Command::Rings => commands::rings(&cfg)?,
        Command::PairState => commands::pair_state(&cfg)?,
        Command::Efficiency => commands::efficiency(&cfg)?,
        Command::Simulate => commands::simulate(&cfg)?,
    };
    emit(&cfg, output)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("{}", f.record());
            ExitCode::from(f.exit_code() as u8)
        }
    }
}
