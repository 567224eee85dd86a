//! `mixgeo` command-line front end.
//!
//! Exit codes: 0 success, 1 invalid input or configuration, 2 numerical
//! failure, 3 failed acceptance criteria (`verify` only).

mod commands;
mod config;
mod output;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};

use commands::{asymptotics, extended, flow, heat, verify, wim};
use config::{Format, RunConfig};
use output::Output;

#[derive(Debug, Parser)]
#[command(name = "mixgeo", version, about = "Scaling Wasserstein/Fisher geometry of 1D mixtures: metrics, flows and heat schemes")]
struct Cli {
    /// JSON run configuration; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Output formats, comma separated.
    #[arg(long, global = true, value_delimiter = ',')]
    format: Option<Vec<Format>>,
    /// Seed for randomized initial data.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, short, global = true)]
    quiet: bool,
    /// Omit the timestamp comment at the top of CSV files.
    #[arg(long, global = true)]
    no_timestamp: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Numeric FIM/WIM of a model, σ sweeps and second-order diagonals.
    Wim(wim::WimArgs),
    /// Tables of g, g₂, matching points, Δ₂ ratios and the perturbation integral.
    Asymptotics(asymptotics::AsymptoticsArgs),
    /// Gradient flow of an energy on the simplex.
    Flow(flow::FlowArgs),
    /// 1D log-weighted heat scheme against Crank–Nicolson.
    Heat1d(heat::HeatArgs),
    /// 2D log-weighted heat scheme against Crank–Nicolson.
    Heat2d(heat::HeatArgs),
    /// Flow of weights and means under a smooth potential.
    Extended(extended::ExtendedArgs),
    /// Run the acceptance criteria.
    Verify(verify::VerifyArgs),
}

/// Ok(false) means acceptance criteria failed.
fn run(cli: Cli) -> Result<bool> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let quiet = cli.quiet || cfg.quiet.unwrap_or(false);
    let timestamp = !(cli.no_timestamp || cfg.no_timestamp.unwrap_or(false));
    let formats = cli
        .format
        .or(cfg.format.take())
        .unwrap_or_else(|| vec![Format::Csv, Format::Json, Format::Svg]);
    let dir = cli.out.or(cfg.out.take()).unwrap_or_else(|| PathBuf::from("out"));
    let seed = cli.seed.or(cfg.seed);

    // merge flags before touching the filesystem so bad input fails fast
    let kind = match cli.command {
        Command::Wim(a) => a.apply(&mut cfg.wim).map(|_| Kind::Wim)?,
        Command::Asymptotics(a) => a.apply(&mut cfg.asymptotics).map(|_| Kind::Asymptotics)?,
        Command::Flow(a) => {
            a.apply(&mut cfg.flow);
            Kind::Flow
        }
        Command::Heat1d(a) => {
            a.apply_1d(&mut cfg.heat1d);
            Kind::Heat1d
        }
        Command::Heat2d(a) => {
            a.apply_2d(&mut cfg.heat2d);
            Kind::Heat2d
        }
        Command::Extended(a) => {
            a.apply(&mut cfg.extended);
            Kind::Extended
        }
        Command::Verify(a) => {
            a.apply(&mut cfg.verify);
            Kind::Verify
        }
    };
    let mut out = Output::prepare(&dir, &formats, timestamp, quiet)?;
    match kind {
        Kind::Wim => wim::run(&cfg.wim, &mut out)?,
        Kind::Asymptotics => asymptotics::run(&cfg.asymptotics, &mut out)?,
        Kind::Flow => flow::run(&cfg.flow, &mut out)?,
        Kind::Heat1d => heat::run_1d(&cfg.heat1d, &mut out)?,
        Kind::Heat2d => heat::run_2d(&cfg.heat2d, &mut out)?,
        Kind::Extended => extended::run(&cfg.extended, &mut out)?,
        Kind::Verify => return verify::run(&cfg.verify, seed, &mut out),
    }
    out.say(format!("wrote {} files to {}", out.written().len(), dir.display()));
    Ok(true)
}

enum Kind {
    Wim,
    Asymptotics,
    Flow,
    Heat1d,
    Heat2d,
    Extended,
    Verify,
}

fn exit_code(err: &anyhow::Error) -> u8 {
    let numerical = err
        .chain()
        .filter_map(|e| e.downcast_ref::<mixgeo::Error>())
        .any(|e| e.is_numerical());
    if numerical {
        2
    } else {
        1
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let level = if cli.quiet { "error" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(3),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
