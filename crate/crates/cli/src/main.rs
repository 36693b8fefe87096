//! `rdcn`: simulate reconfigurable datacenter networks and compute their
//! metrics from a JSON experiment file.
//!
//! Exit status: 0 on success, 2 on configuration or input errors, 3 on
//! failures while running. Log verbosity comes from `RDCN_LOG`.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::error;

use rdcn::traffic::TraceKind;

use commands::{ComplexityJob, Failure};

#[derive(Parser, Debug)]
#[command(name = "rdcn", version, about = "Reconfigurable datacenter network simulator and metrics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the flow-level simulator and write its report
    Simulate(RunArgs),
    /// Compute the metrics selected in the config
    Metrics(RunArgs),
    /// Place traces on the complexity map, one CSV row each
    Complexity(ComplexityArgs),
    /// Dump the timeslot graph at slot `t` as an adjacency list
    Topology {
        #[command(flatten)]
        run: RunArgs,
        #[arg(short, long, default_value_t = 0)]
        t: u64,
    },
}

#[derive(Args, Debug)]
struct RunArgs {
    /// Experiment file (JSON)
    config: PathBuf,
    /// Override run.seed
    #[arg(long)]
    seed: Option<u64>,
    /// Override run.horizon
    #[arg(long)]
    horizon: Option<u64>,
    /// Override run.out
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ComplexityArgs {
    /// Trace CSV (`t,src,dst,size`); repeatable
    #[arg(long = "trace")]
    traces: Vec<PathBuf>,
    /// Generate a trace of this kind; repeatable
    #[arg(long, value_parser = parse_kind)]
    generate: Vec<TraceKind>,
    /// Number of ToRs
    #[arg(short, long)]
    n: usize,
    /// Length of generated traces
    #[arg(long, default_value_t = 100_000)]
    length: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Add the uniform and constant-pair corner rows
    #[arg(long)]
    reference: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_kind(s: &str) -> Result<TraceKind, String> {
    serde_json::from_value(serde_json::Value::String(s.to_string())).map_err(|_| {
        format!("unknown trace kind {s:?}; expected uniform, permutation, zipf-skewed, ml-ring-periodic, constant-pair or round-robin")
    })
}

fn dispatch(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Simulate(a) => commands::simulate(&commands::load_config(&a.config, a.seed, a.horizon, a.out)?),
        Command::Metrics(a) => commands::metrics(&commands::load_config(&a.config, a.seed, a.horizon, a.out)?),
        Command::Topology { run: a, t } => {
            commands::topology(&commands::load_config(&a.config, a.seed, a.horizon, a.out)?, t)
        }
        Command::Complexity(a) => commands::complexity(&ComplexityJob {
            traces: a.traces,
            generate: a.generate,
            n: a.n,
            length: a.length,
            seed: a.seed,
            reference: a.reference,
            out: a.out,
        }),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().filter_or("RDCN_LOG", "warn")).init();
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            error!("{f}");
            eprintln!("rdcn: {f}");
            ExitCode::from(f.code())
        }
    }
}
