//! `insitu`: drive the macro simulator from the shell. Every command writes
//! machine-readable CSV/JSON into the output directory and prints a short
//! summary on stdout.

mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{Context, Overrides, RunConfig};

#[derive(Debug, Parser)]
#[command(name = "insitu", version, about = "Memory-in-situ SRAM macro simulator")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct GlobalArgs {
    /// TOML run configuration
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory (default: ./out)
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Supply voltage in volts
    #[arg(long, global = true)]
    voltage: Option<f64>,
    /// Compressor spec: "exact", "approx" or a truth-table file
    #[arg(long, global = true)]
    spec: Option<String>,
    /// Activation codec: fp4, posit4 or posit4:<es>
    #[arg(long, global = true)]
    codec: Option<String>,
    /// Run data-parallel kernels on one thread
    #[arg(long, global = true)]
    sequential: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Cell-array operations with a per-step trace
    Array(commands::ArrayArgs),
    /// Lane-parallel multiply-accumulate
    Mac(commands::MacArgs),
    /// Build and dump an activation lookup table
    Lut(commands::LutArgs),
    /// Throughput, energy and DVFS report
    Perf(commands::PerfArgs),
    /// Tile a model onto macro banks
    Map(commands::MapArgs),
    /// Quantized inference and QoR against the float reference
    Infer(commands::InferArgs),
    /// Error metrics of a compressor spec
    Metrics(commands::MetricsArgs),
    /// Smoothing / edge-detection convolution demo
    DemoConv(commands::ConvArgs),
}

fn run(cli: Cli) -> error::Result<()> {
    let g = cli.global;
    let config = match &g.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    let ctx = Context::resolve(
        config,
        Overrides {
            seed: g.seed,
            out: g.out,
            spec: g.spec,
            codec: g.codec,
            voltage: g.voltage,
            sequential: g.sequential,
        },
    )?;
    match cli.command {
        Command::Array(a) => commands::array(&ctx, a),
        Command::Mac(a) => commands::mac(&ctx, a),
        Command::Lut(a) => commands::lut(&ctx, a),
        Command::Perf(a) => commands::perf(&ctx, a),
        Command::Map(a) => commands::map(&ctx, a),
        Command::Infer(a) => commands::infer(&ctx, a),
        Command::Metrics(a) => commands::metrics(&ctx, a),
        Command::DemoConv(a) => commands::demo_conv(&ctx, a),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("insitu: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
