use std::path::PathBuf;

use clap::Args;

use insitu_core::cell_array::CellArray;
use insitu_core::compressor::{error_metrics_with, ErrorTarget, MetricsRecord, Policy, MAX_EXHAUSTIVE_BITS};
use insitu_core::lut::{LutFunction, LutTable};
use insitu_core::mac::{lane_pack, simd_pass_with, PrecisionMode};
use insitu_core::perf::{dvfs, report, OpTally, PerfReport};

use super::read_int_rows;
use crate::config::Context;
use crate::error::{CliError, Result};

#[derive(Debug, Args)]
pub struct MacArgs {
    /// Precision mode: b1, u<n> / uint<n>, i<n> / int<n>
    #[arg(long, default_value = "i8")]
    mode: PrecisionMode,
    /// One row per pass, one value per lane
    #[arg(long)]
    inputs: PathBuf,
    /// One weight per lane (all rows are concatenated)
    #[arg(long)]
    weights: PathBuf,
}

pub fn mac(ctx: &Context, args: MacArgs) -> Result<()> {
    let weights: Vec<i128> = read_int_rows(&args.weights)?.concat();
    let inputs = read_int_rows(&args.inputs)?;
    if weights.is_empty() || inputs.is_empty() {
        return Err(CliError::usage("inputs and weights must be non-empty"));
    }
    if let Some(row) = inputs.iter().position(|r| r.len() != weights.len()) {
        return Err(CliError::usage(format!(
            "input row {} has {} values, expected {} (one per weight)",
            row + 1,
            inputs[row].len(),
            weights.len()
        )));
    }
    let array = lane_pack(&weights, args.mode)?;
    let result = simd_pass_with(ctx.strategy, &inputs, &array, args.mode, &ctx.spec)?;
    let csv = result.to_csv();
    ctx.write("mac.csv", &csv)?;
    print!("{csv}");
    Ok(())
}

#[derive(Debug, Args)]
pub struct LutArgs {
    /// sigmoid, tanh, softmax_exp or all
    #[arg(long, default_value = "all")]
    function: String,
}

pub fn lut(ctx: &Context, args: LutArgs) -> Result<()> {
    let functions = if args.function == "all" {
        vec![LutFunction::Sigmoid, LutFunction::Tanh, LutFunction::SoftmaxExp]
    } else {
        vec![args.function.parse().map_err(CliError::usage)?]
    };
    for f in functions {
        let table = LutTable::build(f, ctx.codec, CellArray::default())?;
        let csv = table.to_csv()?;
        let path = ctx.write(&format!("lut_{}.csv", f.label()), &csv)?;
        println!("{} ({}) -> {}", f.label(), ctx.codec, path.display());
    }
    Ok(())
}

#[derive(Debug, Args)]
pub struct MetricsArgs {
    /// compressor, accumulate or product
    #[arg(long, default_value = "product")]
    target: String,
    /// Operand width in bits
    #[arg(long, default_value_t = 8)]
    width: u32,
    /// Addends (accumulate) or products (product)
    #[arg(long, default_value_t = 1)]
    count: usize,
    /// exhaustive or sampled:<samples>:<seed>; default is exhaustive when the
    /// input space fits, otherwise 10^6 samples with the run seed
    #[arg(long)]
    policy: Option<Policy>,
}

pub fn metrics(ctx: &Context, args: MetricsArgs) -> Result<()> {
    let target = match args.target.as_str() {
        "compressor" => ErrorTarget::Compressor,
        "accumulate" => ErrorTarget::Accumulate {
            width: args.width,
            addends: args.count,
        },
        "product" => ErrorTarget::ProductSum {
            width: args.width,
            products: args.count,
        },
        other => return Err(CliError::usage(format!("unknown target {other:?} (compressor, accumulate, product)"))),
    };
    let policy = args.policy.unwrap_or(if target.input_bits() <= u64::from(MAX_EXHAUSTIVE_BITS) {
        Policy::Exhaustive
    } else {
        Policy::Sampled {
            samples: 1_000_000,
            seed: ctx.seed,
        }
    });
    let m = error_metrics_with(ctx.strategy, &ctx.spec, target, policy)?;
    let record = MetricsRecord::new(&ctx.spec, target, policy, &m);
    let json = serde_json::to_string_pretty(&record)?;
    ctx.write("metrics.json", &format!("{json}\n"))?;
    ctx.write("metrics.csv", &format!("{}\n{}\n", MetricsRecord::CSV_HEADER, record.csv_row()))?;
    println!("{json}");
    Ok(())
}

#[derive(Debug, Args)]
pub struct PerfArgs {
    #[arg(long, default_value = "b1")]
    mode: PrecisionMode,
    /// Sustained passes in the workload
    #[arg(long, default_value_t = 1000)]
    passes: u64,
    /// Also write a DVFS sweep with this many voltage points
    #[arg(long)]
    sweep: Option<usize>,
}

pub fn perf(ctx: &Context, args: PerfArgs) -> Result<()> {
    let workload = OpTally::sustained(args.mode, args.passes);
    let r = report(&workload, &ctx.params);
    ctx.write("perf.json", &format!("{}\n", r.to_json()))?;
    ctx.write("perf.csv", &r.to_csv())?;
    if let Some(steps) = args.sweep {
        if steps < 2 {
            return Err(CliError::usage("--sweep needs at least 2 points"));
        }
        let [lo, hi] = ctx.params.v_range;
        let mut csv = format!("mode,energy_scale,{}\n", PerfReport::CSV_HEADER);
        for i in 0..steps {
            let v = lo + (hi - lo) * i as f64 / (steps - 1) as f64;
            let params = ctx.params.at_voltage(v)?;
            let point = dvfs(v, &params)?;
            let row = report(&workload, &params).to_csv();
            let data = row.lines().nth(1).unwrap_or_default();
            csv.push_str(&format!("{},{},{data}\n", args.mode, point.energy_scale));
        }
        ctx.write("dvfs.csv", &csv)?;
    }
    println!("{}", r.to_json());
    Ok(())
}
