use std::path::PathBuf;

use clap::Args;
use serde::Serialize;

use insitu_core::mapper::{
    self, conv_demo, map_layer, ConvKernel, EvalSet, GrayImage, InferenceOptions, Model, TileSchedule,
};
use insitu_core::perf::{report, OpTally};

use crate::config::Context;
use crate::error::{CliError, Result};

fn load_model(path: &PathBuf) -> Result<Model> {
    if !path.exists() {
        return Err(CliError::usage(format!("model {} not found", path.display())));
    }
    Ok(Model::load(path)?)
}

#[derive(Debug, Args)]
pub struct MapArgs {
    /// Model description (JSON)
    #[arg(long)]
    model: PathBuf,
}

#[derive(Serialize)]
struct LayerMapping<'a> {
    layer: usize,
    precision: String,
    weights: usize,
    schedule: &'a TileSchedule,
}

pub fn map(ctx: &Context, args: MapArgs) -> Result<()> {
    let model = load_model(&args.model)?;
    let schedules = model
        .layers
        .iter()
        .map(|l| map_layer(&l.spec, ctx.geometry))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    let rows: Vec<LayerMapping> = model
        .layers
        .iter()
        .zip(&schedules)
        .enumerate()
        .map(|(i, (l, s))| LayerMapping {
            layer: i,
            precision: l.spec.precision.to_string(),
            weights: l.spec.weight_count(),
            schedule: s,
        })
        .collect();
    ctx.write("schedule.json", &format!("{}\n", serde_json::to_string_pretty(&rows)?))?;
    for r in &rows {
        println!(
            "layer {}: {} {} weights, {} tiles, {} passes, {} banks",
            r.layer,
            r.precision,
            r.weights,
            r.schedule.tiles.len(),
            r.schedule.passes,
            r.schedule.banks_required
        );
    }
    Ok(())
}

#[derive(Debug, Args)]
pub struct InferArgs {
    #[arg(long)]
    model: PathBuf,
    /// Evaluation set: features..., label
    #[arg(long)]
    eval: PathBuf,
    /// Fraction of weights zeroed by global magnitude pruning
    #[arg(long, default_value_t = 0.4)]
    prune: f64,
}

pub fn infer(ctx: &Context, args: InferArgs) -> Result<()> {
    let model = load_model(&args.model)?;
    let eval = EvalSet::load(&args.eval)?;
    let opts = InferenceOptions {
        prune_fraction: args.prune,
        codec: ctx.codec,
        geometry: ctx.geometry,
        strategy: ctx.strategy,
    };
    let rep = mapper::infer(&model, &eval, &ctx.spec, &opts)?;
    let qor = rep.qor.to_json();
    ctx.write("qor.json", &format!("{qor}\n"))?;
    let mut csv = String::from("sample,label,prediction,float_prediction\n");
    for (i, ((l, p), f)) in eval.labels.iter().zip(&rep.predictions).zip(&rep.float_predictions).enumerate() {
        csv.push_str(&format!("{i},{l},{p},{f}\n"));
    }
    ctx.write("predictions.csv", &csv)?;
    let perf = report(&rep.tally, &ctx.params);
    ctx.write("perf.json", &format!("{}\n", perf.to_json()))?;
    println!("{qor}");
    Ok(())
}

#[derive(Debug, Args)]
pub struct ConvArgs {
    /// Input image (PNG or PGM, converted to 8-bit gray)
    #[arg(long, conflicts_with = "random")]
    image: Option<PathBuf>,
    /// Random image of the given size, e.g. 64x64 (uses the run seed)
    #[arg(long)]
    random: Option<String>,
    /// smoothing or edge
    #[arg(long, default_value = "edge")]
    kernel: ConvKernel,
}

#[derive(Serialize)]
struct ConvSummary {
    kernel: String,
    spec: String,
    width: usize,
    height: usize,
    /// Absent when the output equals the exact reference.
    psnr_db: Option<f64>,
    note: Option<String>,
    op_counts: OpTally,
}

fn parse_size(s: &str) -> Result<(usize, usize)> {
    let bad = || CliError::usage(format!("expected WxH, got {s:?}"));
    let (w, h) = s.split_once('x').ok_or_else(bad)?;
    let w: usize = w.parse().map_err(|_| bad())?;
    let h: usize = h.parse().map_err(|_| bad())?;
    if w == 0 || h == 0 {
        return Err(bad());
    }
    Ok((w, h))
}

fn save_gray(ctx: &Context, name: &str, img: &GrayImage) -> Result<PathBuf> {
    let path = ctx.output(name)?;
    let buf = image::GrayImage::from_raw(img.width as u32, img.height as u32, img.pixels.clone())
        .ok_or_else(|| CliError::runtime("image buffer size mismatch"))?;
    buf.save(&path)?;
    Ok(path)
}

pub fn demo_conv(ctx: &Context, args: ConvArgs) -> Result<()> {
    let img = match (&args.image, &args.random) {
        (Some(path), _) => {
            let gray = image::open(path)
                .map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?
                .to_luma8();
            GrayImage::new(gray.width() as usize, gray.height() as usize, gray.into_raw())?
        }
        (None, r) => {
            let (w, h) = parse_size(r.as_deref().unwrap_or("64x64"))?;
            GrayImage::random(w, h, ctx.seed)
        }
    };
    let demo = conv_demo(&img, args.kernel, &ctx.spec)?;
    save_gray(ctx, "conv_output.png", &demo.output)?;
    save_gray(ctx, "conv_reference.png", &demo.reference)?;
    let summary = ConvSummary {
        kernel: args.kernel.to_string(),
        spec: ctx.spec.label.clone(),
        width: img.width,
        height: img.height,
        psnr_db: demo.psnr_db.is_finite().then_some(demo.psnr_db),
        note: demo.note.clone(),
        op_counts: demo.tally,
    };
    let json = serde_json::to_string_pretty(&summary)?;
    ctx.write("conv.json", &format!("{json}\n"))?;
    match demo.note {
        Some(note) => println!("PSNR inf ({note})"),
        None => println!("PSNR {:.2} dB", demo.psnr_db),
    }
    Ok(())
}
