use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use egostereo::eval::{self, BadPixelStats, MetricMode, Record};
use egostereo::kitti;
use egostereo::kv::parse_override;
use egostereo::pipeline::{self, ConfigBuilder};
use egostereo::synth::{self, SequenceNoise};

/// Temporal stereo disparity estimation with an ego-motion reduced search
/// space.
#[derive(Debug, Parser)]
#[command(name = "egostereo", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the predict, match and fuse loop over a sequence.
    Run(RunArgs),
    /// Render a synthetic sequence to disk in the on-disk sequence layout.
    Synth(SynthArgs),
    /// Bad-pixel metrics between two directories of disparity PNGs.
    Eval(EvalArgs),
    /// Red/blue error images (red bad, blue good) for two disparity
    /// directories.
    RenderErrors(RenderArgs),
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Key-value config file; relative paths inside resolve against its
    /// directory.
    #[arg(short, long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(short, long)]
    out: PathBuf,
    /// Override a config key, e.g. `--set sgm.p2=120`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Full-range SGM on every frame, for comparison.
    #[arg(long)]
    baseline_sgm: bool,
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[arg(long)]
    scene: PathBuf,
    #[arg(long)]
    trajectory: PathBuf,
    #[arg(short, long)]
    out: PathBuf,
    /// Seed of the odometry and image noise.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Image noise standard deviation (intensity levels).
    #[arg(long, default_value_t = 0.0)]
    image_noise: f64,
    /// Per-axis rotation noise of the reported motion (degrees).
    #[arg(long, default_value_t = 0.0)]
    rotation_noise_deg: f64,
    /// Per-axis translation noise of the reported motion (metres).
    #[arg(long, default_value_t = 0.0)]
    translation_noise: f64,
}

#[derive(Debug, Args)]
struct EvalArgs {
    /// Directory of estimated disparity PNGs.
    #[arg(long)]
    estimated: PathBuf,
    /// Directory of ground-truth disparity PNGs; every file needs an
    /// estimate of the same name.
    #[arg(long)]
    ground_truth: PathBuf,
    /// Write the key=value summary here as well as to stdout.
    #[arg(long)]
    summary: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct RenderArgs {
    #[arg(long)]
    estimated: PathBuf,
    #[arg(long)]
    ground_truth: PathBuf,
    #[arg(short, long)]
    out: PathBuf,
    /// Threshold rule: `or` (either threshold) or `and` (both).
    #[arg(long, default_value = "or")]
    mode: String,
}

fn run(args: &RunArgs) -> Result<()> {
    let mut builder = ConfigBuilder::new();
    if let Some(path) = &args.config {
        builder.read_file(path)?;
    }
    for o in &args.overrides {
        let (k, v) = parse_override(o)?;
        builder.set(&k, &v, Path::new(""))?;
    }
    if args.baseline_sgm {
        builder.set("baseline_sgm", "true", Path::new(""))?;
    }
    let config = builder.build()?;
    let summary = pipeline::run_pipeline(&config, Some(&args.out))?;
    print!("{}", summary.summary.lines());
    Ok(())
}

fn synth(args: &SynthArgs) -> Result<()> {
    let scene = synth::read_scene(&args.scene)?;
    let trajectory = synth::read_trajectory(&args.trajectory)?;
    let noise = SequenceNoise {
        rotation_sigma: args.rotation_noise_deg.to_radians(),
        translation_sigma: args.translation_noise,
        image_sigma: args.image_noise,
        seed: args.seed,
    };
    let frames = synth::make_sequence(&scene, &trajectory, &noise)?;
    pipeline::write_synthetic_sequence(&frames, &scene.rig, &args.out)?;
    println!("wrote {} frames to {}", frames.len(), args.out.display());
    Ok(())
}

/// Ground-truth files paired with the estimate of the same name.
fn paired_files(estimated: &Path, ground_truth: &Path) -> Result<Vec<(String, PathBuf, PathBuf)>> {
    let gt = kitti::list_pngs(ground_truth)?;
    if gt.is_empty() {
        bail!("{} holds no PNG files", ground_truth.display());
    }
    gt.into_iter()
        .map(|g| {
            let file = g.file_name().context("unnamed file")?.to_owned();
            let e = estimated.join(&file);
            if !e.exists() {
                bail!("no estimate {} for ground truth {}", e.display(), g.display());
            }
            Ok((file.to_string_lossy().into_owned(), e, g))
        })
        .collect()
}

fn evaluate(args: &EvalArgs) -> Result<()> {
    let mut totals = [BadPixelStats::default(); 2];
    let mut rates = [[0.0f64; 2]; 2];
    let pairs = paired_files(&args.estimated, &args.ground_truth)?;
    for (name, e, g) in &pairs {
        let (est, gt) = (kitti::read_disparity_png(e)?, kitti::read_disparity_png(g)?);
        let mut r = Record::new();
        r.push("file", name).push_fraction("density", eval::density(&est));
        for (i, mode) in MetricMode::ALL.into_iter().enumerate() {
            let s = eval::bad_pixel_rate(&est, &gt, mode)?;
            eval::push_stats(&mut r, &format!("bad_{mode}"), &s);
            totals[i] = totals[i].merge(&s);
            rates[i][0] += s.rate();
            rates[i][1] += s.rate_with_missing();
        }
        println!("{}", r.line());
    }
    let n = pairs.len() as f64;
    let mut summary = Record::new();
    summary.push("files", pairs.len());
    for (i, mode) in MetricMode::ALL.into_iter().enumerate() {
        summary
            .push_fraction(format!("mean_bad_{mode}_rate"), rates[i][0] / n)
            .push_fraction(format!("mean_bad_{mode}_rate_all"), rates[i][1] / n)
            .push_fraction(format!("pooled_bad_{mode}_rate"), totals[i].rate())
            .push_fraction(format!("pooled_bad_{mode}_density"), totals[i].density());
    }
    print!("{}", summary.lines());
    if let Some(path) = &args.summary {
        std::fs::write(path, summary.lines()).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

fn render_errors(args: &RenderArgs) -> Result<()> {
    let mode: MetricMode = args.mode.parse()?;
    std::fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    let pairs = paired_files(&args.estimated, &args.ground_truth)?;
    for (name, e, g) in &pairs {
        let (est, gt) = (kitti::read_disparity_png(e)?, kitti::read_disparity_png(g)?);
        eval::write_error_png(&est, &gt, mode, args.out.join(name))?;
    }
    println!("wrote {} error images to {}", pairs.len(), args.out.display());
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(a) => run(a),
        Command::Synth(a) => synth(a),
        Command::Eval(a) => evaluate(a),
        Command::RenderErrors(a) => render_errors(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
