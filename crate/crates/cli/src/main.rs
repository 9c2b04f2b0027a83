//! `mvd`: voxel super-resolution from orthographic depth maps.
//!
//! Exit codes: 0 on success, 1 for invalid input or configuration, 2 for
//! unreadable, malformed or mismatched files and usage errors.

mod config;
mod dataset;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use mvd::carving::CarveConfig;
use mvd::metrics::{exposed_face_mesh, f1_surface, iou, EvalReport, DEFAULT_SAMPLES, DEFAULT_THRESHOLD_SQ};
use mvd::pipeline::super_resolve;
use mvd::predictor::{train_with, Ablation, ModelConfig, Predictor, PredictorModel, TrainConfig, DEFAULT_SIL_THRESHOLD};
use mvd::{extract_all, rasterize, ShapeSpec, VoxelGrid};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use config::{Config, ConfigError};

#[derive(Parser)]
#[command(name = "mvd", version, about = "Voxel super-resolution from six orthographic depth maps")]
struct Cli {
    /// Flat key=value file supplying defaults for the numeric flags.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Rasterize and solidify a JSON shape description.
    Gen {
        spec: PathBuf,
        #[arg(long, value_parser = clap::value_parser!(u32).range(1..=mvd::voxel::MAX_RESOLUTION as i64))]
        res: u32,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Write the six depth maps of a voxel file as <view>.mvdo.
    Odms {
        voxels: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Super-resolve a voxel file by predicting depth maps and carving.
    Carve {
        voxels: PathBuf,
        #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
        factor: u32,
        /// `baseline`, `oracle` or a model checkpoint path.
        #[arg(long, default_value = "baseline")]
        predictor: String,
        /// Directory of ground-truth <view>.mvdo files for the oracle.
        #[arg(long)]
        gt: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = AblationArg::Both)]
        ablation: AblationArg,
        #[arg(long)]
        smoothing_radius: Option<usize>,
        #[arg(long)]
        smoothing_threshold: Option<f64>,
        #[arg(long)]
        agreement_votes: Option<usize>,
        #[arg(long)]
        sil_threshold: Option<f64>,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Train both networks on a directory with low/ and high/ map files.
    Train {
        dataset: PathBuf,
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long)]
        batch_size: Option<usize>,
        #[arg(long)]
        learning_rate: Option<f64>,
        #[arg(long)]
        width: Option<usize>,
        #[arg(long)]
        convs: Option<usize>,
        #[arg(long)]
        lambda_tv: Option<f64>,
        #[arg(long)]
        range_r: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
        /// Reshuffle the pairs every epoch (`true`) or keep the first order.
        #[arg(long)]
        reshuffle: Option<bool>,
        /// Per-step loss CSV; defaults to the checkpoint path with `.csv` appended.
        #[arg(long)]
        loss_log: Option<PathBuf>,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Compare a predicted voxel file with ground truth.
    Eval {
        pred: PathBuf,
        gt: PathBuf,
        #[arg(long, value_enum, default_value_t = Metric::Iou)]
        metric: Metric,
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        threshold_sq: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_enum, default_value_t = Format::Kv)]
        format: Format,
        /// Category column of CSV output.
        #[arg(long, default_value = "all")]
        category: String,
    },
    /// Export the exposed faces of a voxel file as Wavefront OBJ.
    ExportObj { voxels: PathBuf, out: PathBuf },
    /// Generate random shapes with their grids and depth maps at two resolutions.
    Synth {
        #[arg(long, default_value_t = 100)]
        count: usize,
        #[arg(long, default_value_t = 16)]
        low_res: usize,
        #[arg(long, default_value_t = 4)]
        factor: usize,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(short, long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum AblationArg {
    Both,
    Silhouette,
    Depth,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum Metric {
    Iou,
    F1,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum Format {
    Kv,
    Csv,
}

fn read(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).with_context(|| format!("reading {}", path.display()))
}

fn write(path: &Path, bytes: impl AsRef<[u8]>) -> Result<()> {
    std::fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
}

fn read_grid(path: &Path) -> Result<VoxelGrid> {
    VoxelGrid::decode(&read(path)?).with_context(|| format!("decoding {}", path.display()))
}

fn run(cli: Cli) -> Result<()> {
    let cfg = Config::load(cli.config.as_deref())?;
    match cli.command {
        Command::Gen { spec, res, out } => {
            let text = std::fs::read_to_string(&spec).with_context(|| format!("reading {}", spec.display()))?;
            let shape: ShapeSpec = serde_json::from_str(&text)
                .map_err(|e| ConfigError(format!("{}: invalid shape: {e}", spec.display())))?;
            let grid = rasterize(&shape, res as usize)?.solidify();
            write(&out, grid.encode())
        }
        Command::Odms { voxels, out } => {
            let grid = read_grid(&voxels)?;
            std::fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
            dataset::write_odm_dir(&out, &extract_all(&grid))
        }
        Command::Carve {
            voxels,
            factor,
            predictor,
            gt,
            ablation,
            smoothing_radius,
            smoothing_threshold,
            agreement_votes,
            sil_threshold,
            out,
        } => {
            let factor = factor as usize;
            let low = read_grid(&voxels)?;
            let defaults = CarveConfig::new(factor);
            let carve_cfg = CarveConfig {
                smoothing_radius: cfg.resolve("smoothing_radius", smoothing_radius, defaults.smoothing_radius)?,
                smoothing_threshold: cfg.resolve("smoothing_threshold", smoothing_threshold, defaults.smoothing_threshold)?,
                agreement_votes: cfg.resolve("agreement_votes", agreement_votes, defaults.agreement_votes)?,
                factor,
            };
            let threshold = cfg.resolve("sil_threshold", sil_threshold, DEFAULT_SIL_THRESHOLD)?;
            let truth;
            let model;
            let predictor = match predictor.as_str() {
                "baseline" => Predictor::Baseline { factor },
                "oracle" => {
                    let dir = gt.ok_or_else(|| ConfigError("--predictor oracle needs --gt".into()))?;
                    truth = dataset::read_odm_dir(&dir)?;
                    Predictor::Oracle { truth: &truth }
                }
                path => {
                    let path = Path::new(path);
                    model = PredictorModel::decode(&read(path)?).with_context(|| format!("decoding {}", path.display()))?;
                    if model.factor != factor {
                        bail!(ConfigError(format!("model up-scales by {}, --factor is {factor}", model.factor)));
                    }
                    Predictor::Learned {
                        model: &model,
                        ablation: match ablation {
                            AblationArg::Both => Ablation::Both,
                            AblationArg::Silhouette => Ablation::SilhouetteOnly,
                            AblationArg::Depth => Ablation::DepthOnly,
                        },
                        threshold,
                    }
                }
            };
            let high = super_resolve(&low, &predictor, &carve_cfg)?;
            write(&out, high.encode())
        }
        Command::Train {
            dataset,
            steps,
            batch_size,
            learning_rate,
            width,
            convs,
            lambda_tv,
            range_r,
            seed,
            reshuffle,
            loss_log,
            out,
        } => {
            let pairs = dataset::read_pairs(&dataset)?;
            let factor = pairs[0].high.resolution() / pairs[0].low.resolution();
            let base = ModelConfig::new(factor.max(1));
            let model_cfg = ModelConfig {
                range_r: cfg.resolve_opt("range_r", range_r)?,
                lambda_tv: cfg.resolve("lambda_tv", lambda_tv, base.lambda_tv)?,
                width: cfg.resolve("width", width, base.width)?,
                convs: cfg.resolve("convs", convs, base.convs)?,
                ..base
            };
            let defaults = TrainConfig::default();
            let train_cfg = TrainConfig {
                steps: cfg.resolve("steps", steps, defaults.steps)?,
                batch_size: cfg.resolve("batch_size", batch_size, defaults.batch_size)?,
                learning_rate: cfg.resolve("learning_rate", learning_rate, defaults.learning_rate)?,
                seed: cfg.resolve("seed", seed, defaults.seed)?,
                reshuffle: cfg.resolve("reshuffle", reshuffle, defaults.reshuffle)?,
            };
            let init = PredictorModel::init(&model_cfg, &mut ChaCha8Rng::seed_from_u64(train_cfg.seed))?;
            let (model, report) = train_with(&init, &pairs, &train_cfg, |_, _, _| {})?;
            write(&out, model.encode())?;
            let log = loss_log.unwrap_or_else(|| {
                let mut p = out.clone().into_os_string();
                p.push(".csv");
                p.into()
            });
            write(&log, report.to_csv())?;
            if let (Some(s), Some(d)) = (report.sil.last(), report.depth.last()) {
                eprintln!("trained {} steps on {} pairs; final losses {s:.6} {d:.6}", train_cfg.steps, pairs.len());
            }
            Ok(())
        }
        Command::Eval {
            pred,
            gt,
            metric,
            samples,
            threshold_sq,
            seed,
            format,
            category,
        } => {
            let p = read_grid(&pred)?;
            let g = read_grid(&gt)?;
            let report = match metric {
                Metric::Iou => EvalReport::from_iou(iou(&p, &g)?),
                Metric::F1 => f1_surface(
                    &p,
                    &g,
                    cfg.resolve("samples", samples, DEFAULT_SAMPLES)?,
                    cfg.resolve("threshold_sq", threshold_sq, DEFAULT_THRESHOLD_SQ)?,
                    cfg.resolve("seed", seed, 0)?,
                )?,
            };
            match format {
                Format::Kv => print!("{}", report.to_kv()),
                Format::Csv => print!("{}\n{}", EvalReport::CSV_HEADER, report.to_csv_rows(&category)),
            }
            Ok(())
        }
        Command::ExportObj { voxels, out } => {
            let grid = read_grid(&voxels)?;
            if grid.is_empty() {
                eprintln!("warning: {} has no occupied voxels; writing an empty mesh", voxels.display());
            }
            write(&out, exposed_face_mesh(&grid).to_obj())
        }
        Command::Synth {
            count,
            low_res,
            factor,
            seed,
            out,
        } => {
            let seed = cfg.resolve("seed", seed, 0)?;
            let objects = mvd::pipeline::synthetic_objects(count, low_res, factor, seed)?;
            dataset::write_synthetic(&out, &objects)
        }
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<mvd::Error>() {
            return match e {
                mvd::Error::Io(_) | mvd::Error::Format { .. } | mvd::Error::Shape(_) => 2,
                _ => 1,
            };
        }
        if cause.is::<std::io::Error>() {
            return 2;
        }
        if cause.is::<ConfigError>() {
            return 1;
        }
    }
    1
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

