//! `oucr`: command-line front end of the reconstruction engine.

mod commands;
mod config;
mod preview;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use oucr::cs::Regularizer;
use oucr::eval::BandGeometry;
use oucr::training::LossKind;

use config::Precision;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Core(oucr::Error),
}

impl From<oucr::Error> for CliError {
    fn from(e: oucr::Error) -> Self {
        CliError::Core(e)
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Core(e) => match e.class() {
                oucr::ErrorClass::Usage => 2,
                oucr::ErrorClass::Data => 3,
                oucr::ErrorClass::Numeric => 4,
            },
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "oucr", version, about = "Undersampled MRI reconstruction with over- and under-complete recurrent networks")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Debug, Clone, Default)]
pub struct Common {
    /// JSON run configuration; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum)]
    pub precision: Option<Precision>,
}

#[derive(Args, Debug, Clone, Default)]
pub struct ModelFlags {
    #[arg(long)]
    pub base_channels: Option<usize>,
    /// Unrolled iterations J.
    #[arg(long)]
    pub iterations: Option<usize>,
    #[arg(long)]
    pub no_oc: bool,
    #[arg(long)]
    pub no_uc: bool,
    #[arg(long)]
    pub no_rm: bool,
    /// Feed the decoder output to data consistency without adding the estimate.
    #[arg(long)]
    pub no_residual: bool,
}

#[derive(Args, Debug, Clone, Default)]
pub struct MaskFlags {
    #[arg(long)]
    pub h: Option<usize>,
    #[arg(long)]
    pub w: Option<usize>,
    /// Acceleration factor.
    #[arg(long)]
    pub af: Option<f64>,
    #[arg(long)]
    pub center_fraction: Option<f64>,
    /// Use this mask file instead of generating one.
    #[arg(long)]
    pub mask_file: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Default)]
pub struct BandFlags {
    /// Low band radius as a fraction of min(H, W) / 2.
    #[arg(long)]
    pub radius: Option<f64>,
    #[arg(long, value_enum)]
    pub geometry: Option<GeometryArg>,
}

#[derive(clap::ValueEnum, Debug, Clone, Copy)]
pub enum GeometryArg {
    Disc,
    Square,
    Columns,
}

impl From<GeometryArg> for BandGeometry {
    fn from(g: GeometryArg) -> Self {
        match g {
            GeometryArg::Disc => BandGeometry::Disc,
            GeometryArg::Square => BandGeometry::Square,
            GeometryArg::Columns => BandGeometry::Columns,
        }
    }
}

#[derive(clap::ValueEnum, Debug, Clone, Copy)]
pub enum LossArg {
    Complex,
    Magnitude,
}

#[derive(clap::ValueEnum, Debug, Clone, Copy)]
pub enum RegArg {
    Tv,
    Wavelet,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Generate synthetic phantoms split into train/val/test datasets.
    GenData {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        count: Option<usize>,
        #[arg(long)]
        h: Option<usize>,
        #[arg(long)]
        w: Option<usize>,
        #[arg(long)]
        complexity: Option<u32>,
    },
    /// Generate a Cartesian column mask.
    Mask {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        mask: MaskFlags,
    },
    /// Train a model.
    Train {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        model: ModelFlags,
        #[command(flatten)]
        mask: MaskFlags,
        /// Dataset root holding train/ and val/, or a single dataset directory.
        #[arg(long)]
        data: Option<PathBuf>,
        /// Validation dataset when --data points at a single dataset.
        #[arg(long)]
        val_data: Option<PathBuf>,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        lr: Option<f64>,
        #[arg(long)]
        batch_size: Option<usize>,
        #[arg(long)]
        mask_per_sample: bool,
        #[arg(long, value_enum)]
        loss: Option<LossArg>,
        #[arg(long)]
        no_clip: bool,
        /// Continue from `<out>/last` if it exists.
        #[arg(long)]
        resume: bool,
    },
    /// Reconstruct a dataset with a trained model (or zero filling).
    Reconstruct {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        mask: MaskFlags,
        #[arg(long)]
        data: Option<PathBuf>,
        /// Training output directory.
        #[arg(long, conflicts_with = "zero_filled")]
        checkpoint: Option<PathBuf>,
        /// Checkpoint stem inside the training directory.
        #[arg(long, default_value = "best")]
        stem: String,
        /// Zero-filled baseline instead of a network.
        #[arg(long)]
        zero_filled: bool,
        #[arg(long)]
        no_png: bool,
    },
    /// Compare reconstructions with references: per-image CSV and JSON summary.
    Eval {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        bands: BandFlags,
        #[arg(long)]
        recon: Option<PathBuf>,
        #[arg(long)]
        reference: Option<PathBuf>,
        #[arg(long, default_value = "recon")]
        method: String,
        #[arg(long)]
        af: Option<f64>,
    },
    /// Low / high frequency band metrics.
    Kband {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        bands: BandFlags,
        #[arg(long)]
        recon: Option<PathBuf>,
        #[arg(long)]
        reference: Option<PathBuf>,
    },
    /// Compressed-sensing baseline reconstructions.
    Cs {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        mask: MaskFlags,
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long)]
        lambda: Option<f64>,
        #[arg(long, value_enum)]
        regularizer: Option<RegArg>,
        #[arg(long)]
        max_iters: Option<usize>,
        #[arg(long)]
        step: Option<f64>,
        #[arg(long)]
        tolerance: Option<f64>,
        /// Write the objective trace of every sample.
        #[arg(long)]
        trace: bool,
        #[arg(long)]
        no_png: bool,
    },
    /// Receptive-field bounding boxes of the OC and UC encoder prefixes.
    RfProbe {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 2)]
        depth: usize,
        #[arg(long, default_value_t = 64)]
        size: usize,
    },
    /// Number of trainable parameters of a configuration.
    ParamCount {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        model: ModelFlags,
    },
}

fn dispatch(cmd: Cmd) -> Result<(), CliError> {
    match cmd {
        Cmd::GenData { common, count, h, w, complexity } => commands::gen_data(&common, count, h, w, complexity),
        Cmd::Mask { common, mask } => commands::mask(&common, &mask),
        Cmd::Train {
            common,
            model,
            mask,
            data,
            val_data,
            epochs,
            lr,
            batch_size,
            mask_per_sample,
            loss,
            no_clip,
            resume,
        } => {
            let t = commands::TrainFlags {
                data,
                val_data,
                epochs,
                lr,
                batch_size,
                mask_per_sample,
                loss: loss.map(|l| match l {
                    LossArg::Complex => LossKind::Complex,
                    LossArg::Magnitude => LossKind::Magnitude,
                }),
                no_clip,
                resume,
            };
            commands::train(&common, &model, &mask, &t)
        }
        Cmd::Reconstruct { common, mask, data, checkpoint, stem, zero_filled, no_png } => {
            commands::reconstruct(&common, &mask, data, checkpoint, &stem, zero_filled, no_png)
        }
        Cmd::Eval { common, bands, recon, reference, method, af } => {
            commands::eval(&common, &bands, recon, reference, &method, af)
        }
        Cmd::Kband { common, bands, recon, reference } => commands::kband(&common, &bands, recon, reference),
        Cmd::Cs { common, mask, data, lambda, regularizer, max_iters, step, tolerance, trace, no_png } => {
            let c = commands::CsFlags {
                lambda,
                regularizer: regularizer.map(|r| match r {
                    RegArg::Tv => Regularizer::Tv,
                    RegArg::Wavelet => Regularizer::Wavelet,
                }),
                max_iters,
                step,
                tolerance,
                trace,
                no_png,
            };
            commands::cs(&common, &mask, data, &c)
        }
        Cmd::RfProbe { common, depth, size } => commands::rf_probe(&common, depth, size),
        Cmd::ParamCount { common, model } => commands::param_count_cmd(&common, &model),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("oucr: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
