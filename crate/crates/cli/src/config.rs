//! Run configuration: defaults, then a JSON file, then command-line flags.

use std::fs;
use std::path::{Path, PathBuf};

use oucr::cs::CsConfig;
use oucr::eval::BandGeometry;
use oucr::model::ModelConfig;
use oucr::training::TrainConfig;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    F32,
    #[default]
    F64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MaskParams {
    pub h: usize,
    pub w: usize,
    pub af: f64,
    /// `None` picks 0.08 for AF <= 4 and 0.04 above.
    pub center_fraction: Option<f64>,
}

impl Default for MaskParams {
    fn default() -> Self {
        Self { h: 32, w: 32, af: 4.0, center_fraction: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhantomParams {
    pub count: usize,
    pub h: usize,
    pub w: usize,
    pub complexity: u32,
    pub fractions: [f64; 3],
}

impl Default for PhantomParams {
    fn default() -> Self {
        Self { count: 200, h: 32, w: 32, complexity: 2, fractions: oucr::data::DEFAULT_FRACTIONS }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BandParams {
    pub radius_fraction: f64,
    pub geometry: BandGeometry,
}

impl Default for BandParams {
    fn default() -> Self {
        Self { radius_fraction: oucr::eval::DEFAULT_RADIUS_FRACTION, geometry: BandGeometry::Disc }
    }
}

/// Everything a subcommand may consult. `seed` drives the phantom set, the
/// split, the mask and the training run alike.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub precision: Precision,
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub cs: CsConfig,
    pub mask: MaskParams,
    pub phantom: PhantomParams,
    pub bands: BandParams,
    pub data: Option<PathBuf>,
    pub val_data: Option<PathBuf>,
    pub reference: Option<PathBuf>,
    pub checkpoint: Option<PathBuf>,
    pub mask_file: Option<PathBuf>,
    pub out: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            precision: Precision::F64,
            model: ModelConfig::default(),
            train: TrainConfig::default(),
            cs: CsConfig::default(),
            mask: MaskParams::default(),
            phantom: PhantomParams::default(),
            bands: BandParams::default(),
            data: None,
            val_data: None,
            reference: None,
            checkpoint: None,
            mask_file: None,
            out: None,
        }
    }
}

fn nested<'a>(v: &'a serde_json::Value, a: &str, b: &str) -> Option<&'a serde_json::Value> {
    v.get(a).and_then(|x| x.get(b))
}

impl RunConfig {
    /// Defaults overlaid with the JSON file, if any. `train.seed` and
    /// `train.acceleration` mirror `seed` and `mask.af`; a file that sets
    /// both sides to different values is a conflict.
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else { return Ok(Self::default()) };
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        let raw: serde_json::Value = serde_json::from_str(&text)
            .map_err(|e| CliError::Usage(format!("config {} is not valid JSON: {e}", path.display())))?;
        let cfg: RunConfig = serde_json::from_value(raw.clone())
            .map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))?;
        if raw.get("seed").is_some() && nested(&raw, "train", "seed").is_some() && cfg.train.seed != cfg.seed {
            return Err(CliError::Usage(format!(
                "config conflict: seed {} vs train.seed {}",
                cfg.seed, cfg.train.seed
            )));
        }
        if nested(&raw, "mask", "af").is_some()
            && nested(&raw, "train", "acceleration").is_some()
            && cfg.train.acceleration != cfg.mask.af
        {
            return Err(CliError::Usage(format!(
                "config conflict: mask.af {} vs train.acceleration {}",
                cfg.mask.af, cfg.train.acceleration
            )));
        }
        let mut cfg = cfg;
        if raw.get("seed").is_none() && nested(&raw, "train", "seed").is_some() {
            cfg.seed = cfg.train.seed;
        }
        if nested(&raw, "mask", "af").is_none() && nested(&raw, "train", "acceleration").is_some() {
            cfg.mask.af = cfg.train.acceleration;
        }
        Ok(cfg)
    }

    /// Propagates the shared fields and validates the result.
    pub fn finish(mut self) -> Result<Self, CliError> {
        self.train.seed = self.seed;
        self.train.acceleration = self.mask.af;
        self.model.validate().map_err(|e| CliError::Usage(e.to_string()))?;
        self.train.validate().map_err(|e| CliError::Usage(e.to_string()))?;
        self.cs.validate().map_err(|e| CliError::Usage(e.to_string()))?;
        Ok(self)
    }

    /// Writes `run_config.json` (tool version, subcommand, resolved config).
    pub fn record(&self, dir: &Path, command: &str) -> Result<(), CliError> {
        fs::create_dir_all(dir).map_err(oucr::Error::from)?;
        let doc = serde_json::json!({
            "tool": "oucr",
            "version": oucr::VERSION,
            "command": command,
            "config": self,
        });
        fs::write(dir.join("run_config.json"), serde_json::to_string_pretty(&doc).expect("serializable"))
            .map_err(oucr::Error::from)?;
        Ok(())
    }
}
