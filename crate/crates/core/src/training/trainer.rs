use std::fs;
use std::path::Path;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::adam::{adam_step, AdamHyper, OptimState};
use super::config::{lr_schedule, LossKind, TrainConfig};
use crate::data::{normalize, Sample};
use crate::error::{shape_err, Error, Result};
use crate::eval::{psnr, ssim};
use crate::image::ComplexImage;
use crate::kspace::{forward_encode, mask_generate, KSpaceData, Mask};
use crate::model::{load_tensors, save_tensors, ModelConfig, Oucr, ParamSet};
use crate::parallel::{thread_count, try_map_ordered};
use crate::scalar::Scalar;
use crate::tensor::Graph;

/// One row of the per-epoch metrics log.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochMetrics {
    pub epoch: usize,
    pub lr: f64,
    pub train_l1: f64,
    #[serde(with = "crate::json::f64_any")]
    pub val_psnr: f64,
    #[serde(with = "crate::json::f64_any")]
    pub val_ssim: f64,
    pub wall_seconds: f64,
}

/// Contents of `{stem}.state.json` next to a training checkpoint.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TrainerState {
    pub version: String,
    pub dtype: String,
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub next_epoch: usize,
    pub step: u64,
    pub best_epoch: Option<usize>,
    #[serde(with = "crate::json::f64_any")]
    pub best_val_psnr: f64,
    pub mask_h: usize,
    pub mask_columns: Vec<bool>,
    pub history: Vec<EpochMetrics>,
}

impl TrainerState {
    pub fn read(dir: &Path, stem: &str) -> Result<Self> {
        let path = dir.join(format!("{stem}.state.json"));
        serde_json::from_slice(&fs::read(&path)?)
            .map_err(|e| Error::CorruptManifest(format!("{}: {e}", path.display())))
    }

    /// The fixed training mask.
    pub fn mask(&self) -> Mask {
        Mask::from_columns(self.mask_h, self.mask_columns.clone())
    }
}

/// Mixes `(seed, a, b)` into a fresh 64-bit seed (SplitMix64 finalizer).
fn derive_seed(seed: u64, a: u64, b: u64) -> u64 {
    let mut z = seed ^ a.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ b.wrapping_mul(0xD1B5_4A32_D192_ED03);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Owns the model parameters, optimizer state and data of one training run.
pub struct Trainer<T: Scalar> {
    net: Oucr,
    cfg: TrainConfig,
    params: ParamSet<T>,
    opt: OptimState<T>,
    mask: Mask,
    train: Vec<Sample<T>>,
    val: Vec<Sample<T>>,
    train_x: Vec<KSpaceData<T>>,
    val_x: Vec<KSpaceData<T>>,
    next_epoch: usize,
    best_epoch: Option<usize>,
    best_val_psnr: f64,
    history: Vec<EpochMetrics>,
    threads: usize,
}

impl<T: Scalar> Trainer<T> {
    /// Fresh run: parameters and the fixed mask are drawn from `cfg.seed`.
    pub fn new(model: &ModelConfig, cfg: &TrainConfig, train: Vec<Sample<T>>, val: Vec<Sample<T>>) -> Result<Self> {
        cfg.validate()?;
        let net = Oucr::new(model)?;
        if train.is_empty() {
            return Err(Error::InvalidArgument("training set is empty".into()));
        }
        let (h, w) = train[0].target.dims();
        if let Some(s) = train.iter().chain(&val).find(|s| s.target.dims() != (h, w)) {
            return Err(shape_err!("sample `{}` is {:?}, expected {:?}", s.id, s.target.dims(), (h, w)));
        }
        if h % 4 != 0 || w % 4 != 0 {
            return Err(shape_err!("spatial dims must be divisible by 4, got {h}x{w}"));
        }
        let prep = |v: Vec<Sample<T>>| -> Result<Vec<Sample<T>>> {
            if cfg.normalize {
                v.iter().map(normalize).collect()
            } else {
                Ok(v)
            }
        };
        let (train, val) = (prep(train)?, prep(val)?);
        let mask = mask_generate(h, w, cfg.acceleration, cfg.seed)?;
        let params = net.init_params::<T>(cfg.seed);
        let opt = OptimState::new(&params);
        let mut t = Self {
            net,
            cfg: cfg.clone(),
            params,
            opt,
            mask,
            train,
            val,
            train_x: Vec::new(),
            val_x: Vec::new(),
            next_epoch: 0,
            best_epoch: None,
            best_val_psnr: f64::NEG_INFINITY,
            history: Vec::new(),
            threads: thread_count(),
        };
        t.encode_all()?;
        Ok(t)
    }

    fn encode_all(&mut self) -> Result<()> {
        self.train_x = self.train.iter().map(|s| forward_encode(&s.target, &self.mask)).collect::<Result<_>>()?;
        self.val_x = self.val.iter().map(|s| forward_encode(&s.target, &self.mask)).collect::<Result<_>>()?;
        Ok(())
    }

    /// Replaces the fixed mask (e.g. with one loaded from disk).
    pub fn set_mask(&mut self, mask: Mask) -> Result<()> {
        if mask.dims() != self.mask.dims() {
            return Err(shape_err!("mask {:?} vs data {:?}", mask.dims(), self.mask.dims()));
        }
        self.mask = mask;
        self.encode_all()
    }

    /// Worker threads for per-sample gradients; results are summed in sample
    /// order so the count does not change the numbers.
    pub fn set_threads(&mut self, n: usize) {
        self.threads = n.max(1);
    }

    pub fn set_max_epochs(&mut self, n: usize) {
        self.cfg.max_epochs = n;
    }

    pub fn params(&self) -> &ParamSet<T> {
        &self.params
    }

    /// Replaces the parameters (names and shapes must match the model).
    pub fn set_params(&mut self, params: ParamSet<T>) -> Result<()> {
        check_matches(&self.net.zero_params::<T>(), &params, "parameters")?;
        self.params = params;
        Ok(())
    }

    pub fn optim_state(&self) -> &OptimState<T> {
        &self.opt
    }

    pub fn mask(&self) -> &Mask {
        &self.mask
    }

    pub fn model_config(&self) -> &ModelConfig {
        self.net.config()
    }

    pub fn train_config(&self) -> &TrainConfig {
        &self.cfg
    }

    pub fn history(&self) -> &[EpochMetrics] {
        &self.history
    }

    pub fn next_epoch(&self) -> usize {
        self.next_epoch
    }

    pub fn best_epoch(&self) -> Option<usize> {
        self.best_epoch
    }

    fn hyper(&self) -> AdamHyper {
        AdamHyper { beta1: self.cfg.beta1, beta2: self.cfg.beta2, eps: self.cfg.eps }
    }

    fn sample_mask(&self, epoch: usize, index: usize) -> Result<Mask> {
        let (h, w) = self.mask.dims();
        mask_generate(h, w, self.cfg.acceleration, derive_seed(self.cfg.seed, epoch as u64 + 1, index as u64))
    }

    /// Loss and parameter gradients of one training sample.
    pub fn sample_gradient(&self, index: usize, epoch: usize) -> Result<(f64, ParamSet<T>)> {
        let sample = &self.train[index];
        let owned;
        let (x, mask) = if self.cfg.mask_per_sample {
            let m = self.sample_mask(epoch, index)?;
            owned = (forward_encode(&sample.target, &m)?, m);
            (&owned.0, &owned.1)
        } else {
            (&self.train_x[index], &self.mask)
        };
        let mut g = Graph::new();
        let bound = self.params.bind(&mut g, true);
        let pred = self.net.forward_node(&mut g, &bound, x, mask)?;
        let target = g.constant(sample.target.tensor().clone());
        let loss = match self.cfg.loss {
            LossKind::Complex => g.l1_loss(pred, target)?,
            LossKind::Magnitude => {
                let (a, b) = (g.magnitude(pred)?, g.magnitude(target)?);
                g.l1_loss(a, b)?
            }
        };
        g.backward(loss)?;
        let value = g.value(loss).data()[0].as_f64();
        Ok((value, ParamSet::grads_from(&g, &bound)))
    }

    /// Shuffled sample order of an epoch; a pure function of `(seed, epoch)`.
    pub fn epoch_order(&self, epoch: usize) -> Vec<usize> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.cfg.seed);
        rng.set_stream(epoch as u64);
        let mut order: Vec<usize> = (0..self.train.len()).collect();
        order.shuffle(&mut rng);
        order
    }

    /// Runs the next epoch and returns its log row.
    pub fn run_epoch(&mut self) -> Result<EpochMetrics> {
        let start = Instant::now();
        let epoch = self.next_epoch;
        let lr = lr_schedule(epoch, &self.cfg);
        let order = self.epoch_order(epoch);
        let mut loss_sum = 0.0;
        for (b, batch) in order.chunks(self.cfg.batch_size).enumerate() {
            let results = try_map_ordered(batch, self.threads, |_, &i| self.sample_gradient(i, epoch))?;
            let mut grads = self.params.zeros_like();
            let mut batch_loss = 0.0;
            for (l, gr) in &results {
                batch_loss += l;
                grads.accumulate(gr);
            }
            if !batch_loss.is_finite() {
                return Err(Error::NonFinite(format!(
                    "loss {batch_loss} at epoch {epoch}, batch {b}; parameter norm {:.6e}",
                    self.params.global_norm().as_f64()
                )));
            }
            loss_sum += batch_loss;
            grads.scale(T::of(1.0 / batch.len() as f64));
            if !grads.all_finite() {
                return Err(Error::NonFinite(format!(
                    "gradient at epoch {epoch}, batch {b}; parameter norm {:.6e}",
                    self.params.global_norm().as_f64()
                )));
            }
            if let Some(c) = self.cfg.clip_norm {
                let n = grads.global_norm().as_f64();
                if n > c {
                    grads.scale(T::of(c / n));
                }
            }
            // Every parameter must have received a gradient from some sample.
            for (_, gr) in &results {
                if let Some(missing) = self.params.names().find(|n| gr.get(n).is_none()) {
                    return Err(Error::MissingGradient(missing.clone()));
                }
            }
            let hyper = self.hyper();
            adam_step(&mut self.params, &grads, &mut self.opt, lr, &hyper)?;
        }
        let (val_psnr, val_ssim) = self.validate()?;
        let m = EpochMetrics {
            epoch,
            lr,
            train_l1: loss_sum / self.train.len() as f64,
            val_psnr,
            val_ssim,
            wall_seconds: start.elapsed().as_secs_f64(),
        };
        self.next_epoch += 1;
        self.history.push(m.clone());
        Ok(m)
    }

    /// Reconstructions of the validation set with the current parameters.
    pub fn reconstruct_val(&self) -> Result<Vec<ComplexImage<T>>> {
        try_map_ordered(&self.val_x, self.threads, |_, x| {
            crate::model::oucr_forward(x, &self.mask, &self.params, self.net.config())
        })
    }

    /// Mean magnitude PSNR / SSIM on the validation set (NaN when it is empty).
    pub fn validate(&self) -> Result<(f64, f64)> {
        if self.val.is_empty() {
            return Ok((f64::NAN, f64::NAN));
        }
        let recon = self.reconstruct_val()?;
        let (mut p, mut s) = (0.0, 0.0);
        for (r, t) in recon.iter().zip(&self.val) {
            let (mr, mt) = (r.magnitude(), t.target.magnitude());
            p += psnr(&mr, &mt)?;
            s += ssim(&mr, &mt)?;
        }
        let n = self.val.len() as f64;
        Ok((p / n, s / n))
    }

    /// Trains until `max_epochs`. With an output directory, writes
    /// `metrics.csv` and the `last` checkpoint after every epoch and `best`
    /// whenever validation PSNR improves.
    pub fn train(&mut self, out: Option<&Path>, mut progress: impl FnMut(&EpochMetrics)) -> Result<()> {
        if let Some(dir) = out {
            fs::create_dir_all(dir)?;
        }
        while self.next_epoch < self.cfg.max_epochs {
            let m = self.run_epoch()?;
            let improved = m.val_psnr > self.best_val_psnr;
            if improved {
                self.best_val_psnr = m.val_psnr;
                self.best_epoch = Some(m.epoch);
            }
            if let Some(dir) = out {
                write_metrics_csv(&self.history, &dir.join("metrics.csv"))?;
                self.save_checkpoint(dir, "last")?;
                if improved {
                    self.save_checkpoint(dir, "best")?;
                }
            }
            progress(&m);
        }
        Ok(())
    }

    /// Writes parameters (`{stem}.json/.bin`), Adam moments
    /// (`{stem}.adam_m.*`, `{stem}.adam_v.*`) and `{stem}.state.json`.
    pub fn save_checkpoint(&self, dir: &Path, stem: &str) -> Result<()> {
        save_tensors(&self.params, dir, stem)?;
        save_tensors(&self.opt.m, dir, &format!("{stem}.adam_m"))?;
        save_tensors(&self.opt.v, dir, &format!("{stem}.adam_v"))?;
        let state = TrainerState {
            version: crate::VERSION.into(),
            dtype: T::DTYPE.into(),
            model: self.net.config().clone(),
            train: self.cfg.clone(),
            next_epoch: self.next_epoch,
            step: self.opt.t,
            best_epoch: self.best_epoch,
            best_val_psnr: self.best_val_psnr,
            mask_h: self.mask.h(),
            mask_columns: self.mask.columns().to_vec(),
            history: self.history.clone(),
        };
        fs::write(dir.join(format!("{stem}.state.json")), serde_json::to_string_pretty(&state)?)?;
        Ok(())
    }

    /// Continues a run from a checkpoint written by [`Trainer::save_checkpoint`].
    pub fn resume(dir: &Path, stem: &str, train: Vec<Sample<T>>, val: Vec<Sample<T>>) -> Result<Self> {
        let state = TrainerState::read(dir, stem)?;
        let mut t = Self::new(&state.model, &state.train, train, val)?;
        t.set_mask(state.mask())?;
        t.params = load_tensors(dir, stem)?;
        t.opt = OptimState {
            m: load_tensors(dir, &format!("{stem}.adam_m"))?,
            v: load_tensors(dir, &format!("{stem}.adam_v"))?,
            t: state.step,
        };
        let fresh = t.net.zero_params::<T>();
        check_matches(&fresh, &t.params, "parameters")?;
        check_matches(&fresh, &t.opt.m, "adam_m")?;
        check_matches(&fresh, &t.opt.v, "adam_v")?;
        t.next_epoch = state.next_epoch;
        t.best_epoch = state.best_epoch;
        t.best_val_psnr = state.best_val_psnr;
        t.history = state.history;
        Ok(t)
    }
}

fn check_matches<T: Scalar>(expected: &ParamSet<T>, got: &ParamSet<T>, what: &str) -> Result<()> {
    let same =
        got.len() == expected.len() && expected.iter().all(|(n, e)| got.get(n).map(|g| g.shape()) == Some(e.shape()));
    if !same {
        return Err(Error::StoredShapeMismatch(format!("{what} do not match the model architecture")));
    }
    Ok(())
}

/// One CSV row per epoch: `epoch,lr,train_l1,val_psnr,val_ssim,wall_seconds`.
pub fn write_metrics_csv(history: &[EpochMetrics], path: &Path) -> Result<()> {
    let mut wtr = csv::Writer::from_path(path)?;
    for m in history {
        wtr.serialize(m)?;
    }
    wtr.flush()?;
    Ok(())
}
