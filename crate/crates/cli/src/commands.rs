use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use oucr::cs::{cs_reconstruct, write_trace_csv, Regularizer};
use oucr::data::{dataset_load, dataset_write, make_split, normalize, phantom_generate, Sample, MANIFEST_FILE};
use oucr::eval::{emit_report, evaluate, BandKind, BandSpec, ReportSummary};
use oucr::kspace::{forward_encode, mask_generate, mask_generate_with, zero_fill, Mask};
use oucr::model::{
    encoder_prefix, load_tensors, oucr_forward, param_count, receptive_field_probe, BranchKind, ModelConfig, Oucr,
};
use oucr::parallel::{thread_count, try_map_ordered};
use oucr::training::{LossKind, Trainer, TrainerState};
use oucr::{ComplexImage, Scalar};

use crate::config::{Precision, RunConfig};
use crate::preview::write_png;
use crate::{BandFlags, CliError, Common, MaskFlags, ModelFlags};

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn resolve(common: &Common) -> Result<RunConfig, CliError> {
    let mut cfg = RunConfig::load(common.config.as_deref())?;
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    if let Some(p) = common.precision {
        cfg.precision = p;
    }
    if let Some(o) = &common.out {
        cfg.out = Some(o.clone());
    }
    Ok(cfg)
}

fn apply_model(cfg: &mut ModelConfig, f: &ModelFlags) {
    if let Some(b) = f.base_channels {
        cfg.base_channels = b;
    }
    if let Some(j) = f.iterations {
        cfg.iterations = j;
    }
    cfg.use_oc &= !f.no_oc;
    cfg.use_uc &= !f.no_uc;
    cfg.use_rm &= !f.no_rm;
    cfg.residual &= !f.no_residual;
}

fn apply_mask(cfg: &mut RunConfig, f: &MaskFlags) {
    if let Some(h) = f.h {
        cfg.mask.h = h;
    }
    if let Some(w) = f.w {
        cfg.mask.w = w;
    }
    if let Some(af) = f.af {
        cfg.mask.af = af;
    }
    if let Some(c) = f.center_fraction {
        cfg.mask.center_fraction = Some(c);
    }
    if let Some(p) = &f.mask_file {
        cfg.mask_file = Some(p.clone());
    }
}

fn apply_bands(cfg: &mut RunConfig, f: &BandFlags) {
    if let Some(r) = f.radius {
        cfg.bands.radius_fraction = r;
    }
    if let Some(g) = f.geometry {
        cfg.bands.geometry = g.into();
    }
}

fn out_dir(cfg: &RunConfig) -> PathBuf {
    cfg.out.clone().unwrap_or_else(|| PathBuf::from("."))
}

fn require(p: &Option<PathBuf>, flag: &str) -> Result<PathBuf, CliError> {
    p.clone().ok_or_else(|| usage(format!("missing --{flag}")))
}

/// The mask file if one is configured, otherwise a fresh seeded mask of the given size.
fn resolve_mask(cfg: &RunConfig, h: usize, w: usize) -> Result<Mask, CliError> {
    if let Some(p) = &cfg.mask_file {
        let m = Mask::read(p)?;
        if m.dims() != (h, w) {
            return Err(CliError::Core(oucr::Error::StoredShapeMismatch(format!(
                "mask {:?} vs data {:?}",
                m.dims(),
                (h, w)
            ))));
        }
        return Ok(m);
    }
    let m = match cfg.mask.center_fraction {
        Some(c) => mask_generate_with(h, w, cfg.mask.af, c, cfg.seed),
        None => mask_generate(h, w, cfg.mask.af, cfg.seed),
    };
    m.map_err(|e| usage(e.to_string()))
}

fn band_specs(cfg: &RunConfig) -> Result<Vec<BandSpec>, CliError> {
    [BandKind::Low, BandKind::High]
        .into_iter()
        .map(|k| {
            BandSpec::new(k, cfg.bands.radius_fraction)
                .map(|b| b.with_geometry(cfg.bands.geometry))
                .map_err(|e| usage(e.to_string()))
        })
        .collect()
}

fn write_previews<T: Scalar>(samples: &[Sample<T>], dir: &Path) -> Result<(), CliError> {
    let png = dir.join("png");
    fs::create_dir_all(&png).map_err(oucr::Error::from)?;
    for s in samples {
        write_png(&s.target, &png.join(format!("{}.png", s.id)))?;
    }
    Ok(())
}

pub fn gen_data(
    common: &Common,
    count: Option<usize>,
    h: Option<usize>,
    w: Option<usize>,
    complexity: Option<u32>,
) -> Result<(), CliError> {
    let mut cfg = resolve(common)?;
    let p = &mut cfg.phantom;
    if let Some(c) = count {
        p.count = c;
    }
    if let Some(h) = h {
        p.h = h;
    }
    if let Some(w) = w {
        p.w = w;
    }
    if let Some(c) = complexity {
        p.complexity = c;
    }
    let cfg = cfg.finish()?;
    let p = &cfg.phantom;
    let split = make_split(p.count, p.fractions, cfg.seed).map_err(|e| usage(e.to_string()))?;
    let base = cfg.seed.wrapping_mul(1 << 32);
    let samples = (0..p.count)
        .map(|i| phantom_generate::<f64>(p.h, p.w, base.wrapping_add(i as u64), p.complexity))
        .collect::<oucr::Result<Vec<_>>>()
        .map_err(|e| usage(e.to_string()))?;
    let out = out_dir(&cfg);
    for (name, idx) in [("train", &split.train), ("val", &split.val), ("test", &split.test)] {
        let part: Vec<Sample<f64>> = idx.iter().map(|&i| samples[i].clone()).collect();
        dataset_write(&part, &out.join(name), name)?;
        println!("{name}: {} samples", part.len());
    }
    cfg.record(&out, "gen-data")
}

pub fn mask(common: &Common, flags: &MaskFlags) -> Result<(), CliError> {
    let mut cfg = resolve(common)?;
    apply_mask(&mut cfg, flags);
    let cfg = cfg.finish()?;
    let m = resolve_mask(&cfg, cfg.mask.h, cfg.mask.w)?;
    let out = out_dir(&cfg);
    fs::create_dir_all(&out).map_err(oucr::Error::from)?;
    m.write(&out.join("mask.bin"))?;
    println!(
        "sampled {} of {} columns (af {:.3})",
        m.sampled_columns(),
        m.w(),
        m.realized_af()
    );
    cfg.record(&out, "mask")
}

pub struct TrainFlags {
    pub data: Option<PathBuf>,
    pub val_data: Option<PathBuf>,
    pub epochs: Option<usize>,
    pub lr: Option<f64>,
    pub batch_size: Option<usize>,
    pub mask_per_sample: bool,
    pub loss: Option<LossKind>,
    pub no_clip: bool,
    pub resume: bool,
}

/// `data` is either a dataset directory (validation then comes from
/// `val_data`) or a root holding `train/` and `val/`.
fn train_val_dirs(data: &Path, val: Option<&Path>) -> Result<(PathBuf, PathBuf), CliError> {
    if data.join(MANIFEST_FILE).exists() {
        let val = val.ok_or_else(|| usage(format!("{} is a single dataset: pass --val-data", data.display())))?;
        return Ok((data.to_path_buf(), val.to_path_buf()));
    }
    let val = val.map(Path::to_path_buf).unwrap_or_else(|| data.join("val"));
    Ok((data.join("train"), val))
}

pub fn train(common: &Common, model: &ModelFlags, mask: &MaskFlags, t: &TrainFlags) -> Result<(), CliError> {
    let mut cfg = resolve(common)?;
    apply_model(&mut cfg.model, model);
    apply_mask(&mut cfg, mask);
    if let Some(d) = &t.data {
        cfg.data = Some(d.clone());
    }
    if let Some(d) = &t.val_data {
        cfg.val_data = Some(d.clone());
    }
    let tc = &mut cfg.train;
    if let Some(e) = t.epochs {
        tc.max_epochs = e;
    }
    if let Some(lr) = t.lr {
        tc.lr_init = lr;
    }
    if let Some(b) = t.batch_size {
        tc.batch_size = b;
    }
    tc.mask_per_sample |= t.mask_per_sample;
    if let Some(l) = t.loss {
        tc.loss = l;
    }
    if t.no_clip {
        tc.clip_norm = None;
    }
    let cfg = cfg.finish()?;
    let data = require(&cfg.data, "data")?;
    match cfg.precision {
        Precision::F32 => train_typed::<f32>(&cfg, &data, t.resume),
        Precision::F64 => train_typed::<f64>(&cfg, &data, t.resume),
    }
}

fn train_typed<T: Scalar>(cfg: &RunConfig, data: &Path, resume: bool) -> Result<(), CliError> {
    let (train_dir, val_dir) = train_val_dirs(data, cfg.val_data.as_deref())?;
    let train = dataset_load::<T>(&train_dir)?;
    let val = dataset_load::<T>(&val_dir)?;
    let out = out_dir(cfg);
    let mut trainer = if resume && out.join("last.state.json").exists() {
        let mut t = Trainer::resume(&out, "last", train, val)?;
        t.set_max_epochs(cfg.train.max_epochs);
        eprintln!("resuming at epoch {}", t.next_epoch());
        t
    } else {
        let mut t = Trainer::new(&cfg.model, &cfg.train, train, val)?;
        if cfg.mask_file.is_some() {
            let (h, w) = t.mask().dims();
            t.set_mask(resolve_mask(cfg, h, w)?)?;
        }
        t
    };
    cfg.record(&out, "train")?;
    trainer.train(Some(&out), |m| {
        println!(
            "epoch {:>3}  lr {:.3e}  train_l1 {:.5}  val_psnr {:.3}  val_ssim {:.4}  ({:.1}s)",
            m.epoch, m.lr, m.train_l1, m.val_psnr, m.val_ssim, m.wall_seconds
        )
    })?;
    if let Some(b) = trainer.best_epoch() {
        println!("best epoch {b}");
    }
    Ok(())
}

pub fn reconstruct(
    common: &Common,
    mask: &MaskFlags,
    data: Option<PathBuf>,
    checkpoint: Option<PathBuf>,
    stem: &str,
    zero_filled: bool,
    no_png: bool,
) -> Result<(), CliError> {
    let mut cfg = resolve(common)?;
    apply_mask(&mut cfg, mask);
    if data.is_some() {
        cfg.data = data;
    }
    if checkpoint.is_some() {
        cfg.checkpoint = checkpoint;
    }
    let cfg = cfg.finish()?;
    let data = require(&cfg.data, "data")?;
    if zero_filled {
        return match cfg.precision {
            Precision::F32 => recon_typed::<f32>(&cfg, &data, None, no_png),
            Precision::F64 => recon_typed::<f64>(&cfg, &data, None, no_png),
        };
    }
    let ckpt = cfg
        .checkpoint
        .clone()
        .ok_or_else(|| usage("missing --checkpoint (or pass --zero-filled)"))?;
    let state = TrainerState::read(&ckpt, stem)?;
    match state.dtype.as_str() {
        "f32" => recon_typed::<f32>(&cfg, &data, Some((&ckpt, stem, &state)), no_png),
        "f64" => recon_typed::<f64>(&cfg, &data, Some((&ckpt, stem, &state)), no_png),
        d => Err(CliError::Core(oucr::Error::CorruptManifest(format!("checkpoint dtype `{d}`")))),
    }
}

type Checkpoint<'a> = (&'a Path, &'a str, &'a TrainerState);

fn recon_typed<T: Scalar>(
    cfg: &RunConfig,
    data: &Path,
    ckpt: Option<Checkpoint<'_>>,
    no_png: bool,
) -> Result<(), CliError> {
    let samples = dataset_load::<T>(data)?;
    let Some(first) = samples.first() else { return Err(usage(format!("{} is empty", data.display()))) };
    let (h, w) = first.target.dims();
    let (mask, net) = match ckpt {
        Some((dir, stem, state)) => {
            let params = load_tensors::<T>(dir, stem)?;
            let mask = state.mask();
            if mask.dims() != (h, w) {
                return Err(CliError::Core(oucr::Error::StoredShapeMismatch(format!(
                    "checkpoint mask {:?} vs data {:?}",
                    mask.dims(),
                    (h, w)
                ))));
            }
            (mask, Some((params, state.model.clone(), state.train.normalize)))
        }
        None => (resolve_mask(cfg, h, w)?, None),
    };
    let out_samples = try_map_ordered(&samples, thread_count(), |_, s| -> oucr::Result<Sample<T>> {
        let target = match &net {
            Some((params, model, norm)) => {
                let (input, scale) = if *norm {
                    let n = normalize(s)?;
                    let scale = n.norm_scale / s.norm_scale;
                    (n.target, scale)
                } else {
                    (s.target.clone(), 1.0)
                };
                let x = forward_encode(&input, &mask)?;
                oucr_forward(&x, &mask, params, model)?.scaled(T::of(scale))
            }
            None => zero_fill(&forward_encode(&s.target, &mask)?)?,
        };
        Ok(Sample { target, norm_scale: s.norm_scale, id: s.id.clone() })
    })?;
    let out = out_dir(cfg);
    dataset_write(&out_samples, &out, "recon")?;
    mask.write(&out.join("mask.bin"))?;
    if !no_png {
        write_previews(&out_samples, &out)?;
    }
    println!("reconstructed {} samples", out_samples.len());
    cfg.record(&out, "reconstruct")
}

fn load_pairs(
    recon: &Path,
    reference: &Path,
) -> Result<Vec<(ComplexImage<f64>, ComplexImage<f64>, String)>, CliError> {
    let recon = dataset_load::<f64>(recon)?;
    let refs: HashMap<String, Sample<f64>> =
        dataset_load::<f64>(reference)?.into_iter().map(|s| (s.id.clone(), s)).collect();
    recon
        .into_iter()
        .map(|r| {
            let t = refs.get(&r.id).ok_or_else(|| {
                CliError::Core(oucr::Error::StoredShapeMismatch(format!("no reference for sample `{}`", r.id)))
            })?;
            Ok((r.target, t.target.clone(), r.id))
        })
        .collect()
}

fn print_summary(summary: &ReportSummary) {
    for (method, bands) in summary {
        for (band, s) in bands {
            println!(
                "{method:>12} {band:>5}  psnr {:.3} (median {:.3})  ssim {:.4} (median {:.4})  n={}",
                s.psnr.mean, s.psnr.median, s.ssim.mean, s.ssim.median, s.psnr.n
            );
        }
    }
}

pub fn eval(
    common: &Common,
    bands: &BandFlags,
    recon: Option<PathBuf>,
    reference: Option<PathBuf>,
    method: &str,
    af: Option<f64>,
) -> Result<(), CliError> {
    let mut cfg = resolve(common)?;
    apply_bands(&mut cfg, bands);
    if let Some(a) = af {
        cfg.mask.af = a;
    }
    if recon.is_some() {
        cfg.data = recon;
    }
    if reference.is_some() {
        cfg.reference = reference;
    }
    let cfg = cfg.finish()?;
    let recon = require(&cfg.data, "recon")?;
    let reference = require(&cfg.reference, "reference")?;
    let specs = band_specs(&cfg)?;
    let pairs = load_pairs(&recon, &reference)?;
    let reports =
        try_map_ordered(&pairs, thread_count(), |_, (r, t, id)| evaluate(id, method, cfg.mask.af, r, t, &specs))?;
    let out = out_dir(&cfg);
    fs::create_dir_all(&out).map_err(oucr::Error::from)?;
    let summary = emit_report(&reports, &out.join("report.csv"), &out.join("summary.json"))?;
    print_summary(&summary);
    cfg.record(&out, "eval")
}

pub fn kband(
    common: &Common,
    bands: &BandFlags,
    recon: Option<PathBuf>,
    reference: Option<PathBuf>,
) -> Result<(), CliError> {
    let mut cfg = resolve(common)?;
    apply_bands(&mut cfg, bands);
    if recon.is_some() {
        cfg.data = recon;
    }
    if reference.is_some() {
        cfg.reference = reference;
    }
    let cfg = cfg.finish()?;
    let recon = require(&cfg.data, "recon")?;
    let reference = require(&cfg.reference, "reference")?;
    let specs = band_specs(&cfg)?;
    let pairs = load_pairs(&recon, &reference)?;
    let reports =
        try_map_ordered(&pairs, thread_count(), |_, (r, t, id)| evaluate(id, "recon", cfg.mask.af, r, t, &specs))?;
    let out = out_dir(&cfg);
    fs::create_dir_all(&out).map_err(oucr::Error::from)?;
    let summary = emit_report(&reports, &out.join("bands.csv"), &out.join("bands_summary.json"))?;
    print_summary(&summary);
    cfg.record(&out, "kband")
}

pub struct CsFlags {
    pub lambda: Option<f64>,
    pub regularizer: Option<Regularizer>,
    pub max_iters: Option<usize>,
    pub step: Option<f64>,
    pub tolerance: Option<f64>,
    pub trace: bool,
    pub no_png: bool,
}

pub fn cs(common: &Common, mask: &MaskFlags, data: Option<PathBuf>, f: &CsFlags) -> Result<(), CliError> {
    let mut cfg = resolve(common)?;
    apply_mask(&mut cfg, mask);
    if data.is_some() {
        cfg.data = data;
    }
    let c = &mut cfg.cs;
    if let Some(l) = f.lambda {
        c.lambda = l;
    }
    if let Some(r) = f.regularizer {
        c.regularizer = r;
    }
    if let Some(n) = f.max_iters {
        c.max_iters = n;
    }
    if f.step.is_some() {
        c.step = f.step;
    }
    if let Some(t) = f.tolerance {
        c.tolerance = t;
    }
    let cfg = cfg.finish()?;
    let data = require(&cfg.data, "data")?;
    let samples = dataset_load::<f64>(&data)?;
    let Some(first) = samples.first() else { return Err(usage(format!("{} is empty", data.display()))) };
    let (h, w) = first.target.dims();
    let mask = resolve_mask(&cfg, h, w)?;
    let out = out_dir(&cfg);
    let traces = out.join("traces");
    if f.trace {
        fs::create_dir_all(&traces).map_err(oucr::Error::from)?;
    }
    let results = try_map_ordered(&samples, thread_count(), |_, s| {
        let x = forward_encode(&s.target, &mask)?;
        let r = cs_reconstruct(&x, &cfg.cs)?;
        if f.trace {
            write_trace_csv(&r.trace, &traces.join(format!("{}.csv", s.id)))?;
        }
        Ok::<_, oucr::Error>((Sample { target: r.image, norm_scale: s.norm_scale, id: s.id.clone() }, r.converged))
    })?;
    let unconverged = results.iter().filter(|(_, c)| !c).count();
    let recon: Vec<Sample<f64>> = results.into_iter().map(|(s, _)| s).collect();
    dataset_write(&recon, &out, "cs")?;
    mask.write(&out.join("mask.bin"))?;
    if !f.no_png {
        write_previews(&recon, &out)?;
    }
    println!("reconstructed {} samples ({unconverged} hit the iteration limit)", recon.len());
    cfg.record(&out, "cs")
}

pub fn rf_probe(common: &Common, depth: usize, size: usize) -> Result<(), CliError> {
    let cfg = resolve(common)?.finish()?;
    println!("branch depth height width area");
    for kind in [BranchKind::Overcomplete, BranchKind::Undercomplete] {
        let rf = receptive_field_probe(&encoder_prefix(kind, depth), size, size)?;
        println!("{} {depth} {} {} {}", kind.prefix(), rf.height(), rf.width(), rf.area());
    }
    if let Some(out) = &cfg.out {
        cfg.record(out, "rf-probe")?;
    }
    Ok(())
}

pub fn param_count_cmd(common: &Common, model: &ModelFlags) -> Result<(), CliError> {
    let mut cfg = resolve(common)?;
    apply_model(&mut cfg.model, model);
    let cfg = cfg.finish()?;
    let net = Oucr::new(&cfg.model)?;
    println!("{}", param_count(&net.zero_params::<f64>()));
    if let Some(out) = &cfg.out {
        cfg.record(out, "param-count")?;
    }
    Ok(())
}
