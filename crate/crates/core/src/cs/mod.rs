//! Compressed-sensing baseline: `min_y R(y) + lambda |x - F_D y|^2` solved with
//! monotone FISTA and adaptive restart, `R` being total variation or l1 of
//! single-level Haar detail coefficients.

mod prior;

pub use prior::{
    haar_detail_l1, haar_forward, haar_inverse, haar_prox, soft_threshold, total_variation, tv_prox, tv_prox_warm, TvDual,
};

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{shape_err, Error, Result};
use crate::image::{transform, ComplexImage};
use crate::kspace::{zero_fill, KSpaceData};
use crate::scalar::Scalar;
use crate::tensor::fft::FftCache;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Regularizer {
    #[default]
    Tv,
    Wavelet,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CsConfig {
    pub lambda: f64,
    pub regularizer: Regularizer,
    pub max_iters: usize,
    /// Gradient step; `None` means `1 / (2 lambda)`.
    pub step: Option<f64>,
    /// Relative objective change that ends the solve.
    pub tolerance: f64,
    pub restart: bool,
    /// Dual iterations per TV prox.
    pub tv_inner_iters: usize,
}

impl Default for CsConfig {
    fn default() -> Self {
        Self {
            lambda: 100.0,
            regularizer: Regularizer::Tv,
            max_iters: 200,
            step: None,
            tolerance: 1e-7,
            restart: true,
            tv_inner_iters: 25,
        }
    }
}

/// Consecutive non-descending plain steps that end the solve.
pub const DIVERGENCE_PATIENCE: usize = 10;

/// Relative rises up to this size come from the inexact TV prox, not from an
/// oversized step; enough of them in a row count as convergence.
pub const STALL_RTOL: f64 = 1e-6;

impl CsConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(Error::InvalidArgument(format!("lambda must be > 0, got {}", self.lambda)));
        }
        if self.max_iters < 1 {
            return Err(Error::InvalidArgument("max_iters must be >= 1".into()));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::InvalidArgument(format!("tolerance must be > 0, got {}", self.tolerance)));
        }
        if let Some(s) = self.step {
            if !(s > 0.0 && s.is_finite()) {
                return Err(Error::InvalidArgument(format!("step must be > 0, got {s}")));
            }
        }
        Ok(())
    }

    pub fn step_size(&self) -> f64 {
        self.step.unwrap_or(1.0 / (2.0 * self.lambda))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub iter: usize,
    pub objective: f64,
    pub data_term: f64,
    pub reg_term: f64,
}

#[derive(Clone, Debug)]
pub struct CsResult<T> {
    pub image: ComplexImage<T>,
    /// Entry 0 is the zero-filled starting point; one entry per iteration after.
    pub trace: Vec<TraceEntry>,
    pub converged: bool,
}

struct Problem<'a, T: Scalar> {
    x: &'a KSpaceData<T>,
    cfg: &'a CsConfig,
    cols: &'a [bool],
    cache: FftCache<T>,
    dual: TvDual<T>,
}

impl<T: Scalar> Problem<'_, T> {
    fn hw(&self) -> (usize, usize) {
        self.x.values.dims()
    }

    fn sampled(&self, k: usize) -> bool {
        let (h, w) = self.hw();
        self.cols[(k % (h * w)) % w]
    }

    /// `lambda sum_D |F y - x|^2`.
    fn data_term(&mut self, y: &ComplexImage<T>) -> Result<f64> {
        let k = transform(y, false, &mut self.cache)?;
        let mut s = 0.0;
        for (i, (a, b)) in k.data().iter().zip(self.x.values.data()).enumerate() {
            if self.sampled(i) {
                let d = (*a - *b).as_f64();
                s += d * d;
            }
        }
        Ok(self.cfg.lambda * s)
    }

    fn reg_term(&self, y: &ComplexImage<T>) -> Result<f64> {
        let (h, w) = self.hw();
        match self.cfg.regularizer {
            Regularizer::Tv => Ok(total_variation(y.data(), h, w)),
            Regularizer::Wavelet => haar_detail_l1(y.data(), h, w),
        }
    }

    fn evaluate(&mut self, iter: usize, y: &ComplexImage<T>) -> Result<TraceEntry> {
        let data_term = self.data_term(y)?;
        let reg_term = self.reg_term(y)?;
        Ok(TraceEntry { iter, objective: data_term + reg_term, data_term, reg_term })
    }

    /// `prox_{s R}(y - s grad)` with `grad = 2 lambda F^-1[D(F y - x)]`.
    fn prox_grad(&mut self, y: &ComplexImage<T>) -> Result<ComplexImage<T>> {
        let s = self.cfg.step_size();
        let mut k = transform(y, false, &mut self.cache)?;
        for (i, v) in k.data_mut().iter_mut().enumerate() {
            *v = if self.sampled(i) { *v - self.x.values.data()[i] } else { T::zero() };
        }
        let g = transform(&k, true, &mut self.cache)?;
        let c = T::of(2.0 * self.cfg.lambda * s);
        let mut v = y.clone();
        for (a, b) in v.data_mut().iter_mut().zip(g.data()) {
            *a -= c * *b;
        }
        let (h, w) = self.hw();
        let out = match self.cfg.regularizer {
            Regularizer::Tv => tv_prox_warm(v.data(), h, w, T::of(s), self.cfg.tv_inner_iters, &mut self.dual),
            Regularizer::Wavelet => haar_prox(v.data(), h, w, T::of(s))?,
        };
        let mut img = ComplexImage::zeros(h, w);
        img.data_mut().copy_from_slice(&out);
        Ok(img)
    }
}

/// Monotone FISTA from the zero-filled image. A candidate that would raise
/// the objective is replaced by a plain proximal-gradient step from the
/// current iterate (and momentum restarts when `restart` is set); the
/// reported objective therefore never increases. [`DIVERGENCE_PATIENCE`]
/// consecutive plain steps that fail to descend end the solve: as converged
/// when every rise is below [`STALL_RTOL`], with a divergence error otherwise.
pub fn cs_reconstruct<T: Scalar>(x: &KSpaceData<T>, cfg: &CsConfig) -> Result<CsResult<T>> {
    cfg.validate()?;
    if x.values.dims() != x.mask.dims() {
        return Err(shape_err!("cs: data {:?} vs mask {:?}", x.values.dims(), x.mask.dims()));
    }
    let n = x.values.data().len();
    let mut p = Problem { x, cfg, cols: x.mask.columns(), cache: FftCache::default(), dual: TvDual::new(n) };
    let mut cur = zero_fill(x)?;
    let mut entry = p.evaluate(0, &cur)?;
    let mut trace = vec![entry];
    let mut y = cur.clone();
    let mut t = 1.0f64;
    let mut stalls = 0usize;
    let mut rises = 0usize;
    let mut converged = false;
    for iter in 1..=cfg.max_iters {
        let z = p.prox_grad(&y)?;
        let ez = p.evaluate(iter, &z)?;
        let (next, en, momentum) = if ez.objective <= entry.objective {
            (z, ez, true)
        } else {
            let z2 = p.prox_grad(&cur)?;
            let e2 = p.evaluate(iter, &z2)?;
            (z2, e2, false)
        };
        if !en.objective.is_finite() {
            return Err(Error::NonFinite(format!("cs objective at iteration {iter}")));
        }
        if en.objective > entry.objective {
            let rise = (en.objective - entry.objective) / entry.objective.abs().max(f64::MIN_POSITIVE);
            if rise <= STALL_RTOL {
                stalls += 1;
                rises = 0;
                if stalls >= DIVERGENCE_PATIENCE {
                    converged = true;
                    break;
                }
            } else {
                rises += 1;
                stalls = 0;
                if rises >= DIVERGENCE_PATIENCE {
                    return Err(Error::Divergence(format!(
                        "cs objective rose on {DIVERGENCE_PATIENCE} consecutive iterations (last {:.6e} > {:.6e}); use a smaller step",
                        en.objective, entry.objective
                    )));
                }
            }
            trace.push(TraceEntry { iter, ..entry });
            y = cur.clone();
            t = 1.0;
            continue;
        }
        stalls = 0;
        rises = 0;
        let t_next = (1.0 + (1.0 + 4.0 * t * t).sqrt()) / 2.0;
        if momentum || !cfg.restart {
            let beta = T::of((t - 1.0) / t_next);
            y = next.clone();
            for ((a, n), c) in y.data_mut().iter_mut().zip(next.data()).zip(cur.data()) {
                *a = *n + beta * (*n - *c);
            }
            t = t_next;
        } else {
            y = next.clone();
            t = 1.0;
        }
        let rel = (entry.objective - en.objective).abs() / entry.objective.abs().max(f64::MIN_POSITIVE);
        cur = next;
        entry = en;
        trace.push(entry);
        if rel <= cfg.tolerance {
            converged = true;
            break;
        }
    }
    Ok(CsResult { image: cur, trace, converged })
}

pub fn write_trace_csv(trace: &[TraceEntry], path: &Path) -> Result<()> {
    let mut wtr = csv::Writer::from_path(path)?;
    for e in trace {
        wtr.serialize(e)?;
    }
    wtr.flush()?;
    Ok(())
}
