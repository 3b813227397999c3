//! Receptive-field measurement by gradient probing.
//!
//! The probe evaluates a single-channel network with all-ones 3x3 kernels
//! and no activations, back-propagates from the center output pixel and
//! reports the bounding box of input pixels with a nonzero gradient. Max
//! pooling routes gradient through its argmax, so the probe input is a fixed
//! seeded random field.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::network::BranchKind;
use crate::error::{Error, Result};
use crate::tensor::{Graph, Tensor, Var};

const PROBE_SEED: u64 = 0x5eed;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProbeLayer {
    Conv3x3,
    MaxPool2x2,
    Upsample2x2,
}

/// Inclusive bounding box of the input pixels the probed output depends on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ReceptiveField {
    pub row_min: usize,
    pub row_max: usize,
    pub col_min: usize,
    pub col_max: usize,
}

impl ReceptiveField {
    pub fn height(&self) -> usize {
        self.row_max - self.row_min + 1
    }

    pub fn width(&self) -> usize {
        self.col_max - self.col_min + 1
    }

    pub fn area(&self) -> usize {
        self.height() * self.width()
    }
}

/// `depth x [conv, resample]` followed by one conv: the encoder prefix of a
/// branch of the given kind.
pub fn encoder_prefix(kind: BranchKind, depth: usize) -> Vec<ProbeLayer> {
    let resample = match kind {
        BranchKind::Overcomplete => ProbeLayer::Upsample2x2,
        BranchKind::Undercomplete => ProbeLayer::MaxPool2x2,
    };
    let mut v = Vec::with_capacity(2 * depth + 1);
    for _ in 0..depth {
        v.push(ProbeLayer::Conv3x3);
        v.push(resample);
    }
    v.push(ProbeLayer::Conv3x3);
    v
}

/// Probes an arbitrary network built by `build` from a `[channels, h, w]` input.
/// The center pixel of the first output channel is differentiated.
pub fn probe_network(
    h: usize,
    w: usize,
    channels: usize,
    build: impl FnOnce(&mut Graph<f64>, Var) -> Result<Var>,
) -> Result<ReceptiveField> {
    let mut rng = ChaCha8Rng::seed_from_u64(PROBE_SEED);
    let mut g = Graph::new();
    let input = g.param(Tensor::from_fn(&[channels, h, w], |_| rng.gen_range(0.25..1.0)));
    let out = build(&mut g, input)?;
    let (_, _, oh, ow) = g.value(out).image_dims()?;
    let center = g.pick(out, (oh / 2) * ow + ow / 2)?;
    if !g.requires_grad(center) {
        return Err(Error::NoDependence);
    }
    g.backward(center)?;
    let grad = match g.grad(input) {
        Some(gr) => gr.data().to_vec(),
        None => return Err(Error::NoDependence),
    };
    let mut rf: Option<ReceptiveField> = None;
    let hw = h * w;
    for (i, &v) in grad.iter().enumerate() {
        if v.abs() > 0.0 {
            let (r, c) = ((i % hw) / w, (i % hw) % w);
            rf = Some(match rf {
                None => ReceptiveField { row_min: r, row_max: r, col_min: c, col_max: c },
                Some(b) => ReceptiveField {
                    row_min: b.row_min.min(r),
                    row_max: b.row_max.max(r),
                    col_min: b.col_min.min(c),
                    col_max: b.col_max.max(c),
                },
            });
        }
    }
    rf.ok_or(Error::NoDependence)
}

/// Receptive field of a single-channel layer stack with all-ones kernels.
pub fn receptive_field_probe(layers: &[ProbeLayer], h: usize, w: usize) -> Result<ReceptiveField> {
    probe_network(h, w, 1, |g, x| {
        let k = g.constant(Tensor::full(&[1, 1, 3, 3], 1.0));
        let b = g.constant(Tensor::zeros(&[1]));
        let mut y = x;
        for l in layers {
            y = match l {
                ProbeLayer::Conv3x3 => g.conv2d(y, k, b)?,
                ProbeLayer::MaxPool2x2 => g.maxpool2x2(y)?,
                ProbeLayer::Upsample2x2 => g.upsample_nearest2x2(y)?,
            };
        }
        Ok(y)
    })
}
