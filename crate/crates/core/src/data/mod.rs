//! Synthetic data, persistence and normalization.

mod dataset;
mod phantom;
mod split;

pub use dataset::{
    dataset_load, dataset_read, dataset_write, read_manifest, DatasetManifest, DatasetReader, SampleRecord,
    BLOB_FILE, MANIFEST_FILE,
};
pub use phantom::{phantom_generate, MAX_COMPLEXITY};
pub use split::{make_split, Split, DEFAULT_FRACTIONS};

use crate::error::{Error, Result};
use crate::image::ComplexImage;
use crate::scalar::Scalar;

/// Fully sampled ground-truth image with its normalization record.
#[derive(Clone, Debug, PartialEq)]
pub struct Sample<T> {
    pub target: ComplexImage<T>,
    /// Factor already divided out of `target`; multiply to restore the
    /// original intensity scale.
    pub norm_scale: f64,
    pub id: String,
}

impl<T: Scalar> Sample<T> {
    pub fn cast<U: Scalar>(&self) -> Sample<U> {
        Sample { target: self.target.cast(), norm_scale: self.norm_scale, id: self.id.clone() }
    }
}

/// Nearest-rank percentile of the magnitude image, `q` in `(0, 1]`.
pub fn magnitude_percentile<T: Scalar>(img: &ComplexImage<T>, q: f64) -> f64 {
    let mut m: Vec<f64> = img.magnitude().data.iter().map(|v| v.as_f64()).collect();
    if m.is_empty() {
        return 0.0;
    }
    m.sort_by(|a, b| a.total_cmp(b));
    let rank = ((q * m.len() as f64).ceil() as usize).clamp(1, m.len());
    m[rank - 1]
}

/// Divides the target by its 99th-percentile magnitude (the maximum when that
/// percentile is zero) and folds the factor into `norm_scale`.
pub fn normalize<T: Scalar>(sample: &Sample<T>) -> Result<Sample<T>> {
    let mut s = magnitude_percentile(&sample.target, 0.99);
    if s <= 0.0 {
        s = sample.target.magnitude().max().as_f64();
    }
    if !(s > 0.0 && s.is_finite()) {
        return Err(Error::NonFinite(format!("sample `{}` cannot be normalized (scale {s})", sample.id)));
    }
    Ok(Sample {
        target: sample.target.scaled(T::of(1.0 / s)),
        norm_scale: sample.norm_scale * s,
        id: sample.id.clone(),
    })
}
