use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Cartesian column mask: a set of phase-encode columns broadcast over rows.
#[derive(Clone, Debug, PartialEq)]
pub struct Mask {
    h: usize,
    w: usize,
    columns: Vec<bool>,
    af_target: f64,
    center_fraction: f64,
    seed: u64,
}

/// JSON sidecar stored next to the raw mask bytes.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct MaskHeader {
    pub h: usize,
    pub w: usize,
    pub af: f64,
    pub center_fraction: f64,
    pub seed: u64,
}

/// Fully sampled central fraction used for a given acceleration.
pub fn default_center_fraction(af: f64) -> Result<f64> {
    if af == 4.0 {
        Ok(0.08)
    } else if af == 8.0 {
        Ok(0.04)
    } else {
        Err(Error::InvalidArgument(format!(
            "no default center fraction for acceleration {af}; supported: 4, 8"
        )))
    }
}

/// Random column mask with the default center fraction for `af` (4 or 8).
pub fn mask_generate(h: usize, w: usize, af: f64, seed: u64) -> Result<Mask> {
    mask_generate_with(h, w, af, default_center_fraction(af)?, seed)
}

/// Random column mask: `ceil(center_fraction * w)` contiguous central
/// columns plus columns drawn uniformly without replacement until
/// `round(w / af)` columns are sampled.
pub fn mask_generate_with(h: usize, w: usize, af: f64, center_fraction: f64, seed: u64) -> Result<Mask> {
    if w < 16 {
        return Err(Error::InvalidArgument(format!("mask width {w} is below the minimum of 16")));
    }
    if h == 0 {
        return Err(Error::InvalidArgument("mask height must be positive".into()));
    }
    if !(af > 1.0 && af.is_finite()) {
        return Err(Error::InvalidArgument(format!("acceleration {af} must exceed 1")));
    }
    if !(center_fraction > 0.0 && center_fraction < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "center fraction {center_fraction} outside (0, 1)"
        )));
    }
    let n_center = ((center_fraction * w as f64) - 1e-9).ceil() as usize;
    let target = (w as f64 / af).round() as usize;
    if target < n_center {
        return Err(Error::InvalidArgument(format!(
            "acceleration {af} leaves {target} columns, fewer than the {n_center} central columns"
        )));
    }
    let mut columns = vec![false; w];
    let pad = (w - n_center + 1) / 2;
    columns[pad..pad + n_center].iter_mut().for_each(|c| *c = true);
    let outer: Vec<usize> = (0..w).filter(|&c| !columns[c]).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for k in sample(&mut rng, outer.len(), target - n_center) {
        columns[outer[k]] = true;
    }
    Ok(Mask { h, w, columns, af_target: af, center_fraction, seed })
}

impl Mask {
    /// Mask with every column sampled.
    pub fn full(h: usize, w: usize) -> Self {
        Mask { h, w, columns: vec![true; w], af_target: 1.0, center_fraction: 1.0, seed: 0 }
    }

    pub fn from_columns(h: usize, columns: Vec<bool>) -> Self {
        let w = columns.len();
        let n = columns.iter().filter(|&&c| c).count().max(1);
        Mask { h, w, columns, af_target: w as f64 / n as f64, center_fraction: 0.0, seed: 0 }
    }

    pub fn h(&self) -> usize {
        self.h
    }

    pub fn w(&self) -> usize {
        self.w
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.h, self.w)
    }

    pub fn columns(&self) -> &[bool] {
        &self.columns
    }

    pub fn sampled_columns(&self) -> usize {
        self.columns.iter().filter(|&&c| c).count()
    }

    pub fn af_target(&self) -> f64 {
        self.af_target
    }

    pub fn center_fraction(&self) -> f64 {
        self.center_fraction
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// `W / (#sampled columns)`.
    pub fn realized_af(&self) -> f64 {
        self.w as f64 / self.sampled_columns() as f64
    }

    pub fn is_sampled(&self, _row: usize, col: usize) -> bool {
        self.columns[col]
    }

    /// Row-major `H x W` pattern of 0/1 bytes.
    pub fn pattern(&self) -> Vec<u8> {
        (0..self.h).flat_map(|_| self.columns.iter().map(|&c| c as u8)).collect()
    }

    /// `D` as an `H x W` field of ones and zeros.
    pub fn weights<T: Scalar>(&self) -> Vec<T> {
        self.pattern().into_iter().map(|b| if b == 1 { T::one() } else { T::zero() }).collect()
    }

    /// `1 - D`.
    pub fn complement_weights<T: Scalar>(&self) -> Vec<T> {
        self.pattern().into_iter().map(|b| if b == 1 { T::zero() } else { T::one() }).collect()
    }

    pub fn header(&self) -> MaskHeader {
        MaskHeader {
            h: self.h,
            w: self.w,
            af: self.af_target,
            center_fraction: self.center_fraction,
            seed: self.seed,
        }
    }

    /// Writes `path` (raw bytes) and the JSON sidecar `path.with_extension("json")`.
    pub fn write(&self, path: &Path) -> Result<PathBuf> {
        fs::write(path, self.pattern())?;
        let sidecar = path.with_extension("json");
        fs::write(&sidecar, serde_json::to_string_pretty(&self.header())?)?;
        Ok(sidecar)
    }

    pub fn read(path: &Path) -> Result<Mask> {
        let header: MaskHeader = serde_json::from_slice(&fs::read(path.with_extension("json"))?)
            .map_err(|e| Error::CorruptManifest(format!("mask sidecar: {e}")))?;
        let bytes = fs::read(path)?;
        let expected = (header.h * header.w) as u64;
        if (bytes.len() as u64) < expected {
            return Err(Error::TruncatedPayload { expected, actual: bytes.len() as u64 });
        }
        if bytes.len() as u64 != expected {
            return Err(Error::StoredShapeMismatch(format!(
                "mask file holds {} bytes, header says {}x{}",
                bytes.len(),
                header.h,
                header.w
            )));
        }
        let columns: Vec<bool> = bytes[..header.w].iter().map(|&b| b != 0).collect();
        for (i, &b) in bytes.iter().enumerate() {
            if b > 1 {
                return Err(Error::CorruptManifest(format!("mask byte {i} is {b}, not 0/1")));
            }
            if (b == 1) != columns[i % header.w] {
                return Err(Error::CorruptManifest(format!(
                    "mask row {} differs from row 0; only column masks are supported",
                    i / header.w
                )));
            }
        }
        Ok(Mask {
            h: header.h,
            w: header.w,
            columns,
            af_target: header.af,
            center_fraction: header.center_fraction,
            seed: header.seed,
        })
    }
}
