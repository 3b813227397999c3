//! Frequency-band analysis: the same k-space band mask is applied to the
//! reconstruction and the reference before comparing them.

use serde::{Deserialize, Serialize};

use super::metrics::{psnr, ssim};
use crate::error::{Error, Result};
use crate::image::{fft2c, ifft2c, ComplexImage};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BandKind {
    Low,
    High,
}

impl BandKind {
    pub fn as_str(self) -> &'static str {
        match self {
            BandKind::Low => "low",
            BandKind::High => "high",
        }
    }
}

/// Shape of the centered low-frequency region.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum BandGeometry {
    #[default]
    Disc,
    Square,
    /// Central phase-encode columns, all rows.
    Columns,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BandSpec {
    pub kind: BandKind,
    /// Radius as a fraction of `min(H, W) / 2`.
    pub radius_fraction: f64,
    #[serde(default)]
    pub geometry: BandGeometry,
}

pub const DEFAULT_RADIUS_FRACTION: f64 = 0.15;

impl BandSpec {
    pub fn new(kind: BandKind, radius_fraction: f64) -> Result<Self> {
        let s = Self { kind, radius_fraction, geometry: BandGeometry::Disc };
        s.validate()?;
        Ok(s)
    }

    pub fn low() -> Self {
        Self { kind: BandKind::Low, radius_fraction: DEFAULT_RADIUS_FRACTION, geometry: BandGeometry::Disc }
    }

    pub fn high() -> Self {
        Self { kind: BandKind::High, ..Self::low() }
    }

    pub fn with_geometry(mut self, g: BandGeometry) -> Self {
        self.geometry = g;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.radius_fraction > 0.0 && self.radius_fraction < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "band radius fraction {} outside (0, 1)",
                self.radius_fraction
            )));
        }
        Ok(())
    }

    /// `H x W` field of ones inside the band, zeros outside (centered k-space).
    pub fn mask(&self, h: usize, w: usize) -> Vec<bool> {
        let r = self.radius_fraction * h.min(w) as f64 / 2.0;
        let (ch, cw) = ((h / 2) as f64, (w / 2) as f64);
        let mut m = Vec::with_capacity(h * w);
        for i in 0..h {
            for j in 0..w {
                let (di, dj) = (i as f64 - ch, j as f64 - cw);
                let low = match self.geometry {
                    BandGeometry::Disc => di * di + dj * dj <= r * r,
                    BandGeometry::Square => di.abs() <= r && dj.abs() <= r,
                    BandGeometry::Columns => dj.abs() <= r,
                };
                m.push(low == (self.kind == BandKind::Low));
            }
        }
        m
    }
}

/// Keeps only the frequencies inside the band.
pub fn band_filter<T: Scalar>(img: &ComplexImage<T>, spec: &BandSpec) -> Result<ComplexImage<T>> {
    spec.validate()?;
    let (h, w) = img.dims();
    let mask = spec.mask(h, w);
    let mut k = fft2c(img)?;
    let hw = h * w;
    for (i, v) in k.data_mut().iter_mut().enumerate() {
        if !mask[i % hw] {
            *v = T::zero();
        }
    }
    ifft2c(&k)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BandMetrics {
    pub band: BandKind,
    pub psnr: f64,
    pub ssim: f64,
}

/// PSNR / SSIM between band-filtered magnitude images.
pub fn band_analysis<T: Scalar>(
    recon: &ComplexImage<T>,
    reference: &ComplexImage<T>,
    spec: &BandSpec,
) -> Result<BandMetrics> {
    recon.check_same_dims(reference, "band_analysis")?;
    let fr = band_filter(recon, spec)?.magnitude();
    let ft = band_filter(reference, spec)?.magnitude();
    Ok(BandMetrics { band: spec.kind, psnr: psnr(&fr, &ft)?, ssim: ssim(&fr, &ft)? })
}
