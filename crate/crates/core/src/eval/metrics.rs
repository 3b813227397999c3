//! Full-reference image quality metrics on magnitude images.

use crate::error::{shape_err, Error, Result};
use crate::image::MagnitudeImage;
use crate::scalar::Scalar;

/// Side of the uniform SSIM window.
pub const SSIM_WINDOW: usize = 7;
pub const SSIM_K1: f64 = 0.01;
pub const SSIM_K2: f64 = 0.03;

/// RMSE at or below this fraction of the data range counts as identical.
/// Such a PSNR would exceed 240 dB, which is below the resolution of the
/// transforms used to produce the images.
pub const IDENTICAL_RTOL: f64 = 1e-12;

fn check<T: Scalar>(a: &MagnitudeImage<T>, b: &MagnitudeImage<T>) -> Result<()> {
    if (a.h, a.w) != (b.h, b.w) {
        return Err(shape_err!("metric inputs are {}x{} and {}x{}", a.h, a.w, b.h, b.w));
    }
    Ok(())
}

fn data_range<T: Scalar>(reference: &MagnitudeImage<T>) -> Result<f64> {
    let l = reference.max().as_f64();
    if !(l > 0.0) {
        return Err(Error::InvalidArgument(
            "reference image is all zero (or non-positive); data range undefined".into(),
        ));
    }
    Ok(l)
}

/// `20 log10(max(reference) / RMSE)` in dB; `+inf` for identical images.
pub fn psnr<T: Scalar>(recon: &MagnitudeImage<T>, reference: &MagnitudeImage<T>) -> Result<f64> {
    check(recon, reference)?;
    let l = data_range(reference)?;
    let n = recon.data.len() as f64;
    let mse = recon
        .data
        .iter()
        .zip(&reference.data)
        .map(|(&a, &b)| {
            let d = a.as_f64() - b.as_f64();
            d * d
        })
        .sum::<f64>()
        / n;
    let rmse = mse.sqrt();
    if rmse <= IDENTICAL_RTOL * l {
        return Ok(f64::INFINITY);
    }
    Ok(20.0 * (l / rmse).log10())
}

/// Mean SSIM over all full 7x7 windows, uniform weights, sample covariance,
/// `K1 = 0.01`, `K2 = 0.03`, data range `max(reference)`.
pub fn ssim<T: Scalar>(recon: &MagnitudeImage<T>, reference: &MagnitudeImage<T>) -> Result<f64> {
    check(recon, reference)?;
    let (h, w) = (reference.h, reference.w);
    if h < SSIM_WINDOW || w < SSIM_WINDOW {
        return Err(Error::InvalidArgument(format!(
            "image {h}x{w} is smaller than the {SSIM_WINDOW}x{SSIM_WINDOW} SSIM window"
        )));
    }
    let l = data_range(reference)?;
    let c1 = (SSIM_K1 * l).powi(2);
    let c2 = (SSIM_K2 * l).powi(2);
    let x: Vec<f64> = recon.data.iter().map(|v| v.as_f64()).collect();
    let y: Vec<f64> = reference.data.iter().map(|v| v.as_f64()).collect();

    // Window sums via separable running sums; x and y go through identical code.
    let sx = box_sums(&x, h, w);
    let sy = box_sums(&y, h, w);
    let sxx = box_sums(&x.iter().map(|v| v * v).collect::<Vec<_>>(), h, w);
    let syy = box_sums(&y.iter().map(|v| v * v).collect::<Vec<_>>(), h, w);
    let sxy = box_sums(&x.iter().zip(&y).map(|(a, b)| a * b).collect::<Vec<_>>(), h, w);

    let np = (SSIM_WINDOW * SSIM_WINDOW) as f64;
    let cov_norm = np / (np - 1.0);
    let mut total = 0.0;
    for k in 0..sx.len() {
        let ux = sx[k] / np;
        let uy = sy[k] / np;
        let vx = cov_norm * (sxx[k] / np - ux * ux);
        let vy = cov_norm * (syy[k] / np - uy * uy);
        let vxy = cov_norm * (sxy[k] / np - ux * uy);
        let num = (2.0 * ux * uy + c1) * (2.0 * vxy + c2);
        let den = (ux * ux + uy * uy + c1) * (vx + vy + c2);
        total += num / den;
    }
    Ok(total / sx.len() as f64)
}

/// Sums over every full `SSIM_WINDOW`-square window, row-major over window
/// positions. Each sum is accumulated directly so no cancellation occurs.
fn box_sums(v: &[f64], h: usize, w: usize) -> Vec<f64> {
    let k = SSIM_WINDOW;
    let ow = w - k + 1;
    let oh = h - k + 1;
    let mut rows = vec![0.0; h * ow];
    for i in 0..h {
        for j in 0..ow {
            rows[i * ow + j] = v[i * w + j..i * w + j + k].iter().sum();
        }
    }
    let mut out = vec![0.0; oh * ow];
    for i in 0..oh {
        for j in 0..ow {
            out[i * ow + j] = (0..k).map(|d| rows[(i + d) * ow + j]).sum();
        }
    }
    out
}
