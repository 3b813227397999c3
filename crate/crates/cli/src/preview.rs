//! 8-bit magnitude previews for eyeballing; never read back by any metric.

use std::path::Path;

use image::GrayImage;
use oucr::{ComplexImage, Scalar};

use crate::CliError;

pub fn write_png<T: Scalar>(img: &ComplexImage<T>, path: &Path) -> Result<(), CliError> {
    let mag = img.magnitude();
    let max = mag.max().as_f64();
    let scale = if max > 0.0 { 255.0 / max } else { 0.0 };
    let bytes: Vec<u8> = mag.data.iter().map(|v| (v.as_f64() * scale).round().clamp(0.0, 255.0) as u8).collect();
    let gray = GrayImage::from_raw(mag.w as u32, mag.h as u32, bytes).expect("buffer matches dims");
    gray.save(path).map_err(|e| CliError::Core(oucr::Error::Io(std::io::Error::other(e.to_string()))))
}
