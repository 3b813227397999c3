//! Centered, orthonormal 2-D DFT over planar (real plane, imaginary plane) data.
//!
//! `fft2c(x) = fftshift(fft2(ifftshift(x))) / sqrt(H W)` and likewise for the
//! inverse, so the zero frequency sits at index `(H/2, W/2)` and both
//! directions are unitary. Any length >= 1 is supported.

use std::collections::HashMap;
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Row and column plans for one `(H, W)` geometry, both directions.
#[derive(Clone)]
pub struct Plan2d<T: Scalar> {
    h: usize,
    w: usize,
    row_fwd: Arc<dyn Fft<T>>,
    row_inv: Arc<dyn Fft<T>>,
    col_fwd: Arc<dyn Fft<T>>,
    col_inv: Arc<dyn Fft<T>>,
}

/// Caches [`Plan2d`]s by geometry.
pub struct FftCache<T: Scalar> {
    planner: FftPlanner<T>,
    plans: HashMap<(usize, usize), Plan2d<T>>,
}

impl<T: Scalar> Default for FftCache<T> {
    fn default() -> Self {
        Self { planner: FftPlanner::new(), plans: HashMap::new() }
    }
}

impl<T: Scalar> FftCache<T> {
    pub fn plan(&mut self, h: usize, w: usize) -> Result<Plan2d<T>> {
        if h == 0 || w == 0 {
            return Err(Error::UnsupportedLength {
                len: h.min(w),
                supported: "any length >= 1",
            });
        }
        if let Some(p) = self.plans.get(&(h, w)) {
            return Ok(p.clone());
        }
        let p = Plan2d {
            h,
            w,
            row_fwd: self.planner.plan_fft_forward(w),
            row_inv: self.planner.plan_fft_inverse(w),
            col_fwd: self.planner.plan_fft_forward(h),
            col_inv: self.planner.plan_fft_inverse(h),
        };
        self.plans.insert((h, w), p.clone());
        Ok(p)
    }
}

impl<T: Scalar> Plan2d<T> {
    pub fn dims(&self) -> (usize, usize) {
        (self.h, self.w)
    }

    /// Transforms one complex image stored as `[re plane | im plane]`.
    pub fn apply(&self, src: &[T], dst: &mut [T], inverse: bool) {
        let (h, w) = (self.h, self.w);
        let hw = h * w;
        debug_assert_eq!(src.len(), 2 * hw);
        debug_assert_eq!(dst.len(), 2 * hw);
        let (hh, wh) = (h / 2, w / 2);

        // ifftshift on the way in
        let mut buf: Vec<Complex<T>> = Vec::with_capacity(hw);
        for i in 0..h {
            let si = (i + hh) % h;
            for j in 0..w {
                let s = si * w + (j + wh) % w;
                buf.push(Complex::new(src[s], src[hw + s]));
            }
        }
        let (row, col) = if inverse {
            (&self.row_inv, &self.col_inv)
        } else {
            (&self.row_fwd, &self.col_fwd)
        };
        row.process(&mut buf);
        let mut t: Vec<Complex<T>> = vec![Complex::new(T::zero(), T::zero()); hw];
        for i in 0..h {
            for j in 0..w {
                t[j * h + i] = buf[i * w + j];
            }
        }
        col.process(&mut t);

        // fftshift on the way out, with orthonormal scaling
        let scale = T::one() / T::of(hw as f64).sqrt();
        for j in 0..w {
            let dj = (j + wh) % w;
            for i in 0..h {
                let d = ((i + hh) % h) * w + dj;
                let v = t[j * h + i];
                dst[d] = v.re * scale;
                dst[hw + d] = v.im * scale;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Direct O(N^2) centered DFT, independent of the planner path.
    fn naive_dft2c(src: &[f64], h: usize, w: usize, inverse: bool) -> Vec<f64> {
        let hw = h * w;
        let sign = if inverse { 1.0 } else { -1.0 };
        let c = |k: usize, n: usize| k as f64 - (n / 2) as f64;
        let mut out = vec![0.0; 2 * hw];
        for u in 0..h {
            for v in 0..w {
                let (mut re, mut im) = (0.0, 0.0);
                for y in 0..h {
                    for x in 0..w {
                        let ph = sign
                            * 2.0
                            * std::f64::consts::PI
                            * (c(u, h) * c(y, h) / h as f64 + c(v, w) * c(x, w) / w as f64);
                        let (a, b) = (src[y * w + x], src[hw + y * w + x]);
                        re += a * ph.cos() - b * ph.sin();
                        im += a * ph.sin() + b * ph.cos();
                    }
                }
                let s = 1.0 / (hw as f64).sqrt();
                out[u * w + v] = re * s;
                out[hw + u * w + v] = im * s;
            }
        }
        out
    }

    #[test]
    fn matches_naive_dft_including_odd_lengths() {
        let mut cache = FftCache::<f64>::default();
        for &(h, w) in &[(4, 4), (5, 3), (6, 7), (1, 8)] {
            let src: Vec<f64> = (0..2 * h * w).map(|i| ((i * 37 % 11) as f64) / 7.0 - 0.6).collect();
            let plan = cache.plan(h, w).unwrap();
            for inverse in [false, true] {
                let mut dst = vec![0.0; 2 * h * w];
                plan.apply(&src, &mut dst, inverse);
                let want = naive_dft2c(&src, h, w, inverse);
                for (a, b) in dst.iter().zip(&want) {
                    assert!((a - b).abs() < 1e-12, "{h}x{w} inverse={inverse}: {a} vs {b}");
                }
            }
        }
    }

    #[test]
    fn zero_length_is_rejected() {
        let mut cache = FftCache::<f64>::default();
        assert!(matches!(cache.plan(0, 4), Err(Error::UnsupportedLength { .. })));
    }
}
