//! Regularizers `R(y)` and their proximal maps on planar complex images
//! (`[re plane | im plane]`, row-major).

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Complex magnitude shrinkage `c max(|c| - t, 0) / |c|` on paired planes.
pub fn soft_threshold<T: Scalar>(re: &mut [T], im: &mut [T], threshold: T) -> Result<()> {
    if !(threshold >= T::zero()) {
        return Err(Error::InvalidArgument(format!("soft threshold must be >= 0, got {threshold}")));
    }
    if re.len() != im.len() {
        return Err(crate::error::shape_err!("soft_threshold: {} real vs {} imaginary", re.len(), im.len()));
    }
    for (r, i) in re.iter_mut().zip(im.iter_mut()) {
        let mag = r.hypot(*i);
        if mag <= threshold {
            *r = T::zero();
            *i = T::zero();
        } else {
            let s = (mag - threshold) / mag;
            *r *= s;
            *i *= s;
        }
    }
    Ok(())
}

/// Forward differences with Neumann boundary: `(dx, dy)` per channel,
/// zero in the last column / row.
pub(crate) fn grad<T: Scalar>(u: &[T], h: usize, w: usize, dx: &mut [T], dy: &mut [T]) {
    let hw = h * w;
    for c in 0..u.len() / hw {
        let o = c * hw;
        for i in 0..h {
            for j in 0..w {
                let k = o + i * w + j;
                dx[k] = if j + 1 < w { u[k + 1] - u[k] } else { T::zero() };
                dy[k] = if i + 1 < h { u[k + w] - u[k] } else { T::zero() };
            }
        }
    }
}

/// Adjoint of [`grad`] (negative divergence).
pub(crate) fn grad_adjoint<T: Scalar>(px: &[T], py: &[T], h: usize, w: usize, out: &mut [T]) {
    let hw = h * w;
    for c in 0..px.len() / hw {
        let o = c * hw;
        for i in 0..h {
            for j in 0..w {
                let k = o + i * w + j;
                let mut v = T::zero();
                if j > 0 {
                    v += px[k - 1];
                }
                if j + 1 < w {
                    v -= px[k];
                }
                if i > 0 {
                    v += py[k - w];
                }
                if i + 1 < h {
                    v -= py[k];
                }
                out[k] = v;
            }
        }
    }
}

/// Isotropic vectorial TV: per pixel the norm of the four differences
/// (real and imaginary, horizontal and vertical).
pub fn total_variation<T: Scalar>(u: &[T], h: usize, w: usize) -> f64 {
    let n = u.len();
    let (mut dx, mut dy) = (vec![T::zero(); n], vec![T::zero(); n]);
    grad(u, h, w, &mut dx, &mut dy);
    let hw = h * w;
    (0..hw)
        .map(|k| {
            let (a, b, c, d) = (dx[k].as_f64(), dx[k + hw].as_f64(), dy[k].as_f64(), dy[k + hw].as_f64());
            (a * a + b * b + c * c + d * d).sqrt()
        })
        .sum()
}

/// `argmin_u 1/2 |u - v|^2 + tau TV(u)` by fast gradient projection on the
/// dual, `iters` iterations from a zero dual.
pub fn tv_prox<T: Scalar>(v: &[T], h: usize, w: usize, tau: T, iters: usize) -> Vec<T> {
    let mut dual = TvDual::new(v.len());
    tv_prox_warm(v, h, w, tau, iters, &mut dual)
}

/// Dual field `(px, py)` of the TV prox, reusable as a warm start.
#[derive(Clone, Debug)]
pub struct TvDual<T> {
    px: Vec<T>,
    py: Vec<T>,
}

impl<T: Scalar> TvDual<T> {
    pub fn new(n: usize) -> Self {
        Self { px: vec![T::zero(); n], py: vec![T::zero(); n] }
    }
}

/// [`tv_prox`] starting from (and updating) `dual`.
pub fn tv_prox_warm<T: Scalar>(v: &[T], h: usize, w: usize, tau: T, iters: usize, dual: &mut TvDual<T>) -> Vec<T> {
    if tau <= T::zero() {
        return v.to_vec();
    }
    let n = v.len();
    let hw = h * w;
    let step = T::one() / (T::of(8.0) * tau);
    let TvDual { px, py } = dual;
    let (mut rx, mut ry) = (px.clone(), py.clone());
    let (mut gx, mut gy) = (vec![T::zero(); n], vec![T::zero(); n]);
    let mut u = vec![T::zero(); n];
    let mut t = T::one();
    for _ in 0..iters {
        grad_adjoint(&rx, &ry, h, w, &mut u);
        for k in 0..n {
            u[k] = v[k] - tau * u[k];
        }
        grad(&u, h, w, &mut gx, &mut gy);
        let (old_x, old_y) = (px.clone(), py.clone());
        for k in 0..hw {
            let a = rx[k] + step * gx[k];
            let b = rx[k + hw] + step * gx[k + hw];
            let c = ry[k] + step * gy[k];
            let d = ry[k + hw] + step * gy[k + hw];
            let norm = (a * a + b * b + c * c + d * d).sqrt().max(T::one());
            px[k] = a / norm;
            px[k + hw] = b / norm;
            py[k] = c / norm;
            py[k + hw] = d / norm;
        }
        let t_next = (T::one() + (T::one() + T::of(4.0) * t * t).sqrt()) / T::of(2.0);
        let beta = (t - T::one()) / t_next;
        for k in 0..n {
            rx[k] = px[k] + beta * (px[k] - old_x[k]);
            ry[k] = py[k] + beta * (py[k] - old_y[k]);
        }
        t = t_next;
    }
    grad_adjoint(px, py, h, w, &mut u);
    for k in 0..n {
        u[k] = v[k] - tau * u[k];
    }
    u
}

fn check_even(h: usize, w: usize) -> Result<()> {
    if h % 2 != 0 || w % 2 != 0 {
        return Err(Error::InvalidArgument(format!("Haar prior needs even dimensions, got {h}x{w}")));
    }
    Ok(())
}

/// Single-level orthonormal 2-D Haar transform per channel. Output per
/// channel is four `(h/2) x (w/2)` bands laid out `[LL | LH | HL | HH]`.
pub fn haar_forward<T: Scalar>(u: &[T], h: usize, w: usize) -> Result<Vec<T>> {
    check_even(h, w)?;
    let (hh, hw2) = (h / 2, w / 2);
    let q = hh * hw2;
    let half = T::of(0.5);
    let mut out = vec![T::zero(); u.len()];
    for c in 0..u.len() / (h * w) {
        let (src, dst) = (&u[c * h * w..], &mut out[c * h * w..]);
        for i in 0..hh {
            for j in 0..hw2 {
                let a = src[2 * i * w + 2 * j];
                let b = src[2 * i * w + 2 * j + 1];
                let cc = src[(2 * i + 1) * w + 2 * j];
                let d = src[(2 * i + 1) * w + 2 * j + 1];
                let k = i * hw2 + j;
                dst[k] = half * (a + b + cc + d);
                dst[q + k] = half * (a - b + cc - d);
                dst[2 * q + k] = half * (a + b - cc - d);
                dst[3 * q + k] = half * (a - b - cc + d);
            }
        }
    }
    Ok(out)
}

pub fn haar_inverse<T: Scalar>(coeffs: &[T], h: usize, w: usize) -> Result<Vec<T>> {
    check_even(h, w)?;
    let (hh, hw2) = (h / 2, w / 2);
    let q = hh * hw2;
    let half = T::of(0.5);
    let mut out = vec![T::zero(); coeffs.len()];
    for c in 0..coeffs.len() / (h * w) {
        let (src, dst) = (&coeffs[c * h * w..], &mut out[c * h * w..]);
        for i in 0..hh {
            for j in 0..hw2 {
                let k = i * hw2 + j;
                let (ll, lh, hl, hh_) = (src[k], src[q + k], src[2 * q + k], src[3 * q + k]);
                dst[2 * i * w + 2 * j] = half * (ll + lh + hl + hh_);
                dst[2 * i * w + 2 * j + 1] = half * (ll - lh + hl - hh_);
                dst[(2 * i + 1) * w + 2 * j] = half * (ll + lh - hl - hh_);
                dst[(2 * i + 1) * w + 2 * j + 1] = half * (ll - lh - hl + hh_);
            }
        }
    }
    Ok(out)
}

/// l1 norm (complex magnitude) of the Haar detail bands.
pub fn haar_detail_l1<T: Scalar>(u: &[T], h: usize, w: usize) -> Result<f64> {
    let c = haar_forward(u, h, w)?;
    let hw = h * w;
    let q = hw / 4;
    Ok((q..hw).map(|k| c[k].as_f64().hypot(c[k + hw].as_f64())).sum())
}

pub fn haar_prox<T: Scalar>(v: &[T], h: usize, w: usize, tau: T) -> Result<Vec<T>> {
    let mut c = haar_forward(v, h, w)?;
    let hw = h * w;
    let q = hw / 4;
    let (re, im) = c.split_at_mut(hw);
    soft_threshold(&mut re[q..], &mut im[q..hw], tau)?;
    haar_inverse(&c, h, w)
}
