//! 3x3 / stride 1 / zero-padding 1 convolution kernels on single images.
//!
//! The kernels work tap by tap on whole rows so the inner loops are
//! contiguous slice updates the compiler can vectorize. Summation order is
//! fixed, so results are bit-reproducible.

use crate::scalar::Scalar;

#[inline]
fn tap_ranges(ky: usize, kx: usize, h: usize, w: usize) -> (isize, isize, usize, usize, usize, usize) {
    let dy = ky as isize - 1;
    let dx = kx as isize - 1;
    let y0 = if dy < 0 { 1 } else { 0 };
    let y1 = if dy > 0 { h.saturating_sub(1) } else { h };
    let x0 = if dx < 0 { 1 } else { 0 };
    let x1 = if dx > 0 { w.saturating_sub(1) } else { w };
    (dy, dx, y0, y1, x0, x1)
}

/// `out[co] = bias[co] + sum_ci weight[co, ci] * input[ci]`, correlation form.
pub(crate) fn forward<T: Scalar>(
    input: &[T],
    cin: usize,
    h: usize,
    w: usize,
    weight: &[T],
    bias: &[T],
    cout: usize,
    out: &mut [T],
) {
    let hw = h * w;
    for co in 0..cout {
        let plane = &mut out[co * hw..(co + 1) * hw];
        plane.fill(bias[co]);
        for ci in 0..cin {
            let src = &input[ci * hw..(ci + 1) * hw];
            let kbase = (co * cin + ci) * 9;
            for ky in 0..3 {
                for kx in 0..3 {
                    let wv = weight[kbase + ky * 3 + kx];
                    let (dy, dx, y0, y1, x0, x1) = tap_ranges(ky, kx, h, w);
                    if x0 >= x1 {
                        continue;
                    }
                    for y in y0..y1 {
                        let sy = (y as isize + dy) as usize;
                        let sx0 = (x0 as isize + dx) as usize;
                        let dst = &mut plane[y * w + x0..y * w + x1];
                        let s = &src[sy * w + sx0..sy * w + sx0 + (x1 - x0)];
                        for (d, &v) in dst.iter_mut().zip(s) {
                            *d += wv * v;
                        }
                    }
                }
            }
        }
    }
}

/// Accumulates input, weight and bias gradients for one image.
#[allow(clippy::too_many_arguments)]
pub(crate) fn backward<T: Scalar>(
    input: &[T],
    cin: usize,
    h: usize,
    w: usize,
    weight: &[T],
    cout: usize,
    grad_out: &[T],
    grad_input: Option<&mut [T]>,
    grad_weight: Option<&mut [T]>,
    grad_bias: Option<&mut [T]>,
) {
    let hw = h * w;
    if let Some(gb) = grad_bias {
        for co in 0..cout {
            let s = grad_out[co * hw..(co + 1) * hw].iter().fold(T::zero(), |a, &v| a + v);
            gb[co] += s;
        }
    }
    if let Some(gw) = grad_weight {
        for co in 0..cout {
            let g = &grad_out[co * hw..(co + 1) * hw];
            for ci in 0..cin {
                let src = &input[ci * hw..(ci + 1) * hw];
                let kbase = (co * cin + ci) * 9;
                for ky in 0..3 {
                    for kx in 0..3 {
                        let (dy, dx, y0, y1, x0, x1) = tap_ranges(ky, kx, h, w);
                        let mut acc = T::zero();
                        if x0 < x1 {
                            for y in y0..y1 {
                                let sy = (y as isize + dy) as usize;
                                let sx0 = (x0 as isize + dx) as usize;
                                let gr = &g[y * w + x0..y * w + x1];
                                let s = &src[sy * w + sx0..sy * w + sx0 + (x1 - x0)];
                                acc += dot(gr, s);
                            }
                        }
                        gw[kbase + ky * 3 + kx] += acc;
                    }
                }
            }
        }
    }
    if let Some(gi) = grad_input {
        for co in 0..cout {
            let g = &grad_out[co * hw..(co + 1) * hw];
            for ci in 0..cin {
                let dst_plane = &mut gi[ci * hw..(ci + 1) * hw];
                let kbase = (co * cin + ci) * 9;
                for ky in 0..3 {
                    for kx in 0..3 {
                        let wv = weight[kbase + ky * 3 + kx];
                        let (dy, dx, y0, y1, x0, x1) = tap_ranges(ky, kx, h, w);
                        if x0 >= x1 {
                            continue;
                        }
                        for y in y0..y1 {
                            let sy = (y as isize + dy) as usize;
                            let sx0 = (x0 as isize + dx) as usize;
                            let gr = &g[y * w + x0..y * w + x1];
                            let d = &mut dst_plane[sy * w + sx0..sy * w + sx0 + (x1 - x0)];
                            for (dv, &gv) in d.iter_mut().zip(gr) {
                                *dv += wv * gv;
                            }
                        }
                    }
                }
            }
        }
    }
}

/// Dot product with four independent partial sums (fixed order).
#[inline]
fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    let mut acc = [T::zero(); 4];
    let chunks = a.len() / 4;
    for i in 0..chunks {
        for k in 0..4 {
            acc[k] += a[4 * i + k] * b[4 * i + k];
        }
    }
    let mut tail = T::zero();
    for i in chunks * 4..a.len() {
        tail += a[i] * b[i];
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// 2x2 max pooling of one plane; returns the flat source index of each maximum.
pub(crate) fn maxpool_plane<T: Scalar>(src: &[T], h: usize, w: usize, out: &mut [T], arg: &mut [u32]) {
    let (oh, ow) = (h / 2, w / 2);
    for i in 0..oh {
        for j in 0..ow {
            let cands = [
                (2 * i) * w + 2 * j,
                (2 * i) * w + 2 * j + 1,
                (2 * i + 1) * w + 2 * j,
                (2 * i + 1) * w + 2 * j + 1,
            ];
            let mut best = cands[0];
            for &c in &cands[1..] {
                // strict comparison keeps the first maximum; NaN wins so it propagates
                if src[c] > src[best] || (src[c].is_nan() && !src[best].is_nan()) {
                    best = c;
                }
            }
            out[i * ow + j] = src[best];
            arg[i * ow + j] = best as u32;
        }
    }
}

pub(crate) fn upsample_plane<T: Scalar>(src: &[T], h: usize, w: usize, out: &mut [T]) {
    let ow = 2 * w;
    for i in 0..h {
        for j in 0..w {
            let v = src[i * w + j];
            let o = 2 * i * ow + 2 * j;
            out[o] = v;
            out[o + 1] = v;
            out[o + ow] = v;
            out[o + ow + 1] = v;
        }
    }
}

pub(crate) fn upsample_plane_backward<T: Scalar>(g: &[T], h: usize, w: usize, out: &mut [T]) {
    let ow = 2 * w;
    for i in 0..h {
        for j in 0..w {
            let o = 2 * i * ow + 2 * j;
            out[i * w + j] += (g[o] + g[o + 1]) + (g[o + ow] + g[o + ow + 1]);
        }
    }
}
