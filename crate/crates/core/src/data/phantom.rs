//! Synthetic complex-valued phantoms.
//!
//! Level 0 is a left-right symmetric variant of the modified Shepp-Logan
//! ellipse set. Higher levels jitter the geometry and intensities, add random
//! ellipses and, from level 2 on, low-amplitude texture. Every phantom gets a
//! smooth random phase so the imaginary channel is populated.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::Sample;
use crate::error::{Error, Result};
use crate::image::ComplexImage;
use crate::scalar::Scalar;

pub const MAX_COMPLEXITY: u32 = 3;

#[derive(Clone, Copy, Debug)]
struct Ellipse {
    intensity: f64,
    a: f64,
    b: f64,
    x0: f64,
    y0: f64,
    cos: f64,
    sin: f64,
}

impl Ellipse {
    fn new(intensity: f64, a: f64, b: f64, x0: f64, y0: f64, phi_deg: f64) -> Self {
        let r = phi_deg.abs().to_radians();
        let s = r.sin();
        Self { intensity, a, b, x0, y0, cos: r.cos(), sin: if phi_deg < 0.0 { -s } else { s } }
    }

    fn contains(&self, x: f64, y: f64) -> bool {
        let (dx, dy) = (x - self.x0, y - self.y0);
        let u = dx * self.cos + dy * self.sin;
        let v = -dx * self.sin + dy * self.cos;
        (u / self.a).powi(2) + (v / self.b).powi(2) <= 1.0
    }
}

/// Modified Shepp-Logan intensities with the lateral ellipses made mirror
/// images of each other.
fn symmetric_shepp_logan() -> Vec<Ellipse> {
    vec![
        Ellipse::new(1.0, 0.69, 0.92, 0.0, 0.0, 0.0),
        Ellipse::new(-0.8, 0.6624, 0.874, 0.0, -0.0184, 0.0),
        Ellipse::new(-0.2, 0.13, 0.36, 0.22, 0.0, -18.0),
        Ellipse::new(-0.2, 0.13, 0.36, -0.22, 0.0, 18.0),
        Ellipse::new(0.1, 0.21, 0.25, 0.0, 0.35, 0.0),
        Ellipse::new(0.1, 0.046, 0.046, 0.0, 0.1, 0.0),
        Ellipse::new(0.1, 0.046, 0.046, 0.0, -0.1, 0.0),
        Ellipse::new(0.1, 0.046, 0.023, -0.07, -0.605, 0.0),
        Ellipse::new(0.1, 0.023, 0.023, 0.0, -0.606, 0.0),
        Ellipse::new(0.1, 0.046, 0.023, 0.07, -0.605, 0.0),
    ]
}

/// Pixel-center coordinate in `[-1, 1]`; exactly antisymmetric under mirroring.
fn coord(i: usize, n: usize) -> f64 {
    ((2 * i + 1) as f64 - n as f64) / n as f64
}

struct Grating {
    amp: f64,
    fx: f64,
    fy: f64,
    phase: f64,
}

impl Grating {
    fn random(rng: &mut ChaCha8Rng, amp: f64, max_freq: f64) -> Self {
        Self {
            amp: rng.gen_range(0.0..amp),
            fx: rng.gen_range(-max_freq..max_freq),
            fy: rng.gen_range(-max_freq..max_freq),
            phase: rng.gen_range(0.0..2.0 * PI),
        }
    }

    fn eval(&self, x: f64, y: f64) -> f64 {
        self.amp * (PI * (self.fx * x + self.fy * y) + self.phase).cos()
    }
}

/// Generates one phantom. Pure function of its arguments.
pub fn phantom_generate<T: Scalar>(h: usize, w: usize, seed: u64, complexity: u32) -> Result<Sample<T>> {
    if h == 0 || w == 0 || h % 4 != 0 || w % 4 != 0 {
        return Err(Error::InvalidArgument(format!(
            "phantom dims {h}x{w} must be positive multiples of 4"
        )));
    }
    if complexity > MAX_COMPLEXITY {
        return Err(Error::InvalidArgument(format!(
            "complexity {complexity} exceeds maximum {MAX_COMPLEXITY}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ellipses = symmetric_shepp_logan();

    if complexity >= 1 {
        let scale = rng.gen_range(0.8..1.0);
        let rot: f64 = rng.gen_range(-12.0f64..12.0).to_radians();
        let (sx, sy) = (rng.gen_range(-0.06..0.06), rng.gen_range(-0.06..0.06));
        let (c, s) = (rot.cos(), rot.sin());
        for (k, e) in ellipses.iter_mut().enumerate() {
            let (x0, y0) = (e.x0 * scale, e.y0 * scale);
            e.x0 = c * x0 - s * y0 + sx;
            e.y0 = s * x0 + c * y0 + sy;
            e.a *= scale;
            e.b *= scale;
            let (ec, es) = (e.cos, e.sin);
            e.cos = ec * c - es * s;
            e.sin = es * c + ec * s;
            if k >= 2 {
                e.intensity *= rng.gen_range(0.6..1.6);
            }
        }
        let extra = if complexity >= 2 { rng.gen_range(4..9) } else { rng.gen_range(2..5) };
        for _ in 0..extra {
            let r = rng.gen_range(0.0..0.45) * scale;
            let t = rng.gen_range(0.0..2.0 * PI);
            let phi = rng.gen_range(-90.0..90.0);
            ellipses.push(Ellipse::new(
                rng.gen_range(-0.25..0.35),
                rng.gen_range(0.03..0.15) * scale,
                rng.gen_range(0.03..0.15) * scale,
                r * t.cos() + sx,
                r * t.sin() + sy,
                phi,
            ));
        }
    }

    let texture: Vec<Grating> = match complexity {
        0 | 1 => Vec::new(),
        2 => (0..4).map(|_| Grating::random(&mut rng, 0.04, 6.0)).collect(),
        _ => (0..8).map(|_| Grating::random(&mut rng, 0.05, 12.0)).collect(),
    };
    let phase: Vec<Grating> = (0..3).map(|_| Grating::random(&mut rng, PI / 6.0, 1.0)).collect();
    let head = ellipses[1];

    let mut re = vec![T::zero(); h * w];
    let mut im = vec![T::zero(); h * w];
    for i in 0..h {
        let y = -coord(i, h);
        for j in 0..w {
            let x = coord(j, w);
            let mut m = 0.0;
            for e in &ellipses {
                if e.contains(x, y) {
                    m += e.intensity;
                }
            }
            if !texture.is_empty() && head.contains(x, y) {
                m += texture.iter().map(|g| g.eval(x, y)).sum::<f64>();
            }
            let m = m.clamp(0.0, 1.0);
            let p: f64 = phase.iter().map(|g| g.eval(x, y)).sum();
            re[i * w + j] = T::of(m * p.cos());
            im[i * w + j] = T::of(m * p.sin());
        }
    }
    Ok(Sample {
        target: ComplexImage::from_parts(h, w, &re, &im)?,
        norm_scale: 1.0,
        id: format!("phantom-c{complexity}-s{seed}"),
    })
}
