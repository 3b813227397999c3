//! Cartesian k-space forward model: masks, encoding, zero filling and the
//! hard data-consistency projection `F^-1[D x + (1 - D) F z]`.

mod mask;

pub use mask::{default_center_fraction, mask_generate, mask_generate_with, Mask, MaskHeader};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{shape_err, Result};
use crate::image::{fft2c, ifft2c, ComplexImage};
use crate::scalar::Scalar;
use crate::tensor::{Graph, Var};

/// Undersampled measurements `D x`: values are exactly zero off the mask.
#[derive(Clone, Debug, PartialEq)]
pub struct KSpaceData<T> {
    pub values: ComplexImage<T>,
    pub mask: Mask,
}

fn check_dims<T: Scalar>(img: &ComplexImage<T>, mask: &Mask, op: &str) -> Result<()> {
    if img.dims() != mask.dims() {
        return Err(shape_err!("{op}: image {:?} vs mask {:?}", img.dims(), mask.dims()));
    }
    Ok(())
}

fn apply_mask<T: Scalar>(k: &mut ComplexImage<T>, mask: &Mask) {
    let w = mask.w();
    let hw = mask.h() * w;
    let cols = mask.columns();
    for (i, v) in k.data_mut().iter_mut().enumerate() {
        if !cols[(i % hw) % w] {
            *v = T::zero();
        }
    }
}

/// `D . fft2c(image)`.
pub fn forward_encode<T: Scalar>(image: &ComplexImage<T>, mask: &Mask) -> Result<KSpaceData<T>> {
    check_dims(image, mask, "forward_encode")?;
    let mut values = fft2c(image)?;
    apply_mask(&mut values, mask);
    Ok(KSpaceData { values, mask: mask.clone() })
}

/// Adds complex Gaussian noise of standard deviation `sigma` per component on
/// sampled positions only.
pub fn add_measurement_noise<T: Scalar>(x: &mut KSpaceData<T>, sigma: f64, seed: u64) -> Result<()> {
    let normal = Normal::new(0.0, sigma).map_err(|e| crate::Error::InvalidArgument(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w = x.mask.w();
    let hw = x.mask.h() * w;
    let cols = x.mask.columns().to_vec();
    for (i, v) in x.values.data_mut().iter_mut().enumerate() {
        if cols[(i % hw) % w] {
            *v += T::of(normal.sample(&mut rng));
        }
    }
    Ok(())
}

/// Zero-filled reconstruction `ifft2c(D x)`.
pub fn zero_fill<T: Scalar>(x: &KSpaceData<T>) -> Result<ComplexImage<T>> {
    ifft2c(&x.values)
}

/// `F^-1[D x + (1 - D) F z]`.
pub fn data_consistency<T: Scalar>(z: &ComplexImage<T>, x: &KSpaceData<T>, mask: &Mask) -> Result<ComplexImage<T>> {
    check_dims(z, mask, "data_consistency")?;
    check_dims(&x.values, mask, "data_consistency")?;
    let mut k = fft2c(z)?;
    let w = mask.w();
    let hw = mask.h() * w;
    let cols = mask.columns();
    for (i, v) in k.data_mut().iter_mut().enumerate() {
        if cols[(i % hw) % w] {
            *v = x.values.data()[i];
        }
    }
    ifft2c(&k)
}

/// Differentiable data consistency on a graph node holding a `[2, H, W]` image.
/// Gradients flow to `z` through the unsampled frequencies only.
pub fn data_consistency_node<T: Scalar>(g: &mut Graph<T>, z: Var, x: &KSpaceData<T>, mask: &Mask) -> Result<Var> {
    let shape = g.value(z).shape().to_vec();
    if shape.len() != 3 || shape[0] != 2 || (shape[1], shape[2]) != mask.dims() {
        return Err(shape_err!("data_consistency: image {:?} vs mask {:?}", shape, mask.dims()));
    }
    check_dims(&x.values, mask, "data_consistency")?;
    let k = g.fft2c(z)?;
    let kept = g.mask_mul(k, &mask.complement_weights::<T>())?;
    let measured = g.constant(x.values.tensor().clone());
    let merged = g.add(kept, measured)?;
    g.ifft2c(merged)
}
