//! Complex and magnitude image containers.

use crate::error::{shape_err, Result};
use crate::scalar::Scalar;
use crate::tensor::fft::FftCache;
use crate::tensor::Tensor;

/// `H x W` complex field stored as a `[2, H, W]` tensor: real plane, then
/// imaginary plane.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexImage<T> {
    tensor: Tensor<T>,
}

impl<T: Scalar> ComplexImage<T> {
    pub fn zeros(h: usize, w: usize) -> Self {
        Self { tensor: Tensor::zeros(&[2, h, w]) }
    }

    pub fn from_tensor(tensor: Tensor<T>) -> Result<Self> {
        match tensor.shape() {
            [2, _, _] => Ok(Self { tensor }),
            [1, 2, h, w] => {
                let (h, w) = (*h, *w);
                Ok(Self { tensor: tensor.reshape(&[2, h, w])? })
            }
            s => Err(shape_err!("complex image needs shape [2, H, W], got {:?}", s)),
        }
    }

    pub fn from_parts(h: usize, w: usize, re: &[T], im: &[T]) -> Result<Self> {
        if re.len() != h * w || im.len() != h * w {
            return Err(shape_err!(
                "complex image {h}x{w}: got {} real and {} imaginary entries",
                re.len(),
                im.len()
            ));
        }
        let mut data = Vec::with_capacity(2 * h * w);
        data.extend_from_slice(re);
        data.extend_from_slice(im);
        Ok(Self { tensor: Tensor::new(&[2, h, w], data)? })
    }

    pub fn h(&self) -> usize {
        self.tensor.shape()[1]
    }

    pub fn w(&self) -> usize {
        self.tensor.shape()[2]
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.h(), self.w())
    }

    pub fn re(&self) -> &[T] {
        &self.tensor.data()[..self.h() * self.w()]
    }

    pub fn im(&self) -> &[T] {
        &self.tensor.data()[self.h() * self.w()..]
    }

    pub fn data(&self) -> &[T] {
        self.tensor.data()
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        self.tensor.data_mut()
    }

    pub fn tensor(&self) -> &Tensor<T> {
        &self.tensor
    }

    pub fn into_tensor(self) -> Tensor<T> {
        self.tensor
    }

    pub fn magnitude(&self) -> MagnitudeImage<T> {
        let data = self.re().iter().zip(self.im()).map(|(&a, &b)| (a * a + b * b).sqrt()).collect();
        MagnitudeImage { h: self.h(), w: self.w(), data }
    }

    pub fn norm(&self) -> T {
        self.tensor.sq_norm().sqrt()
    }

    pub fn scaled(&self, c: T) -> Self {
        Self { tensor: self.tensor.map(|v| v * c) }
    }

    pub fn cast<U: Scalar>(&self) -> ComplexImage<U> {
        ComplexImage { tensor: self.tensor.cast() }
    }

    /// Largest absolute elementwise difference.
    pub fn max_abs_diff(&self, other: &Self) -> T {
        self.data()
            .iter()
            .zip(other.data())
            .fold(T::zero(), |m, (&a, &b)| m.max((a - b).abs()))
    }

    pub fn check_same_dims(&self, other: &Self, what: &str) -> Result<()> {
        if self.dims() != other.dims() {
            return Err(shape_err!("{what}: {:?} vs {:?}", self.dims(), other.dims()));
        }
        Ok(())
    }
}

/// Real-valued `H x W` image, typically the magnitude of a reconstruction.
#[derive(Clone, Debug, PartialEq)]
pub struct MagnitudeImage<T> {
    pub h: usize,
    pub w: usize,
    pub data: Vec<T>,
}

impl<T: Scalar> MagnitudeImage<T> {
    pub fn new(h: usize, w: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != h * w {
            return Err(shape_err!("magnitude image {h}x{w} with {} entries", data.len()));
        }
        Ok(Self { h, w, data })
    }

    pub fn max(&self) -> T {
        self.data.iter().fold(T::neg_infinity(), |m, &v| m.max(v))
    }

    pub fn scaled(&self, c: T) -> Self {
        Self { h: self.h, w: self.w, data: self.data.iter().map(|&v| v * c).collect() }
    }
}

/// Centered orthonormal forward DFT of a complex image.
pub fn fft2c<T: Scalar>(img: &ComplexImage<T>) -> Result<ComplexImage<T>> {
    transform(img, false, &mut FftCache::default())
}

/// Centered orthonormal inverse DFT of a complex image.
pub fn ifft2c<T: Scalar>(img: &ComplexImage<T>) -> Result<ComplexImage<T>> {
    transform(img, true, &mut FftCache::default())
}

pub(crate) fn transform<T: Scalar>(
    img: &ComplexImage<T>,
    inverse: bool,
    cache: &mut FftCache<T>,
) -> Result<ComplexImage<T>> {
    let (h, w) = img.dims();
    let plan = cache.plan(h, w)?;
    let mut out = ComplexImage::zeros(h, w);
    plan.apply(img.data(), out.data_mut(), inverse);
    Ok(out)
}
