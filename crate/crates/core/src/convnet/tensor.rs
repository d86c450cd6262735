use num_traits::Float;

use crate::error::{Error, Result};

/// Numeric type the network can be instantiated with. Training runs in `f32`;
/// gradient checks use `f64`.
pub trait Real:
    Float + std::ops::AddAssign + std::ops::MulAssign + Send + Sync + std::fmt::Debug + 'static
{
}

impl<T> Real for T where
    T: Float + std::ops::AddAssign + std::ops::MulAssign + Send + Sync + std::fmt::Debug + 'static
{
}

pub(crate) fn real<T: Real>(x: f64) -> T {
    T::from(x).expect("f64 converts to any Real")
}

/// Dense row-major tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor<T> {
    shape: Vec<usize>,
    data: Vec<T>,
}

impl<T: Real> Tensor<T> {
    pub fn new(shape: Vec<usize>, data: Vec<T>) -> Result<Self> {
        let expected: usize = shape.iter().product();
        if expected != data.len() {
            return Err(Error::Data(format!(
                "tensor shape {shape:?} needs {expected} values, got {}",
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::Data("tensor contains non-finite values".into()));
        }
        Ok(Tensor { shape, data })
    }

    pub fn zeros(shape: Vec<usize>) -> Self {
        let n = shape.iter().product();
        Tensor {
            shape,
            data: vec![T::zero(); n],
        }
    }

    /// Stacks equally sized single-channel images into a `B×H×W×1` batch.
    pub fn stack_images(images: &[&[T]], size: usize) -> Result<Self> {
        let mut data = Vec::with_capacity(images.len() * size * size);
        for img in images {
            if img.len() != size * size {
                return Err(Error::Data(format!(
                    "image has {} values, expected {size}x{size}",
                    img.len()
                )));
            }
            data.extend_from_slice(img);
        }
        Tensor::new(vec![images.len(), size, size, 1], data)
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    /// Slice of the `i`-th entry along the leading axis.
    pub fn item(&self, i: usize) -> &[T] {
        let stride: usize = self.shape[1..].iter().product();
        &self.data[i * stride..(i + 1) * stride]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shape_must_match_data() {
        assert!(Tensor::<f64>::new(vec![2, 3], vec![0.0; 5]).is_err());
        assert!(Tensor::<f64>::new(vec![1], vec![f64::NAN]).is_err());
        let t = Tensor::<f32>::new(vec![2, 2], vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(t.item(1), &[3.0, 4.0]);
    }
}
