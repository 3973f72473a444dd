use ndarray::Array2;
use rand::{Rng, RngCore};

use crate::Real;

/// Inverted dropout: kept activations are scaled by `1 / (1 - rate)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dropout {
    pub rate: f64,
}

impl Dropout {
    pub fn new(rate: f64) -> Self {
        assert!((0.0..1.0).contains(&rate), "dropout rate must be in [0, 1)");
        Self { rate }
    }

    /// Applies dropout in place when `rng` is given (training mode) and
    /// returns the multiplicative mask for the backward pass.
    pub fn forward<T: Real>(&self, x: &mut Array2<T>, rng: Option<&mut dyn RngCore>) -> Option<Array2<T>> {
        let rng = rng?;
        if self.rate == 0.0 {
            return None;
        }
        let scale = T::of(1.0 / (1.0 - self.rate));
        let mask = Array2::from_shape_simple_fn(x.raw_dim(), || {
            if rng.random::<f64>() < self.rate {
                T::zero()
            } else {
                scale
            }
        });
        *x *= &mask;
        Some(mask)
    }

    pub fn backward<T: Real>(grad: &mut Array2<T>, mask: Option<&Array2<T>>) {
        if let Some(m) = mask {
            *grad *= m;
        }
    }
}
