use ndarray::{Array1, Array2, ArrayViewD, ArrayViewMutD, Axis};
use rand::{Rng, RngCore};

use super::params::{join, Params};
use super::check_dim;
use crate::{Real, Result};

/// Affine map `y = x W + b` over rows. `weight` is stored `in x out`.
#[derive(Debug, Clone, PartialEq)]
pub struct Linear<T> {
    pub weight: Array2<T>,
    pub bias: Option<Array1<T>>,
}

pub(crate) fn glorot<T: Real>(rows: usize, cols: usize, rng: &mut dyn RngCore) -> Array2<T> {
    let limit = (6.0 / (rows + cols) as f64).sqrt();
    Array2::from_shape_simple_fn((rows, cols), || T::of(rng.random_range(-limit..limit)))
}

impl<T: Real> Linear<T> {
    /// Glorot-uniform weights, zero bias.
    pub fn new(input_dim: usize, output_dim: usize, bias: bool, rng: &mut dyn RngCore) -> Self {
        Self {
            weight: glorot(input_dim, output_dim, rng),
            bias: bias.then(|| Array1::zeros(output_dim)),
        }
    }

    pub fn from_parts(weight: Array2<T>, bias: Option<Array1<T>>) -> Self {
        Self { weight, bias }
    }

    pub fn input_dim(&self) -> usize {
        self.weight.nrows()
    }

    pub fn output_dim(&self) -> usize {
        self.weight.ncols()
    }

    pub fn forward(&self, x: &Array2<T>) -> Result<Array2<T>> {
        check_dim("linear input", self.input_dim(), x.ncols())?;
        let mut y = x.dot(&self.weight);
        if let Some(b) = &self.bias {
            y += b;
        }
        Ok(y)
    }

    /// Accumulates `dW`, `db` into `grad` and returns `dx`.
    pub fn backward(&self, x: &Array2<T>, dy: &Array2<T>, grad: &mut Self) -> Array2<T> {
        self.backward_params(x, dy, grad);
        dy.dot(&self.weight.t())
    }

    /// Parameter gradients only, for layers whose input needs no gradient.
    pub fn backward_params(&self, x: &Array2<T>, dy: &Array2<T>, grad: &mut Self) {
        grad.weight += &x.t().dot(dy);
        if let Some(gb) = grad.bias.as_mut() {
            *gb += &dy.sum_axis(Axis(0));
        }
    }
}

impl<T: Real> Params<T> for Linear<T> {
    fn visit<'a>(&'a self, prefix: &str, f: &mut dyn FnMut(String, ArrayViewD<'a, T>)) {
        f(join(prefix, "weight"), self.weight.view().into_dyn());
        if let Some(b) = &self.bias {
            f(join(prefix, "bias"), b.view().into_dyn());
        }
    }

    fn visit_mut<'a>(&'a mut self, prefix: &str, f: &mut dyn FnMut(String, ArrayViewMutD<'a, T>)) {
        f(join(prefix, "weight"), self.weight.view_mut().into_dyn());
        if let Some(b) = &mut self.bias {
            f(join(prefix, "bias"), b.view_mut().into_dyn());
        }
    }
}

#[cfg(test)]
mod tests {
    use ndarray::array;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;

    #[test]
    fn affine_and_shapes() {
        let lin = Linear::from_parts(array![[1.0, 2.0], [3.0, 4.0]], Some(array![0.5, -0.5]));
        let y = lin.forward(&array![[1.0, 1.0]]).unwrap();
        assert_eq!(y, array![[4.5, 5.5]]);
        assert!(lin.forward(&array![[1.0, 1.0, 1.0]]).is_err());
    }

    #[test]
    fn glorot_bounds() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let lin: Linear<f64> = Linear::new(18, 128, true, &mut rng);
        let limit = (6.0f64 / 146.0).sqrt();
        assert!(lin.weight.iter().all(|w| w.abs() <= limit));
        assert!(lin.bias.unwrap().iter().all(|&b| b == 0.0));
    }
}
