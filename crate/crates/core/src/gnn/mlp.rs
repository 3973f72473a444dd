use ndarray::{Array1, Array2, ArrayViewD, ArrayViewMutD, Axis};
use rand::RngCore;

use super::dropout::Dropout;
use super::linear::Linear;
use super::params::{join, Params};
use super::{relu_backward_inplace, relu_inplace};
use crate::{Real, Result};

/// Hidden widths of the regression head template.
pub const MLP_HIDDEN: [usize; 2] = [128, 64];

/// Scalar regression head: `Linear(in, 128) - ReLU - Dropout - Linear(128, 64) - ReLU - Linear(64, 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp<T> {
    pub hidden1: Linear<T>,
    pub hidden2: Linear<T>,
    pub output: Linear<T>,
    pub dropout: Dropout,
}

#[derive(Debug, Clone)]
pub struct MlpCache<T> {
    input: Array2<T>,
    a1: Array2<T>,
    mask: Option<Array2<T>>,
    d1: Array2<T>,
    a2: Array2<T>,
}

impl<T: Real> Mlp<T> {
    pub fn new(input_dim: usize, dropout: f64, rng: &mut dyn RngCore) -> Self {
        Self {
            hidden1: Linear::new(input_dim, MLP_HIDDEN[0], true, rng),
            hidden2: Linear::new(MLP_HIDDEN[0], MLP_HIDDEN[1], true, rng),
            output: Linear::new(MLP_HIDDEN[1], 1, true, rng),
            dropout: Dropout::new(dropout),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.hidden1.input_dim()
    }

    /// Sets the final layer's weights and bias to zero, so the head outputs 0.
    pub fn zero_output(&mut self) {
        self.output.weight.fill(T::zero());
        if let Some(b) = &mut self.output.bias {
            b.fill(T::zero());
        }
    }

    pub fn forward(&self, x: &Array2<T>, rng: Option<&mut dyn RngCore>) -> Result<(Array1<T>, MlpCache<T>)> {
        let mut a1 = self.hidden1.forward(x)?;
        relu_inplace(&mut a1);
        let mut d1 = a1.clone();
        let mask = self.dropout.forward(&mut d1, rng);
        let mut a2 = self.hidden2.forward(&d1)?;
        relu_inplace(&mut a2);
        let y = self.output.forward(&a2)?.remove_axis(Axis(1));
        Ok((
            y,
            MlpCache {
                input: x.clone(),
                a1,
                mask,
                d1,
                a2,
            },
        ))
    }

    pub fn backward(&self, cache: &MlpCache<T>, dy: &Array1<T>, grad: &mut Self) -> Array2<T> {
        let dy = dy.clone().insert_axis(Axis(1));
        let mut da2 = self.output.backward(&cache.a2, &dy, &mut grad.output);
        relu_backward_inplace(&mut da2, &cache.a2);
        let mut dd1 = self.hidden2.backward(&cache.d1, &da2, &mut grad.hidden2);
        Dropout::backward(&mut dd1, cache.mask.as_ref());
        relu_backward_inplace(&mut dd1, &cache.a1);
        self.hidden1.backward(&cache.input, &dd1, &mut grad.hidden1)
    }
}

impl<T: Real> Params<T> for Mlp<T> {
    fn visit<'a>(&'a self, prefix: &str, f: &mut dyn FnMut(String, ArrayViewD<'a, T>)) {
        self.hidden1.visit(&join(prefix, "0"), f);
        self.hidden2.visit(&join(prefix, "1"), f);
        self.output.visit(&join(prefix, "2"), f);
    }

    fn visit_mut<'a>(&'a mut self, prefix: &str, f: &mut dyn FnMut(String, ArrayViewMutD<'a, T>)) {
        self.hidden1.visit_mut(&join(prefix, "0"), f);
        self.hidden2.visit_mut(&join(prefix, "1"), f);
        self.output.visit_mut(&join(prefix, "2"), f);
    }
}
