use crate::gnn::{named_params, named_params_mut, zeros_like, Params};
use crate::{Error, Real, Result};

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPS: f64 = 1e-8;

/// Adam with bias correction. Moments live in zeroed clones of the module.
#[derive(Debug, Clone)]
pub struct Adam<M> {
    m: M,
    v: M,
    step: u64,
}

impl<M: Clone> Adam<M> {
    pub fn new<T: Real>(module: &M) -> Self
    where
        M: Params<T>,
    {
        Self {
            m: zeros_like(module),
            v: zeros_like(module),
            step: 0,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    pub fn first_moment(&self) -> &M {
        &self.m
    }

    pub fn second_moment(&self) -> &M {
        &self.v
    }

    /// Applies one update `params -= lr * m_hat / (sqrt(v_hat) + eps)`.
    pub fn step<T: Real>(&mut self, params: &mut M, grads: &M, lr: f64) -> Result<()>
    where
        M: Params<T>,
    {
        let grads = named_params(grads);
        let mut params_v = named_params_mut(params);
        let mut m = named_params_mut(&mut self.m);
        let mut v = named_params_mut(&mut self.v);
        if grads.len() != params_v.len() || m.len() != params_v.len() {
            return Err(Error::Format("optimizer state does not match parameters".into()));
        }
        for ((pn, p), (gn, g)) in params_v.iter().zip(&grads) {
            if pn != gn || p.shape() != g.shape() {
                return Err(Error::Format(format!(
                    "gradient {gn} {:?} does not match parameter {pn} {:?}",
                    g.shape(),
                    p.shape()
                )));
            }
        }
        self.step += 1;
        let t = self.step as i32;
        let (b1, b2) = (T::of(ADAM_BETA1), T::of(ADAM_BETA2));
        let c1 = T::of(1.0 - ADAM_BETA1.powi(t));
        let c2 = T::of(1.0 - ADAM_BETA2.powi(t));
        let (lr, eps, one) = (T::of(lr), T::of(ADAM_EPS), T::one());
        for (((_, p), (_, g)), ((_, m), (_, v))) in params_v
            .iter_mut()
            .zip(&grads)
            .zip(m.iter_mut().zip(v.iter_mut()))
        {
            for (((p, &g), m), v) in p.iter_mut().zip(g.iter()).zip(m.iter_mut()).zip(v.iter_mut()) {
                *m = b1 * *m + (one - b1) * g;
                *v = b2 * *v + (one - b2) * g * g;
                let m_hat = *m / c1;
                let v_hat = *v / c2;
                *p -= lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
        Ok(())
    }
}
