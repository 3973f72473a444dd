use ndarray::Array1;

use super::network::ForwardOutputs;
use crate::Real;

/// Transition point of the SmoothL1 loss, in normalized target units.
pub const SMOOTH_L1_BETA: f64 = 1.0;

/// `0.5 r^2 / beta` for `|r| < beta`, else `|r| - 0.5 beta`, with `r = a - b`.
pub fn smooth_l1<T: Real>(a: T, b: T) -> T {
    let beta = T::of(SMOOTH_L1_BETA);
    let r = (a - b).abs();
    if r < beta {
        T::of(0.5) * r * r / beta
    } else {
        r - T::of(0.5) * beta
    }
}

/// Derivative of [`smooth_l1`] with respect to `a`.
pub fn smooth_l1_grad<T: Real>(a: T, b: T) -> T {
    let beta = T::of(SMOOTH_L1_BETA);
    let r = a - b;
    if r.abs() < beta {
        r / beta
    } else {
        r.signum()
    }
}

/// Gradients of the batch loss with respect to each model output.
#[derive(Debug, Clone)]
pub struct OutputGrads<T> {
    pub y_k: Option<Array1<T>>,
    pub delta: Option<Array1<T>>,
    pub y_d: Array1<T>,
}

/// Per-sample objective in normalized space.
///
/// Differential outputs: `l(y_k_hat, y_k) + l(delta_hat, delta) + l(y_k_hat + delta_hat, y_d)`.
/// Direct outputs: `l(y_d_hat, y_d)`.
pub fn per_sample_losses<T: Real>(out: &ForwardOutputs<T>, y_k: &Array1<T>, y_d: &Array1<T>) -> Array1<T> {
    match (&out.y_k_hat, &out.delta_hat) {
        (Some(yk_hat), Some(d_hat)) => Array1::from_shape_fn(y_d.len(), |i| {
            let delta = y_d[i] - y_k[i];
            smooth_l1(yk_hat[i], y_k[i]) + smooth_l1(d_hat[i], delta) + smooth_l1(out.y_d_hat[i], y_d[i])
        }),
        _ => Array1::from_shape_fn(y_d.len(), |i| smooth_l1(out.y_d_hat[i], y_d[i])),
    }
}

/// Objective for a single sample (batch row 0).
pub fn loss_total<T: Real>(out: &ForwardOutputs<T>, y_k: T, y_d: T) -> T {
    per_sample_losses(out, &Array1::from_elem(1, y_k), &Array1::from_elem(1, y_d))[0]
}

/// Mean loss over the batch and its gradients.
pub fn loss_and_grads<T: Real>(out: &ForwardOutputs<T>, y_k: &Array1<T>, y_d: &Array1<T>) -> (T, OutputGrads<T>) {
    let b = y_d.len();
    let scale = T::one() / T::of(b as f64);
    let losses = per_sample_losses(out, y_k, y_d);
    let mean = losses.sum() * scale;
    let dy_d = Array1::from_shape_fn(b, |i| smooth_l1_grad(out.y_d_hat[i], y_d[i]) * scale);
    let grads = match (&out.y_k_hat, &out.delta_hat) {
        (Some(yk_hat), Some(d_hat)) => OutputGrads {
            y_k: Some(Array1::from_shape_fn(b, |i| smooth_l1_grad(yk_hat[i], y_k[i]) * scale)),
            delta: Some(Array1::from_shape_fn(b, |i| {
                smooth_l1_grad(d_hat[i], y_d[i] - y_k[i]) * scale
            })),
            y_d: dy_d,
        },
        _ => OutputGrads {
            y_k: None,
            delta: None,
            y_d: dy_d,
        },
    };
    (mean, grads)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smooth_l1_values() {
        assert_eq!(smooth_l1(2.0f64, 2.0), 0.0);
        assert_eq!(smooth_l1(0.5f64, 0.0), 0.125);
        assert_eq!(smooth_l1(3.0f64, 0.0), 2.5);
        assert_eq!(smooth_l1(-3.0f64, 0.0), 2.5);
    }

    #[test]
    fn smooth_l1_is_c1_at_beta() {
        let h = 1e-7;
        let left = smooth_l1(1.0 - h, 0.0f64);
        let right = smooth_l1(1.0 + h, 0.0f64);
        assert!((left - 0.5).abs() < 1e-6 && (right - 0.5).abs() < 1e-6);
        assert!((smooth_l1_grad(1.0 - h, 0.0f64) - smooth_l1_grad(1.0 + h, 0.0f64)).abs() < 1e-6);
    }

    #[test]
    fn smooth_l1_grad_matches_difference_quotient() {
        for r in [-2.5f64, -0.7, -0.01, 0.3, 0.99, 1.4] {
            let h = 1e-6;
            let fd = (smooth_l1(r + h, 0.0) - smooth_l1(r - h, 0.0)) / (2.0 * h);
            assert!((fd - smooth_l1_grad(r, 0.0)).abs() < 1e-8);
        }
    }
}
