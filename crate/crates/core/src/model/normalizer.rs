use serde::{Deserialize, Serialize};

/// Affine target transform `(y - mean) / std`, shared by kernel and design
/// targets so that deltas map to `delta / std`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Normalizer {
    pub mean: f64,
    pub std: f64,
}

impl Default for Normalizer {
    fn default() -> Self {
        Self::IDENTITY
    }
}

impl Normalizer {
    pub const IDENTITY: Normalizer = Normalizer { mean: 0.0, std: 1.0 };

    /// Mean and population std of `values`; a zero spread falls back to 1.
    pub fn fit(values: impl IntoIterator<Item = f64>) -> Self {
        let values: Vec<f64> = values.into_iter().collect();
        if values.is_empty() {
            return Self::IDENTITY;
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        let std = var.sqrt();
        Self {
            mean,
            std: if std > 0.0 && std.is_finite() { std } else { 1.0 },
        }
    }

    pub fn normalize(&self, y: f64) -> f64 {
        (y - self.mean) / self.std
    }

    pub fn denormalize(&self, z: f64) -> f64 {
        self.mean + self.std * z
    }

    /// Raw-unit delta from a normalized delta.
    pub fn denormalize_delta(&self, dz: f64) -> f64 {
        self.std * dz
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn affine_inverse() {
        let n = Normalizer { mean: 10.0, std: 2.0 };
        assert_eq!(n.denormalize(1.5), 13.0);
        assert_eq!(Normalizer::IDENTITY.denormalize(0.37), 0.37);
        assert_eq!(n.normalize(13.0), 1.5);
    }

    #[test]
    fn fit_population_std() {
        let n = Normalizer::fit([1.0, 3.0]);
        assert_eq!((n.mean, n.std), (2.0, 1.0));
        assert_eq!(Normalizer::fit([5.0, 5.0]).std, 1.0);
    }

    #[test]
    fn shared_transform_preserves_delta() {
        let n = Normalizer { mean: 2741.5, std: 613.25 };
        for (yk, yd) in [(1800.0, 1817.0), (3800.0, 3802.0), (2300.5, 2290.25)] {
            let dn = n.normalize(yd) - n.normalize(yk);
            let rel = (dn - (yd - yk) / n.std).abs() / ((yd - yk) / n.std).abs();
            assert!(rel < 1e-9, "{rel}");
        }
    }
}
