use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::Dataset;

/// QoR target predicted by one model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Target {
    #[serde(rename = "DSP")]
    Dsp,
    #[serde(rename = "FF")]
    Ff,
    #[serde(rename = "LUT")]
    Lut,
    #[serde(rename = "CP")]
    Cp,
}

impl Target {
    pub const ALL: [Target; 4] = [Target::Dsp, Target::Ff, Target::Lut, Target::Cp];

    pub fn name(self) -> &'static str {
        match self {
            Target::Dsp => "DSP",
            Target::Ff => "FF",
            Target::Lut => "LUT",
            Target::Cp => "CP",
        }
    }

    /// Observed `[min, max]` ranges of the PolyBench design space for this target.
    pub fn ranges(self) -> TargetRanges {
        match self {
            Target::Dsp => TargetRanges {
                kernel: (3.0, 29.0),
                delta: (-7.0, 75.0),
                design: (5.0, 94.0),
            },
            Target::Ff => TargetRanges {
                kernel: (495.0, 3994.0),
                delta: (-174.0, 25414.0),
                design: (1296.0, 28967.0),
            },
            Target::Lut => TargetRanges {
                kernel: (1214.0, 5192.0),
                delta: (151.0, 35865.0),
                design: (1842.0, 39464.0),
            },
            Target::Cp => TargetRanges {
                kernel: (5.31, 7.21),
                delta: (-0.10, 0.78),
                design: (5.55, 7.75),
            },
        }
    }

    fn format_value(self, v: f64) -> String {
        match self {
            Target::Cp => format!("{v:.2}"),
            _ => format!("{v}"),
        }
    }
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Target {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "DSP" => Ok(Target::Dsp),
            "FF" => Ok(Target::Ff),
            "LUT" => Ok(Target::Lut),
            "CP" => Ok(Target::Cp),
            other => Err(format!("unknown target {other:?} (expected DSP, FF, LUT or CP)")),
        }
    }
}

/// Inclusive `[min, max]` bounds for kernel, delta and design values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TargetRanges {
    pub kernel: (f64, f64),
    pub delta: (f64, f64),
    pub design: (f64, f64),
}

impl TargetRanges {
    pub fn contains(bounds: (f64, f64), v: f64) -> bool {
        v >= bounds.0 && v <= bounds.1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quantity {
    Kernel,
    Delta,
    Design,
}

impl Quantity {
    fn label(self) -> &'static str {
        match self {
            Quantity::Kernel => "kernel",
            Quantity::Delta => "delta",
            Quantity::Design => "design",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RangeWarning {
    pub design_id: String,
    pub target: Target,
    pub quantity: Quantity,
    pub value: f64,
    pub bounds: (f64, f64),
}

impl fmt::Display for RangeWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let t = self.target;
        write!(
            f,
            "sample {}: {} {} {} outside [{}, {}]",
            self.design_id,
            self.quantity.label(),
            t,
            t.format_value(self.value),
            t.format_value(self.bounds.0),
            t.format_value(self.bounds.1),
        )
    }
}

/// Reports every kernel, delta or design value outside the reference range
/// of `target`. Bounds are inclusive; the dataset is never modified.
pub fn validate_ranges(dataset: &Dataset, target: Target) -> Vec<RangeWarning> {
    let ranges = target.ranges();
    let mut warnings = Vec::new();
    for s in &dataset.samples {
        let checks = [
            (Quantity::Kernel, s.y_k, ranges.kernel),
            (Quantity::Delta, s.delta(), ranges.delta),
            (Quantity::Design, s.y_d, ranges.design),
        ];
        for (quantity, value, bounds) in checks {
            if !TargetRanges::contains(bounds, value) {
                warnings.push(RangeWarning {
                    design_id: s.design_id.clone(),
                    target,
                    quantity,
                    value,
                    bounds,
                });
            }
        }
    }
    warnings
}
