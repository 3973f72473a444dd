//! Runs the differential-vs-direct comparison on the default synthetic benchmark.
//!
//! Usage: `cargo run --release --example advantage -- [epochs] [seeds]`

use std::time::Instant;

use hls_delta::model::ModelConfig;
use hls_delta::synth::{differential_advantage_experiment, SynthConfig};
use hls_delta::train::TrainConfig;

fn main() -> hls_delta::Result<()> {
    let mut args = std::env::args().skip(1);
    let epochs: usize = args.next().and_then(|a| a.parse().ok()).unwrap_or(200);
    let seeds: u64 = args.next().and_then(|a| a.parse().ok()).unwrap_or(3);
    let seeds: Vec<u64> = (0..seeds).collect();
    let train = TrainConfig {
        max_epochs: epochs,
        ..TrainConfig::default()
    };
    let start = Instant::now();
    let report = differential_advantage_experiment(&SynthConfig::default(), &ModelConfig::default(), &train, &seeds)?;
    for run in &report.runs {
        println!(
            "seed {}: differential {:.4}%  direct {:.4}%",
            run.seed,
            run.differential.design.mape.unwrap_or(f64::NAN),
            run.direct.design.mape.unwrap_or(f64::NAN)
        );
        let d = &run.differential;
        println!(
            "  differential MAE design {:.3} kernel {:.3} delta {:.3}; direct MAE {:.3}",
            d.design.mae,
            d.kernel.as_ref().map_or(f64::NAN, |m| m.mae),
            d.delta.as_ref().map_or(f64::NAN, |m| m.mae),
            run.direct.design.mae
        );
    }
    println!(
        "mean differential {:.4}%  direct {:.4}%  ratio {:.3}  ({:.1?})",
        report.differential_mape,
        report.direct_mape,
        report.ratio,
        start.elapsed()
    );
    Ok(())
}
