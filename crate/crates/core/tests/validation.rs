mod common;

use hls_delta::data::{validate_ranges, Quantity, Target};
use hls_delta::synth::{generate, SynthConfig};

fn config_for(target: Target) -> SynthConfig {
    let base = SynthConfig {
        n_kernels: 6,
        designs_per_kernel: 12,
        target,
        embedding_dim: 0,
        ..SynthConfig::default()
    };
    match target {
        Target::Ff => base,
        Target::Dsp => SynthConfig { c0: 1.0, c1: 1.0, ..base },
        Target::Lut => SynthConfig { c0: 1300.0, c1: 100.0, c2: 80.0, c3: 80.0, ..base },
        Target::Cp => SynthConfig { c0: 5.4, c1: 0.05, c2: 0.03, c3: 0.03, ..base },
    }
}

#[test]
fn synthesized_inside_bounds_gives_no_warnings() {
    for target in Target::ALL {
        let cfg = config_for(target);
        assert!(cfg.fits_target_ranges(), "{target}");
        let data = generate(&cfg).unwrap();
        let w = validate_ranges(&data.dataset, target);
        assert!(w.is_empty(), "{target}: {:?}", w.first());
    }
}

#[test]
fn single_out_of_range_value_gives_one_warning() {
    let cases = [
        (4100.0, 4200.0, Quantity::Kernel, "[495, 3994]"),
        (3000.0, 28500.0, Quantity::Delta, "[-174, 25414]"),
        (500.0, 1000.0, Quantity::Design, "[1296, 28967]"),
    ];
    for (y_k, y_d, quantity, bound) in cases {
        let mut data = generate(&config_for(Target::Ff)).unwrap().dataset;
        let s = &mut data.samples[17];
        s.y_k = y_k;
        s.y_d = y_d;
        let id = s.design_id.clone();
        let w = validate_ranges(&data, Target::Ff);
        assert_eq!(w.len(), 1, "{w:?}");
        assert_eq!(w[0].quantity, quantity);
        assert_eq!(w[0].design_id, id);
        let msg = w[0].to_string();
        assert!(msg.contains(&id) && msg.contains(bound), "{msg}");
    }
}
