mod common;

use hls_delta::train::compute_metrics;
use rand::Rng;

struct Oracle {
    mae: f64,
    mape: Option<f64>,
    r2: Option<f64>,
}

fn brute_force(y: &[f64], p: &[f64]) -> Oracle {
    let n = y.len();
    let mut abs = 0.0;
    let mut pct = 0.0;
    let mut nz = 0;
    let mut mean = 0.0;
    for i in 0..n {
        abs += (y[i] - p[i]).abs();
        mean += y[i];
        if y[i] != 0.0 {
            pct += ((y[i] - p[i]) / y[i]).abs();
            nz += 1;
        }
    }
    mean /= n as f64;
    let mut ss_res = 0.0;
    let mut ss_tot = 0.0;
    for i in 0..n {
        ss_res += (y[i] - p[i]) * (y[i] - p[i]);
        ss_tot += (y[i] - mean) * (y[i] - mean);
    }
    Oracle {
        mae: abs / n as f64,
        mape: if nz == 0 { None } else { Some(100.0 * pct / nz as f64) },
        r2: if ss_tot == 0.0 { None } else { Some(1.0 - ss_res / ss_tot) },
    }
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * (1.0 + b.abs())
}

#[test]
fn matches_brute_force_on_random_vectors() {
    let mut r = common::rng(31);
    for trial in 0..1000 {
        let n = r.random_range(1..60);
        let y: Vec<f64> = (0..n)
            .map(|_| if r.random_bool(0.15) { 0.0 } else { r.random_range(-5e3..5e3) })
            .collect();
        let p: Vec<f64> = y.iter().map(|v| v + r.random_range(-100.0..100.0)).collect();
        let m = compute_metrics(&y, &p).unwrap();
        let o = brute_force(&y, &p);
        assert!(close(m.mae, o.mae), "trial {trial}");
        assert_eq!(m.mape.is_some(), o.mape.is_some(), "trial {trial}");
        if let (Some(a), Some(b)) = (m.mape, o.mape) {
            assert!(close(a, b), "trial {trial}: {a} {b}");
        }
        assert_eq!(m.r2.is_some(), o.r2.is_some());
        if let (Some(a), Some(b)) = (m.r2, o.r2) {
            assert!(close(a, b), "trial {trial}: {a} {b}");
        }
        assert_eq!(m.n_zero_excluded, y.iter().filter(|v| **v == 0.0).count());
    }
}

#[test]
fn all_zero_targets() {
    let m = compute_metrics(&[0.0; 4], &[1.0, -1.0, 0.0, 2.0]).unwrap();
    assert_eq!(m.mape, None);
    assert_eq!(m.r2, None);
    assert_eq!(m.mae, 1.0);
    assert_eq!(m.n_zero_excluded, 4);
}
