mod common;

use common::grad::*;
use hls_delta::gnn::Backbone;

#[test]
fn encoder_gradients_f64() {
    for backbone in Backbone::ALL {
        let report = encoder_report_f64(backbone, 11);
        print(&format!("{backbone} f64"), &report);
        assert!(report.max_rel <= 1e-6, "{backbone}: {}", report.worst);
    }
}

#[test]
fn encoder_gradients_f32() {
    for backbone in Backbone::ALL {
        let report = encoder_report_f32(backbone, 12);
        print(&format!("{backbone} f32"), &report);
        assert!(report.max_rel <= 1e-3, "{backbone}: {}", report.worst);
    }
}

#[test]
fn full_model_gradients_f64_every_backbone() {
    for backbone in Backbone::ALL {
        let report = model_report_f64(model_config(backbone, true, true, 0.0), None);
        print(&format!("model {backbone} f64"), &report);
        assert!(report.max_rel <= 1e-6, "{backbone}: {}", report.worst);
    }
}

#[test]
fn model_variants_and_dropout_gradients_f64() {
    for (use_diff, use_code, dropout) in [(false, true, 0.0), (true, false, 0.0), (true, true, 0.3)] {
        let cfg = model_config(Backbone::Sage, use_diff, use_code, dropout);
        let report = model_report_f64(cfg, (dropout > 0.0).then_some(9));
        print(&format!("variant diff={use_diff} code={use_code} dropout={dropout}"), &report);
        assert!(report.max_rel <= 1e-6, "{}", report.worst);
    }
}

#[test]
fn full_model_gradients_f32() {
    for backbone in [Backbone::Sage, Backbone::Gat] {
        let report = model_report_f32(backbone, 22);
        print(&format!("model {backbone} f32"), &report);
        assert!(report.max_rel <= 1e-3, "{backbone}: {}", report.worst);
    }
}
