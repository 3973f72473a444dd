use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use hls_delta::model::read_checkpoint_header;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_hls-delta"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn hls-delta")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn synth(dir: &Path) -> PathBuf {
    let out = dir.join("data");
    let o = run(&[
        "synth-gen",
        "--out",
        out.to_str().unwrap(),
        "--kernels",
        "10",
        "--designs",
        "3",
        "--embedding-dim",
        "8",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("wrote 30 samples"), "{}", stdout(&o));
    out.join("manifest.json")
}

fn train_args<'a>(manifest: &'a str, out: &'a str) -> Vec<&'a str> {
    vec!["train", "--data", manifest, "--out", out, "--epochs", "2", "--hidden", "8", "--batch-size", "8"]
}

#[test]
fn train_writes_outputs_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = synth(dir.path());
    let m = manifest.to_str().unwrap();
    let mut metrics = Vec::new();
    for name in ["a", "b"] {
        let out = dir.path().join(name);
        let mut args = train_args(m, out.to_str().unwrap());
        args.extend(["--seed", "7"]);
        let o = run(&args);
        assert!(o.status.success(), "{}", stderr(&o));
        for f in ["checkpoint.bin", "history.json", "metrics.json"] {
            assert!(out.join(f).is_file(), "missing {f}");
        }
        metrics.push(fs::read_to_string(out.join("metrics.json")).unwrap());
    }
    let a: serde_json::Value = serde_json::from_str(&metrics[0]).unwrap();
    let b: serde_json::Value = serde_json::from_str(&metrics[1]).unwrap();
    assert_eq!(a["metrics"], b["metrics"]);
    assert_eq!(a["best_val_loss"], b["best_val_loss"]);
    assert!(a["metrics"]["test"]["design"]["mape"].is_number());

    let split = dir.path().join("a").join("history.json");
    let ckpt = dir.path().join("a").join("checkpoint.bin");
    let eval_out = dir.path().join("eval.json");
    let o = run(&[
        "eval",
        "--checkpoint",
        ckpt.to_str().unwrap(),
        "--data",
        m,
        "--split",
        split.to_str().unwrap(),
        "--out",
        eval_out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let e: serde_json::Value = serde_json::from_str(&fs::read_to_string(&eval_out).unwrap()).unwrap();
    assert_eq!(e["metrics"], a["metrics"]["test"]);
}

#[test]
fn missing_embedding_file_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = synth(dir.path());
    let out = dir.path().join("run");
    let mut args = train_args(manifest.to_str().unwrap(), out.to_str().unwrap());
    args.extend(["--embeddings", "/nonexistent/emb.bin"]);
    let o = run(&args);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("/nonexistent/emb.bin"), "{}", stderr(&o));
}

#[test]
fn validate_data_reports_zero_warnings() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = synth(dir.path());
    let o = run(&["validate-data", "--data", manifest.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(stdout(&o).trim(), "30 samples, 0 warnings");
}

#[test]
fn ablate_runs_three_variants() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = synth(dir.path());
    let out = dir.path().join("abl");
    let mut args = train_args(manifest.to_str().unwrap(), out.to_str().unwrap());
    args[0] = "ablate";
    let o = run(&args);
    assert!(o.status.success(), "{}", stderr(&o));
    let table = fs::read_to_string(out.join("ablation.txt")).unwrap();
    assert_eq!(table.lines().count(), 4, "{table}");
    let doc: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("ablation.json")).unwrap()).unwrap();
    assert_eq!(doc["variants"].as_array().unwrap().len(), 3);

    let bytes = fs::read(out.join("no-code-emb").join("checkpoint.bin")).unwrap();
    let (header, _) = read_checkpoint_header(&bytes, Path::new("ckpt")).unwrap();
    assert!(header.tensors.iter().all(|t| !t.name.starts_with("adapter")));
    let bytes = fs::read(out.join("full").join("checkpoint.bin")).unwrap();
    let (header, _) = read_checkpoint_header(&bytes, Path::new("ckpt")).unwrap();
    assert!(header.tensors.iter().any(|t| t.name.starts_with("adapter")));

    let mut args = train_args(manifest.to_str().unwrap(), out.to_str().unwrap());
    args[0] = "ablate";
    args.extend(["--variants", ""]);
    let o = run(&args);
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
}

#[test]
fn usage_errors() {
    assert_eq!(run(&["train", "--bogus"]).status.code(), Some(1));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
    let o = run(&["validate-data", "--data", "/nonexistent/manifest.json"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).starts_with("error: "));
}
