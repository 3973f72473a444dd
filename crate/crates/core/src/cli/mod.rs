//! Command-line interface: `train`, `eval`, `ablate`, `validate-data`, `synth-gen`.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 runtime error.

mod config;

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::data::{load_dataset, validate_ranges, Dataset, SplitAssignment, Target, FORMAT_VERSION};
use crate::embed::{load_embeddings, EmbeddingTable};
use crate::gnn::Backbone;
use crate::model::{load_checkpoint, save_checkpoint, DifferentialModel, ModelConfig};
use crate::synth::{generate, SynthConfig};
use crate::train::{evaluate, train, HeadMetrics, MetricsReport, TrainHistory};
use crate::{Error, Result};

pub use config::{RunConfig, SplitKind};

pub const CHECKPOINT_FILE: &str = "checkpoint.bin";
pub const HISTORY_FILE: &str = "history.json";
pub const METRICS_FILE: &str = "metrics.json";

#[derive(Parser, Debug)]
#[command(name = "hls-delta", version, about = "Differential kernel/design QoR prediction for HLS")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Train one model and write checkpoint, history and metrics.
    Train(TrainArgs),
    /// Evaluate a saved checkpoint on a dataset partition.
    Eval(EvalArgs),
    /// Train the full model and its ablations on one split and compare them.
    Ablate(AblateArgs),
    /// Check a dataset against the per-target value ranges.
    ValidateData(ValidateArgs),
    /// Generate a synthetic paired dataset.
    SynthGen(SynthArgs),
}

#[derive(Args, Debug, Default)]
struct RunArgs {
    /// JSON run configuration; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Dataset manifest.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Code-embedding file (overrides the manifest entry).
    #[arg(long)]
    embeddings: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed for initialization, shuffling and dropout.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    split_seed: Option<u64>,
    #[arg(long, value_enum)]
    split: Option<SplitKind>,
    /// GCN, SAGE, GAT or PNA.
    #[arg(long)]
    backbone: Option<Backbone>,
    #[arg(long)]
    layers: Option<usize>,
    #[arg(long)]
    hidden: Option<usize>,
    #[arg(long)]
    dropout: Option<f64>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    patience: Option<usize>,
    #[arg(long)]
    eval_every: Option<usize>,
}

#[derive(Args, Debug)]
struct TrainArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Predict design targets directly instead of kernel + delta.
    #[arg(long)]
    no_diff: bool,
    /// Do not use code embeddings.
    #[arg(long)]
    no_code_emb: bool,
}

#[derive(Args, Debug)]
struct EvalArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    embeddings: Option<PathBuf>,
    /// Split file: `history.json` from a training run, or a bare split document.
    #[arg(long)]
    split: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "test")]
    partition: Partition,
    /// Write metrics JSON here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
enum Partition {
    Train,
    Val,
    Test,
    All,
}

#[derive(Args, Debug)]
struct AblateArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Comma-separated variants: full, no-diff, no-code-emb.
    #[arg(long, value_delimiter = ',', default_value = "full,no-diff,no-code-emb")]
    variants: Vec<String>,
}

#[derive(Args, Debug)]
struct ValidateArgs {
    #[arg(long)]
    data: PathBuf,
    /// Target whose ranges apply; defaults to the manifest target.
    #[arg(long)]
    target: Option<Target>,
}

#[derive(Args, Debug)]
struct SynthArgs {
    #[arg(long)]
    out: PathBuf,
    /// JSON generator configuration; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    kernels: Option<usize>,
    #[arg(long)]
    designs: Option<usize>,
    #[arg(long)]
    noise: Option<f64>,
    #[arg(long)]
    embedding_dim: Option<usize>,
    #[arg(long)]
    target: Option<Target>,
}

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn run<I: IntoIterator<Item = OsString>>(args: I) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let result = match cli.command {
        Command::Train(a) => cmd_train(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Ablate(a) => cmd_ablate(a),
        Command::ValidateData(a) => cmd_validate(a),
        Command::SynthGen(a) => cmd_synth_gen(a),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Config(_) => 1,
                _ => 2,
            }
        }
    }
}

fn resolve_run(args: &RunArgs) -> Result<RunConfig> {
    let mut cfg = match &args.config {
        Some(path) => RunConfig::from_file(path)?,
        None => RunConfig::default(),
    };
    macro_rules! set {
        ($field:expr, $flag:expr) => {
            if let Some(v) = $flag.clone() {
                $field = v;
            }
        };
    }
    if args.data.is_some() {
        cfg.dataset = args.data.clone();
    }
    if args.embeddings.is_some() {
        cfg.embedding_file = args.embeddings.clone();
    }
    if args.out.is_some() {
        cfg.output_dir = args.out.clone();
    }
    if args.split_seed.is_some() {
        cfg.split_seed = args.split_seed;
    }
    set!(cfg.split, args.split);
    set!(cfg.train.seed, args.seed);
    set!(cfg.model.backbone, args.backbone);
    set!(cfg.model.num_layers, args.layers);
    set!(cfg.model.hidden_dim, args.hidden);
    set!(cfg.model.dropout, args.dropout);
    set!(cfg.train.max_epochs, args.epochs);
    set!(cfg.train.lr, args.lr);
    set!(cfg.train.batch_size, args.batch_size);
    set!(cfg.train.plateau_patience, args.patience);
    set!(cfg.train.eval_every, args.eval_every);
    Ok(cfg)
}

struct Prepared {
    cfg: RunConfig,
    dataset: Dataset,
    split: SplitAssignment,
    table: Option<EmbeddingTable>,
}

/// Loads dataset, split and (when `need_table`) embeddings; fills in the
/// dataset target, embedding path and `code_dim` in the returned config.
fn prepare(mut cfg: RunConfig, need_table: bool) -> Result<Prepared> {
    let dataset = load_dataset(cfg.dataset_path()?)?;
    cfg.model.target = dataset.target;
    if cfg.embedding_file.is_none() {
        cfg.embedding_file = dataset.embedding_file.clone();
    }
    let table = if need_table {
        let path = cfg.embedding_file.clone().ok_or_else(|| {
            Error::Config("code embeddings enabled but no embedding file given (--embeddings)".into())
        })?;
        let table = load_embeddings(&path)?;
        if cfg.model.code_dim == 0 {
            cfg.model.code_dim = table.dim();
        } else if cfg.model.code_dim != table.dim() {
            return Err(Error::DimensionMismatch {
                what: "code_dim vs embedding file",
                expected: cfg.model.code_dim,
                got: table.dim(),
            });
        }
        table.check_covers(dataset.design_ids())?;
        Some(table)
    } else {
        None
    };
    cfg.model.validate()?;
    cfg.train.validate()?;
    let split = cfg.make_split(&dataset)?;
    Ok(Prepared {
        cfg,
        dataset,
        split,
        table,
    })
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::json(path, e))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

#[derive(Serialize)]
struct HistoryDoc<'a> {
    format_version: u32,
    config: &'a RunConfig,
    split: &'a SplitAssignment,
    history: &'a TrainHistory,
}

#[derive(Serialize)]
struct TrainMetricsDoc<'a> {
    format_version: u32,
    config: &'a RunConfig,
    best_epoch: usize,
    best_val_loss: f64,
    metrics: BTreeMap<&'static str, MetricsReport>,
}

fn split_metrics(
    model: &DifferentialModel<f32>,
    p: &Prepared,
) -> Result<BTreeMap<&'static str, MetricsReport>> {
    let mut out = BTreeMap::new();
    for (name, ids) in [("train", &p.split.train), ("val", &p.split.val), ("test", &p.split.test)] {
        if ids.is_empty() {
            continue;
        }
        let samples = p.dataset.select(ids)?;
        out.insert(name, evaluate(model, &samples, p.table.as_ref(), p.cfg.train.batch_size)?);
    }
    Ok(out)
}

fn train_one(p: &Prepared, model_cfg: ModelConfig) -> Result<(DifferentialModel<f32>, TrainHistory)> {
    let model = DifferentialModel::<f32>::new(model_cfg, p.cfg.train.seed)?;
    let table = if model.config.use_code_emb { p.table.as_ref() } else { None };
    train(model, &p.dataset, &p.split, table, &p.cfg.train)
}

fn cmd_train(args: TrainArgs) -> Result<()> {
    let mut cfg = resolve_run(&args.run)?;
    if args.no_diff {
        cfg.model.use_diff = false;
    }
    if args.no_code_emb {
        cfg.model.use_code_emb = false;
    }
    let out_dir = cfg.output_path()?.to_path_buf();
    let need_table = cfg.model.use_code_emb;
    let p = prepare(cfg, need_table)?;
    create_dir(&out_dir)?;

    let (model, history) = train_one(&p, p.cfg.model.clone())?;
    save_checkpoint(&model, &out_dir.join(CHECKPOINT_FILE))?;
    write_json(
        &out_dir.join(HISTORY_FILE),
        &HistoryDoc {
            format_version: FORMAT_VERSION,
            config: &p.cfg,
            split: &p.split,
            history: &history,
        },
    )?;
    let metrics = split_metrics(&model, &p)?;
    let summary = metrics.get("test").map(|m| m.design.clone());
    write_json(
        &out_dir.join(METRICS_FILE),
        &TrainMetricsDoc {
            format_version: FORMAT_VERSION,
            config: &p.cfg,
            best_epoch: history.best_epoch,
            best_val_loss: history.best_val_loss,
            metrics,
        },
    )?;
    println!(
        "best epoch {} (val loss {:.6}); test design {}",
        history.best_epoch,
        history.best_val_loss,
        summary.as_ref().map_or("-".into(), format_head)
    );
    Ok(())
}

fn format_head(m: &HeadMetrics) -> String {
    format!(
        "MAPE {} MAE {:.4} R2 {}",
        m.mape.map_or("-".into(), |v| format!("{v:.4}%")),
        m.mae,
        m.r2.map_or("-".into(), |v| format!("{v:.4}"))
    )
}

#[derive(Serialize)]
struct EvalConfig<'a> {
    checkpoint: &'a Path,
    dataset: &'a Path,
    embedding_file: Option<&'a Path>,
    split: Option<&'a Path>,
    partition: Partition,
    model: &'a ModelConfig,
}

#[derive(Serialize)]
struct EvalDoc<'a> {
    format_version: u32,
    config: EvalConfig<'a>,
    metrics: &'a MetricsReport,
}

fn read_split(path: &Path) -> Result<SplitAssignment> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut value: serde_json::Value = serde_json::from_str(&text).map_err(|e| Error::json(path, e))?;
    if let Some(inner) = value.get_mut("split") {
        value = inner.take();
    }
    serde_json::from_value(value).map_err(|e| Error::json(path, e))
}

fn cmd_eval(args: EvalArgs) -> Result<()> {
    let model = load_checkpoint::<f32>(&args.checkpoint)?;
    let dataset = load_dataset(&args.data)?;
    let emb_path = args.embeddings.clone().or_else(|| dataset.embedding_file.clone());
    let table = if model.config.use_code_emb {
        let path = emb_path.as_deref().ok_or_else(|| {
            Error::Config("checkpoint uses code embeddings but no embedding file given (--embeddings)".into())
        })?;
        Some(load_embeddings(path)?)
    } else {
        None
    };
    let ids: Vec<String> = match (args.partition, &args.split) {
        (Partition::All, _) => dataset.samples.iter().map(|s| s.design_id.clone()).collect(),
        (_, None) => return Err(Error::Config("--split is required unless --partition all".into())),
        (part, Some(path)) => {
            let split = read_split(path)?;
            match part {
                Partition::Train => split.train,
                Partition::Val => split.val,
                _ => split.test,
            }
        }
    };
    let samples = dataset.select(&ids)?;
    let metrics = evaluate(&model, &samples, table.as_ref(), 64)?;
    let doc = EvalDoc {
        format_version: FORMAT_VERSION,
        config: EvalConfig {
            checkpoint: &args.checkpoint,
            dataset: &args.data,
            embedding_file: emb_path.as_deref().filter(|_| table.is_some()),
            split: args.split.as_deref(),
            partition: args.partition,
            model: &model.config,
        },
        metrics: &metrics,
    };
    match &args.out {
        Some(path) => {
            write_json(path, &doc)?;
            println!("design {}", format_head(&metrics.design));
        }
        None => println!("{}", serde_json::to_string_pretty(&doc).expect("metrics serialization")),
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Variant {
    Full,
    NoDiff,
    NoCodeEmb,
}

impl Variant {
    fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "full" => Ok(Variant::Full),
            "no-diff" | "wo-diff" => Ok(Variant::NoDiff),
            "no-code-emb" | "wo-code-emb" => Ok(Variant::NoCodeEmb),
            other => Err(Error::Config(format!(
                "unknown variant {other:?} (expected full, no-diff or no-code-emb)"
            ))),
        }
    }

    fn name(self) -> &'static str {
        match self {
            Variant::Full => "full",
            Variant::NoDiff => "no-diff",
            Variant::NoCodeEmb => "no-code-emb",
        }
    }

    fn apply(self, base: &ModelConfig) -> ModelConfig {
        let mut cfg = base.clone();
        cfg.use_diff = true;
        cfg.use_code_emb = true;
        match self {
            Variant::Full => {}
            Variant::NoDiff => cfg.use_diff = false,
            Variant::NoCodeEmb => cfg.use_code_emb = false,
        }
        cfg
    }
}

#[derive(Serialize)]
struct AblationRow {
    variant: Variant,
    model: ModelConfig,
    best_epoch: usize,
    best_val_loss: f64,
    test: MetricsReport,
}

#[derive(Serialize)]
struct AblationDoc<'a> {
    format_version: u32,
    config: &'a RunConfig,
    split: &'a SplitAssignment,
    variants: &'a [AblationRow],
}

fn ablation_table(rows: &[AblationRow]) -> String {
    let heads = ["design", "kernel", "delta"];
    let mut header = vec!["variant".to_string()];
    for h in heads {
        for m in ["MAPE%", "MAE", "R2"] {
            header.push(format!("{h} {m}"));
        }
    }
    let mut lines = vec![header];
    for row in rows {
        let mut line = vec![row.variant.name().to_string()];
        for m in [Some(&row.test.design), row.test.kernel.as_ref(), row.test.delta.as_ref()] {
            match m {
                Some(m) => {
                    line.push(m.mape.map_or("-".into(), |v| format!("{v:.4}")));
                    line.push(format!("{:.4}", m.mae));
                    line.push(m.r2.map_or("-".into(), |v| format!("{v:.4}")));
                }
                None => line.extend(["-".to_string(), "-".to_string(), "-".to_string()]),
            }
        }
        lines.push(line);
    }
    let widths: Vec<usize> = (0..lines[0].len())
        .map(|c| lines.iter().map(|l| l[c].len()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for line in &lines {
        let cells: Vec<String> = line
            .iter()
            .enumerate()
            .map(|(c, cell)| {
                if c == 0 {
                    format!("{cell:<w$}", w = widths[c])
                } else {
                    format!("{cell:>w$}", w = widths[c])
                }
            })
            .collect();
        let _ = writeln!(out, "{}", cells.join("  ").trim_end());
    }
    out
}

fn cmd_ablate(args: AblateArgs) -> Result<()> {
    let variants = args
        .variants
        .iter()
        .filter(|v| !v.trim().is_empty())
        .map(|v| Variant::parse(v))
        .collect::<Result<Vec<_>>>()?;
    if variants.is_empty() {
        return Err(Error::Config("variant list is empty".into()));
    }
    let cfg = resolve_run(&args.run)?;
    let out_dir = cfg.output_path()?.to_path_buf();
    let need_table = variants.iter().any(|v| v.apply(&cfg.model).use_code_emb);
    let mut base = cfg;
    base.model.use_code_emb = need_table;
    let p = prepare(base, need_table)?;
    create_dir(&out_dir)?;

    let mut rows = Vec::with_capacity(variants.len());
    for variant in variants {
        let model_cfg = variant.apply(&p.cfg.model);
        let (model, history) = train_one(&p, model_cfg.clone())?;
        let dir = out_dir.join(variant.name());
        create_dir(&dir)?;
        save_checkpoint(&model, &dir.join(CHECKPOINT_FILE))?;
        let test = p.dataset.select(&p.split.test)?;
        let table = if model_cfg.use_code_emb { p.table.as_ref() } else { None };
        rows.push(AblationRow {
            variant,
            model: model_cfg,
            best_epoch: history.best_epoch,
            best_val_loss: history.best_val_loss,
            test: evaluate(&model, &test, table, p.cfg.train.batch_size)?,
        });
    }
    write_json(
        &out_dir.join("ablation.json"),
        &AblationDoc {
            format_version: FORMAT_VERSION,
            config: &p.cfg,
            split: &p.split,
            variants: &rows,
        },
    )?;
    let table = ablation_table(&rows);
    let txt = out_dir.join("ablation.txt");
    fs::write(&txt, &table).map_err(|e| Error::io(&txt, e))?;
    print!("{table}");
    Ok(())
}

fn cmd_validate(args: ValidateArgs) -> Result<()> {
    let dataset = load_dataset(&args.data)?;
    if let Some(path) = &dataset.embedding_file {
        load_embeddings(path)?.check_covers(dataset.design_ids())?;
    }
    let target = args.target.unwrap_or(dataset.target);
    let warnings = validate_ranges(&dataset, target);
    for w in &warnings {
        println!("{w}");
    }
    let n = warnings.len();
    println!("{} samples, {n} warning{}", dataset.len(), if n == 1 { "" } else { "s" });
    Ok(())
}

#[derive(Serialize)]
struct SynthDoc<'a> {
    format_version: u32,
    config: &'a SynthConfig,
}

fn cmd_synth_gen(args: SynthArgs) -> Result<()> {
    let mut cfg = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            serde_json::from_str(&text).map_err(|e| Error::json(path, e))?
        }
        None => SynthConfig::default(),
    };
    if let Some(v) = args.seed {
        cfg.seed = v;
    }
    if let Some(v) = args.kernels {
        cfg.n_kernels = v;
    }
    if let Some(v) = args.designs {
        cfg.designs_per_kernel = v;
    }
    if let Some(v) = args.noise {
        cfg.noise_std = v;
    }
    if let Some(v) = args.embedding_dim {
        cfg.embedding_dim = v;
    }
    if let Some(v) = args.target {
        cfg.target = v;
    }
    let data = generate(&cfg)?;
    let manifest = data.write(&args.out)?;
    write_json(
        &args.out.join("synth.json"),
        &SynthDoc {
            format_version: FORMAT_VERSION,
            config: &cfg,
        },
    )?;
    println!("wrote {} samples to {}", data.dataset.len(), manifest.display());
    Ok(())
}
