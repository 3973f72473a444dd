use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::data::{split_design_level, split_kernel_level, Dataset, SplitAssignment};
use crate::model::ModelConfig;
use crate::train::TrainConfig;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum SplitKind {
    #[default]
    Design,
    Kernel,
}

/// Everything a training run needs. Loaded from JSON, then overridden by flags.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// Dataset manifest.
    pub dataset: Option<PathBuf>,
    /// Code-embedding payload; defaults to the manifest's `embedding_file`.
    pub embedding_file: Option<PathBuf>,
    pub output_dir: Option<PathBuf>,
    pub split: SplitKind,
    /// Defaults to `train.seed`.
    pub split_seed: Option<u64>,
    pub model: ModelConfig,
    pub train: TrainConfig,
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::json(path, e))
    }

    pub fn split_seed(&self) -> u64 {
        self.split_seed.unwrap_or(self.train.seed)
    }

    pub fn make_split(&self, dataset: &Dataset) -> Result<SplitAssignment> {
        match self.split {
            SplitKind::Design => split_design_level(dataset, self.split_seed()),
            SplitKind::Kernel => split_kernel_level(dataset, self.split_seed()),
        }
    }

    pub fn dataset_path(&self) -> Result<&Path> {
        self.dataset
            .as_deref()
            .ok_or_else(|| Error::Config("no dataset manifest given (--data or \"dataset\")".into()))
    }

    pub fn output_path(&self) -> Result<&Path> {
        self.output_dir
            .as_deref()
            .ok_or_else(|| Error::Config("no output directory given (--out or \"output_dir\")".into()))
    }
}
