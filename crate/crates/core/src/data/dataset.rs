use std::collections::{HashMap, HashSet};
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{CdfgGraph, Target, FORMAT_VERSION};
use crate::{Error, Result};

/// One kernel/design pair with its QoR targets.
///
/// The delta is always derived from the two targets and never stored.
#[derive(Debug, Clone, PartialEq)]
pub struct PairedSample {
    pub kernel_id: String,
    pub design_id: String,
    pub kernel_graph: Arc<CdfgGraph>,
    pub design_graph: Arc<CdfgGraph>,
    pub y_k: f64,
    pub y_d: f64,
}

impl PairedSample {
    pub fn delta(&self) -> f64 {
        self.y_d - self.y_k
    }
}

/// A loaded dataset for a single QoR target.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub target: Target,
    pub samples: Vec<PairedSample>,
    /// Code-embedding file, resolved against the manifest directory.
    pub embedding_file: Option<PathBuf>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn design_ids(&self) -> Vec<&str> {
        self.samples.iter().map(|s| s.design_id.as_str()).collect()
    }

    pub fn by_design_id(&self) -> HashMap<&str, &PairedSample> {
        self.samples
            .iter()
            .map(|s| (s.design_id.as_str(), s))
            .collect()
    }

    /// Samples in the order their design ids are listed.
    pub fn select<'a>(&'a self, design_ids: &[String]) -> Result<Vec<&'a PairedSample>> {
        let index = self.by_design_id();
        design_ids
            .iter()
            .map(|id| {
                index
                    .get(id.as_str())
                    .copied()
                    .ok_or_else(|| Error::Format(format!("design_id {id} not in dataset")))
            })
            .collect()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleRecord {
    pub kernel_id: String,
    pub design_id: String,
    /// Graph file paths, relative to the manifest directory.
    pub kernel_graph: String,
    pub design_graph: String,
    pub y_k: f64,
    pub y_d: f64,
}

/// On-disk JSON form of a dataset manifest.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestFile {
    pub format_version: u32,
    pub target: Target,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub embedding_file: Option<String>,
    pub samples: Vec<SampleRecord>,
}

pub fn load_dataset(manifest_path: &Path) -> Result<Dataset> {
    let text = fs::read_to_string(manifest_path).map_err(|e| Error::io(manifest_path, e))?;
    let manifest: ManifestFile =
        serde_json::from_str(&text).map_err(|e| Error::json(manifest_path, e))?;
    if manifest.format_version != FORMAT_VERSION {
        return Err(Error::FormatVersion {
            what: "manifest",
            found: manifest.format_version,
            expected: FORMAT_VERSION,
        });
    }
    let base = manifest_path.parent().unwrap_or_else(|| Path::new("."));

    let mut graphs: HashMap<String, Arc<CdfgGraph>> = HashMap::new();
    let mut graph_sources: HashMap<String, String> = HashMap::new();
    let mut load = |rel: &str| -> Result<Arc<CdfgGraph>> {
        if let Some(g) = graphs.get(rel) {
            return Ok(Arc::clone(g));
        }
        let g = Arc::new(CdfgGraph::read(&base.join(rel))?);
        if let Some(prev) = graph_sources.insert(g.graph_id.clone(), rel.to_string()) {
            if prev != rel {
                return Err(Error::DuplicateGraphId(g.graph_id.clone()));
            }
        }
        graphs.insert(rel.to_string(), Arc::clone(&g));
        Ok(g)
    };

    let mut seen = HashSet::new();
    let mut samples = Vec::with_capacity(manifest.samples.len());
    for rec in manifest.samples {
        if rec.design_id.is_empty() || rec.kernel_id.is_empty() {
            return Err(Error::Format(
                "sample with empty kernel_id or design_id".into(),
            ));
        }
        if !seen.insert(rec.design_id.clone()) {
            return Err(Error::DuplicateDesignId(rec.design_id));
        }
        if !rec.y_k.is_finite() || !rec.y_d.is_finite() {
            return Err(Error::Format(format!(
                "non-finite target for design {}",
                rec.design_id
            )));
        }
        let kernel_graph = load(&rec.kernel_graph)?;
        let design_graph = load(&rec.design_graph)?;
        samples.push(PairedSample {
            kernel_id: rec.kernel_id,
            design_id: rec.design_id,
            kernel_graph,
            design_graph,
            y_k: rec.y_k,
            y_d: rec.y_d,
        });
    }

    Ok(Dataset {
        target: manifest.target,
        samples,
        embedding_file: manifest.embedding_file.map(|p| base.join(p)),
    })
}

/// Writes `dataset` as `dir/manifest.json` plus one JSON file per distinct
/// graph under `dir/graphs/`. Returns the manifest path.
///
/// `embedding_file` is recorded verbatim (relative to `dir`).
pub fn write_dataset(
    dataset: &Dataset,
    dir: &Path,
    embedding_file: Option<&str>,
) -> Result<PathBuf> {
    let graph_dir = dir.join("graphs");
    fs::create_dir_all(&graph_dir).map_err(|e| Error::io(&graph_dir, e))?;

    let mut written: HashSet<String> = HashSet::new();
    let mut emit = |g: &CdfgGraph| -> Result<String> {
        let rel = format!("graphs/{}.json", g.graph_id);
        if written.insert(g.graph_id.clone()) {
            g.write(&dir.join(&rel))?;
        }
        Ok(rel)
    };

    let mut records = Vec::with_capacity(dataset.samples.len());
    for s in &dataset.samples {
        records.push(SampleRecord {
            kernel_id: s.kernel_id.clone(),
            design_id: s.design_id.clone(),
            kernel_graph: emit(&s.kernel_graph)?,
            design_graph: emit(&s.design_graph)?,
            y_k: s.y_k,
            y_d: s.y_d,
        });
    }
    let manifest = ManifestFile {
        format_version: FORMAT_VERSION,
        target: dataset.target,
        embedding_file: embedding_file.map(str::to_string),
        samples: records,
    };
    let path = dir.join("manifest.json");
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serialization");
    fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}
