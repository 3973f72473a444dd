//! Checkpoint layout: 8-byte magic `DHLSCKP1`, `u32` LE format version,
//! `u32` LE header length, a JSON header, then every parameter as
//! little-endian `f32` in header order.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::ModelConfig;
use super::network::DifferentialModel;
use super::normalizer::Normalizer;
use crate::data::FORMAT_VERSION;
use crate::gnn::{named_params, named_params_mut, PnaStats};
use crate::{Error, Real, Result};

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"DHLSCKP1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TensorEntry {
    pub name: String,
    pub shape: Vec<usize>,
    /// Offset into the payload, in `f32` elements.
    pub offset: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckpointHeader {
    pub format_version: u32,
    pub config: ModelConfig,
    pub normalizer: Normalizer,
    pub pna_stats: Option<PnaStats>,
    pub tensors: Vec<TensorEntry>,
}

pub fn save_checkpoint<T: Real>(model: &DifferentialModel<T>, path: &Path) -> Result<()> {
    let mut tensors = Vec::new();
    let mut payload = Vec::new();
    let mut offset = 0;
    for (name, view) in named_params(model) {
        tensors.push(TensorEntry {
            name,
            shape: view.shape().to_vec(),
            offset,
        });
        offset += view.len();
        for &v in view.iter() {
            payload.extend_from_slice(&(v.as_f64() as f32).to_le_bytes());
        }
    }
    let header = CheckpointHeader {
        format_version: FORMAT_VERSION,
        config: model.config.clone(),
        normalizer: model.normalizer,
        pna_stats: model.pna_stats(),
        tensors,
    };
    let header = serde_json::to_vec(&header).map_err(|e| Error::json(path, e))?;
    let mut bytes = Vec::with_capacity(16 + header.len() + payload.len());
    bytes.extend_from_slice(CHECKPOINT_MAGIC);
    bytes.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    bytes.extend_from_slice(&(header.len() as u32).to_le_bytes());
    bytes.extend_from_slice(&header);
    bytes.extend_from_slice(&payload);
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn read_checkpoint_header(bytes: &[u8], path: &Path) -> Result<(CheckpointHeader, usize)> {
    if bytes.len() < 16 || &bytes[..8] != CHECKPOINT_MAGIC {
        return Err(Error::Format(format!("{}: not a checkpoint (bad magic)", path.display())));
    }
    let version = u32::from_le_bytes(bytes[8..12].try_into().unwrap());
    if version != FORMAT_VERSION {
        return Err(Error::FormatVersion {
            what: "checkpoint",
            found: version,
            expected: FORMAT_VERSION,
        });
    }
    let header_len = u32::from_le_bytes(bytes[12..16].try_into().unwrap()) as usize;
    let end = 16 + header_len;
    if bytes.len() < end {
        return Err(Error::Format(format!("{}: truncated checkpoint header", path.display())));
    }
    let header: CheckpointHeader = serde_json::from_slice(&bytes[16..end]).map_err(|e| Error::json(path, e))?;
    if header.format_version != FORMAT_VERSION {
        return Err(Error::FormatVersion {
            what: "checkpoint header",
            found: header.format_version,
            expected: FORMAT_VERSION,
        });
    }
    Ok((header, end))
}

pub fn load_checkpoint<T: Real>(path: &Path) -> Result<DifferentialModel<T>> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let (header, start) = read_checkpoint_header(&bytes, path)?;
    let payload = &bytes[start..];
    let mut model = DifferentialModel::<T>::new(header.config.clone(), 0)?;
    model.normalizer = header.normalizer;
    if let Some(stats) = header.pna_stats {
        model.set_pna_stats(stats);
    }
    let mut params = named_params_mut(&mut model);
    if params.len() != header.tensors.len() {
        return Err(Error::Format(format!(
            "{}: checkpoint has {} tensors, model expects {}",
            path.display(),
            header.tensors.len(),
            params.len()
        )));
    }
    let mut expected_len = 0;
    for ((name, view), entry) in params.iter_mut().zip(&header.tensors) {
        if *name != entry.name || view.shape() != entry.shape.as_slice() {
            return Err(Error::Format(format!(
                "{}: tensor {} {:?} does not match model parameter {name} {:?}",
                path.display(),
                entry.name,
                entry.shape,
                view.shape()
            )));
        }
        let start = entry.offset * 4;
        let end = start + view.len() * 4;
        if end > payload.len() {
            return Err(Error::Format(format!("{}: truncated checkpoint payload", path.display())));
        }
        for (dst, chunk) in view.iter_mut().zip(payload[start..end].chunks_exact(4)) {
            *dst = T::of(f32::from_le_bytes(chunk.try_into().unwrap()) as f64);
        }
        expected_len = expected_len.max(end);
    }
    if expected_len != payload.len() {
        return Err(Error::Format(format!(
            "{}: checkpoint payload has {} bytes, expected {expected_len}",
            path.display(),
            payload.len()
        )));
    }
    drop(params);
    Ok(model)
}
