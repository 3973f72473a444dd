//! Precomputed code embeddings, one fixed-length vector per design.
//!
//! Binary payload (`DHLSEMB1`): 8-byte magic, `u32` LE row count, `u32` LE
//! dimension, then `count * dim` little-endian `f32` values, row-major.
//! A JSON sidecar at `<payload>.json` maps design ids to row indices and
//! records the model that produced the vectors.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::data::FORMAT_VERSION;
use crate::{Error, Result};

pub const MAGIC: &[u8; 8] = b"DHLSEMB1";
const HEADER_LEN: usize = 16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmbeddingManifest {
    pub format_version: u32,
    pub source_model: String,
    pub dim: usize,
    pub rows: BTreeMap<String, usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    dim: usize,
    source_model: String,
    ids: Vec<String>,
    index: HashMap<String, usize>,
    values: Vec<f32>,
}

/// Sidecar manifest path for an embedding payload.
pub fn manifest_path(payload: &Path) -> PathBuf {
    let mut name = payload.as_os_str().to_owned();
    name.push(".json");
    PathBuf::from(name)
}

impl EmbeddingTable {
    pub fn new(source_model: impl Into<String>, dim: usize) -> Self {
        Self {
            dim,
            source_model: source_model.into(),
            ids: Vec::new(),
            index: HashMap::new(),
            values: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn source_model(&self) -> &str {
        &self.source_model
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    /// Design ids in row order.
    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn insert(&mut self, design_id: impl Into<String>, vector: &[f32]) -> Result<()> {
        let design_id = design_id.into();
        if vector.len() != self.dim {
            return Err(Error::DimensionMismatch {
                what: "embedding row",
                expected: self.dim,
                got: vector.len(),
            });
        }
        if vector.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteEmbedding(design_id));
        }
        if self.index.contains_key(&design_id) {
            return Err(Error::DuplicateDesignId(design_id));
        }
        self.index.insert(design_id.clone(), self.ids.len());
        self.ids.push(design_id);
        self.values.extend_from_slice(vector);
        Ok(())
    }

    pub fn lookup(&self, design_id: &str) -> Result<&[f32]> {
        let row = *self
            .index
            .get(design_id)
            .ok_or_else(|| Error::UnknownDesign(design_id.to_string()))?;
        Ok(&self.values[row * self.dim..(row + 1) * self.dim])
    }

    /// Fails on the first design id without a row.
    pub fn check_covers<'a>(&self, design_ids: impl IntoIterator<Item = &'a str>) -> Result<()> {
        for id in design_ids {
            if !self.index.contains_key(id) {
                return Err(Error::MissingEmbedding(id.to_string()));
            }
        }
        Ok(())
    }

    pub fn payload_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_LEN + self.values.len() * 4);
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&(self.ids.len() as u32).to_le_bytes());
        out.extend_from_slice(&(self.dim as u32).to_le_bytes());
        for v in &self.values {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn manifest(&self) -> EmbeddingManifest {
        EmbeddingManifest {
            format_version: FORMAT_VERSION,
            source_model: self.source_model.clone(),
            dim: self.dim,
            rows: self
                .ids
                .iter()
                .enumerate()
                .map(|(i, id)| (id.clone(), i))
                .collect(),
        }
    }

    /// Writes the payload to `path` and the manifest next to it.
    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.payload_bytes()).map_err(|e| Error::io(path, e))?;
        let mpath = manifest_path(path);
        let text = serde_json::to_string_pretty(&self.manifest()).expect("manifest serialization");
        fs::write(&mpath, text).map_err(|e| Error::io(&mpath, e))
    }

    /// Decodes a payload against its manifest.
    pub fn from_parts(path: &Path, bytes: &[u8], manifest: &EmbeddingManifest) -> Result<Self> {
        if manifest.format_version != FORMAT_VERSION {
            return Err(Error::FormatVersion {
                what: "embedding manifest",
                found: manifest.format_version,
                expected: FORMAT_VERSION,
            });
        }
        if bytes.len() < HEADER_LEN || &bytes[..8] != MAGIC {
            return Err(Error::BadMagic(path.to_path_buf()));
        }
        let count = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
        let dim = u32::from_le_bytes(bytes[12..16].try_into().unwrap()) as usize;
        let expected = HEADER_LEN + count * dim * 4;
        if bytes.len() < expected {
            return Err(Error::TruncatedPayload {
                path: path.to_path_buf(),
                expected,
                found: bytes.len(),
            });
        }
        if bytes.len() > expected {
            return Err(Error::Format(format!(
                "{}: {} trailing bytes after embedding payload",
                path.display(),
                bytes.len() - expected
            )));
        }
        if dim == 0 {
            return Err(Error::Format(format!("{}: zero embedding dimension", path.display())));
        }
        if manifest.rows.len() != count || manifest.dim != dim {
            return Err(Error::Format(format!(
                "{}: manifest/payload count mismatch (manifest {} rows of dim {}, payload {count} rows of dim {dim})",
                path.display(),
                manifest.rows.len(),
                manifest.dim
            )));
        }
        let mut ids = vec![None; count];
        for (id, &row) in &manifest.rows {
            match ids.get_mut(row) {
                Some(slot @ None) => *slot = Some(id.clone()),
                _ => {
                    return Err(Error::Format(format!(
                        "{}: invalid or repeated row index {row} for design {id}",
                        path.display()
                    )))
                }
            }
        }
        let mut table = Self::new(manifest.source_model.clone(), dim);
        let payload = &bytes[HEADER_LEN..];
        let mut row = vec![0f32; dim];
        for (r, id) in ids.into_iter().enumerate() {
            let id = id.expect("every row index assigned");
            for (k, v) in row.iter_mut().enumerate() {
                let at = (r * dim + k) * 4;
                *v = f32::from_le_bytes(payload[at..at + 4].try_into().unwrap());
            }
            table.insert(id, &row)?;
        }
        Ok(table)
    }
}

/// Loads `path` and its `<path>.json` sidecar.
pub fn load_embeddings(path: &Path) -> Result<EmbeddingTable> {
    load_embeddings_with_manifest(path, &manifest_path(path))
}

pub fn load_embeddings_with_manifest(path: &Path, manifest: &Path) -> Result<EmbeddingTable> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let text = fs::read_to_string(manifest).map_err(|e| Error::io(manifest, e))?;
    let m: EmbeddingManifest = serde_json::from_str(&text).map_err(|e| Error::json(manifest, e))?;
    EmbeddingTable::from_parts(path, &bytes, &m)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table() -> EmbeddingTable {
        let mut t = EmbeddingTable::new("Qwen2.5-Coder-1.5B", 4);
        t.insert("d0", &[0.0, 1.0, -2.5, 3.25]).unwrap();
        t.insert("d1", &[1e-30, -0.0, 7.0, f32::MAX]).unwrap();
        t
    }

    #[test]
    fn write_and_load() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("emb.bin");
        table().write(&path).unwrap();
        let back = load_embeddings(&path).unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!(back.dim(), 4);
        assert_eq!(back.lookup("d1").unwrap(), table().lookup("d1").unwrap());
        assert_eq!(back.source_model(), "Qwen2.5-Coder-1.5B");
        assert_eq!(back, table());
    }

    #[test]
    fn truncated_payload() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("emb.bin");
        let t = table();
        t.write(&path).unwrap();
        let bytes = t.payload_bytes();
        fs::write(&path, &bytes[..bytes.len() - 3]).unwrap();
        let err = load_embeddings(&path).unwrap_err();
        assert!(err.to_string().contains("truncated embedding payload"), "{err}");
    }

    #[test]
    fn bad_magic_and_count_mismatch() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("emb.bin");
        let t = table();
        t.write(&path).unwrap();
        let mut bytes = t.payload_bytes();
        bytes[0] = b'X';
        fs::write(&path, &bytes).unwrap();
        assert!(matches!(load_embeddings(&path), Err(Error::BadMagic(_))));

        let mut m = t.manifest();
        m.rows.remove("d1");
        let err = EmbeddingTable::from_parts(&path, &t.payload_bytes(), &m).unwrap_err();
        assert!(err.to_string().contains("count mismatch"), "{err}");
    }

    #[test]
    fn nan_row_is_rejected() {
        let t = table();
        let mut bytes = t.payload_bytes();
        let at = HEADER_LEN + 4 * 4 + 8; // row 1, column 2
        bytes[at..at + 4].copy_from_slice(&f32::NAN.to_le_bytes());
        let err = EmbeddingTable::from_parts(Path::new("x"), &bytes, &t.manifest()).unwrap_err();
        assert_eq!(err.to_string(), "non-finite embedding for design d1");
    }

    #[test]
    fn lookup_contract() {
        let t = table();
        assert_eq!(t.lookup("d0").unwrap(), &[0.0, 1.0, -2.5, 3.25]);
        assert_eq!(t.lookup("d0").unwrap(), t.lookup("d0").unwrap());
        let err = t.lookup("d9").unwrap_err();
        assert!(err.to_string().contains("d9"));
        assert!(t.check_covers(["d0", "d1"]).is_ok());
        assert!(matches!(t.check_covers(["d0", "zz"]), Err(Error::MissingEmbedding(id)) if id == "zz"));
    }
}
