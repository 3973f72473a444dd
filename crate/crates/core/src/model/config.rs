use serde::{Deserialize, Serialize};

use crate::data::Target;
use crate::gnn::Backbone;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelConfig {
    pub backbone: Backbone,
    pub num_layers: usize,
    pub hidden_dim: usize,
    /// Code-embedding width; taken from the embedding file header.
    pub code_dim: usize,
    /// Kernel + delta heads when true, a single direct design head otherwise.
    pub use_diff: bool,
    pub use_code_emb: bool,
    pub dropout: f64,
    pub target: Target,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            backbone: Backbone::Sage,
            num_layers: 2,
            hidden_dim: 128,
            code_dim: 0,
            use_diff: true,
            use_code_emb: true,
            dropout: 0.02,
            target: Target::Ff,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        if self.hidden_dim == 0 {
            return Err(Error::Config("hidden_dim must be positive".into()));
        }
        if self.num_layers == 0 {
            return Err(Error::Config("num_layers must be at least 1".into()));
        }
        if self.use_code_emb && self.code_dim == 0 {
            return Err(Error::Config(
                "code_dim must be positive when use_code_emb is set".into(),
            ));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::Config(format!("dropout {} outside [0, 1)", self.dropout)));
        }
        Ok(())
    }

    /// Input width of the delta (or direct design) head.
    pub fn delta_input_dim(&self) -> usize {
        if self.use_code_emb {
            3 * self.hidden_dim
        } else {
            2 * self.hidden_dim
        }
    }
}
