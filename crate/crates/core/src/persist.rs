//! Versioned JSON container for trained models.
//!
//! Layout (one JSON object):
//!
//! ```text
//! {
//!   "format": "mlkfhe-model",
//!   "version": 1,
//!   "algorithm": "kfhe-homer",
//!   "seed": 7,
//!   "tool_version": "0.1.0",
//!   "invocation": "mlkfhe train ...",
//!   "feature_names": [...],
//!   "label_names": [...],
//!   "model": { "kind": "kfhe" | "bagged" | "single" | "br" | "prior", ... }
//! }
//! ```
//!
//! Reals are written with shortest round-trip formatting, so a loaded model
//! predicts bit-identically to the one that was saved.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::algorithm::{Algorithm, TrainedModel};
use crate::error::{Error, Result};
use crate::models::ScoreModel;

pub const FORMAT_TAG: &str = "mlkfhe-model";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub format: String,
    pub version: u32,
    pub algorithm: Algorithm,
    pub seed: u64,
    pub tool_version: String,
    /// Command line that produced the file, if any.
    pub invocation: Option<String>,
    pub feature_names: Vec<String>,
    pub label_names: Vec<String>,
    pub model: TrainedModel,
}

impl ModelFile {
    pub fn new(
        algorithm: Algorithm,
        seed: u64,
        feature_names: Vec<String>,
        label_names: Vec<String>,
        model: TrainedModel,
    ) -> Result<Self> {
        if feature_names.len() != model.n_features() || label_names.len() != model.n_labels() {
            return Err(Error::invalid("feature or label names do not match the model"));
        }
        Ok(Self {
            format: FORMAT_TAG.to_string(),
            version: FORMAT_VERSION,
            algorithm,
            seed,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            invocation: None,
            feature_names,
            label_names,
            model,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string(self).map_err(|e| Error::Format(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        #[derive(Deserialize)]
        struct Header {
            format: String,
            version: u32,
        }
        let header: Header =
            serde_json::from_str(text).map_err(|e| Error::Format(format!("not a model file: {e}")))?;
        if header.format != FORMAT_TAG {
            return Err(Error::Format(format!("unexpected format tag {:?}", header.format)));
        }
        if header.version != FORMAT_VERSION {
            return Err(Error::Format(format!(
                "unsupported version {} (this build reads {FORMAT_VERSION})",
                header.version
            )));
        }
        let file: ModelFile = serde_json::from_str(text).map_err(|e| Error::Format(e.to_string()))?;
        file.model.validate().map_err(|e| Error::Format(e.to_string()))?;
        if file.feature_names.len() != file.model.n_features() || file.label_names.len() != file.model.n_labels() {
            return Err(Error::Format("names do not match the stored model".into()));
        }
        Ok(file)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}
