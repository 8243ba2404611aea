//! Versioned model document: standardizer, encoder stack, softmax head,
//! and the training configuration that produced them.

use serde::{Deserialize, Serialize};
use std::path::Path;

use crate::classifier::DeepClassifier;
use crate::error::{Error, Result};
use crate::features::Standardizer;
use crate::nn::TrainConfig;
use crate::sdae::EncoderStack;

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelDocument {
    pub format_version: u32,
    /// Hash of the run configuration that produced this model.
    pub config_hash: String,
    pub standardizer: Standardizer,
    pub stack: EncoderStack,
    pub head: crate::nn::DenseLayer,
    pub head_config: TrainConfig,
}

impl ModelDocument {
    pub fn from_classifier(
        classifier: &DeepClassifier,
        head_config: TrainConfig,
        config_hash: impl Into<String>,
    ) -> Self {
        ModelDocument {
            format_version: MODEL_FORMAT_VERSION,
            config_hash: config_hash.into(),
            standardizer: classifier.standardizer.clone(),
            stack: classifier.stack.clone(),
            head: classifier.head.clone(),
            head_config,
        }
    }

    pub fn into_classifier(self) -> DeepClassifier {
        DeepClassifier {
            standardizer: self.standardizer,
            stack: self.stack,
            head: self.head,
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut json = serde_json::to_string_pretty(self)?;
        json.push('\n');
        std::fs::write(path, json)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let raw = std::fs::read_to_string(path)?;
        let doc: ModelDocument = serde_json::from_str(&raw)?;
        if doc.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::invalid(
                "model document",
                format!(
                    "unsupported format version {}, expected {}",
                    doc.format_version, MODEL_FORMAT_VERSION
                ),
            ));
        }
        Ok(doc)
    }
}
