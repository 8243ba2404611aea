//! Eye-movement reading analysis pipeline.
//!
//! Classifies reading trials of Control vs. AD subjects from eye-tracker
//! fixation streams: cleaning and fixation-class tagging, trial-wise
//! feature extraction, stacked denoising sparse-autoencoder pretraining
//! with a softmax head, and an evaluation battery (confusion matrix,
//! majority voting, severity marker, encoding smoothness).

pub mod classifier;
pub mod corpus;
pub mod dataset;
pub mod error;
pub mod evaluation;
pub mod features;
pub mod model;
pub mod nn;
pub mod pipeline;
pub mod preprocess;
pub mod sdae;
pub mod synthetic;
pub mod types;

pub use error::{Error, Result};
pub use types::{Diagnosis, Fixation, FixationClass, SentenceMeta, SentenceType, Subject};
