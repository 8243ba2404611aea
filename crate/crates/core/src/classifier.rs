//! Softmax head on top of the frozen encoder stack; per-trial P(AD).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{Standardizer, TrialFeatureVector};
use crate::nn::{train, Activation, DenseLayer, LossSpec, TrainConfig};
use crate::sdae::EncoderStack;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Output index of the AD class; index 0 is Control, matching the label encoding.
pub const AD_CLASS: usize = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeepClassifier {
    pub standardizer: Standardizer,
    pub stack: EncoderStack,
    /// Softmax, stack output dim -> 2.
    pub head: DenseLayer,
}

impl DeepClassifier {
    /// Standardize, encode through the frozen stack, softmax; returns P(AD).
    pub fn predict_trial(&self, raw: &TrialFeatureVector) -> Result<f64> {
        let standardized = self.standardizer.apply(raw);
        self.predict_standardized(&standardized)
    }

    pub fn predict_standardized(&self, standardized: &[f64]) -> Result<f64> {
        let code = self.stack.encode(standardized)?;
        let probs = self.head.forward(&code)?;
        Ok(probs[AD_CLASS])
    }
}

/// Trains the softmax head on clean final-stage encodings with one-hot
/// cross-entropy. The stack is read-only here; encoder parameters never move.
pub fn train_head(
    stack: &EncoderStack,
    standardized_features: &[Vec<f64>],
    labels: &[u8],
    cfg: &TrainConfig,
) -> Result<DenseLayer> {
    cfg.validate()?;
    if standardized_features.len() != labels.len() {
        return Err(Error::invalid(
            "head training data",
            format!("{} rows vs {} labels", standardized_features.len(), labels.len()),
        ));
    }
    if labels.iter().all(|&l| l == 0) || labels.iter().all(|&l| l == 1) {
        return Err(Error::invalid(
            "head training data",
            "single-class training data",
        ));
    }
    let encodings: Vec<Vec<f64>> = standardized_features
        .iter()
        .map(|row| stack.encode(row))
        .collect::<Result<_>>()?;
    let targets: Vec<Vec<f64>> = labels
        .iter()
        .map(|&l| match l {
            0 => Ok(vec![1.0, 0.0]),
            1 => Ok(vec![0.0, 1.0]),
            other => Err(Error::invalid("label", format!("expected 0 or 1, got {other}"))),
        })
        .collect::<Result<_>>()?;

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut head_net = vec![DenseLayer::init(
        stack.output_dim(),
        2,
        Activation::Softmax,
        &mut rng,
    )];
    train(&mut head_net, &encodings, &targets, LossSpec::CrossEntropy, cfg)?;
    Ok(head_net.pop().unwrap())
}

/// p < threshold -> 0 (Control); p >= threshold -> 1 (AD). The exact-0.5
/// tie goes to AD.
pub fn classify_at_threshold(p: f64, threshold: f64) -> u8 {
    if p < threshold {
        0
    } else {
        1
    }
}
