//! Denoising sparse autoencoders and greedy two-stage stacking.
//!
//! Each stage corrupts its input by clamping a fixed fraction of the
//! coordinates to zero and learns to reconstruct the clean vector, with a
//! KL penalty pushing the batch-mean hidden activation toward the
//! sparsity target. Stages train greedily: stage k trains on the clean
//! encodings of stage k-1.

use rand::seq::index::sample;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::{backprop, Activation, DenseLayer, LossSpec, TrainConfig, RHO_HAT_CLIP};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseAeConfig {
    pub hidden_units: usize,
    /// Desired mean hidden activation.
    pub sparsity_target: f64,
    /// Weight of the KL penalty.
    pub sparsity_weight: f64,
    /// Fraction of input coordinates clamped to zero during training.
    pub corruption_fraction: f64,
    pub train: TrainConfig,
}

impl SparseAeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.hidden_units == 0 {
            return Err(Error::invalid("SparseAeConfig.hidden_units", "must be >= 1"));
        }
        if !(self.sparsity_target > 0.0 && self.sparsity_target < 1.0) {
            return Err(Error::invalid(
                "SparseAeConfig.sparsity_target",
                format!("must lie in (0,1), got {}", self.sparsity_target),
            ));
        }
        if self.sparsity_weight < 0.0 {
            return Err(Error::invalid("SparseAeConfig.sparsity_weight", "must be >= 0"));
        }
        if !(0.0..1.0).contains(&self.corruption_fraction) {
            return Err(Error::invalid(
                "SparseAeConfig.corruption_fraction",
                format!("must lie in [0,1), got {}", self.corruption_fraction),
            ));
        }
        self.train.validate()
    }
}

/// One trained encoder/decoder pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseAutoencoder {
    /// Sigmoid, input -> hidden.
    pub encoder: DenseLayer,
    /// Linear, hidden -> input.
    pub decoder: DenseLayer,
    pub config: SparseAeConfig,
    pub loss_trajectory: Vec<f64>,
}

impl SparseAutoencoder {
    pub fn input_dim(&self) -> usize {
        self.encoder.in_dim()
    }

    pub fn hidden_dim(&self) -> usize {
        self.encoder.out_dim()
    }

    /// Clean hidden representation; never corrupts.
    pub fn encode(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.encoder.forward(x)
    }
}

/// Ordered trained stages; only the encoders are used downstream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncoderStack {
    pub stages: Vec<SparseAutoencoder>,
}

impl EncoderStack {
    pub fn input_dim(&self) -> usize {
        self.stages[0].input_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.stages.last().unwrap().hidden_dim()
    }

    /// Applies the stage encoders in order.
    pub fn encode(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut v = x.to_vec();
        for stage in &self.stages {
            v = stage.encode(&v)?;
        }
        Ok(v)
    }

    /// Encoding after every stage, for smoothness exports.
    pub fn encode_stages(&self, x: &[f64]) -> Result<Vec<Vec<f64>>> {
        let mut out = Vec::with_capacity(self.stages.len());
        let mut v = x.to_vec();
        for stage in &self.stages {
            v = stage.encode(&v)?;
            out.push(v.clone());
        }
        Ok(out)
    }
}

/// Clamps round(fraction * dim) distinct, uniformly chosen coordinates to
/// zero; the rest pass through untouched.
pub fn corrupt(x: &[f64], fraction: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let n_zero = (fraction * x.len() as f64).round() as usize;
    let mut out = x.to_vec();
    if n_zero == 0 {
        return out;
    }
    for idx in sample(rng, x.len(), n_zero) {
        out[idx] = 0.0;
    }
    out
}

/// KL divergence between the target activation rho and each unit's batch
/// mean activation, summed over hidden units. rho_hat components are
/// clipped into [1e-8, 1-1e-8] before the logs.
pub fn kl_sparsity(rho: f64, rho_hat: &[f64]) -> f64 {
    rho_hat
        .iter()
        .map(|&rh| {
            let rh = rh.clamp(RHO_HAT_CLIP, 1.0 - RHO_HAT_CLIP);
            rho * (rho / rh).ln() + (1.0 - rho) * ((1.0 - rho) / (1.0 - rh)).ln()
        })
        .sum()
}

/// Trains one denoising sparse autoencoder on the given (standardized)
/// data matrix. The reconstruction target is always the clean row; only
/// the encoder input is corrupted, re-drawn every epoch.
pub fn train_sparse_autoencoder(
    data: &[Vec<f64>],
    cfg: &SparseAeConfig,
) -> Result<SparseAutoencoder> {
    cfg.validate()?;
    if data.is_empty() {
        return Err(Error::invalid("training data", "must be non-empty"));
    }
    if data.len() < cfg.train.batch_size {
        return Err(Error::invalid(
            "training data",
            format!(
                "{} rows is fewer than batch size {}",
                data.len(),
                cfg.train.batch_size
            ),
        ));
    }
    let input_dim = data[0].len();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.train.seed);
    let mut net = vec![
        DenseLayer::init(input_dim, cfg.hidden_units, Activation::Sigmoid, &mut rng),
        DenseLayer::init(cfg.hidden_units, input_dim, Activation::Linear, &mut rng),
    ];
    let loss = LossSpec::SparseAe {
        beta: cfg.sparsity_weight,
        rho: cfg.sparsity_target,
    };

    let mut trajectory = Vec::with_capacity(cfg.train.epochs);
    let mut order: Vec<usize> = (0..data.len()).collect();
    for epoch in 0..cfg.train.epochs {
        for i in (1..order.len()).rev() {
            let j = rng.gen_range(0..=i);
            order.swap(i, j);
        }
        let mut total = 0.0;
        let mut n_batches = 0usize;
        for chunk in order.chunks(cfg.train.batch_size) {
            let clean: Vec<Vec<f64>> = chunk.iter().map(|&i| data[i].clone()).collect();
            let noisy: Vec<Vec<f64>> = clean
                .iter()
                .map(|row| corrupt(row, cfg.corruption_fraction, &mut rng))
                .collect();
            let (grads, batch_loss) =
                backprop(&net, &noisy, &clean, loss, cfg.train.l2_weight)?;
            if !batch_loss.is_finite() {
                return Err(Error::Diverged {
                    epoch,
                    loss: batch_loss,
                });
            }
            for (layer, grad) in net.iter_mut().zip(&grads) {
                for (wrow, grow) in layer.weights.iter_mut().zip(&grad.dw) {
                    for (w, g) in wrow.iter_mut().zip(grow) {
                        *w -= cfg.train.learning_rate * g;
                    }
                }
                for (b, g) in layer.biases.iter_mut().zip(&grad.db) {
                    *b -= cfg.train.learning_rate * g;
                }
            }
            total += batch_loss;
            n_batches += 1;
        }
        trajectory.push(total / n_batches as f64);
    }

    let mut it = net.into_iter();
    Ok(SparseAutoencoder {
        encoder: it.next().unwrap(),
        decoder: it.next().unwrap(),
        config: cfg.clone(),
        loss_trajectory: trajectory,
    })
}

/// Greedy layer-wise stacking: stage k trains on the clean encodings of
/// stage k-1 (stage 0 on the clean input matrix).
pub fn stack_train(data: &[Vec<f64>], configs: &[SparseAeConfig]) -> Result<EncoderStack> {
    if configs.is_empty() {
        return Err(Error::invalid("stack configs", "must be non-empty"));
    }
    let mut stages = Vec::with_capacity(configs.len());
    let mut current: Vec<Vec<f64>> = data.to_vec();
    for cfg in configs {
        let ae = train_sparse_autoencoder(&current, cfg)?;
        current = current
            .iter()
            .map(|row| ae.encode(row))
            .collect::<Result<_>>()?;
        stages.push(ae);
    }
    Ok(EncoderStack { stages })
}

/// Mean hidden activation of a trained autoencoder over a clean data matrix.
pub fn mean_hidden_activation(ae: &SparseAutoencoder, data: &[Vec<f64>]) -> Result<f64> {
    let mut sum = 0.0;
    let mut count = 0usize;
    for row in data {
        let h = ae.encode(row)?;
        sum += h.iter().sum::<f64>();
        count += h.len();
    }
    Ok(sum / count as f64)
}
