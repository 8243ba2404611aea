//! Minimal dense-network numerics.
//!
//! Layers, activations, losses (including the sparse-autoencoder
//! reconstruction + KL objective), exact analytic gradients, a central
//! finite-difference gradient checker, and seeded mini-batch SGD.
//! No autodiff: every gradient here is hand-derived and held to the
//! checker at 1e-6 relative error.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sdae::kl_sparsity;

pub const RHO_HAT_CLIP: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Activation {
    Sigmoid,
    Linear,
    Softmax,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseLayer {
    /// Row-major [out][in].
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<f64>,
    pub activation: Activation,
}

impl DenseLayer {
    pub fn new(weights: Vec<Vec<f64>>, biases: Vec<f64>, activation: Activation) -> Result<Self> {
        if weights.is_empty() || weights[0].is_empty() {
            return Err(Error::invalid("DenseLayer.weights", "must be non-empty"));
        }
        let in_dim = weights[0].len();
        if weights.iter().any(|row| row.len() != in_dim) {
            return Err(Error::invalid("DenseLayer.weights", "ragged weight rows"));
        }
        if biases.len() != weights.len() {
            return Err(Error::Dimension {
                expected: weights.len(),
                got: biases.len(),
                context: "bias length vs weight rows",
            });
        }
        let finite = weights.iter().flatten().all(|w| w.is_finite())
            && biases.iter().all(|b| b.is_finite());
        if !finite {
            return Err(Error::invalid("DenseLayer", "non-finite parameter"));
        }
        Ok(DenseLayer {
            weights,
            biases,
            activation,
        })
    }

    /// Glorot-uniform initialization: U(+-sqrt(6/(fan_in+fan_out))).
    pub fn init(in_dim: usize, out_dim: usize, activation: Activation, rng: &mut ChaCha8Rng) -> Self {
        let bound = (6.0 / (in_dim + out_dim) as f64).sqrt();
        let weights = (0..out_dim)
            .map(|_| (0..in_dim).map(|_| rng.gen_range(-bound..bound)).collect())
            .collect();
        DenseLayer {
            weights,
            biases: vec![0.0; out_dim],
            activation,
        }
    }

    pub fn in_dim(&self) -> usize {
        self.weights[0].len()
    }

    pub fn out_dim(&self) -> usize {
        self.weights.len()
    }

    pub fn pre_activation(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.in_dim() {
            return Err(Error::Dimension {
                expected: self.in_dim(),
                got: x.len(),
                context: "dense layer input",
            });
        }
        Ok(self
            .weights
            .iter()
            .zip(&self.biases)
            .map(|(row, b)| b + row.iter().zip(x).map(|(w, xi)| w * xi).sum::<f64>())
            .collect())
    }

    /// activation(Wx + b).
    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(apply_activation(self.activation, &self.pre_activation(x)?))
    }
}

pub fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

fn apply_activation(activation: Activation, z: &[f64]) -> Vec<f64> {
    match activation {
        Activation::Linear => z.to_vec(),
        Activation::Sigmoid => z.iter().map(|&v| sigmoid(v)).collect(),
        Activation::Softmax => {
            let max = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let exps: Vec<f64> = z.iter().map(|&v| (v - max).exp()).collect();
            let sum: f64 = exps.iter().sum();
            exps.into_iter().map(|e| e / sum).collect()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum LossSpec {
    /// Mean over the batch of the summed squared output error.
    SquaredError,
    /// Mean over the batch of -sum_k t_k ln(o_k); expects a Softmax output layer.
    CrossEntropy,
    /// Reconstruction squared error plus beta * KL(rho || batch mean
    /// activation of the first (encoder) layer).
    SparseAe { beta: f64, rho: f64 },
}

pub type Network = Vec<DenseLayer>;

/// Activations per layer for one sample, including the input at index 0.
pub fn forward_full(net: &Network, x: &[f64]) -> Result<Vec<Vec<f64>>> {
    let mut acts = Vec::with_capacity(net.len() + 1);
    acts.push(x.to_vec());
    for layer in net {
        let next = layer.forward(acts.last().unwrap())?;
        acts.push(next);
    }
    Ok(acts)
}

pub fn forward(net: &Network, x: &[f64]) -> Result<Vec<f64>> {
    Ok(forward_full(net, x)?.pop().unwrap())
}

#[derive(Debug, Clone)]
pub struct LayerGrad {
    pub dw: Vec<Vec<f64>>,
    pub db: Vec<f64>,
}

fn zero_grads(net: &Network) -> Vec<LayerGrad> {
    net.iter()
        .map(|l| LayerGrad {
            dw: vec![vec![0.0; l.in_dim()]; l.out_dim()],
            db: vec![0.0; l.out_dim()],
        })
        .collect()
}

fn l2_penalty(net: &Network, l2: f64) -> f64 {
    if l2 == 0.0 {
        return 0.0;
    }
    0.5 * l2
        * net
            .iter()
            .flat_map(|l| l.weights.iter().flatten())
            .map(|w| w * w)
            .sum::<f64>()
}

/// Batch mean activation of the first layer's (encoder) outputs, clipped
/// into [RHO_HAT_CLIP, 1-RHO_HAT_CLIP].
fn batch_rho_hat(acts: &[Vec<Vec<f64>>]) -> Vec<f64> {
    let m = acts.len() as f64;
    let hidden_dim = acts[0][1].len();
    let mut rho_hat = vec![0.0; hidden_dim];
    for sample in acts {
        for (r, a) in rho_hat.iter_mut().zip(&sample[1]) {
            *r += a / m;
        }
    }
    for r in &mut rho_hat {
        *r = r.clamp(RHO_HAT_CLIP, 1.0 - RHO_HAT_CLIP);
    }
    rho_hat
}

/// Total batch loss under the given spec, plus the L2 penalty.
pub fn batch_loss(net: &Network, xs: &[Vec<f64>], ts: &[Vec<f64>], loss: LossSpec, l2: f64) -> Result<f64> {
    if xs.is_empty() || xs.len() != ts.len() {
        return Err(Error::invalid("batch", "empty batch or input/target count mismatch"));
    }
    let acts: Vec<Vec<Vec<f64>>> = xs
        .iter()
        .map(|x| forward_full(net, x))
        .collect::<Result<_>>()?;
    let m = xs.len() as f64;
    let data_loss = match loss {
        LossSpec::SquaredError | LossSpec::SparseAe { .. } => acts
            .iter()
            .zip(ts)
            .map(|(a, t)| {
                a.last()
                    .unwrap()
                    .iter()
                    .zip(t)
                    .map(|(o, y)| (o - y) * (o - y))
                    .sum::<f64>()
            })
            .sum::<f64>()
            / m,
        LossSpec::CrossEntropy => acts
            .iter()
            .zip(ts)
            .map(|(a, t)| {
                -a.last()
                    .unwrap()
                    .iter()
                    .zip(t)
                    .map(|(o, y)| y * o.max(1e-12).ln())
                    .sum::<f64>()
            })
            .sum::<f64>()
            / m,
    };
    let sparsity = match loss {
        LossSpec::SparseAe { beta, rho } => beta * kl_sparsity(rho, &batch_rho_hat(&acts)),
        _ => 0.0,
    };
    Ok(data_loss + sparsity + l2_penalty(net, l2))
}

/// Exact analytic gradients of the batch loss with respect to every
/// weight and bias, together with the loss value.
pub fn backprop(
    net: &Network,
    xs: &[Vec<f64>],
    ts: &[Vec<f64>],
    loss: LossSpec,
    l2: f64,
) -> Result<(Vec<LayerGrad>, f64)> {
    if xs.is_empty() || xs.len() != ts.len() {
        return Err(Error::invalid("batch", "empty batch or input/target count mismatch"));
    }
    if let LossSpec::CrossEntropy = loss {
        if net.last().unwrap().activation != Activation::Softmax {
            return Err(Error::invalid(
                "loss_spec",
                "CrossEntropy requires a Softmax output layer",
            ));
        }
    }
    if matches!(net.last().unwrap().activation, Activation::Softmax)
        && !matches!(loss, LossSpec::CrossEntropy)
    {
        return Err(Error::invalid(
            "loss_spec",
            "Softmax output layer is only paired with CrossEntropy",
        ));
    }

    let m = xs.len() as f64;
    let acts: Vec<Vec<Vec<f64>>> = xs
        .iter()
        .map(|x| forward_full(net, x))
        .collect::<Result<_>>()?;
    let loss_value = {
        // Reuse the forward pass for the loss value.
        let data_loss = match loss {
            LossSpec::SquaredError | LossSpec::SparseAe { .. } => acts
                .iter()
                .zip(ts)
                .map(|(a, t)| {
                    a.last()
                        .unwrap()
                        .iter()
                        .zip(t)
                        .map(|(o, y)| (o - y) * (o - y))
                        .sum::<f64>()
                })
                .sum::<f64>()
                / m,
            LossSpec::CrossEntropy => acts
                .iter()
                .zip(ts)
                .map(|(a, t)| {
                    -a.last()
                        .unwrap()
                        .iter()
                        .zip(t)
                        .map(|(o, y)| y * o.max(1e-12).ln())
                        .sum::<f64>()
                })
                .sum::<f64>()
                / m,
        };
        let sparsity = match loss {
            LossSpec::SparseAe { beta, rho } => beta * kl_sparsity(rho, &batch_rho_hat(&acts)),
            _ => 0.0,
        };
        data_loss + sparsity + l2_penalty(net, l2)
    };

    // Sparsity penalty gradient with respect to each hidden activation:
    // beta/m * (-rho/rho_hat_j + (1-rho)/(1-rho_hat_j)).
    let sparsity_da: Option<Vec<f64>> = match loss {
        LossSpec::SparseAe { beta, rho } => {
            let rho_hat = batch_rho_hat(&acts);
            Some(
                rho_hat
                    .iter()
                    .map(|&rh| beta / m * (-rho / rh + (1.0 - rho) / (1.0 - rh)))
                    .collect(),
            )
        }
        _ => None,
    };

    let mut grads = zero_grads(net);
    let n_layers = net.len();

    for (sample_acts, target) in acts.iter().zip(ts) {
        let output = sample_acts.last().unwrap();
        // Delta with respect to the output layer's pre-activation.
        let mut delta: Vec<f64> = match loss {
            LossSpec::CrossEntropy => output
                .iter()
                .zip(target)
                .map(|(o, y)| (o - y) / m)
                .collect(),
            LossSpec::SquaredError | LossSpec::SparseAe { .. } => {
                let da: Vec<f64> = output
                    .iter()
                    .zip(target)
                    .map(|(o, y)| 2.0 * (o - y) / m)
                    .collect();
                da_to_dz(net[n_layers - 1].activation, output, &da)
            }
        };

        for layer_idx in (0..n_layers).rev() {
            let input = &sample_acts[layer_idx];
            let grad = &mut grads[layer_idx];
            for (j, &dz) in delta.iter().enumerate() {
                grad.db[j] += dz;
                for (wji, xi) in grad.dw[j].iter_mut().zip(input) {
                    *wji += dz * xi;
                }
            }
            if layer_idx == 0 {
                break;
            }
            // Propagate to the previous layer's activations.
            let layer = &net[layer_idx];
            let mut da_prev = vec![0.0; layer.in_dim()];
            for (j, &dz) in delta.iter().enumerate() {
                for (i, dai) in da_prev.iter_mut().enumerate() {
                    *dai += layer.weights[j][i] * dz;
                }
            }
            // The KL penalty pulls on the encoder (layer-0 output) activations.
            if layer_idx == 1 {
                if let Some(sda) = &sparsity_da {
                    for (dai, s) in da_prev.iter_mut().zip(sda) {
                        *dai += s;
                    }
                }
            }
            delta = da_to_dz(net[layer_idx - 1].activation, &sample_acts[layer_idx], &da_prev);
        }
    }

    if l2 > 0.0 {
        for (grad, layer) in grads.iter_mut().zip(net) {
            for (grow, wrow) in grad.dw.iter_mut().zip(&layer.weights) {
                for (g, w) in grow.iter_mut().zip(wrow) {
                    *g += l2 * w;
                }
            }
        }
    }

    Ok((grads, loss_value))
}

/// Converts dL/d(activation) to dL/d(pre-activation). `a` is the layer's
/// post-activation output.
fn da_to_dz(activation: Activation, a: &[f64], da: &[f64]) -> Vec<f64> {
    match activation {
        Activation::Linear => da.to_vec(),
        Activation::Sigmoid => a
            .iter()
            .zip(da)
            .map(|(ai, dai)| dai * ai * (1.0 - ai))
            .collect(),
        // Softmax is handled jointly with CrossEntropy at the output.
        Activation::Softmax => unreachable!("softmax only at the output with cross-entropy"),
    }
}

pub const GRADIENT_CHECK_EPS: f64 = 1e-5;

/// Central-difference perturbation of every parameter; returns the max
/// over parameters of |analytic - numeric| / max(|analytic|, |numeric|, 1e-12).
pub fn gradient_check(
    net: &Network,
    xs: &[Vec<f64>],
    ts: &[Vec<f64>],
    loss: LossSpec,
    l2: f64,
    eps: f64,
) -> Result<f64> {
    if !(eps > 0.0 && eps < 1e-2) {
        return Err(Error::invalid("eps", format!("must lie in (0, 1e-2), got {eps}")));
    }
    let (grads, _) = backprop(net, xs, ts, loss, l2)?;
    let mut net = net.clone();
    let mut max_rel = 0.0_f64;

    let n_layers = net.len();
    for layer_idx in 0..n_layers {
        let out_dim = net[layer_idx].out_dim();
        let in_dim = net[layer_idx].in_dim();
        for j in 0..out_dim {
            for i in 0..=in_dim {
                let read = |net: &mut Network, delta: f64| -> Result<f64> {
                    if i < in_dim {
                        net[layer_idx].weights[j][i] += delta;
                    } else {
                        net[layer_idx].biases[j] += delta;
                    }
                    let v = batch_loss(net, xs, ts, loss, l2);
                    if i < in_dim {
                        net[layer_idx].weights[j][i] -= delta;
                    } else {
                        net[layer_idx].biases[j] -= delta;
                    }
                    v
                };
                let plus = read(&mut net, eps)?;
                let minus = read(&mut net, -eps)?;
                let numeric = (plus - minus) / (2.0 * eps);
                let analytic = if i < in_dim {
                    grads[layer_idx].dw[j][i]
                } else {
                    grads[layer_idx].db[j]
                };
                let rel = (analytic - numeric).abs()
                    / analytic.abs().max(numeric.abs()).max(1e-12);
                max_rel = max_rel.max(rel);
            }
        }
    }
    Ok(max_rel)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub l2_weight: f64,
    pub seed: u64,
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0) && self.learning_rate != 0.0 {
            return Err(Error::invalid("TrainConfig.learning_rate", "must be >= 0"));
        }
        if self.epochs == 0 {
            return Err(Error::invalid("TrainConfig.epochs", "must be >= 1"));
        }
        if self.batch_size == 0 {
            return Err(Error::invalid("TrainConfig.batch_size", "must be >= 1"));
        }
        if self.l2_weight < 0.0 {
            return Err(Error::invalid("TrainConfig.l2_weight", "must be >= 0"));
        }
        Ok(())
    }
}

/// One seed-shuffled pass of mini-batch gradient descent. Returns the mean
/// loss over batches. Aborts on NaN/Inf loss.
pub fn sgd_epoch(
    net: &mut Network,
    xs: &[Vec<f64>],
    ts: &[Vec<f64>],
    loss: LossSpec,
    config: &TrainConfig,
    rng: &mut ChaCha8Rng,
    epoch: usize,
) -> Result<f64> {
    if xs.is_empty() {
        return Err(Error::invalid("training data", "must be non-empty"));
    }
    let mut order: Vec<usize> = (0..xs.len()).collect();
    // Fisher-Yates with the caller's rng keeps the whole run reproducible.
    for i in (1..order.len()).rev() {
        let j = rng.gen_range(0..=i);
        order.swap(i, j);
    }

    let mut total = 0.0;
    let mut n_batches = 0usize;
    for chunk in order.chunks(config.batch_size) {
        let bx: Vec<Vec<f64>> = chunk.iter().map(|&i| xs[i].clone()).collect();
        let bt: Vec<Vec<f64>> = chunk.iter().map(|&i| ts[i].clone()).collect();
        let (grads, batch_loss_value) = backprop(net, &bx, &bt, loss, config.l2_weight)?;
        if !batch_loss_value.is_finite() {
            return Err(Error::Diverged {
                epoch,
                loss: batch_loss_value,
            });
        }
        for (layer, grad) in net.iter_mut().zip(&grads) {
            for (wrow, grow) in layer.weights.iter_mut().zip(&grad.dw) {
                for (w, g) in wrow.iter_mut().zip(grow) {
                    *w -= config.learning_rate * g;
                }
            }
            for (b, g) in layer.biases.iter_mut().zip(&grad.db) {
                *b -= config.learning_rate * g;
            }
        }
        total += batch_loss_value;
        n_batches += 1;
    }
    Ok(total / n_batches as f64)
}

/// Runs `config.epochs` SGD passes with an rng derived from `config.seed`.
/// Returns the per-epoch loss trajectory.
pub fn train(
    net: &mut Network,
    xs: &[Vec<f64>],
    ts: &[Vec<f64>],
    loss: LossSpec,
    config: &TrainConfig,
) -> Result<Vec<f64>> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut trajectory = Vec::with_capacity(config.epochs);
    for epoch in 0..config.epochs {
        trajectory.push(sgd_epoch(net, xs, ts, loss, config, &mut rng, epoch)?);
    }
    Ok(trajectory)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    fn random_batch(rng: &mut ChaCha8Rng, n: usize, dim: usize) -> Vec<Vec<f64>> {
        (0..n)
            .map(|_| (0..dim).map(|_| rng.gen_range(-1.5..1.5)).collect())
            .collect()
    }

    #[test]
    fn identity_linear_layer_is_identity() {
        let dim = 4;
        let weights = (0..dim)
            .map(|i| (0..dim).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        let layer = DenseLayer::new(weights, vec![0.0; dim], Activation::Linear).unwrap();
        let x = vec![0.3, -1.0, 2.5, 0.0];
        assert_eq!(layer.forward(&x).unwrap(), x);
    }

    #[test]
    fn sigmoid_midpoint() {
        let layer = DenseLayer::new(vec![vec![0.0, 0.0]], vec![0.0], Activation::Sigmoid).unwrap();
        assert_eq!(layer.forward(&[3.0, -7.0]).unwrap(), vec![0.5]);
    }

    #[test]
    fn softmax_sums_to_one() {
        let mut r = rng(7);
        let layer = DenseLayer::init(5, 3, Activation::Softmax, &mut r);
        for _ in 0..1000 {
            let x: Vec<f64> = (0..5).map(|_| r.gen_range(-10.0..10.0)).collect();
            let out = layer.forward(&x).unwrap();
            let sum: f64 = out.iter().sum();
            assert!((sum - 1.0).abs() < 1e-12);
            assert!(out.iter().all(|&o| o >= 0.0));
        }
    }

    #[test]
    fn forward_rejects_dimension_mismatch() {
        let layer = DenseLayer::new(vec![vec![1.0, 2.0]], vec![0.0], Activation::Linear).unwrap();
        assert!(layer.forward(&[1.0]).is_err());
    }

    #[test]
    fn single_linear_layer_closed_form_gradient() {
        // Zero weights, squared error, target = x = all-ones: output is 0,
        // per-sample loss sum (o-y)^2, so dW = 2(o-y)x = -2 * x.
        let layer = DenseLayer::new(vec![vec![0.0, 0.0]], vec![0.0], Activation::Linear).unwrap();
        let net = vec![layer];
        let xs = vec![vec![1.0, 1.0]];
        let ts = vec![vec![1.0]];
        let (grads, _) = backprop(&net, &xs, &ts, LossSpec::SquaredError, 0.0).unwrap();
        assert_eq!(grads[0].dw[0], vec![-2.0, -2.0]);
        assert_eq!(grads[0].db[0], -2.0);
    }

    #[test]
    fn gradient_check_sigmoid_net() {
        let mut r = rng(11);
        let net = vec![
            DenseLayer::init(14, 16, Activation::Sigmoid, &mut r),
            DenseLayer::init(16, 14, Activation::Sigmoid, &mut r),
        ];
        let xs = random_batch(&mut r, 5, 14);
        let ts = random_batch(&mut r, 5, 14)
            .into_iter()
            .map(|row| row.into_iter().map(|v| sigmoid(v)).collect())
            .collect::<Vec<Vec<f64>>>();
        let err = gradient_check(&net, &xs, &ts, LossSpec::SquaredError, 0.0, 1e-5).unwrap();
        assert!(err < 1e-6, "max relative error {err}");
    }

    #[test]
    fn gradient_check_detects_corruption() {
        let mut r = rng(13);
        let net = vec![
            DenseLayer::init(6, 4, Activation::Sigmoid, &mut r),
            DenseLayer::init(4, 6, Activation::Linear, &mut r),
        ];
        let xs = random_batch(&mut r, 4, 6);
        let (grads, _) = backprop(&net, &xs, &xs, LossSpec::SquaredError, 0.0).unwrap();
        // Mimic a sign-flip bug by comparing the corrupted analytic gradient
        // against the numeric one by hand.
        let numeric = {
            let mut net2 = net.clone();
            let eps = 1e-5;
            net2[0].weights[0][0] += eps;
            let plus = batch_loss(&net2, &xs, &xs, LossSpec::SquaredError, 0.0).unwrap();
            net2[0].weights[0][0] -= 2.0 * eps;
            let minus = batch_loss(&net2, &xs, &xs, LossSpec::SquaredError, 0.0).unwrap();
            (plus - minus) / (2.0 * eps)
        };
        let flipped = -grads[0].dw[0][0];
        let rel = (flipped - numeric).abs() / flipped.abs().max(numeric.abs()).max(1e-12);
        assert!(rel > 1e-2, "sign flip must be visible, rel = {rel}");
    }

    #[test]
    fn kl_gradient_zero_at_target() {
        // With rho_hat == rho the KL term's pull on activations is zero:
        // -rho/rho_hat + (1-rho)/(1-rho_hat) = -1 + 1 = 0.
        let rho: f64 = 0.1;
        let rho_hat: f64 = 0.1;
        let pull = -rho / rho_hat + (1.0 - rho) / (1.0 - rho_hat);
        assert!(pull.abs() < 1e-15);
    }

    #[test]
    fn zero_learning_rate_is_null_step() {
        let mut r = rng(17);
        let mut net = vec![DenseLayer::init(3, 2, Activation::Linear, &mut r)];
        let before = net.clone();
        let xs = random_batch(&mut r, 8, 3);
        let ts = random_batch(&mut r, 8, 2);
        let cfg = TrainConfig {
            learning_rate: 0.0,
            epochs: 3,
            batch_size: 4,
            l2_weight: 0.0,
            seed: 1,
        };
        let traj = train(&mut net, &xs, &ts, LossSpec::SquaredError, &cfg).unwrap();
        assert_eq!(net, before);
        assert!((traj[0] - traj[2]).abs() < 1e-15);
    }

    #[test]
    fn convex_least_squares_non_increasing() {
        let mut r = rng(19);
        let mut net = vec![DenseLayer::init(3, 1, Activation::Linear, &mut r)];
        let xs = random_batch(&mut r, 32, 3);
        let ts: Vec<Vec<f64>> = xs
            .iter()
            .map(|x| vec![0.5 * x[0] - 0.3 * x[1] + 0.1 * x[2] + 0.2])
            .collect();
        let cfg = TrainConfig {
            learning_rate: 0.01,
            epochs: 50,
            batch_size: 32,
            l2_weight: 0.0,
            seed: 2,
        };
        let traj = train(&mut net, &xs, &ts, LossSpec::SquaredError, &cfg).unwrap();
        for pair in traj.windows(2) {
            assert!(pair[1] <= pair[0] + 1e-12);
        }
    }

    #[test]
    fn same_seed_bit_identical_training() {
        let mut r = rng(23);
        let init = vec![
            DenseLayer::init(4, 3, Activation::Sigmoid, &mut r),
            DenseLayer::init(3, 4, Activation::Linear, &mut r),
        ];
        let xs = random_batch(&mut r, 16, 4);
        let cfg = TrainConfig {
            learning_rate: 0.05,
            epochs: 5,
            batch_size: 4,
            l2_weight: 1e-4,
            seed: 42,
        };
        let mut a = init.clone();
        let mut b = init.clone();
        train(&mut a, &xs, &xs, LossSpec::SquaredError, &cfg).unwrap();
        train(&mut b, &xs, &xs, LossSpec::SquaredError, &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn cross_entropy_requires_softmax() {
        let mut r = rng(29);
        let net = vec![DenseLayer::init(3, 2, Activation::Sigmoid, &mut r)];
        let xs = random_batch(&mut r, 2, 3);
        let ts = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        assert!(backprop(&net, &xs, &ts, LossSpec::CrossEntropy, 0.0).is_err());
    }

    #[test]
    fn gradient_check_rejects_bad_eps() {
        let mut r = rng(31);
        let net = vec![DenseLayer::init(2, 2, Activation::Linear, &mut r)];
        let xs = random_batch(&mut r, 2, 2);
        assert!(gradient_check(&net, &xs, &xs, LossSpec::SquaredError, 0.0, 0.5).is_err());
        assert!(gradient_check(&net, &xs, &xs, LossSpec::SquaredError, 0.0, 0.0).is_err());
    }
}
