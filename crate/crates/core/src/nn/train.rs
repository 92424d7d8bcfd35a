//! Mini-batch training loop for sigmoid-output binary classifiers.

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::loss::{bce_logit_grad, bce_loss};
use super::network::{Grads, Network};
use super::optim::{optimizer_step, OptimizerSpec, TrainState};
use super::spec::LayerSpec;
use super::tensor::Tensor;
use super::NnError;
use crate::rng::{derive_seed, rng_for};

/// Samples per gradient work unit. Batch gradients are summed unit by unit in
/// a fixed order so results do not depend on the thread count.
const CHUNK: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub optimizer: OptimizerSpec,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig { epochs: 200, batch_size: 32, optimizer: OptimizerSpec::default(), seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    /// Mean training loss of each epoch (dropout active).
    pub epoch_losses: Vec<f64>,
    pub final_lr: f64,
    pub steps: u64,
}

/// Per-sample augmentation hook: receives a copy of the sample and a seed.
pub type Augment<'a> = &'a (dyn Fn(&mut Tensor<f32>, u64) + Sync);

/// Train `net` on `(inputs, labels)` with binary cross-entropy. The last layer
/// must be a sigmoid producing one probability.
pub fn fit(
    net: &mut Network<f32>,
    inputs: &[Tensor<f32>],
    labels: &[f32],
    cfg: &TrainConfig,
    augment: Option<Augment<'_>>,
) -> Result<FitReport, NnError> {
    if inputs.len() != labels.len() {
        return Err(NnError::Config(format!("{} inputs but {} labels", inputs.len(), labels.len())));
    }
    if inputs.is_empty() || cfg.batch_size == 0 {
        return Err(NnError::Config("training needs samples and a positive batch size".into()));
    }
    if net.layers.last() != Some(&LayerSpec::Sigmoid) || net.output_shape() != [1] {
        return Err(NnError::Config("training expects a single sigmoid output".into()));
    }
    let mut state = TrainState::new(cfg.optimizer, &net.params, cfg.seed)?;
    let logit_layer = net.layers.len() - 1;
    let mut order: Vec<usize> = (0..inputs.len()).collect();
    let mut losses = Vec::with_capacity(cfg.epochs);

    for epoch in 0..cfg.epochs {
        let mut rng = rng_for(cfg.seed, 0x5eed_0000 + epoch as u64);
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for (b, batch) in order.chunks(cfg.batch_size).enumerate() {
            let scale = 1.0 / batch.len() as f32;
            let net_ref = &*net;
            let parts: Vec<Result<(Grads<f32>, f64), NnError>> = batch
                .par_chunks(CHUNK)
                .map(|chunk| {
                    let mut grads = net_ref.zero_grads();
                    let mut loss = 0.0;
                    for &i in chunk {
                        let sample_seed = derive_seed(cfg.seed, ((epoch as u64) << 32) | i as u64);
                        let (out, cache) = match augment {
                            Some(f) => {
                                let mut x = inputs[i].clone();
                                f(&mut x, sample_seed);
                                net_ref.forward(&x, true, sample_seed)?
                            }
                            None => net_ref.forward(&inputs[i], true, sample_seed)?,
                        };
                        let p = out.data[0] as f64;
                        let y = labels[i] as f64;
                        loss += bce_loss(p, y);
                        let g = [bce_logit_grad(p, y) as f32 * scale];
                        net_ref.backprop(&cache, logit_layer, &g, &mut grads, false)?;
                    }
                    Ok((grads, loss))
                })
                .collect();
            let mut total: Option<Grads<f32>> = None;
            for part in parts {
                let (g, l) = part?;
                epoch_loss += l;
                match total.as_mut() {
                    None => total = Some(g),
                    Some(t) => {
                        for (a, b) in t.iter_mut().zip(&g) {
                            for (x, y) in a.data.iter_mut().zip(&b.data) {
                                *x += *y;
                            }
                        }
                    }
                }
            }
            let grads = total.expect("non-empty batch");
            state.batch = b;
            optimizer_step(&mut state, net.params_mut(), &grads)?;
        }
        let mean = epoch_loss / inputs.len() as f64;
        if !mean.is_finite() {
            return Err(NnError::NonFinite { what: "loss", epoch, batch: 0 });
        }
        losses.push(mean);
        state.end_epoch(mean);
    }
    Ok(FitReport { epoch_losses: losses, final_lr: state.lr, steps: state.steps })
}
