use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::assemble::{LabeledSet, SampleRef};
use super::data::FeatureSet;
use super::folds::FoldPlan;
use super::metrics::{Metrics, RocPoint};
use super::EvalError;
use crate::features::{Cutout, CutoutSpec, TIMING_COLUMNS};
use crate::models::{calibrate_input_gain, ModelConfig};
use crate::nn::{fit, FitReport, Network, NnError, Tensor, TrainConfig};
use crate::rng::{derive_seed, rng_for};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldMetrics {
    pub fold: usize,
    pub accuracy: f64,
    pub eer: f64,
    pub eer_threshold: f64,
    pub final_loss: f64,
    pub train_size: usize,
    pub test_size: usize,
    pub roc: Vec<RocPoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvResult {
    pub user_id: String,
    pub folds: Vec<FoldMetrics>,
    pub mean_accuracy: f64,
    pub mean_eer: f64,
    pub mean_threshold: f64,
}

/// Stratified k-fold cross validation of one user's verifier. Each fold trains
/// a fresh model from a fold-specific seed.
pub fn cross_validate(
    data: &FeatureSet,
    set: &LabeledSet,
    model: &ModelConfig,
    train: &TrainConfig,
    cutout: &CutoutSpec,
    k: usize,
    seed: u64,
) -> Result<CvResult, EvalError> {
    data.check_model(model.kind())?;
    if cutout.enabled {
        cutout.validate(Some(data.input_shape[1])).map_err(|e| EvalError::Config(e.to_string()))?;
    }
    let labels = set.labels();
    let plan = FoldPlan::new(&labels, k, derive_seed(seed, 0xf0))?;
    let folds = (0..k)
        .into_par_iter()
        .map(|fold| run_fold(data, set, &labels, &plan, fold, model, train, cutout, seed))
        .collect::<Result<Vec<_>, _>>()?;
    let mean = |f: fn(&FoldMetrics) -> f64| folds.iter().map(f).sum::<f64>() / folds.len() as f64;
    Ok(CvResult {
        user_id: set.user_id.clone(),
        mean_accuracy: mean(|f| f.accuracy),
        mean_eer: mean(|f| f.eer),
        mean_threshold: mean(|f| f.eer_threshold),
        folds,
    })
}

/// Build a fresh model from `model_seed` and fit it to `samples`, applying
/// cutout to each training copy when enabled.
pub fn train_model(
    data: &FeatureSet,
    samples: &[SampleRef],
    model: &ModelConfig,
    train: &TrainConfig,
    cutout: &CutoutSpec,
    model_seed: u64,
    train_seed: u64,
) -> Result<(Network<f32>, FitReport), NnError> {
    let xs: Vec<Tensor<f32>> = samples.iter().map(|r| data.get(r).clone()).collect();
    let ys: Vec<f32> = samples.iter().map(|r| r.label as f32).collect();
    let mut net: Network<f32> = model.build(&data.input_shape, model_seed)?;
    calibrate_input_gain(&mut net, &xs, TIMING_COLUMNS);
    let cfg = TrainConfig { seed: train_seed, ..train.clone() };
    let augment = move |x: &mut Tensor<f32>, s: u64| {
        let mut rng = rng_for(s, 0x0c07);
        *x = x.apply_cutout_with(cutout, &mut rng);
    };
    let report = fit(&mut net, &xs, &ys, &cfg, cutout.enabled.then_some(&augment as _))?;
    Ok((net, report))
}

#[allow(clippy::too_many_arguments)]
fn run_fold(
    data: &FeatureSet,
    set: &LabeledSet,
    labels: &[u8],
    plan: &FoldPlan,
    fold: usize,
    model: &ModelConfig,
    train: &TrainConfig,
    cutout: &CutoutSpec,
    seed: u64,
) -> Result<FoldMetrics, EvalError> {
    let wrap = |source| EvalError::Training { fold, source };
    let train_idx = plan.train_indices(fold);
    let test_idx = plan.test_indices(fold);
    let refs: Vec<SampleRef> = train_idx.iter().map(|&i| set.samples[i].clone()).collect();
    let (net, report) = train_model(
        data,
        &refs,
        model,
        train,
        cutout,
        derive_seed(seed, 0x1000 + fold as u64),
        derive_seed(seed, 0x2000 + fold as u64),
    )
    .map_err(wrap)?;
    let mut scores = Vec::with_capacity(test_idx.len());
    for &i in &test_idx {
        scores.push(net.predict(data.get(&set.samples[i])).map_err(wrap)?.data[0] as f64);
    }
    let test_labels: Vec<u8> = test_idx.iter().map(|&i| labels[i]).collect();
    let m = Metrics::compute(&scores, &test_labels)?;
    Ok(FoldMetrics {
        fold,
        accuracy: m.accuracy,
        eer: m.eer,
        eer_threshold: m.eer_threshold,
        final_loss: report.epoch_losses.last().copied().unwrap_or(f64::NAN),
        train_size: refs.len(),
        test_size: test_idx.len(),
        roc: m.roc,
    })
}
