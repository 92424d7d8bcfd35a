use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::assemble::LabeledSet;
use super::cv::{cross_validate, CvResult};
use super::data::FeatureSet;
use super::EvalError;
use crate::features::CutoutSpec;
use crate::models::ModelConfig;
use crate::nn::{OptimizerKind, OptimizerSpec, Schedule, TrainConfig};
use crate::rng::derive_seed;

/// Hyper-parameter axes; the grid is their cartesian product.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub epochs: Vec<usize>,
    pub learning_rates: Vec<f64>,
    pub optimizers: Vec<OptimizerKind>,
    pub schedules: Vec<Schedule>,
}

impl GridSpec {
    /// 4 epoch budgets x 4 rates x 3 optimizers x 4 schedules.
    pub fn paper() -> Self {
        GridSpec {
            epochs: vec![100, 200, 500, 1000],
            learning_rates: vec![0.1, 0.01, 0.001, 0.0001],
            optimizers: vec![OptimizerKind::Adam, OptimizerKind::Sgd, OptimizerKind::SgdMomentum],
            schedules: vec![Schedule::step(0.1), Schedule::step(0.3), Schedule::step(0.5), Schedule::plateau()],
        }
    }

    /// 2 x 2 x 1 x 1 desk-scale grid.
    pub fn quick() -> Self {
        GridSpec {
            epochs: vec![5, 10],
            learning_rates: vec![0.01, 0.001],
            optimizers: vec![OptimizerKind::Adam],
            schedules: vec![Schedule::step(0.1)],
        }
    }

    pub fn preset(name: &str) -> Option<Self> {
        match name {
            "paper" => Some(Self::paper()),
            "quick" => Some(Self::quick()),
            _ => None,
        }
    }

    pub fn len(&self) -> usize {
        self.epochs.len() * self.learning_rates.len() * self.optimizers.len() * self.schedules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Cells in axis order (epochs outermost, schedule innermost).
    pub fn cells(&self) -> Vec<GridCell> {
        let mut out = Vec::with_capacity(self.len());
        for &epochs in &self.epochs {
            for &learning_rate in &self.learning_rates {
                for &optimizer in &self.optimizers {
                    for &schedule in &self.schedules {
                        out.push(GridCell { epochs, learning_rate, optimizer, schedule });
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub epochs: usize,
    pub learning_rate: f64,
    pub optimizer: OptimizerKind,
    pub schedule: Schedule,
}

impl GridCell {
    pub fn train_config(&self, base: &TrainConfig) -> TrainConfig {
        TrainConfig {
            epochs: self.epochs,
            optimizer: OptimizerSpec {
                kind: self.optimizer,
                learning_rate: self.learning_rate,
                momentum: base.optimizer.momentum,
                schedule: self.schedule,
            },
            ..base.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridRow {
    pub rank: usize,
    pub cell: GridCell,
    pub mean_eer: f64,
    pub mean_accuracy: f64,
    /// Per-repeat cross-validation means.
    pub repeat_eers: Vec<f64>,
    pub repeat_accuracies: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridResults {
    pub user_id: String,
    /// Ranked: mean EER ascending, then accuracy descending, then fewer epochs.
    pub rows: Vec<GridRow>,
}

impl GridResults {
    pub fn best(&self) -> &GridRow {
        &self.rows[0]
    }
}

/// Cross-validate every grid cell `repeats` times. Repeat `r` uses the same
/// seed in every cell.
#[allow(clippy::too_many_arguments)]
pub fn grid_search(
    data: &FeatureSet,
    set: &LabeledSet,
    model: &ModelConfig,
    grid: &GridSpec,
    base: &TrainConfig,
    cutout: &CutoutSpec,
    repeats: usize,
    seed: u64,
) -> Result<GridResults, EvalError> {
    if grid.is_empty() || repeats == 0 {
        return Err(EvalError::Config("grid search needs at least one cell and one repeat".into()));
    }
    let cells = grid.cells();
    let jobs: Vec<(usize, usize)> = (0..cells.len()).flat_map(|c| (0..repeats).map(move |r| (c, r))).collect();
    let results: Vec<CvResult> = jobs
        .par_iter()
        .map(|&(c, r)| {
            let cfg = cells[c].train_config(base);
            cross_validate(data, set, model, &cfg, cutout, super::DEFAULT_FOLDS, derive_seed(seed, r as u64))
        })
        .collect::<Result<_, _>>()?;
    let mut rows: Vec<GridRow> = cells
        .iter()
        .enumerate()
        .map(|(c, cell)| {
            let runs = &results[c * repeats..(c + 1) * repeats];
            let repeat_eers: Vec<f64> = runs.iter().map(|r| r.mean_eer).collect();
            let repeat_accuracies: Vec<f64> = runs.iter().map(|r| r.mean_accuracy).collect();
            GridRow {
                rank: 0,
                cell: *cell,
                mean_eer: repeat_eers.iter().sum::<f64>() / repeats as f64,
                mean_accuracy: repeat_accuracies.iter().sum::<f64>() / repeats as f64,
                repeat_eers,
                repeat_accuracies,
            }
        })
        .collect();
    rows.sort_by(|a, b| {
        a.mean_eer
            .total_cmp(&b.mean_eer)
            .then(b.mean_accuracy.total_cmp(&a.mean_accuracy))
            .then(a.cell.epochs.cmp(&b.cell.epochs))
    });
    for (i, r) in rows.iter_mut().enumerate() {
        r.rank = i + 1;
    }
    Ok(GridResults { user_id: set.user_id.clone(), rows })
}
