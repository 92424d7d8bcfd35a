use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::rng::rng_for;

pub const DEFAULT_FOLDS: usize = 5;

/// Stratified k-fold assignment: each class is shuffled and dealt round-robin,
/// so per-fold class counts differ by at most one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub k: usize,
    pub assignment: Vec<usize>,
    pub seed: u64,
}

impl FoldPlan {
    pub fn new(labels: &[u8], k: usize, seed: u64) -> Result<Self, EvalError> {
        if k < 2 {
            return Err(EvalError::Config(format!("need at least 2 folds, got {k}")));
        }
        let mut assignment = vec![0; labels.len()];
        let mut rng = rng_for(seed, 0xf01d);
        for class in [1u8, 0] {
            let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
            if idx.len() < k {
                return Err(EvalError::Config(format!(
                    "class {class} has {} samples, fewer than {k} folds",
                    idx.len()
                )));
            }
            idx.shuffle(&mut rng);
            for (j, i) in idx.into_iter().enumerate() {
                assignment[i] = j % k;
            }
        }
        Ok(FoldPlan { k, assignment, seed })
    }

    pub fn test_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.assignment.len()).filter(|&i| self.assignment[i] == fold).collect()
    }

    pub fn train_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.assignment.len()).filter(|&i| self.assignment[i] != fold).collect()
    }
}
