//! Per-user verification datasets, cross validation, grid search and metrics.

mod assemble;
mod cv;
mod data;
mod folds;
mod grid;
mod metrics;
mod report;

pub use assemble::{assemble, LabeledSet, SampleRef};
pub use cv::{cross_validate, train_model, CvResult, FoldMetrics};
pub use data::FeatureSet;
pub use folds::{FoldPlan, DEFAULT_FOLDS};
pub use grid::{grid_search, GridCell, GridResults, GridRow, GridSpec};
pub use metrics::{accuracy, eer, roc, Metrics, RocPoint};
pub use report::{fold_csv, grid_csv, summarize, write_fold_csv, Summary, UserSummary, FOLD_CSV_HEADER};

use crate::nn::NnError;

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("user `{user}` needs {needed} negatives but only {available} samples exist across other users")]
    Shortage { user: String, needed: usize, available: usize },
    #[error("user `{user}` has {have} samples; at least {need} required")]
    TooFewSamples { user: String, have: usize, need: usize },
    #[error("user `{0}` is unknown")]
    UnknownUser(String),
    #[error("no other users to draw negatives from for `{0}`")]
    NoOtherUsers(String),
    #[error("metric undefined: scores need at least one positive and one negative")]
    SingleClass,
    #[error("fold {fold}: {source}")]
    Training { fold: usize, source: NnError },
    #[error("{0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}
