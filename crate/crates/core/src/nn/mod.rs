//! Small neural-network engine: dense, convolutional and recurrent layers with
//! exact backpropagation, optimizers, schedules and finite-difference checks.

mod checkpoint;
mod conv;
mod gradcheck;
mod loss;
mod network;
mod optim;
mod recurrent;
mod spec;
mod tensor;
mod train;

pub use checkpoint::{Checkpoint, StoredTensor, CHECKPOINT_VERSION};
pub use gradcheck::{grad_check, GradCheckOptions, GradCheckReport};
pub use loss::{bce_grad, bce_logit_grad, bce_loss, PROB_CLAMP};
pub use network::{ForwardCache, Grads, Network, Param};
pub use optim::{optimizer_step, OptimizerKind, OptimizerSpec, Schedule, TrainState};
pub use spec::{CellKind, LayerSpec};
pub use tensor::{gemm, Mat, Scalar, Tensor};
pub use train::{fit, FitReport, TrainConfig};

#[derive(Debug, thiserror::Error)]
pub enum NnError {
    #[error("layer {layer} ({kind}): {detail}")]
    Dimension { layer: usize, kind: &'static str, detail: String },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("state error: {0}")]
    State(String),
    #[error("non-finite {what} at epoch {epoch}, batch {batch}")]
    NonFinite { what: &'static str, epoch: usize, batch: usize },
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}
