//! Adam / SGD / SGD with momentum, step and plateau learning-rate schedules.

use serde::{Deserialize, Serialize};

use super::network::{Grads, Param};
use super::tensor::Scalar;
use super::NnError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum OptimizerKind {
    Adam,
    #[serde(rename = "SGD")]
    Sgd,
    #[serde(rename = "SGDMomentum")]
    SgdMomentum,
}

impl OptimizerKind {
    pub fn name(self) -> &'static str {
        match self {
            OptimizerKind::Adam => "Adam",
            OptimizerKind::Sgd => "SGD",
            OptimizerKind::SgdMomentum => "SGDMomentum",
        }
    }
}

impl std::str::FromStr for OptimizerKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "adam" => Ok(OptimizerKind::Adam),
            "sgd" => Ok(OptimizerKind::Sgd),
            "sgdmomentum" | "momentum" => Ok(OptimizerKind::SgdMomentum),
            _ => Err(format!("unknown optimizer `{s}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum Schedule {
    StepLR {
        gamma: f64,
        step_epochs: usize,
    },
    /// Multiply the rate by `factor` after `patience` epochs without improvement.
    Plateau {
        factor: f64,
        patience: usize,
    },
}

impl Schedule {
    pub const DEFAULT_STEP_EPOCHS: usize = 50;

    pub fn step(gamma: f64) -> Self {
        Schedule::StepLR { gamma, step_epochs: Self::DEFAULT_STEP_EPOCHS }
    }

    pub fn plateau() -> Self {
        Schedule::Plateau { factor: 0.1, patience: 10 }
    }

    pub fn label(&self) -> String {
        match self {
            Schedule::StepLR { gamma, .. } => format!("StepLR({gamma})"),
            Schedule::Plateau { .. } => "Plateau".into(),
        }
    }
}

/// Accepts `plateau`, `step:<gamma>`, `steplr:<gamma>` and the `StepLR(<gamma>)` label.
impl std::str::FromStr for Schedule {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let lower = s.trim().to_ascii_lowercase();
        if lower == "plateau" {
            return Ok(Schedule::plateau());
        }
        let gamma = lower
            .strip_prefix("steplr(")
            .and_then(|r| r.strip_suffix(')'))
            .or_else(|| lower.strip_prefix("step:"))
            .or_else(|| lower.strip_prefix("steplr:"))
            .ok_or_else(|| format!("unknown schedule `{s}` (expected step:<gamma> or plateau)"))?;
        gamma.parse::<f64>().map(Schedule::step).map_err(|_| format!("bad StepLR gamma in `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizerSpec {
    pub kind: OptimizerKind,
    pub learning_rate: f64,
    #[serde(default = "default_momentum")]
    pub momentum: f64,
    pub schedule: Schedule,
}

fn default_momentum() -> f64 {
    0.9
}

impl Default for OptimizerSpec {
    fn default() -> Self {
        OptimizerSpec { kind: OptimizerKind::Adam, learning_rate: 0.01, momentum: 0.9, schedule: Schedule::step(0.1) }
    }
}

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPS: f64 = 1e-8;

impl OptimizerSpec {
    pub fn validate(&self) -> Result<(), NnError> {
        let bad = |m: String| Err(NnError::Config(m));
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad(format!("learning rate must be positive, got {}", self.learning_rate));
        }
        if self.kind == OptimizerKind::SgdMomentum && !(0.0..1.0).contains(&self.momentum) {
            return bad(format!("momentum must be in [0, 1), got {}", self.momentum));
        }
        match self.schedule {
            Schedule::StepLR { gamma, step_epochs } => {
                if !(gamma > 0.0 && gamma < 1.0) {
                    return bad(format!("StepLR gamma must be in (0, 1), got {gamma}"));
                }
                if step_epochs == 0 {
                    return bad("StepLR step must be positive".into());
                }
            }
            Schedule::Plateau { factor, .. } => {
                if !(factor > 0.0 && factor < 1.0) {
                    return bad(format!("plateau factor must be in (0, 1), got {factor}"));
                }
            }
        }
        Ok(())
    }

    /// Step-schedule rate at the start of `epoch` (0-based). Plateau rates
    /// depend on history; see [`TrainState::end_epoch`].
    pub fn step_lr(&self, epoch: usize) -> f64 {
        match self.schedule {
            Schedule::StepLR { gamma, step_epochs } => self.learning_rate * gamma.powi((epoch / step_epochs) as i32),
            Schedule::Plateau { .. } => self.learning_rate,
        }
    }
}

/// Everything mutable during training apart from the parameters themselves.
#[derive(Debug, Clone)]
pub struct TrainState<T> {
    pub spec: OptimizerSpec,
    pub epoch: usize,
    /// Batch index within the current epoch.
    pub batch: usize,
    pub steps: u64,
    pub lr: f64,
    pub seed: u64,
    m: Vec<Vec<T>>,
    v: Vec<Vec<T>>,
    best: f64,
    stale_epochs: usize,
}

impl<T: Scalar> TrainState<T> {
    pub fn new(spec: OptimizerSpec, params: &[Param<T>], seed: u64) -> Result<Self, NnError> {
        spec.validate()?;
        let zeros = || params.iter().map(|p| vec![T::zero(); p.value.len()]).collect::<Vec<_>>();
        let v = if spec.kind == OptimizerKind::Adam { zeros() } else { Vec::new() };
        let m = if spec.kind == OptimizerKind::Sgd { Vec::new() } else { zeros() };
        Ok(TrainState {
            spec,
            epoch: 0,
            batch: 0,
            steps: 0,
            lr: spec.learning_rate,
            seed,
            m,
            v,
            best: f64::INFINITY,
            stale_epochs: 0,
        })
    }

    /// First-moment buffers (momentum / Adam `m`), aligned with the parameters.
    pub fn first_moments(&self) -> &[Vec<T>] {
        &self.m
    }

    pub fn second_moments(&self) -> &[Vec<T>] {
        &self.v
    }

    /// Close an epoch: advance the counter and update the learning rate.
    /// `monitored` is the loss watched by the plateau schedule.
    pub fn end_epoch(&mut self, monitored: f64) {
        self.epoch += 1;
        self.batch = 0;
        match self.spec.schedule {
            Schedule::StepLR { .. } => self.lr = self.spec.step_lr(self.epoch),
            Schedule::Plateau { factor, patience } => {
                if monitored < self.best * (1.0 - 1e-4) {
                    self.best = monitored;
                    self.stale_epochs = 0;
                } else {
                    self.stale_epochs += 1;
                    if self.stale_epochs > patience {
                        self.lr *= factor;
                        self.stale_epochs = 0;
                    }
                }
            }
        }
    }
}

/// Apply one update. Non-finite gradients abort without touching parameters.
pub fn optimizer_step<T: Scalar>(
    state: &mut TrainState<T>,
    params: &mut [Param<T>],
    grads: &Grads<T>,
) -> Result<(), NnError> {
    if grads.len() != params.len() || grads.iter().zip(params.iter()).any(|(g, p)| g.shape != p.value.shape) {
        return Err(NnError::State("gradient shapes do not match parameters".into()));
    }
    if !grads.iter().all(|g| g.all_finite()) {
        return Err(NnError::NonFinite { what: "gradient", epoch: state.epoch, batch: state.batch });
    }
    state.steps += 1;
    state.batch += 1;
    let lr = T::lit(state.lr);
    match state.spec.kind {
        OptimizerKind::Sgd => {
            for (p, g) in params.iter_mut().zip(grads) {
                for (w, d) in p.value.data.iter_mut().zip(&g.data) {
                    *w -= lr * *d;
                }
            }
        }
        OptimizerKind::SgdMomentum => {
            let mu = T::lit(state.spec.momentum);
            for ((p, g), m) in params.iter_mut().zip(grads).zip(&mut state.m) {
                for ((w, d), b) in p.value.data.iter_mut().zip(&g.data).zip(m.iter_mut()) {
                    *b = mu * *b + *d;
                    *w -= lr * *b;
                }
            }
        }
        OptimizerKind::Adam => {
            let t = state.steps as i32;
            let c1 = T::lit(1.0 - ADAM_BETA1.powi(t));
            let c2 = T::lit(1.0 - ADAM_BETA2.powi(t));
            let (b1, b2, eps) = (T::lit(ADAM_BETA1), T::lit(ADAM_BETA2), T::lit(ADAM_EPS));
            let one = T::one();
            for (((p, g), m), v) in params.iter_mut().zip(grads).zip(&mut state.m).zip(&mut state.v) {
                for (((w, d), mi), vi) in p.value.data.iter_mut().zip(&g.data).zip(m.iter_mut()).zip(v.iter_mut()) {
                    *mi = b1 * *mi + (one - b1) * *d;
                    *vi = b2 * *vi + (one - b2) * *d * *d;
                    let mh = *mi / c1;
                    let vh = *vi / c2;
                    *w -= lr * mh / (vh.sqrt() + eps);
                }
            }
        }
    }
    let finite = params.iter().all(|p| p.value.all_finite());
    if !finite {
        return Err(NnError::NonFinite { what: "parameter", epoch: state.epoch, batch: state.batch - 1 });
    }
    Ok(())
}
