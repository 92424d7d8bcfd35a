//! Binary cross-entropy on a sigmoid probability.

/// Probabilities are clamped to `[PROB_CLAMP, 1 - PROB_CLAMP]`.
pub const PROB_CLAMP: f64 = 1e-7;

fn clamp(p: f64) -> f64 {
    p.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP)
}

pub fn bce_loss(p: f64, y: f64) -> f64 {
    let p = clamp(p);
    -(y * p.ln() + (1.0 - y) * (1.0 - p).ln())
}

/// `d loss / d p` with the same clamping.
pub fn bce_grad(p: f64, y: f64) -> f64 {
    let p = clamp(p);
    (p - y) / (p * (1.0 - p))
}

/// `d loss / d logit` when `p = sigmoid(logit)`; stays informative when the
/// sigmoid saturates.
pub fn bce_logit_grad(p: f64, y: f64) -> f64 {
    p - y
}
