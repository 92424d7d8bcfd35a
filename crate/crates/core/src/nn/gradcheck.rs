//! Central finite-difference verification of analytic gradients.

use rand::seq::index::sample;

use super::network::Network;
use super::tensor::Tensor;
use super::NnError;
use crate::rng::rng_for;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheckOptions {
    pub epsilon: f64,
    pub tolerance: f64,
    /// Lower bound on the relative-error denominator, so gradients near zero
    /// are compared absolutely.
    pub floor: f64,
    /// Check at most this many entries per parameter tensor (seeded sample).
    pub per_tensor: Option<usize>,
    /// Also verify the gradient w.r.t. the input.
    pub check_input: bool,
    /// Seed for dropout masks and entry sampling.
    pub seed: u64,
}

impl Default for GradCheckOptions {
    fn default() -> Self {
        GradCheckOptions { epsilon: 1e-3, tolerance: 1e-4, floor: 1e-6, per_tensor: None, check_input: true, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    pub checked: usize,
    /// Location of the largest error, e.g. `"3.weight[17]"` or `"input[2]"`.
    pub worst: String,
    /// Entries over tolerance whose perturbation also flipped a ReLU sign or
    /// pool winner; the difference quotient is meaningless there, so they are skipped.
    pub skipped_kinks: usize,
    pub pass: bool,
}

/// Loss used for checking, `0.5 * sum((out - y)^2)`, and the activation pattern digest.
fn loss(net: &Network<f64>, x: &Tensor<f64>, y: &Tensor<f64>, seed: u64) -> Result<(f64, u64), NnError> {
    let (out, cache) = net.forward(x, true, seed)?;
    Ok((out.data.iter().zip(&y.data).map(|(o, t)| 0.5 * (o - t) * (o - t)).sum(), cache.pattern_digest()))
}

fn picks(len: usize, per: Option<usize>, rng: &mut impl rand::Rng) -> Vec<usize> {
    match per {
        Some(k) if k < len => {
            let mut v = sample(rng, len, k).into_vec();
            v.sort_unstable();
            v
        }
        _ => (0..len).collect(),
    }
}

pub fn grad_check(
    net: &Network<f64>,
    x: &Tensor<f64>,
    y: &Tensor<f64>,
    opts: &GradCheckOptions,
) -> Result<GradCheckReport, NnError> {
    if y.shape != net.output_shape() {
        return Err(NnError::Config(format!("target shape {:?} != output {:?}", y.shape, net.output_shape())));
    }
    let (out, cache) = net.forward(x, true, opts.seed)?;
    let g: Vec<f64> = out.data.iter().zip(&y.data).map(|(o, t)| o - t).collect();
    let mut grads = net.zero_grads();
    let dx = net.backprop(&cache, net.layers.len(), &g, &mut grads, opts.check_input)?;
    let pattern = cache.pattern_digest();

    let mut rng = rng_for(opts.seed, 0x9c);
    let eps = opts.epsilon;
    let mut report =
        GradCheckReport { max_rel_error: 0.0, checked: 0, worst: String::new(), skipped_kinks: 0, pass: true };
    let mut record = |analytic: f64, (up, pu): (f64, u64), (down, pd): (f64, u64), at: String| {
        let numeric = (up - down) / (2.0 * eps);
        let err = (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(opts.floor);
        if err >= opts.tolerance && (pu != pattern || pd != pattern) {
            report.skipped_kinks += 1;
            return;
        }
        report.checked += 1;
        if err > report.max_rel_error || report.worst.is_empty() {
            report.max_rel_error = err;
            report.worst = at;
        }
    };

    let mut probe = net.clone();
    for (pi, (param, grad)) in net.params.iter().zip(grads.iter()).enumerate() {
        for k in picks(param.value.len(), opts.per_tensor, &mut rng) {
            let orig = param.value.data[k];
            probe.params_mut()[pi].value.data[k] = orig + eps;
            let up = loss(&probe, x, y, opts.seed)?;
            probe.params_mut()[pi].value.data[k] = orig - eps;
            let down = loss(&probe, x, y, opts.seed)?;
            probe.params_mut()[pi].value.data[k] = orig;
            record(grad.data[k], up, down, format!("{}[{k}]", param.name));
        }
    }
    if let Some(dx) = dx {
        let mut xp = x.clone();
        for k in picks(x.len(), opts.per_tensor, &mut rng) {
            let orig = x.data[k];
            xp.data[k] = orig + eps;
            let up = loss(net, &xp, y, opts.seed)?;
            xp.data[k] = orig - eps;
            let down = loss(net, &xp, y, opts.seed)?;
            xp.data[k] = orig;
            record(dx[k], up, down, format!("input[{k}]"));
        }
    }
    report.pass = report.max_rel_error < opts.tolerance;
    Ok(report)
}
