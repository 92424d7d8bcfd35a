use serde::{Deserialize, Serialize};

use super::EvalError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub threshold: f64,
    pub fpr: f64,
    pub fnr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub accuracy: f64,
    pub eer: f64,
    pub eer_threshold: f64,
    pub roc: Vec<RocPoint>,
}

impl Metrics {
    pub fn compute(scores: &[f64], labels: &[u8]) -> Result<Self, EvalError> {
        let (eer, eer_threshold) = eer(scores, labels)?;
        Ok(Metrics { accuracy: accuracy(scores, labels, 0.5), eer, eer_threshold, roc: roc(scores, labels)? })
    }
}

/// Fraction of correct decisions; `score >= threshold` predicts positive.
pub fn accuracy(scores: &[f64], labels: &[u8], threshold: f64) -> f64 {
    assert_eq!(scores.len(), labels.len());
    if scores.is_empty() {
        return 0.0;
    }
    let correct = scores.iter().zip(labels).filter(|(s, l)| (**s >= threshold) == (**l == 1)).count();
    correct as f64 / scores.len() as f64
}

/// Error rates at the sweep thresholds, in rising threshold order: the lowest
/// score, every midpoint between consecutive distinct scores, and one point
/// above the highest score.
pub fn roc(scores: &[f64], labels: &[u8]) -> Result<Vec<RocPoint>, EvalError> {
    assert_eq!(scores.len(), labels.len());
    let pos = labels.iter().filter(|l| **l == 1).count();
    let neg = labels.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(EvalError::SingleClass);
    }
    let mut pairs: Vec<(f64, u8)> = scores.iter().copied().zip(labels.iter().copied()).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    // walking upward, everything strictly below the threshold is rejected
    let mut out = Vec::new();
    let (mut neg_below, mut pos_below) = (0usize, 0usize);
    let point = |t: f64, nb: usize, pb: usize| RocPoint {
        threshold: t,
        fpr: (neg - nb) as f64 / neg as f64,
        fnr: pb as f64 / pos as f64,
    };
    out.push(point(pairs[0].0, 0, 0));
    let mut i = 0;
    while i < pairs.len() {
        let s = pairs[i].0;
        while i < pairs.len() && pairs[i].0 == s {
            if pairs[i].1 == 1 {
                pos_below += 1;
            } else {
                neg_below += 1;
            }
            i += 1;
        }
        let t = match pairs.get(i) {
            Some(next) => 0.5 * (s + next.0),
            None => s + 1e-6 * s.abs().max(1.0),
        };
        out.push(point(t, neg_below, pos_below));
    }
    Ok(out)
}

/// Equal error rate and its threshold: the first sweep step where FPR drops to
/// or below FNR, linearly interpolated between the bracketing thresholds.
pub fn eer(scores: &[f64], labels: &[u8]) -> Result<(f64, f64), EvalError> {
    let pts = roc(scores, labels)?;
    Ok(crossing(&pts))
}

pub(crate) fn crossing(pts: &[RocPoint]) -> (f64, f64) {
    let d = |p: &RocPoint| p.fpr - p.fnr;
    let i = pts.iter().position(|p| d(p) <= 0.0).expect("sweep ends with FPR 0, FNR 1");
    if i == 0 || d(&pts[i]) == 0.0 {
        return (pts[i].fpr, pts[i].threshold);
    }
    let (a, b) = (&pts[i - 1], &pts[i]);
    let alpha = d(a) / (d(a) - d(b));
    (a.fpr + alpha * (b.fpr - a.fpr), a.threshold + alpha * (b.threshold - a.threshold))
}
