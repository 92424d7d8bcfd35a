use std::collections::BTreeMap;

use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::rng::{rng_for, str_tag};

/// One sample of a labeled set: the `index`-th sample of `user`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleRef {
    pub user: String,
    pub index: usize,
    pub label: u8,
}

/// Positives are every sample of `user_id`; negatives reference other users,
/// so each negative's source user is recorded in its [`SampleRef`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledSet {
    pub user_id: String,
    pub samples: Vec<SampleRef>,
}

impl LabeledSet {
    pub fn labels(&self) -> Vec<u8> {
        self.samples.iter().map(|s| s.label).collect()
    }

    pub fn positives(&self) -> usize {
        self.samples.iter().filter(|s| s.label == 1).count()
    }

    /// Negative count drawn from each other user.
    pub fn provenance(&self) -> BTreeMap<String, usize> {
        let mut out = BTreeMap::new();
        for s in self.samples.iter().filter(|s| s.label == 0) {
            *out.entry(s.user.clone()).or_insert(0) += 1;
        }
        out
    }
}

/// Split `n` across `weights` proportionally, largest remainder first
/// (ties to the earlier entry).
pub(crate) fn largest_remainder(n: usize, weights: &[usize]) -> Vec<usize> {
    let total: usize = weights.iter().sum();
    if total == 0 {
        return vec![0; weights.len()];
    }
    let mut out: Vec<usize> = weights.iter().map(|w| n * w / total).collect();
    let mut rems: Vec<(usize, usize)> = weights.iter().enumerate().map(|(i, w)| ((n * w) % total, i)).collect();
    rems.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    let short = n - out.iter().sum::<usize>();
    for &(_, i) in rems.iter().take(short) {
        out[i] += 1;
    }
    out
}

/// Build `user`'s binary set from per-user sample counts: all of the user's
/// samples as positives and as many negatives, allocated across the other users
/// in proportion to their sample counts and drawn uniformly without replacement.
pub fn assemble(user: &str, counts: &BTreeMap<String, usize>, seed: u64) -> Result<LabeledSet, EvalError> {
    let n = *counts.get(user).ok_or_else(|| EvalError::UnknownUser(user.to_string()))?;
    if n < 2 {
        return Err(EvalError::TooFewSamples { user: user.to_string(), have: n, need: 2 });
    }
    let others: Vec<(&String, usize)> =
        counts.iter().filter(|(u, _)| u.as_str() != user).map(|(u, c)| (u, *c)).collect();
    if others.is_empty() {
        return Err(EvalError::NoOtherUsers(user.to_string()));
    }
    let available: usize = others.iter().map(|(_, c)| c).sum();
    if available < n {
        return Err(EvalError::Shortage { user: user.to_string(), needed: n, available });
    }
    let quotas = largest_remainder(n, &others.iter().map(|(_, c)| *c).collect::<Vec<_>>());
    let mut rng = rng_for(seed, str_tag(user));
    let mut samples: Vec<SampleRef> =
        (0..n).map(|index| SampleRef { user: user.to_string(), index, label: 1 }).collect();
    for ((other, count), q) in others.into_iter().zip(quotas) {
        let mut picked = sample(&mut rng, count, q).into_vec();
        picked.sort_unstable();
        samples.extend(picked.into_iter().map(|index| SampleRef { user: other.clone(), index, label: 0 }));
    }
    Ok(LabeledSet { user_id: user.to_string(), samples })
}
