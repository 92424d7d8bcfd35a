//! Brute-force oracles and random fixtures shared by the integration tests.
#![allow(dead_code)]

use keydyn::features::{Kdi, Subsequence, KDI_CHANNELS};
use keydyn::ingest::{KeyIndex, Keystroke, UserStream, NUM_KEYS};
use rand::Rng;

/// A random, time-ordered window. Keys come from a small pool so pairs repeat;
/// holds and gaps occasionally exceed the clip and gaps may be negative (rollover).
pub fn random_window<R: Rng>(rng: &mut R, len: usize) -> Subsequence {
    let pool: Vec<u8> = (0..rng.random_range(3..12)).map(|_| rng.random_range(0..NUM_KEYS as u8)).collect();
    let mut t = rng.random_range(0..10_000u64);
    let mut keystrokes = Vec::with_capacity(len);
    for _ in 0..len {
        let hold = if rng.random_bool(0.02) { rng.random_range(5000..9000) } else { rng.random_range(0..300) };
        let key = KeyIndex::new(pool[rng.random_range(0..pool.len())]).unwrap();
        keystrokes.push(Keystroke::new(key, t, t + hold));
        t += if rng.random_bool(0.02) { rng.random_range(5000..12_000) } else { rng.random_range(0..400) };
    }
    Subsequence { user_id: "u".into(), keystrokes }
}

pub fn random_stream<R: Rng>(rng: &mut R, user: &str, len: usize) -> UserStream {
    let sub = random_window(rng, len);
    UserStream { user_id: user.to_string(), keystrokes: sub.keystrokes }
}

fn clip(ms: f64, clip_ms: f64) -> f64 {
    ms.clamp(-clip_ms, clip_ms) / clip_ms
}

/// Keystroke image by enumeration: for every cell scan all consecutive pairs
/// (or all keystrokes, for the duration diagonal) and average the matches.
pub fn kdi_oracle(sub: &Subsequence, clip_ms: f64) -> Vec<f64> {
    let n = NUM_KEYS;
    let mut out = vec![0.0; KDI_CHANNELS * n * n];
    let ks = &sub.keystrokes;
    for i in 0..n {
        for j in 0..n {
            let mut vals: [Vec<f64>; 4] = Default::default();
            for p in 1..ks.len() {
                let (a, b) = (&ks[p - 1], &ks[p]);
                if a.key.as_usize() != i || b.key.as_usize() != j {
                    continue;
                }
                let (ap, ar, bp, br) = (a.press_ms as f64, a.release_ms as f64, b.press_ms as f64, b.release_ms as f64);
                // channel order UD, DD, DU, UU
                vals[0].push(bp - ar);
                vals[1].push(bp - ap);
                vals[2].push(br - ap);
                vals[3].push(br - ar);
            }
            for (c, v) in vals.iter().enumerate() {
                if !v.is_empty() {
                    out[Kdi::index(c, i, j)] = clip(v.iter().sum::<f64>() / v.len() as f64, clip_ms);
                }
            }
        }
        let holds: Vec<f64> =
            ks.iter().filter(|k| k.key.as_usize() == i).map(|k| k.release_ms as f64 - k.press_ms as f64).collect();
        if !holds.is_empty() {
            out[Kdi::index(4, i, i)] = clip(holds.iter().sum::<f64>() / holds.len() as f64, clip_ms);
        }
    }
    out
}

/// Equal error rate from a uniform threshold grid over `[lo, hi]`.
///
/// Each grid threshold gives a (FPR, FNR) state with `score >= t` accepted.
/// Walking upward, the first state with FPR <= FNR and the distinct state
/// before it are interpolated linearly in FPR - FNR. The grid must be finer
/// than the gap between distinct scores for every state to be visited.
pub fn eer_oracle(scores: &[f64], labels: &[u8], lo: f64, hi: f64, points: usize) -> f64 {
    let pos = labels.iter().filter(|l| **l == 1).count() as f64;
    let neg = labels.len() as f64 - pos;
    let mut prev: Option<(f64, f64)> = None;
    for k in 0..points {
        let t = lo + (hi - lo) * k as f64 / (points - 1) as f64;
        let mut fp = 0.0;
        let mut fn_ = 0.0;
        for (s, l) in scores.iter().zip(labels) {
            match (*s >= t, *l == 1) {
                (true, false) => fp += 1.0,
                (false, true) => fn_ += 1.0,
                _ => {}
            }
        }
        let cur = (fp / neg, fn_ / pos);
        if prev == Some(cur) {
            continue;
        }
        if cur.0 - cur.1 <= 0.0 {
            return match prev {
                Some(a) if cur.0 != cur.1 => {
                    let (da, db) = (a.0 - a.1, cur.0 - cur.1);
                    a.0 + da / (da - db) * (cur.0 - a.0)
                }
                _ => cur.0,
            };
        }
        prev = Some(cur);
    }
    panic!("grid must extend above the highest score")
}

/// Random score set with both classes, quantised to `(j + 0.5) / 1000`.
pub fn random_scores<R: Rng>(rng: &mut R) -> (Vec<f64>, Vec<u8>) {
    let n = rng.random_range(4..200);
    let shift: f64 = rng.random_range(0.0..0.4);
    let mut labels: Vec<u8> = (0..n).map(|_| rng.random_range(0..2)).collect();
    labels[0] = 0;
    labels[1] = 1;
    let scores = labels
        .iter()
        .map(|l| {
            let raw: f64 = rng.random_range(0.0..0.8) + if *l == 1 { shift } else { 0.0 };
            ((raw.min(0.999) * 1000.0).floor() + 0.5) / 1000.0
        })
        .collect();
    (scores, labels)
}
