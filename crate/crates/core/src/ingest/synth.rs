//! Seeded synthetic typing data.
//!
//! Each user gets a hold-time profile per key and a down-down gap profile per
//! digraph, both drawn once from the seed. Key sequences follow a fixed
//! English-like unigram distribution over the tracked alphabet.

use std::collections::HashSet;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use rand_distr::Normal;

use super::alphabet::{KeyIndex, NUM_KEYS};
use super::parse::{Action, KeyEvent};
use super::IngestError;
use crate::rng::rng_for;

/// Relative frequency per key index (a–z, 0–9, space, backspace, lshift, rshift, tab, capslock).
const KEY_WEIGHTS: [f64; NUM_KEYS] = [
    8.2, 1.5, 2.8, 4.3, 12.7, 2.2, 2.0, 6.1, 7.0, 0.15, 0.8, 4.0, 2.4, // a-m
    6.7, 7.5, 1.9, 0.1, 6.0, 6.3, 9.1, 2.8, 1.0, 2.4, 0.15, 2.0, 0.07, // n-z
    0.4, 0.4, 0.3, 0.3, 0.2, 0.2, 0.2, 0.2, 0.2, 0.2, // 0-9
    24.0, 4.0, 2.0, 1.0, 0.3, 0.1,
];

#[derive(Debug, Clone)]
pub struct TypingProfile {
    pub hold_mean: [f64; NUM_KEYS],
    pub hold_std: [f64; NUM_KEYS],
    /// Row-major `[prev * NUM_KEYS + next]`.
    pub gap_mean: Vec<f64>,
    pub gap_std: Vec<f64>,
}

impl TypingProfile {
    fn draw<R: Rng>(rng: &mut R) -> Self {
        let hold_base: f64 = rng.random_range(70.0..150.0);
        let hold_jitter = rng.random_range(8.0..25.0);
        let gap_base: f64 = rng.random_range(110.0..260.0);
        let gap_spread = rng.random_range(0.15..0.35);
        let key_offset = Normal::new(0.0, 20.0).unwrap();
        let pair_offset = Normal::new(0.0, 45.0).unwrap();

        let mut hold_mean = [0.0; NUM_KEYS];
        let mut hold_std = [0.0; NUM_KEYS];
        for k in 0..NUM_KEYS {
            hold_mean[k] = f64::max(hold_base + key_offset.sample(rng), 25.0);
            hold_std[k] = hold_jitter * rng.random_range(0.8..1.2);
        }
        let mut gap_mean = Vec::with_capacity(NUM_KEYS * NUM_KEYS);
        let mut gap_std = Vec::with_capacity(NUM_KEYS * NUM_KEYS);
        for _ in 0..NUM_KEYS * NUM_KEYS {
            let m: f64 = (gap_base + pair_offset.sample(rng)).max(40.0);
            gap_mean.push(m);
            gap_std.push(m * gap_spread);
        }
        TypingProfile { hold_mean, hold_std, gap_mean, gap_std }
    }

    pub fn mean_hold(&self) -> f64 {
        self.hold_mean.iter().sum::<f64>() / NUM_KEYS as f64
    }
}

pub fn user_label(index: usize) -> String {
    format!("user{index:02}")
}

/// Per-user profiles that [`synthesize`] would use for this seed.
pub fn profiles(seed: u64, n_users: usize) -> Vec<TypingProfile> {
    let mut rng = rng_for(seed, 0);
    (0..n_users).map(|_| TypingProfile::draw(&mut rng)).collect()
}

/// Generate `n_keystrokes` keystrokes for each of `n_users` users as canonical
/// events, user by user, each user's events in strictly increasing time.
pub fn synthesize(seed: u64, n_users: usize, n_keystrokes: usize) -> Result<Vec<KeyEvent>, IngestError> {
    if n_users < 1 {
        return Err(IngestError::InvalidArgument("n_users must be at least 1".into()));
    }
    if n_keystrokes < 2 {
        return Err(IngestError::InvalidArgument("n_keystrokes must be at least 2".into()));
    }
    let keys = WeightedIndex::new(KEY_WEIGHTS).expect("static weights");
    let labels: Vec<String> = (0..NUM_KEYS as u8).map(|i| KeyIndex::new(i).unwrap().canonical_label()).collect();
    let mut events = Vec::with_capacity(n_users * n_keystrokes * 2);
    for (u, profile) in profiles(seed, n_users).iter().enumerate() {
        let user = user_label(u);
        let mut rng = rng_for(seed, 1 + u as u64);
        let mut used = HashSet::with_capacity(n_keystrokes * 2);
        let mut last_release = [None::<u64>; NUM_KEYS];
        let mut strokes: Vec<(usize, u64, u64)> = Vec::with_capacity(n_keystrokes);
        let mut prev: Option<(usize, u64)> = None;
        for _ in 0..n_keystrokes {
            let key = keys.sample(&mut rng);
            let mut press = match prev {
                None => 1_000,
                Some((pk, pt)) => {
                    let idx = pk * NUM_KEYS + key;
                    let gap = Normal::new(profile.gap_mean[idx], profile.gap_std[idx]).unwrap().sample(&mut rng);
                    pt + gap.round().max(15.0) as u64
                }
            };
            if let Some(r) = last_release[key] {
                press = press.max(r + 1);
            }
            while used.contains(&press) {
                press += 1;
            }
            used.insert(press);
            let hold = Normal::new(profile.hold_mean[key], profile.hold_std[key]).unwrap().sample(&mut rng);
            let mut release = press + hold.round().max(10.0) as u64;
            while used.contains(&release) {
                release += 1;
            }
            used.insert(release);
            last_release[key] = Some(release);
            strokes.push((key, press, release));
            prev = Some((key, press));
        }
        let mut user_events: Vec<KeyEvent> = strokes
            .iter()
            .flat_map(|&(k, p, r)| {
                [
                    KeyEvent::new(user.clone(), labels[k].clone(), Action::Down, p),
                    KeyEvent::new(user.clone(), labels[k].clone(), Action::Up, r),
                ]
            })
            .collect();
        user_events.sort_by_key(|e| e.timestamp_ms);
        events.extend(user_events);
    }
    Ok(events)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{pair_events, write_canonical};

    #[test]
    fn deterministic_bytes() {
        let mut a = Vec::new();
        let mut b = Vec::new();
        write_canonical(&mut a, &synthesize(3, 2, 300).unwrap()).unwrap();
        write_canonical(&mut b, &synthesize(3, 2, 300).unwrap()).unwrap();
        assert_eq!(a, b);
        let mut c = Vec::new();
        write_canonical(&mut c, &synthesize(4, 2, 300).unwrap()).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn event_count() {
        assert_eq!(synthesize(1, 1, 100).unwrap().len(), 200);
        assert_eq!(synthesize(1, 3, 100).unwrap().len(), 600);
    }

    #[test]
    fn invalid_counts() {
        assert!(synthesize(1, 0, 100).is_err());
        assert!(synthesize(1, 1, 1).is_err());
    }

    #[test]
    fn strictly_increasing_per_user() {
        let events = synthesize(11, 2, 2000).unwrap();
        for user in ["user00", "user01"] {
            let ts: Vec<u64> = events.iter().filter(|e| e.user_id == user).map(|e| e.timestamp_ms).collect();
            assert!(ts.windows(2).all(|w| w[0] < w[1]));
        }
    }

    #[test]
    fn pairs_without_loss() {
        let events = synthesize(5, 2, 1500).unwrap();
        let p = pair_events(&events);
        assert_eq!(p.dropped_downs, 0);
        assert_eq!(p.orphan_ups, 0);
        assert_eq!(p.streams.len(), 2);
        assert!(p.streams.iter().all(|s| s.keystrokes.len() == 1500));
    }

    #[test]
    fn seed7_users_differ_in_mean_hold() {
        let events = synthesize(7, 2, 2000).unwrap();
        let p = pair_events(&events);
        assert_eq!(p.streams.len(), 2);
        assert_ne!(p.streams[0].user_id, p.streams[1].user_id);
        let means: Vec<f64> = p
            .streams
            .iter()
            .map(|s| s.keystrokes.iter().map(|k| k.duration_ms() as f64).sum::<f64>() / s.keystrokes.len() as f64)
            .collect();
        // sample means over 2000 keystrokes; std error is ~1 ms
        assert!((means[0] - means[1]).abs() > 5.0, "{means:?}");
    }
}
