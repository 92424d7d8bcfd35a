//! Keystroke dynamics image: a 5×42×42 transition tensor.
//!
//! Channel `c` at `[i, j]` holds the mean of timing feature `c` over every
//! occurrence of key `i` immediately followed by key `j` in the window.
//! The duration channel is diagonal: `[k, k]` is the mean hold time of key `k`.

use serde::{Deserialize, Serialize};

use super::timing::timing_features;
use super::window::Subsequence;
use super::Normalization;
use crate::ingest::NUM_KEYS;

pub const KDI_CHANNELS: usize = 5;
pub const KDI_LEN: usize = KDI_CHANNELS * NUM_KEYS * NUM_KEYS;

/// Channel order of the image.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum KdiChannel {
    UpDown = 0,
    DownDown = 1,
    DownUp = 2,
    UpUp = 3,
    Duration = 4,
}

impl KdiChannel {
    pub const ALL: [KdiChannel; KDI_CHANNELS] =
        [KdiChannel::UpDown, KdiChannel::DownDown, KdiChannel::DownUp, KdiChannel::UpUp, KdiChannel::Duration];

    pub fn name(self) -> &'static str {
        match self {
            KdiChannel::UpDown => "UD",
            KdiChannel::DownDown => "DD",
            KdiChannel::DownUp => "DU",
            KdiChannel::UpUp => "UU",
            KdiChannel::Duration => "duration",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Kdi {
    /// Row-major `[channel][row][col]`, length [`KDI_LEN`].
    pub data: Vec<f64>,
}

impl Kdi {
    pub fn zeros() -> Self {
        Kdi { data: vec![0.0; KDI_LEN] }
    }

    pub const fn shape() -> [usize; 3] {
        [KDI_CHANNELS, NUM_KEYS, NUM_KEYS]
    }

    #[inline]
    pub fn index(channel: usize, row: usize, col: usize) -> usize {
        (channel * NUM_KEYS + row) * NUM_KEYS + col
    }

    pub fn get(&self, channel: KdiChannel, row: usize, col: usize) -> f64 {
        self.data[Self::index(channel as usize, row, col)]
    }
}

/// Build the image of one window.
pub fn build_kdi(sub: &Subsequence, norm: &Normalization) -> Kdi {
    let mut sums = vec![0.0f64; KDI_LEN];
    let mut pair_counts = vec![0u32; NUM_KEYS * NUM_KEYS];
    let mut key_counts = [0u32; NUM_KEYS];

    for k in &sub.keystrokes {
        let i = k.key.as_usize();
        sums[Kdi::index(KdiChannel::Duration as usize, i, i)] += k.duration_ms() as f64;
        key_counts[i] += 1;
    }
    for w in sub.keystrokes.windows(2) {
        let (i, j) = (w[0].key.as_usize(), w[1].key.as_usize());
        let t = timing_features(&w[0], &w[1]);
        pair_counts[i * NUM_KEYS + j] += 1;
        sums[Kdi::index(KdiChannel::UpDown as usize, i, j)] += t.ud as f64;
        sums[Kdi::index(KdiChannel::DownDown as usize, i, j)] += t.dd as f64;
        sums[Kdi::index(KdiChannel::DownUp as usize, i, j)] += t.du as f64;
        sums[Kdi::index(KdiChannel::UpUp as usize, i, j)] += t.uu as f64;
    }

    for c in 0..4 {
        for (p, &n) in pair_counts.iter().enumerate() {
            if n > 0 {
                let idx = c * NUM_KEYS * NUM_KEYS + p;
                sums[idx] = norm.apply(sums[idx] / n as f64);
            }
        }
    }
    for (k, &n) in key_counts.iter().enumerate() {
        if n > 0 {
            let idx = Kdi::index(KdiChannel::Duration as usize, k, k);
            sums[idx] = norm.apply(sums[idx] / n as f64);
        }
    }
    Kdi { data: sums }
}
