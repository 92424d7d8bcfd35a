//! Keystroke dynamics sequence: one row per keystroke.
//!
//! Row `i` is `[encode(key_i) | duration_i, dd, ud, uu, du, duration_{i-1}]`
//! where the pair timings describe keystroke `i-1` followed by `i`. Row 0 has
//! no predecessor, so its last five columns are zero.

use serde::{Deserialize, Serialize};

use super::timing::timing_features;
use super::window::Subsequence;
use super::Normalization;
use crate::ingest::NUM_KEYS;

pub const TIMING_COLUMNS: usize = 6;
pub const TIMING_COLUMN_NAMES: [&str; TIMING_COLUMNS] = ["duration", "dd", "ud", "uu", "du", "duration_prev"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KeyEncoding {
    /// A single column `key_index / 41`.
    Index,
    /// 42 indicator columns.
    OneHot,
}

impl KeyEncoding {
    pub fn key_columns(self) -> usize {
        match self {
            KeyEncoding::Index => 1,
            KeyEncoding::OneHot => NUM_KEYS,
        }
    }

    pub fn width(self) -> usize {
        self.key_columns() + TIMING_COLUMNS
    }

    pub fn name(self) -> &'static str {
        match self {
            KeyEncoding::Index => "index",
            KeyEncoding::OneHot => "onehot",
        }
    }
}

impl std::str::FromStr for KeyEncoding {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "index" => Ok(KeyEncoding::Index),
            "onehot" => Ok(KeyEncoding::OneHot),
            other => Err(format!("unknown encoding `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Kds {
    pub rows: usize,
    pub width: usize,
    pub encoding: KeyEncoding,
    /// Row-major, `rows * width`.
    pub data: Vec<f64>,
}

impl Kds {
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.width..(i + 1) * self.width]
    }

    pub fn shape(&self) -> [usize; 2] {
        [self.rows, self.width]
    }
}

pub fn build_kds(sub: &Subsequence, encoding: KeyEncoding, norm: &Normalization) -> Kds {
    let width = encoding.width();
    let kc = encoding.key_columns();
    let rows = sub.keystrokes.len();
    let mut data = vec![0.0; rows * width];
    for (i, k) in sub.keystrokes.iter().enumerate() {
        let row = &mut data[i * width..(i + 1) * width];
        match encoding {
            KeyEncoding::Index => row[0] = k.key.get() as f64 / (NUM_KEYS - 1) as f64,
            KeyEncoding::OneHot => row[k.key.as_usize()] = 1.0,
        }
        row[kc] = norm.apply(k.duration_ms() as f64);
        if i > 0 {
            let t = timing_features(&sub.keystrokes[i - 1], k);
            row[kc + 1] = norm.apply(t.dd as f64);
            row[kc + 2] = norm.apply(t.ud as f64);
            row[kc + 3] = norm.apply(t.uu as f64);
            row[kc + 4] = norm.apply(t.du as f64);
            row[kc + 5] = norm.apply(t.duration_a as f64);
        }
    }
    Kds { rows, width, encoding, data }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{KeyIndex, Keystroke};

    fn sub(n: usize) -> Subsequence {
        Subsequence {
            user_id: "u".into(),
            keystrokes: (0..n as u64)
                .map(|i| Keystroke::new(KeyIndex::new((i % 42) as u8).unwrap(), i * 120, i * 120 + 95))
                .collect(),
        }
    }

    #[test]
    fn widths() {
        let n = Normalization::default();
        assert_eq!(build_kds(&sub(100), KeyEncoding::OneHot, &n).shape(), [100, 48]);
        assert_eq!(build_kds(&sub(100), KeyEncoding::Index, &n).shape(), [100, 7]);
    }

    #[test]
    fn one_hot_row() {
        let k = build_kds(&sub(10), KeyEncoding::OneHot, &Normalization::default());
        let r0 = k.row(0);
        assert_eq!(r0[0], 1.0);
        assert_eq!(r0[..42].iter().sum::<f64>(), 1.0);
        assert_eq!(k.row(3)[3], 1.0);
    }

    #[test]
    fn first_row_has_no_pair_timings() {
        let k = build_kds(&sub(10), KeyEncoding::Index, &Normalization::default());
        assert_eq!(&k.row(0)[2..], &[0.0; 5]);
        assert!((k.row(0)[1] - 95.0 / 5000.0).abs() < 1e-15);
    }

    #[test]
    fn pair_columns() {
        let k = build_kds(&sub(3), KeyEncoding::Index, &Normalization::default());
        let r = k.row(1);
        assert!((r[0] - 1.0 / 41.0).abs() < 1e-15);
        let expect = [95.0, 120.0, 25.0, 120.0, 215.0, 95.0].map(|v| v / 5000.0);
        for (a, b) in r[1..].iter().zip(expect) {
            assert!((a - b).abs() < 1e-15);
        }
    }
}
