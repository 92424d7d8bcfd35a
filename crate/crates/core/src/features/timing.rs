use serde::{Deserialize, Serialize};

use crate::ingest::Keystroke;

/// The six timing features of two consecutive keystrokes A then B, in ms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimingPair {
    pub duration_a: i64,
    pub duration_b: i64,
    pub dd: i64,
    pub ud: i64,
    pub uu: i64,
    pub du: i64,
}

/// Timing features of `a` followed by `b`. `ud` is negative on rollover.
pub fn timing_features(a: &Keystroke, b: &Keystroke) -> TimingPair {
    let (ap, ar) = (a.press_ms as i64, a.release_ms as i64);
    let (bp, br) = (b.press_ms as i64, b.release_ms as i64);
    TimingPair { duration_a: ar - ap, duration_b: br - bp, dd: bp - ap, ud: bp - ar, uu: br - ar, du: br - ap }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::KeyIndex;

    fn ks(key: u8, p: u64, r: u64) -> Keystroke {
        Keystroke::new(KeyIndex::new(key).unwrap(), p, r)
    }

    #[test]
    fn figure_example() {
        let t = timing_features(&ks(0, 0, 100), &ks(1, 150, 260));
        assert_eq!(t, TimingPair { duration_a: 100, duration_b: 110, dd: 150, ud: 50, uu: 160, du: 260 });
    }

    #[test]
    fn rollover_gives_negative_ud() {
        assert_eq!(timing_features(&ks(0, 0, 100), &ks(1, 50, 150)).ud, -50);
    }

    #[test]
    fn self_pair() {
        let a = ks(0, 0, 100);
        let t = timing_features(&a, &a);
        assert_eq!((t.dd, t.ud, t.uu, t.du), (0, -100, 0, 100));
    }
}
