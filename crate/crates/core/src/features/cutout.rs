//! Cutout augmentation: zero one square of the image (all channels) or one
//! contiguous span of sequence rows.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::kdi::{Kdi, KDI_CHANNELS};
use super::kds::Kds;
use super::FeatureError;
use crate::ingest::NUM_KEYS;
use crate::nn::Tensor;
use crate::rng::rng_for;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CutoutSpec {
    pub enabled: bool,
    pub kdi_size: usize,
    pub kds_span: usize,
    pub probability: f64,
    pub rng_seed: u64,
}

impl Default for CutoutSpec {
    fn default() -> Self {
        CutoutSpec { enabled: true, kdi_size: 8, kds_span: 10, probability: 0.5, rng_seed: 0 }
    }
}

impl CutoutSpec {
    pub fn disabled() -> Self {
        CutoutSpec { enabled: false, ..Default::default() }
    }

    /// `rows` is the sequence length the spec will be applied to, if known.
    pub fn validate(&self, rows: Option<usize>) -> Result<(), FeatureError> {
        let bad = |m: String| Err(FeatureError::InvalidCutout(m));
        if !(1..=NUM_KEYS).contains(&self.kdi_size) {
            return bad(format!("kdi_size {} outside 1..={NUM_KEYS}", self.kdi_size));
        }
        if self.kds_span < 1 || rows.is_some_and(|l| self.kds_span > l) {
            return bad(format!("kds_span {} outside 1..=sequence length", self.kds_span));
        }
        if !(0.0..=1.0).contains(&self.probability) {
            return bad(format!("probability {} outside [0, 1]", self.probability));
        }
        Ok(())
    }
}

/// Types that support cutout.
pub trait Cutout: Sized + Clone {
    /// Zero the region anchored at `at` (row, col for images; start row for sequences).
    fn cutout_at(&self, spec: &CutoutSpec, at: (usize, usize)) -> Self;

    /// Pick a placement uniformly over all valid positions.
    fn random_anchor<R: Rng>(&self, spec: &CutoutSpec, rng: &mut R) -> (usize, usize);

    /// With probability `spec.probability`, apply one cutout at a random position.
    fn apply_cutout_with<R: Rng>(&self, spec: &CutoutSpec, rng: &mut R) -> Self {
        if !spec.enabled || spec.probability <= 0.0 {
            return self.clone();
        }
        let hit = rng.random::<f64>() < spec.probability;
        if !hit {
            return self.clone();
        }
        let at = self.random_anchor(spec, rng);
        self.cutout_at(spec, at)
    }

    /// Same as [`Cutout::apply_cutout_with`] using the spec's own seed.
    fn apply_cutout(&self, spec: &CutoutSpec) -> Self {
        let mut rng = rng_for(spec.rng_seed, 0x0c07);
        self.apply_cutout_with(spec, &mut rng)
    }
}

impl Cutout for Kdi {
    fn cutout_at(&self, spec: &CutoutSpec, (row, col): (usize, usize)) -> Self {
        let s = spec.kdi_size.min(NUM_KEYS);
        let row = row.min(NUM_KEYS - s);
        let col = col.min(NUM_KEYS - s);
        let mut out = self.clone();
        for c in 0..KDI_CHANNELS {
            for r in row..row + s {
                let base = Kdi::index(c, r, col);
                out.data[base..base + s].fill(0.0);
            }
        }
        out
    }

    fn random_anchor<R: Rng>(&self, spec: &CutoutSpec, rng: &mut R) -> (usize, usize) {
        let room = NUM_KEYS - spec.kdi_size.min(NUM_KEYS);
        (rng.random_range(0..=room), rng.random_range(0..=room))
    }
}

impl Cutout for Kds {
    fn cutout_at(&self, spec: &CutoutSpec, (start, _): (usize, usize)) -> Self {
        let span = spec.kds_span.min(self.rows);
        let start = start.min(self.rows - span);
        let mut out = self.clone();
        out.data[start * self.width..(start + span) * self.width].fill(0.0);
        out
    }

    fn random_anchor<R: Rng>(&self, spec: &CutoutSpec, rng: &mut R) -> (usize, usize) {
        let room = self.rows - spec.kds_span.min(self.rows);
        (rng.random_range(0..=room), 0)
    }
}

/// Network inputs: `[5, 42, 42]` images get a square, anything else is read as
/// a `[.., rows, width]` sequence and gets a row span.
impl Cutout for Tensor<f32> {
    fn cutout_at(&self, spec: &CutoutSpec, (row, col): (usize, usize)) -> Self {
        let mut out = self.clone();
        if self.shape == Kdi::shape() {
            let s = spec.kdi_size.min(NUM_KEYS);
            let (row, col) = (row.min(NUM_KEYS - s), col.min(NUM_KEYS - s));
            for c in 0..KDI_CHANNELS {
                for r in row..row + s {
                    let base = Kdi::index(c, r, col);
                    out.data[base..base + s].fill(0.0);
                }
            }
        } else {
            let (rows, width) = seq_dims(&self.shape);
            let span = spec.kds_span.min(rows);
            let start = row.min(rows - span);
            out.data[start * width..(start + span) * width].fill(0.0);
        }
        out
    }

    fn random_anchor<R: Rng>(&self, spec: &CutoutSpec, rng: &mut R) -> (usize, usize) {
        if self.shape == Kdi::shape() {
            let room = NUM_KEYS - spec.kdi_size.min(NUM_KEYS);
            (rng.random_range(0..=room), rng.random_range(0..=room))
        } else {
            let rows = seq_dims(&self.shape).0;
            (rng.random_range(0..=rows - spec.kds_span.min(rows)), 0)
        }
    }
}

fn seq_dims(shape: &[usize]) -> (usize, usize) {
    match *shape {
        [.., r, w] => (r, w),
        [r] => (r, 1),
        [] => (0, 0),
    }
}

/// Apply cutout according to `spec`, drawing from its seed.
pub fn apply_cutout<T: Cutout>(x: &T, spec: &CutoutSpec) -> T {
    x.apply_cutout(spec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::kds::KeyEncoding;

    fn filled_kdi() -> Kdi {
        Kdi { data: (0..super::super::kdi::KDI_LEN).map(|i| 0.001 + i as f64 * 1e-5).collect() }
    }

    fn filled_kds(rows: usize) -> Kds {
        let width = 48;
        Kds { rows, width, encoding: KeyEncoding::OneHot, data: (0..rows * width).map(|i| 1.0 + i as f64).collect() }
    }

    #[test]
    fn forced_kdi_cutout_zeroes_320_cells() {
        let x = filled_kdi();
        let spec = CutoutSpec::default();
        let y = x.cutout_at(&spec, (10, 10));
        let changed = x.data.iter().zip(&y.data).filter(|(a, b)| a != b).count();
        assert_eq!(changed, 320);
        for c in 0..5 {
            for r in 0..42 {
                for k in 0..42 {
                    let i = Kdi::index(c, r, k);
                    if (10..18).contains(&r) && (10..18).contains(&k) {
                        assert_eq!(y.data[i], 0.0);
                    } else {
                        assert_eq!(y.data[i].to_bits(), x.data[i].to_bits());
                    }
                }
            }
        }
    }

    #[test]
    fn forced_kds_cutout_zeroes_span_rows() {
        let x = filled_kds(100);
        let y = x.cutout_at(&CutoutSpec::default(), (37, 0));
        let changed = x.data.iter().zip(&y.data).filter(|(a, b)| a != b).count();
        assert_eq!(changed, 10 * 48);
        assert!(y.data[37 * 48..47 * 48].iter().all(|v| *v == 0.0));
    }

    #[test]
    fn zero_probability_is_identity() {
        let spec = CutoutSpec { probability: 0.0, ..Default::default() };
        let x = filled_kdi();
        assert_eq!(apply_cutout(&x, &spec), x);
        let s = filled_kds(20);
        assert_eq!(apply_cutout(&s, &spec), s);
    }

    #[test]
    fn seeded_is_repeatable() {
        let spec = CutoutSpec { probability: 1.0, rng_seed: 42, ..Default::default() };
        let x = filled_kdi();
        let a = apply_cutout(&x, &spec);
        let b = apply_cutout(&x, &spec);
        assert_eq!(a, b);
        assert_ne!(a, x);
    }

    #[test]
    fn placements_cover_the_full_range() {
        let spec = CutoutSpec::default();
        let x = filled_kdi();
        let mut rng = rng_for(1, 2);
        let mut seen_lo = false;
        let mut seen_hi = false;
        for _ in 0..5000 {
            let (r, c) = x.random_anchor(&spec, &mut rng);
            assert!(r <= 34 && c <= 34);
            seen_lo |= r == 0;
            seen_hi |= r == 34;
        }
        assert!(seen_lo && seen_hi);
    }

    #[test]
    fn validation() {
        assert!(CutoutSpec { kdi_size: 0, ..Default::default() }.validate(None).is_err());
        assert!(CutoutSpec { kdi_size: 43, ..Default::default() }.validate(None).is_err());
        assert!(CutoutSpec { kds_span: 101, ..Default::default() }.validate(Some(100)).is_err());
        assert!(CutoutSpec { probability: 1.5, ..Default::default() }.validate(None).is_err());
        assert!(CutoutSpec::default().validate(Some(100)).is_ok());
    }

    #[test]
    fn tensor_cutout_matches_feature_cutout() {
        let spec = CutoutSpec::default();
        let kdi = filled_kdi();
        let t = Tensor::new(Kdi::shape().to_vec(), kdi.data.iter().map(|v| *v as f32).collect());
        let a = kdi.cutout_at(&spec, (3, 30));
        let b = t.cutout_at(&spec, (3, 30));
        assert!(a.data.iter().zip(&b.data).all(|(x, y)| (*x as f32) == *y));
        let kds = filled_kds(100);
        let t = Tensor::new(vec![1, 100, 48], kds.data.iter().map(|v| *v as f32).collect());
        let zeroed = t.cutout_at(&spec, (95, 0)).data.iter().filter(|v| **v == 0.0).count();
        assert_eq!(zeroed, 10 * 48);
        assert_eq!(kds.cutout_at(&spec, (95, 0)).data.iter().filter(|v| **v == 0.0).count(), 480);
    }
}
