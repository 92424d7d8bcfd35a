//! Windowing, timing features, keystroke images (KDI) and sequences (KDS).

mod cutout;
mod kdf;
mod kdi;
mod kds;
mod timing;
mod window;

use serde::{Deserialize, Serialize};

pub use cutout::{apply_cutout, Cutout, CutoutSpec};
pub use kdf::{kdi_channel_order, kds_channel_order, KdfFile, KdfHeader, Layout, KDF_MAGIC};
pub use kdi::{build_kdi, Kdi, KdiChannel, KDI_CHANNELS, KDI_LEN};
pub use kds::{build_kds, Kds, KeyEncoding, TIMING_COLUMNS, TIMING_COLUMN_NAMES};
pub use timing::{timing_features, TimingPair};
pub use window::{window, Subsequence, DEFAULT_LENGTH};

/// Millisecond values are clamped to `±clip_ms` and divided by `clip_ms`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    pub kind: NormalizationKind,
    pub clip_ms: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormalizationKind {
    ClipScale,
}

impl Default for Normalization {
    fn default() -> Self {
        Normalization { kind: NormalizationKind::ClipScale, clip_ms: 5000.0 }
    }
}

impl Normalization {
    #[inline]
    pub fn apply(&self, ms: f64) -> f64 {
        ms.clamp(-self.clip_ms, self.clip_ms) / self.clip_ms
    }
}

#[derive(Debug, thiserror::Error)]
pub enum FeatureError {
    #[error("subsequence length must be at least 2, got {0}")]
    InvalidLength(usize),
    #[error("invalid cutout spec: {0}")]
    InvalidCutout(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("not a KDF file (magic {0:?})")]
    BadMagic([u8; 4]),
    #[error("bad KDF header: {0}")]
    Header(#[from] serde_json::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}
