//! `KDF1` feature container.
//!
//! Layout: the four magic bytes `KDF1`, a little-endian `u32` header length,
//! that many bytes of UTF-8 JSON header, then the samples as little-endian
//! `f32` in row-major order. `shape[0]` is the sample count.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::kdi::{Kdi, KdiChannel, KDI_LEN};
use super::kds::{Kds, KeyEncoding, TIMING_COLUMN_NAMES};
use super::{FeatureError, Normalization};
use crate::ingest::NUM_KEYS;

pub const KDF_MAGIC: &[u8; 4] = b"KDF1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Layout {
    Kdi,
    Kds,
}

impl std::fmt::Display for Layout {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Layout::Kdi => "kdi",
            Layout::Kds => "kds",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KdfHeader {
    pub dtype: String,
    pub layout: Layout,
    pub shape: Vec<usize>,
    pub channel_order: Vec<String>,
    pub normalization: Normalization,
    pub user_ids: Vec<String>,
    pub labels: Vec<Option<u8>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub encoding: Option<KeyEncoding>,
}

impl KdfHeader {
    pub fn sample_len(&self) -> usize {
        self.shape[1..].iter().product()
    }

    pub fn samples(&self) -> usize {
        self.shape.first().copied().unwrap_or(0)
    }
}

/// Samples of one layout, with per-sample user ids and optional labels.
#[derive(Debug, Clone, PartialEq)]
pub struct KdfFile {
    pub header: KdfHeader,
    pub data: Vec<f32>,
}

pub fn kdi_channel_order() -> Vec<String> {
    KdiChannel::ALL.iter().map(|c| c.name().to_string()).collect()
}

pub fn kds_channel_order(encoding: KeyEncoding) -> Vec<String> {
    let mut names = match encoding {
        KeyEncoding::Index => vec!["key_index".to_string()],
        KeyEncoding::OneHot => (0..NUM_KEYS).map(|k| format!("key_{k}")).collect(),
    };
    names.extend(TIMING_COLUMN_NAMES.iter().map(|s| s.to_string()));
    names
}

impl KdfFile {
    pub fn from_kdis(items: &[(String, Kdi)], labels: Option<&[u8]>, norm: Normalization) -> Self {
        let data = items.iter().flat_map(|(_, k)| k.data.iter().map(|v| *v as f32)).collect();
        KdfFile {
            header: KdfHeader {
                dtype: "f32".into(),
                layout: Layout::Kdi,
                shape: vec![items.len(), 5, NUM_KEYS, NUM_KEYS],
                channel_order: kdi_channel_order(),
                normalization: norm,
                user_ids: items.iter().map(|(u, _)| u.clone()).collect(),
                labels: label_vec(items.len(), labels),
                encoding: None,
            },
            data,
        }
    }

    /// All sequences must share one shape and encoding; `encoding` is used when `items` is empty.
    pub fn from_kds(
        items: &[(String, Kds)],
        labels: Option<&[u8]>,
        norm: Normalization,
        encoding: KeyEncoding,
        rows: usize,
    ) -> Result<Self, FeatureError> {
        let width = encoding.width();
        for (_, k) in items {
            if k.rows != rows || k.width != width || k.encoding != encoding {
                return Err(FeatureError::ShapeMismatch(format!(
                    "sequence {}x{} ({}) does not match {rows}x{width} ({})",
                    k.rows,
                    k.width,
                    k.encoding.name(),
                    encoding.name()
                )));
            }
        }
        Ok(KdfFile {
            header: KdfHeader {
                dtype: "f32".into(),
                layout: Layout::Kds,
                shape: vec![items.len(), rows, width],
                channel_order: kds_channel_order(encoding),
                normalization: norm,
                user_ids: items.iter().map(|(u, _)| u.clone()).collect(),
                labels: label_vec(items.len(), labels),
                encoding: Some(encoding),
            },
            data: items.iter().flat_map(|(_, k)| k.data.iter().map(|v| *v as f32)).collect(),
        })
    }

    pub fn sample(&self, i: usize) -> &[f32] {
        let n = self.header.sample_len();
        &self.data[i * n..(i + 1) * n]
    }

    pub fn kdis(&self) -> Result<Vec<(String, Kdi)>, FeatureError> {
        if self.header.layout != Layout::Kdi || self.header.sample_len() != KDI_LEN {
            return Err(FeatureError::ShapeMismatch(format!("expected a kdi file, found {}", self.header.layout)));
        }
        Ok((0..self.header.samples())
            .map(|i| {
                let data = self.sample(i).iter().map(|v| *v as f64).collect();
                (self.header.user_ids[i].clone(), Kdi { data })
            })
            .collect())
    }

    pub fn kds(&self) -> Result<Vec<(String, Kds)>, FeatureError> {
        let h = &self.header;
        let encoding = match (h.layout, h.encoding, h.shape.as_slice()) {
            (Layout::Kds, Some(e), [_, _, w]) if *w == e.width() => e,
            _ => return Err(FeatureError::ShapeMismatch(format!("expected a kds file, found {}", h.layout))),
        };
        let (rows, width) = (h.shape[1], h.shape[2]);
        Ok((0..h.samples())
            .map(|i| {
                let data = self.sample(i).iter().map(|v| *v as f64).collect();
                (h.user_ids[i].clone(), Kds { rows, width, encoding, data })
            })
            .collect())
    }

    pub fn write_to<W: Write>(&self, mut out: W) -> Result<(), FeatureError> {
        self.check()?;
        let header = serde_json::to_vec(&self.header)?;
        out.write_all(KDF_MAGIC)?;
        out.write_all(&(header.len() as u32).to_le_bytes())?;
        out.write_all(&header)?;
        let mut buf = Vec::with_capacity(self.data.len() * 4);
        for v in &self.data {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        out.write_all(&buf)?;
        Ok(())
    }

    pub fn read_from<R: Read>(mut input: R) -> Result<Self, FeatureError> {
        let mut magic = [0u8; 4];
        input.read_exact(&mut magic)?;
        if &magic != KDF_MAGIC {
            return Err(FeatureError::BadMagic(magic));
        }
        let mut len = [0u8; 4];
        input.read_exact(&mut len)?;
        let mut header = vec![0u8; u32::from_le_bytes(len) as usize];
        input.read_exact(&mut header)?;
        let header: KdfHeader = serde_json::from_slice(&header)?;
        if header.dtype != "f32" {
            return Err(FeatureError::ShapeMismatch(format!("unsupported dtype {}", header.dtype)));
        }
        let n: usize = header.shape.iter().product();
        let mut bytes = Vec::with_capacity(n * 4);
        input.read_to_end(&mut bytes)?;
        if bytes.len() != n * 4 {
            return Err(FeatureError::ShapeMismatch(format!(
                "payload has {} bytes, shape {:?} needs {}",
                bytes.len(),
                header.shape,
                n * 4
            )));
        }
        let data = bytes.chunks_exact(4).map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]])).collect();
        let file = KdfFile { header, data };
        file.check()?;
        Ok(file)
    }

    /// Write atomically: a temporary file in the target directory is renamed into place.
    pub fn save(&self, path: &Path) -> Result<(), FeatureError> {
        crate::io::write_atomic(path, |w| self.write_to(w))
    }

    pub fn load(path: &Path) -> Result<Self, FeatureError> {
        let f = std::fs::File::open(path)?;
        Self::read_from(std::io::BufReader::new(f))
    }

    fn check(&self) -> Result<(), FeatureError> {
        let h = &self.header;
        let n = h.samples();
        if h.shape.is_empty() || h.user_ids.len() != n || h.labels.len() != n {
            return Err(FeatureError::ShapeMismatch(format!(
                "header shape {:?} disagrees with {} user ids / {} labels",
                h.shape,
                h.user_ids.len(),
                h.labels.len()
            )));
        }
        if self.data.len() != h.shape.iter().product::<usize>() {
            return Err(FeatureError::ShapeMismatch(format!("{} values for shape {:?}", self.data.len(), h.shape)));
        }
        Ok(())
    }
}

fn label_vec(n: usize, labels: Option<&[u8]>) -> Vec<Option<u8>> {
    match labels {
        Some(l) => l.iter().map(|v| Some(*v)).collect(),
        None => vec![None; n],
    }
}
