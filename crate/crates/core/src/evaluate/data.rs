use std::collections::BTreeMap;

use super::assemble::SampleRef;
use super::EvalError;
use crate::features::{KdfFile, Kdi, Kds, KeyEncoding, Layout};
use crate::models::ModelKind;
use crate::nn::Tensor;

/// Network-ready samples grouped by user, in file order.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSet {
    pub layout: Layout,
    /// Network input shape: `[5, 42, 42]` or `[1, L, W]`.
    pub input_shape: Vec<usize>,
    pub encoding: Option<KeyEncoding>,
    pub users: BTreeMap<String, Vec<Tensor<f32>>>,
}

impl FeatureSet {
    pub fn from_kdf(kdf: &KdfFile) -> Self {
        let h = &kdf.header;
        let input_shape = match h.layout {
            Layout::Kdi => h.shape[1..].to_vec(),
            Layout::Kds => [&[1][..], &h.shape[1..]].concat(),
        };
        let mut users: BTreeMap<String, Vec<Tensor<f32>>> = BTreeMap::new();
        for (i, u) in h.user_ids.iter().enumerate() {
            users.entry(u.clone()).or_default().push(Tensor::new(input_shape.clone(), kdf.sample(i).to_vec()));
        }
        FeatureSet { layout: h.layout, input_shape, encoding: h.encoding, users }
    }

    pub fn from_kdis(items: &[(String, Kdi)]) -> Self {
        let mut users: BTreeMap<String, Vec<Tensor<f32>>> = BTreeMap::new();
        for (u, k) in items {
            let t = Tensor::new(Kdi::shape().to_vec(), k.data.iter().map(|v| *v as f32).collect());
            users.entry(u.clone()).or_default().push(t);
        }
        FeatureSet { layout: Layout::Kdi, input_shape: Kdi::shape().to_vec(), encoding: None, users }
    }

    /// Sequences must share one shape; empty input yields an empty set.
    pub fn from_kds(items: &[(String, Kds)]) -> Result<Self, EvalError> {
        let Some((_, first)) = items.first() else {
            return Ok(FeatureSet {
                layout: Layout::Kds,
                input_shape: vec![1, 0, 0],
                encoding: None,
                users: BTreeMap::new(),
            });
        };
        let input_shape = vec![1, first.rows, first.width];
        let mut users: BTreeMap<String, Vec<Tensor<f32>>> = BTreeMap::new();
        for (u, k) in items {
            if k.rows != first.rows || k.width != first.width {
                return Err(EvalError::Config("sequences differ in shape".into()));
            }
            users
                .entry(u.clone())
                .or_default()
                .push(Tensor::new(input_shape.clone(), k.data.iter().map(|v| *v as f32).collect()));
        }
        Ok(FeatureSet { layout: Layout::Kds, input_shape, encoding: Some(first.encoding), users })
    }

    pub fn counts(&self) -> BTreeMap<String, usize> {
        self.users.iter().map(|(u, v)| (u.clone(), v.len())).collect()
    }

    pub fn get(&self, r: &SampleRef) -> &Tensor<f32> {
        &self.users[&r.user][r.index]
    }

    /// The layout a model kind consumes must match this set's layout.
    pub fn check_model(&self, kind: ModelKind) -> Result<(), EvalError> {
        let want = match kind {
            ModelKind::Cnn => Layout::Kdi,
            ModelKind::CnnRnn => Layout::Kds,
        };
        if self.layout != want {
            return Err(EvalError::Config(format!(
                "model {} needs {want} features but the file holds {}",
                kind.name(),
                self.layout
            )));
        }
        Ok(())
    }
}
