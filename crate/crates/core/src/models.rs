//! Builders for the two verifier architectures: a CNN over keystroke images
//! and a convolutional-recurrent network over keystroke sequences.

use serde::{Deserialize, Serialize};

use crate::features::Kdi;
use crate::nn::{CellKind, LayerSpec, Network, NnError, Tensor};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    Cnn,
    CnnRnn,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Cnn => "cnn",
            ModelKind::CnnRnn => "cnn-rnn",
        }
    }
}

impl std::str::FromStr for ModelKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "cnn" => Ok(ModelKind::Cnn),
            "cnn-rnn" | "cnnrnn" => Ok(ModelKind::CnnRnn),
            _ => Err(format!("unknown model `{s}` (expected cnn or cnn-rnn)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CnnConfig {
    /// Square kernel side.
    pub kernel: usize,
    /// Channels of each conv-conv-pool stage.
    pub stage_channels: Vec<usize>,
    /// Fully connected widths; the last must be 1.
    pub fc_sizes: Vec<usize>,
    pub dropout_rate: f64,
}

impl Default for CnnConfig {
    fn default() -> Self {
        CnnConfig { kernel: 3, stage_channels: vec![32, 64], fc_sizes: vec![256, 64, 1], dropout_rate: 0.5 }
    }
}

impl CnnConfig {
    pub fn validate(&self) -> Result<(), NnError> {
        let bad = |m: String| Err(NnError::Config(m));
        if self.kernel == 0 || self.kernel.is_multiple_of(2) {
            return bad(format!("CNN kernel must be odd, got {}", self.kernel));
        }
        if self.stage_channels.is_empty() || self.stage_channels.contains(&0) {
            return bad("stage channels must be non-empty and positive".into());
        }
        if self.fc_sizes.last() != Some(&1) || self.fc_sizes.contains(&0) {
            return bad(format!("fully connected sizes must end in 1, got {:?}", self.fc_sizes));
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return bad(format!("dropout rate {} outside [0, 1)", self.dropout_rate));
        }
        Ok(())
    }

    /// Layer list for a `[C, H, W]` input.
    pub fn layers(&self, input: [usize; 3]) -> Result<Vec<LayerSpec>, NnError> {
        self.validate()?;
        let [mut c, mut h, mut w] = input;
        if self.kernel > h || self.kernel > w {
            return Err(NnError::Config(format!("kernel {} larger than input {h}x{w}", self.kernel)));
        }
        let pad = self.kernel / 2;
        let mut layers = Vec::new();
        for &out in &self.stage_channels {
            for inp in [c, out] {
                layers.push(LayerSpec::Conv2d {
                    in_channels: inp,
                    out_channels: out,
                    kernel: [self.kernel; 2],
                    stride: [1, 1],
                    padding: [pad, pad],
                });
                layers.push(LayerSpec::ReLU);
            }
            if h < 2 || w < 2 {
                return Err(NnError::Config(format!("too many pooling stages for a {}x{} input", input[1], input[2])));
            }
            layers.push(LayerSpec::MaxPool2d { size: 2, stride: 2 });
            c = out;
            h /= 2;
            w /= 2;
        }
        layers.push(LayerSpec::Flatten);
        let mut inputs = c * h * w;
        let n = self.fc_sizes.len();
        for (i, &outputs) in self.fc_sizes.iter().enumerate() {
            if i + 1 == n {
                layers.push(LayerSpec::Dropout { rate: self.dropout_rate });
            }
            layers.push(LayerSpec::Dense { inputs, outputs });
            layers.push(if i + 1 == n { LayerSpec::Sigmoid } else { LayerSpec::ReLU });
            inputs = outputs;
        }
        Ok(layers)
    }
}

/// CNN over a `5 x 42 x 42` keystroke image.
pub fn build_cnn(cfg: &CnnConfig, seed: u64) -> Result<Network<f32>, NnError> {
    build_cnn_for(cfg, Kdi::shape(), seed)
}

pub fn build_cnn_for(cfg: &CnnConfig, input: [usize; 3], seed: u64) -> Result<Network<f32>, NnError> {
    Network::new(input.to_vec(), cfg.layers(input)?, seed)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CnnRnnConfig {
    /// `(height along the sequence, width across columns)`.
    pub conv_kernel: [usize; 2],
    pub conv_filters: usize,
    pub rnn_kind: CellKind,
    pub rnn_layers: usize,
    pub rnn_hidden: usize,
}

impl Default for CnnRnnConfig {
    fn default() -> Self {
        CnnRnnConfig { conv_kernel: [2, 8], conv_filters: 32, rnn_kind: CellKind::Gru, rnn_layers: 2, rnn_hidden: 64 }
    }
}

impl CnnRnnConfig {
    /// Width padding and number of column slices for an input `width` columns wide.
    /// The kernel steps across columns by its own width; the input is zero-padded
    /// symmetrically up to the next multiple of it.
    pub fn width_plan(&self, width: usize) -> (usize, usize) {
        let kw = self.conv_kernel[1];
        let slices = width.div_ceil(kw);
        let pad = (slices * kw - width).div_ceil(2);
        (pad, (width + 2 * pad - kw) / kw + 1)
    }

    pub fn layers(&self, seq_len: usize, width: usize) -> Result<Vec<LayerSpec>, NnError> {
        let [kh, kw] = self.conv_kernel;
        if kh == 0 || kw == 0 || self.conv_filters == 0 || self.rnn_layers == 0 || self.rnn_hidden == 0 {
            return Err(NnError::Config("CNN-RNN sizes must be positive".into()));
        }
        if seq_len < kh {
            return Err(NnError::Config(format!("sequence length {seq_len} shorter than kernel height {kh}")));
        }
        if width == 0 {
            return Err(NnError::Config("input width must be positive".into()));
        }
        let (pad, slices) = self.width_plan(width);
        Ok(vec![
            LayerSpec::ColumnScale { columns: width },
            LayerSpec::Conv2d {
                in_channels: 1,
                out_channels: self.conv_filters,
                kernel: [kh, kw],
                stride: [1, kw],
                padding: [0, pad],
            },
            LayerSpec::ReLU,
            LayerSpec::ChannelsToSequence,
            LayerSpec::Recurrent {
                cell: self.rnn_kind,
                input_size: self.conv_filters * slices,
                hidden_size: self.rnn_hidden,
                num_layers: self.rnn_layers,
            },
            LayerSpec::Dense { inputs: self.rnn_hidden, outputs: 1 },
            LayerSpec::Sigmoid,
        ])
    }
}

/// CNN-RNN over a `seq_len x width` keystroke sequence (input shape `[1, L, W]`).
pub fn build_cnn_rnn(
    cfg: &CnnRnnConfig,
    input_width: usize,
    seq_len: usize,
    seed: u64,
) -> Result<Network<f32>, NnError> {
    Network::new(vec![1, seq_len, input_width], cfg.layers(seq_len, input_width)?, seed)
}

/// Set the input gain of the trailing `columns` columns to `1/rms` over `xs`,
/// leaving the rest at their current value. No-op for networks that do not
/// start with a [`LayerSpec::ColumnScale`].
pub fn calibrate_input_gain(net: &mut Network<f32>, xs: &[Tensor<f32>], columns: usize) {
    let Some(&LayerSpec::ColumnScale { columns: width }) = net.layers.first() else {
        return;
    };
    let first = width.saturating_sub(columns);
    let mut sq = vec![0f64; width];
    let mut n = 0usize;
    for x in xs {
        for row in x.data.chunks_exact(width) {
            for (c, v) in row.iter().enumerate().skip(first) {
                sq[c] += (*v as f64).powi(2);
            }
            n += 1;
        }
    }
    if n == 0 {
        return;
    }
    let gain = &mut net.params_mut()[0].value.data;
    for c in first..width {
        let rms = (sq[c] / n as f64).sqrt();
        if rms > 1e-12 {
            gain[c] = (1.0 / rms) as f32;
        }
    }
}

/// Either architecture, as stored in run configs and checkpoints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "kebab-case")]
pub enum ModelConfig {
    Cnn(CnnConfig),
    CnnRnn(CnnRnnConfig),
}

impl ModelConfig {
    pub fn default_for(kind: ModelKind) -> Self {
        match kind {
            ModelKind::Cnn => ModelConfig::Cnn(CnnConfig::default()),
            ModelKind::CnnRnn => ModelConfig::CnnRnn(CnnRnnConfig::default()),
        }
    }

    /// Adam step size used when none is given: 0.01 for the CNN-RNN, 0.001
    /// for the CNN and for a plain RNN cell.
    pub fn default_learning_rate(&self) -> f64 {
        match self {
            ModelConfig::CnnRnn(c) if c.rnn_kind != CellKind::Rnn => 0.01,
            _ => 0.001,
        }
    }

    pub fn kind(&self) -> ModelKind {
        match self {
            ModelConfig::Cnn(_) => ModelKind::Cnn,
            ModelConfig::CnnRnn(_) => ModelKind::CnnRnn,
        }
    }

    /// Build for one network input shape: `[5, 42, 42]` for the CNN, `[1, L, W]` for the CNN-RNN.
    pub fn build(&self, input_shape: &[usize], seed: u64) -> Result<Network<f32>, NnError> {
        match (self, input_shape) {
            (ModelConfig::Cnn(c), &[ch, h, w]) => build_cnn_for(c, [ch, h, w], seed),
            (ModelConfig::CnnRnn(c), &[1, l, w]) => build_cnn_rnn(c, w, l, seed),
            _ => Err(NnError::Config(format!("{} cannot take inputs of shape {input_shape:?}", self.kind().name()))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{grad_check, GradCheckOptions};
    use rand::Rng;

    #[test]
    fn default_cnn_shapes_and_count() {
        let net = build_cnn(&CnnConfig::default(), 0).unwrap();
        let spatial: Vec<usize> = net
            .layers
            .iter()
            .zip(&net.shapes()[1..])
            .filter(|(l, _)| matches!(l, LayerSpec::MaxPool2d { .. }))
            .map(|(_, s)| s[1])
            .collect();
        assert_eq!(spatial, vec![21, 10]);
        assert_eq!(net.param_count(), 1_721_313);
        assert_eq!(net.output_shape(), &[1]);
    }

    #[test]
    fn cnn_output_is_probability() {
        let net = build_cnn(&CnnConfig::default(), 1).unwrap();
        let mut rng = crate::rng::rng_for(1, 0);
        let x = Tensor::new(vec![5, 42, 42], (0..5 * 42 * 42).map(|_| rng.random_range(-1.0f32..1.0)).collect());
        let p = net.predict(&x).unwrap().data[0];
        assert!(p > 0.0 && p < 1.0);
        assert!(matches!(net.predict(&Tensor::zeros(&[5, 40, 42])), Err(NnError::Dimension { .. })));
    }

    #[test]
    fn cnn_config_errors() {
        assert!(build_cnn(&CnnConfig { kernel: 4, ..Default::default() }, 0).is_err());
        assert!(build_cnn(&CnnConfig { kernel: 43, ..Default::default() }, 0).is_err());
        assert!(build_cnn(&CnnConfig { fc_sizes: vec![8, 2], ..Default::default() }, 0).is_err());
        for k in [3, 5, 7] {
            assert!(build_cnn(&CnnConfig { kernel: k, ..Default::default() }, 0).is_ok());
        }
    }

    #[test]
    fn builders_are_deterministic() {
        let a = build_cnn(&CnnConfig::default(), 9).unwrap();
        let b = build_cnn(&CnnConfig::default(), 9).unwrap();
        assert_eq!(a.params, b.params);
        let c = build_cnn_rnn(&CnnRnnConfig::default(), 48, 100, 9).unwrap();
        let d = build_cnn_rnn(&CnnRnnConfig::default(), 48, 100, 9).unwrap();
        assert_eq!(c.params, d.params);
    }

    #[test]
    fn cnn_rnn_sequence_length_and_width() {
        let net = build_cnn_rnn(&CnnRnnConfig::default(), 48, 100, 0).unwrap();
        assert_eq!(net.shapes()[4], vec![99, 192]);
        let idx = build_cnn_rnn(&CnnRnnConfig::default(), 7, 100, 0).unwrap();
        assert_eq!(idx.shapes()[4], vec![99, 32]);
        let tall = CnnRnnConfig { conv_kernel: [5, 8], ..Default::default() };
        assert_eq!(build_cnn_rnn(&tall, 48, 100, 0).unwrap().shapes()[4][0], 96);
        assert!(build_cnn_rnn(&tall, 48, 4, 0).is_err());
    }

    #[test]
    fn rnn_kind_only_changes_recurrent_params() {
        let counts: Vec<(usize, usize)> = [CellKind::Rnn, CellKind::Gru, CellKind::Lstm]
            .into_iter()
            .map(|k| {
                let n = build_cnn_rnn(&CnnRnnConfig { rnn_kind: k, ..Default::default() }, 48, 100, 0).unwrap();
                (n.param_count_of(0..4), n.param_count_of(5..7))
            })
            .collect();
        assert!(counts.iter().all(|c| *c == counts[0]));
    }

    #[test]
    fn zero_gru_cnn_rnn_decays_initial_state() {
        let cfg = CnnRnnConfig { conv_filters: 4, rnn_hidden: 3, ..Default::default() };
        let mut net = build_cnn_rnn(&cfg, 48, 10, 0).unwrap().cast::<f64>();
        for p in net.params_mut() {
            p.value.data.iter_mut().for_each(|v| *v = 0.0);
        }
        let steps = net.shapes()[4][0];
        let seq = Tensor::<f64>::zeros(&net.shapes()[4]);
        let h0 = vec![vec![1.0, -2.0, 0.5]; 2];
        let fin = net.recurrent_final_states(4, &seq, &h0).unwrap();
        for (a, b) in fin[1].iter().zip(&h0[1]) {
            assert!((a - 0.5f64.powi(steps as i32) * b).abs() < 1e-15);
        }
    }

    fn random_input(shape: &[usize], seed: u64) -> Tensor<f64> {
        let mut rng = crate::rng::rng_for(seed, 3);
        Tensor::new(shape.to_vec(), (0..shape.iter().product()).map(|_| rng.random_range(-1.0..1.0)).collect())
    }

    /// Biases bounded away from zero keep ReLU units off their kink.
    fn offset_biases(net: &mut Network<f64>, seed: u64) {
        let mut rng = crate::rng::rng_for(seed, 4);
        for p in net.params_mut() {
            if p.name.ends_with("bias") || p.name.contains(".b_") {
                for v in p.value.data.iter_mut() {
                    *v = rng.random_range(0.1..0.5) * if rng.random::<bool>() { 1.0 } else { -1.0 };
                }
            }
        }
    }

    #[test]
    fn reduced_cnn_gradients() {
        let cfg = CnnConfig { stage_channels: vec![2, 3], fc_sizes: vec![8, 4, 1], ..Default::default() };
        let mut net = build_cnn_for(&cfg, [5, 42, 42], 4).unwrap().cast::<f64>();
        offset_biases(&mut net, 4);
        // keystroke-image-like input: a few dozen populated cells per channel
        let mut rng = crate::rng::rng_for(4, 5);
        let mut x = Tensor::<f64>::zeros(&[5, 42, 42]);
        for _ in 0..300 {
            let i = rng.random_range(0..x.len());
            x.data[i] = rng.random_range(0.0..0.1);
        }
        let opts = GradCheckOptions { per_tensor: Some(20), check_input: false, seed: 4, ..Default::default() };
        let rep = grad_check(&net, &x, &Tensor::scalar(1.0), &opts).unwrap();
        assert!(rep.pass && rep.skipped_kinks * 10 < rep.checked, "{rep:?}");
    }

    #[test]
    fn reduced_cnn_rnn_gradients() {
        for kind in [CellKind::Gru, CellKind::Lstm, CellKind::Rnn] {
            let cfg = CnnRnnConfig { conv_filters: 3, rnn_hidden: 5, rnn_kind: kind, ..Default::default() };
            let net = build_cnn_rnn(&cfg, 20, 12, 5).unwrap().cast::<f64>();
            let opts = GradCheckOptions { check_input: false, seed: 5, ..Default::default() };
            let rep = grad_check(&net, &random_input(&[1, 12, 20], 5), &Tensor::scalar(0.0), &opts).unwrap();
            assert!(rep.pass && rep.skipped_kinks * 10 < rep.checked, "{kind:?} {rep:?}");
        }
    }

    #[test]
    fn default_learning_rates() {
        assert_eq!(ModelConfig::default_for(ModelKind::Cnn).default_learning_rate(), 0.001);
        assert_eq!(ModelConfig::default_for(ModelKind::CnnRnn).default_learning_rate(), 0.01);
        let rnn = ModelConfig::CnnRnn(CnnRnnConfig { rnn_kind: CellKind::Rnn, ..Default::default() });
        assert_eq!(rnn.default_learning_rate(), 0.001);
    }

    #[test]
    fn config_json_round_trip() {
        let m = ModelConfig::CnnRnn(CnnRnnConfig { rnn_kind: CellKind::Lstm, ..Default::default() });
        let s = serde_json::to_string(&m).unwrap();
        assert_eq!(serde_json::from_str::<ModelConfig>(&s).unwrap(), m);
        let c: ModelConfig = serde_json::from_str(r#"{"model":"cnn","kernel":5}"#).unwrap();
        assert_eq!(c, ModelConfig::Cnn(CnnConfig { kernel: 5, ..Default::default() }));
    }
}
