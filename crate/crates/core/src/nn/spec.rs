//! Layer vocabulary and shape rules.

use serde::{Deserialize, Serialize};

use super::NnError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CellKind {
    Rnn,
    Gru,
    Lstm,
}

impl CellKind {
    /// Number of stacked gate blocks in the input/recurrent weight matrices.
    pub fn gates(self) -> usize {
        match self {
            CellKind::Rnn => 1,
            CellKind::Gru => 3,
            CellKind::Lstm => 4,
        }
    }
}

impl std::str::FromStr for CellKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "rnn" => Ok(CellKind::Rnn),
            "gru" => Ok(CellKind::Gru),
            "lstm" => Ok(CellKind::Lstm),
            other => Err(format!("unknown recurrent cell `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum LayerSpec {
    /// `[C, H, W] -> [out_channels, H', W']`, zero padding on both sides.
    Conv2d {
        in_channels: usize,
        out_channels: usize,
        kernel: [usize; 2],
        stride: [usize; 2],
        padding: [usize; 2],
    },
    /// Square window, `floor((H - size) / stride) + 1` outputs per axis.
    MaxPool2d {
        size: usize,
        stride: usize,
    },
    /// `[inputs] -> [outputs]`. Any input shape with `inputs` elements is accepted.
    Dense {
        inputs: usize,
        outputs: usize,
    },
    /// Inverted dropout; identity at inference.
    Dropout {
        rate: f64,
    },
    ReLU,
    Sigmoid,
    /// Any shape to `[n]`.
    Flatten,
    /// `[C, T, W] -> [T, C * W]`: each time row gathers every channel.
    ChannelsToSequence,
    /// `[T, input_size] -> [hidden_size]`, the last hidden state of the top layer.
    Recurrent {
        cell: CellKind,
        input_size: usize,
        hidden_size: usize,
        num_layers: usize,
    },
    /// Learnable per-column gain on the last axis; shape preserving. Starts at 1.
    ColumnScale {
        columns: usize,
    },
}

impl LayerSpec {
    pub fn name(&self) -> &'static str {
        match self {
            LayerSpec::Conv2d { .. } => "Conv2d",
            LayerSpec::MaxPool2d { .. } => "MaxPool2d",
            LayerSpec::Dense { .. } => "Dense",
            LayerSpec::Dropout { .. } => "Dropout",
            LayerSpec::ReLU => "ReLU",
            LayerSpec::Sigmoid => "Sigmoid",
            LayerSpec::Flatten => "Flatten",
            LayerSpec::ChannelsToSequence => "ChannelsToSequence",
            LayerSpec::Recurrent { cell: CellKind::Rnn, .. } => "RNNCellStack",
            LayerSpec::Recurrent { cell: CellKind::Gru, .. } => "GRUCellStack",
            LayerSpec::Recurrent { cell: CellKind::Lstm, .. } => "LSTMCellStack",
            LayerSpec::ColumnScale { .. } => "ColumnScale",
        }
    }

    /// Named parameter shapes with their fan-in (0 for biases).
    pub fn param_shapes(&self) -> Vec<(String, Vec<usize>, usize)> {
        match *self {
            LayerSpec::Conv2d { in_channels, out_channels, kernel, .. } => {
                let fan_in = in_channels * kernel[0] * kernel[1];
                vec![
                    ("weight".into(), vec![out_channels, in_channels, kernel[0], kernel[1]], fan_in),
                    ("bias".into(), vec![out_channels], 0),
                ]
            }
            LayerSpec::Dense { inputs, outputs } => {
                vec![("weight".into(), vec![outputs, inputs], inputs), ("bias".into(), vec![outputs], 0)]
            }
            LayerSpec::Recurrent { cell, input_size, hidden_size, num_layers } => {
                let g = cell.gates() * hidden_size;
                let mut out = Vec::new();
                for l in 0..num_layers {
                    let inp = if l == 0 { input_size } else { hidden_size };
                    out.push((format!("l{l}.w_ih"), vec![g, inp], inp));
                    out.push((format!("l{l}.w_hh"), vec![g, hidden_size], hidden_size));
                    out.push((format!("l{l}.b_ih"), vec![g], 0));
                    if cell == CellKind::Gru {
                        out.push((format!("l{l}.b_hh"), vec![g], 0));
                    }
                }
                out
            }
            LayerSpec::ColumnScale { columns } => vec![("gain".into(), vec![columns], 0)],
            _ => Vec::new(),
        }
    }

    pub fn param_count(&self) -> usize {
        self.param_shapes().iter().map(|(_, s, _)| s.iter().product::<usize>()).sum()
    }

    /// Output shape for `input`, or a dimension error naming this layer.
    pub fn output_shape(&self, index: usize, input: &[usize]) -> Result<Vec<usize>, NnError> {
        let err = |detail: String| NnError::Dimension { layer: index, kind: self.name(), detail };
        match *self {
            LayerSpec::Conv2d { in_channels, out_channels, kernel, stride, padding } => {
                let [c, h, w] = three(input).ok_or_else(|| err(format!("expected [C, H, W], got {input:?}")))?;
                if c != in_channels {
                    return Err(err(format!("expected {in_channels} input channels, got {c}")));
                }
                if stride[0] == 0 || stride[1] == 0 || kernel[0] == 0 || kernel[1] == 0 {
                    return Err(err("kernel and stride must be positive".into()));
                }
                let (ph, pw) = (h + 2 * padding[0], w + 2 * padding[1]);
                if kernel[0] > ph || kernel[1] > pw {
                    return Err(err(format!("kernel {kernel:?} larger than padded input {ph}x{pw}")));
                }
                Ok(vec![out_channels, (ph - kernel[0]) / stride[0] + 1, (pw - kernel[1]) / stride[1] + 1])
            }
            LayerSpec::MaxPool2d { size, stride } => {
                let [c, h, w] = three(input).ok_or_else(|| err(format!("expected [C, H, W], got {input:?}")))?;
                if size == 0 || stride == 0 || size > h || size > w {
                    return Err(err(format!("pool window {size} does not fit {h}x{w}")));
                }
                Ok(vec![c, (h - size) / stride + 1, (w - size) / stride + 1])
            }
            LayerSpec::Dense { inputs, outputs } => {
                let n: usize = input.iter().product();
                if n != inputs {
                    return Err(err(format!("expected {inputs} inputs, got {n} ({input:?})")));
                }
                Ok(vec![outputs])
            }
            LayerSpec::Dropout { rate } => {
                if !(0.0..1.0).contains(&rate) {
                    return Err(err(format!("dropout rate {rate} outside [0, 1)")));
                }
                Ok(input.to_vec())
            }
            LayerSpec::ReLU | LayerSpec::Sigmoid => Ok(input.to_vec()),
            LayerSpec::ColumnScale { columns } => match input.last() {
                Some(&w) if w == columns && columns > 0 => Ok(input.to_vec()),
                _ => Err(err(format!("expected a last axis of {columns}, got {input:?}"))),
            },
            LayerSpec::Flatten => Ok(vec![input.iter().product()]),
            LayerSpec::ChannelsToSequence => {
                let [c, t, w] = three(input).ok_or_else(|| err(format!("expected [C, T, W], got {input:?}")))?;
                Ok(vec![t, c * w])
            }
            LayerSpec::Recurrent { input_size, hidden_size, num_layers, .. } => {
                if num_layers == 0 || hidden_size == 0 {
                    return Err(err("recurrent stack needs at least one layer and unit".into()));
                }
                match *input {
                    [t, f] if f == input_size && t > 0 => Ok(vec![hidden_size]),
                    _ => Err(err(format!("expected [T, {input_size}], got {input:?}"))),
                }
            }
        }
    }
}

fn three(s: &[usize]) -> Option<[usize; 3]> {
    match *s {
        [a, b, c] => Some([a, b, c]),
        _ => None,
    }
}
