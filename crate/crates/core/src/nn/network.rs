//! A sequential network over the fixed layer vocabulary, with cached forward
//! activations and exact reverse-mode gradients.

use std::sync::atomic::{AtomicU64, Ordering};

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::conv::{conv_backward, conv_forward, maxpool_backward, maxpool_forward, ConvGeom};
use super::recurrent::{layer_backward, layer_forward, CellGrads, CellParams, LayerTrace};
use super::spec::{CellKind, LayerSpec};
use super::tensor::{gemm, Mat, Scalar, Tensor};
use super::NnError;
use crate::rng::rng_for;

static NEXT_ID: AtomicU64 = AtomicU64::new(1);

fn fresh_id() -> u64 {
    NEXT_ID.fetch_add(1, Ordering::Relaxed)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Param<T> {
    pub name: String,
    pub layer: usize,
    pub value: Tensor<T>,
}

/// Gradients aligned with [`Network::params`].
pub type Grads<T> = Vec<Tensor<T>>;

#[derive(Debug)]
pub struct Network<T = f32> {
    pub input_shape: Vec<usize>,
    pub layers: Vec<LayerSpec>,
    pub params: Vec<Param<T>>,
    /// `param_ranges[i]` are the indices into `params` owned by layer `i`.
    param_ranges: Vec<std::ops::Range<usize>>,
    shapes: Vec<Vec<usize>>,
    /// Changes whenever parameters are modified; caches record it.
    version: u64,
}

impl<T: Scalar> Clone for Network<T> {
    fn clone(&self) -> Self {
        Network {
            input_shape: self.input_shape.clone(),
            layers: self.layers.clone(),
            params: self.params.clone(),
            param_ranges: self.param_ranges.clone(),
            shapes: self.shapes.clone(),
            version: fresh_id(),
        }
    }
}

enum LayerCache<T> {
    None,
    Conv { cols: Vec<T> },
    Pool { arg: Vec<u32> },
    Dense { input: Vec<T> },
    Scale { input: Vec<T> },
    Relu { output: Vec<T> },
    Sigmoid { output: Vec<T> },
    Dropout { mask: Vec<T> },
    Recurrent { traces: Vec<LayerTrace<T>> },
}

/// Activations recorded by a training-mode forward pass.
pub struct ForwardCache<T> {
    layers: Vec<LayerCache<T>>,
    version: u64,
    training: bool,
}

impl<T: Scalar> ForwardCache<T> {
    /// Digest of every piecewise decision taken in the pass (ReLU signs, pool
    /// winners). Equal digests mean the same linear region.
    pub fn pattern_digest(&self) -> u64 {
        use std::hash::{Hash, Hasher};
        let mut h = std::collections::hash_map::DefaultHasher::new();
        for (i, c) in self.layers.iter().enumerate() {
            match c {
                LayerCache::Relu { output } => {
                    i.hash(&mut h);
                    for v in output {
                        (*v > T::zero()).hash(&mut h);
                    }
                }
                LayerCache::Pool { arg } => {
                    i.hash(&mut h);
                    arg.hash(&mut h);
                }
                _ => {}
            }
        }
        h.finish()
    }
}

impl<T: Scalar> Network<T> {
    /// Validate shapes and initialise weights uniformly, biases 0. Conv and
    /// dense weights use `±sqrt(6/fan_in)` (He), recurrent weights `±1/sqrt(fan_in)`.
    pub fn new(input_shape: Vec<usize>, layers: Vec<LayerSpec>, seed: u64) -> Result<Self, NnError> {
        let mut net = Self::empty(input_shape, layers)?;
        let mut rng = rng_for(seed, 0x1417);
        for (spec, range) in net.layers.iter().zip(&net.param_ranges) {
            let gain: f64 = if matches!(spec, LayerSpec::Recurrent { .. }) { 1.0 } else { 6.0 };
            for ((_, _, fan_in), p) in spec.param_shapes().into_iter().zip(&mut net.params[range.clone()]) {
                if fan_in > 0 {
                    let bound = (gain / fan_in as f64).sqrt();
                    for v in p.value.data.iter_mut() {
                        *v = T::lit(rng.random_range(-bound..bound));
                    }
                }
            }
            if let LayerSpec::ColumnScale { .. } = spec {
                net.params[range.start].value.data.fill(T::one());
            }
        }
        Ok(net)
    }

    /// Zero-initialised network.
    pub fn empty(input_shape: Vec<usize>, layers: Vec<LayerSpec>) -> Result<Self, NnError> {
        if input_shape.is_empty() || input_shape.contains(&0) {
            return Err(NnError::Config(format!("invalid input shape {input_shape:?}")));
        }
        let mut shapes = vec![input_shape.clone()];
        let mut params = Vec::new();
        let mut param_ranges = Vec::new();
        for (i, spec) in layers.iter().enumerate() {
            let out = spec.output_shape(i, shapes.last().unwrap())?;
            shapes.push(out);
            let start = params.len();
            for (name, shape, _) in spec.param_shapes() {
                params.push(Param { name: format!("{i}.{name}"), layer: i, value: Tensor::zeros(&shape) });
            }
            param_ranges.push(start..params.len());
        }
        Ok(Network { input_shape, layers, params, param_ranges, shapes, version: fresh_id() })
    }

    /// Rebuild from stored parameters (e.g. a checkpoint).
    pub fn from_params(
        input_shape: Vec<usize>,
        layers: Vec<LayerSpec>,
        values: Vec<Tensor<T>>,
    ) -> Result<Self, NnError> {
        let mut net = Self::empty(input_shape, layers)?;
        if values.len() != net.params.len() {
            return Err(NnError::Config(format!(
                "expected {} parameter tensors, got {}",
                net.params.len(),
                values.len()
            )));
        }
        for (p, v) in net.params.iter_mut().zip(values) {
            if p.value.shape != v.shape {
                return Err(NnError::Config(format!(
                    "parameter {} has shape {:?}, expected {:?}",
                    p.name, v.shape, p.value.shape
                )));
            }
            p.value = v;
        }
        Ok(net)
    }

    pub fn output_shape(&self) -> &[usize] {
        self.shapes.last().unwrap()
    }

    /// Shape after each layer, starting with the input shape.
    pub fn shapes(&self) -> &[Vec<usize>] {
        &self.shapes
    }

    pub fn param_count(&self) -> usize {
        self.params.iter().map(|p| p.value.len()).sum()
    }

    /// Parameter count of the layers in `range`.
    pub fn param_count_of(&self, layers: std::ops::Range<usize>) -> usize {
        layers.flat_map(|l| self.param_ranges[l].clone()).map(|i| self.params[i].value.len()).sum()
    }

    pub fn layer_params(&self, layer: usize) -> &[Param<T>] {
        &self.params[self.param_ranges[layer].clone()]
    }

    pub fn cast<U: Scalar>(&self) -> Network<U> {
        Network {
            input_shape: self.input_shape.clone(),
            layers: self.layers.clone(),
            params: self
                .params
                .iter()
                .map(|p| Param { name: p.name.clone(), layer: p.layer, value: p.value.cast() })
                .collect(),
            param_ranges: self.param_ranges.clone(),
            shapes: self.shapes.clone(),
            version: fresh_id(),
        }
    }

    pub fn zero_grads(&self) -> Grads<T> {
        self.params.iter().map(|p| Tensor::zeros(&p.value.shape)).collect()
    }

    /// Mutable access to parameters; invalidates outstanding caches.
    pub fn params_mut(&mut self) -> &mut [Param<T>] {
        self.version = fresh_id();
        &mut self.params
    }

    fn check_input(&self, x: &Tensor<T>) -> Result<(), NnError> {
        if x.shape != self.input_shape {
            let kind = self.layers.first().map(|l| l.name()).unwrap_or("input");
            return Err(NnError::Dimension {
                layer: 0,
                kind,
                detail: format!("network expects input {:?}, got {:?}", self.input_shape, x.shape),
            });
        }
        Ok(())
    }

    /// Inference pass; dropout disabled. Pure given parameters and input.
    pub fn predict(&self, x: &Tensor<T>) -> Result<Tensor<T>, NnError> {
        self.check_input(x)?;
        let mut cur = x.data.clone();
        for i in 0..self.layers.len() {
            cur = self.layer_forward(i, cur, false, 0, None);
        }
        Ok(Tensor::new(self.output_shape().to_vec(), cur))
    }

    /// Forward pass recording activations. Dropout masks are drawn from `seed`
    /// when `training` is set.
    pub fn forward(&self, x: &Tensor<T>, training: bool, seed: u64) -> Result<(Tensor<T>, ForwardCache<T>), NnError> {
        self.check_input(x)?;
        let mut caches = Vec::with_capacity(self.layers.len());
        let mut cur = x.data.clone();
        for i in 0..self.layers.len() {
            let mut cache = LayerCache::None;
            cur = self.layer_forward(i, cur, training, seed, Some(&mut cache));
            caches.push(cache);
        }
        let out = Tensor::new(self.output_shape().to_vec(), cur);
        Ok((out, ForwardCache { layers: caches, version: self.version, training }))
    }

    fn layer_forward(
        &self,
        i: usize,
        input: Vec<T>,
        training: bool,
        seed: u64,
        cache: Option<&mut LayerCache<T>>,
    ) -> Vec<T> {
        let in_shape = &self.shapes[i];
        let p = self.layer_params(i);
        let (out, c) = match self.layers[i] {
            LayerSpec::Conv2d { out_channels, .. } => {
                let g = self.geom(i);
                let (out, cols) = conv_forward(&g, out_channels, &p[0].value.data, &p[1].value.data, &input);
                (out, LayerCache::Conv { cols })
            }
            LayerSpec::MaxPool2d { size, stride } => {
                let (out, arg) = maxpool_forward(in_shape[0], in_shape[1], in_shape[2], size, stride, &input);
                (out, LayerCache::Pool { arg })
            }
            LayerSpec::Dense { inputs, outputs } => {
                let mut out = p[1].value.data.clone();
                gemm(Mat::N(&p[0].value.data, outputs, inputs), Mat::N(&input, inputs, 1), T::one(), &mut out);
                (out, LayerCache::Dense { input })
            }
            LayerSpec::Dropout { rate } => {
                if training && rate > 0.0 {
                    let mut rng = rng_for(seed, 0xd0 + i as u64);
                    let keep = T::lit(1.0 / (1.0 - rate));
                    let mask: Vec<T> =
                        input.iter().map(|_| if rng.random::<f64>() < rate { T::zero() } else { keep }).collect();
                    let out = input.iter().zip(&mask).map(|(a, m)| *a * *m).collect();
                    (out, LayerCache::Dropout { mask })
                } else {
                    (input, LayerCache::None)
                }
            }
            LayerSpec::ReLU => {
                let out: Vec<T> = input.into_iter().map(|v| if v > T::zero() { v } else { T::zero() }).collect();
                let c = if cache.is_some() { LayerCache::Relu { output: out.clone() } } else { LayerCache::None };
                (out, c)
            }
            LayerSpec::Sigmoid => {
                let out: Vec<T> = input.into_iter().map(|v| T::one() / (T::one() + (-v).exp())).collect();
                let c = if cache.is_some() { LayerCache::Sigmoid { output: out.clone() } } else { LayerCache::None };
                (out, c)
            }
            LayerSpec::Flatten => (input, LayerCache::None),
            LayerSpec::ColumnScale { columns } => {
                let gain = &p[0].value.data;
                let out = input.iter().enumerate().map(|(k, v)| *v * gain[k % columns]).collect();
                let c = if cache.is_some() { LayerCache::Scale { input } } else { LayerCache::None };
                (out, c)
            }
            LayerSpec::ChannelsToSequence => {
                let (c, t, w) = (in_shape[0], in_shape[1], in_shape[2]);
                let mut out = vec![T::zero(); input.len()];
                for ci in 0..c {
                    for ti in 0..t {
                        for wi in 0..w {
                            out[ti * c * w + ci * w + wi] = input[(ci * t + ti) * w + wi];
                        }
                    }
                }
                (out, LayerCache::None)
            }
            LayerSpec::Recurrent { cell, input_size, hidden_size, num_layers } => {
                let steps = in_shape[0];
                let traces = self.recurrent_forward(i, cell, &input, steps, input_size, hidden_size, num_layers, None);
                let out = traces.last().unwrap().final_hidden(hidden_size).to_vec();
                (out, LayerCache::Recurrent { traces })
            }
        };
        if let Some(slot) = cache {
            *slot = c;
        }
        out
    }

    #[allow(clippy::too_many_arguments)]
    fn recurrent_forward(
        &self,
        i: usize,
        cell: CellKind,
        input: &[T],
        steps: usize,
        input_size: usize,
        hidden: usize,
        num_layers: usize,
        h0: Option<&[Vec<T>]>,
    ) -> Vec<LayerTrace<T>> {
        let p = self.layer_params(i);
        let per = if cell == CellKind::Gru { 4 } else { 3 };
        let mut traces: Vec<LayerTrace<T>> = Vec::with_capacity(num_layers);
        for l in 0..num_layers {
            let q = &p[l * per..(l + 1) * per];
            let cp = CellParams {
                w_ih: &q[0].value.data,
                w_hh: &q[1].value.data,
                b_ih: &q[2].value.data,
                b_hh: (cell == CellKind::Gru).then(|| q[3].value.data.as_slice()),
            };
            let inp = if l == 0 { input_size } else { hidden };
            let seq: &[T] = if l == 0 { input } else { traces[l - 1].outputs(hidden) };
            let init = h0.map(|h| h[l].as_slice());
            let tr = layer_forward(cell, &cp, seq, steps, inp, hidden, init, None);
            traces.push(tr);
        }
        traces
    }

    /// Run recurrent layer `layer` over a `[T, input_size]` sequence from the
    /// given per-layer initial hidden states; returns each layer's final hidden state.
    pub fn recurrent_final_states(&self, layer: usize, seq: &Tensor<T>, h0: &[Vec<T>]) -> Result<Vec<Vec<T>>, NnError> {
        let LayerSpec::Recurrent { cell, input_size, hidden_size, num_layers } = self.layers[layer] else {
            return Err(NnError::Config(format!("layer {layer} is not recurrent")));
        };
        self.layers[layer].output_shape(layer, &seq.shape)?;
        if h0.len() != num_layers || h0.iter().any(|h| h.len() != hidden_size) {
            return Err(NnError::Config("initial state shape mismatch".into()));
        }
        let traces =
            self.recurrent_forward(layer, cell, &seq.data, seq.shape[0], input_size, hidden_size, num_layers, Some(h0));
        Ok(traces.iter().map(|t| t.final_hidden(hidden_size).to_vec()).collect())
    }

    fn geom(&self, i: usize) -> ConvGeom {
        let LayerSpec::Conv2d { kernel, stride, padding, .. } = self.layers[i] else { unreachable!() };
        let (s, o) = (&self.shapes[i], &self.shapes[i + 1]);
        ConvGeom {
            c: s[0],
            h: s[1],
            w: s[2],
            kh: kernel[0],
            kw: kernel[1],
            sh: stride[0],
            sw: stride[1],
            ph: padding[0],
            pw: padding[1],
            oh: o[1],
            ow: o[2],
        }
    }

    /// Gradients of the loss w.r.t. every parameter, given `d loss / d output`.
    pub fn backward(&self, cache: &ForwardCache<T>, loss_grad: &Tensor<T>) -> Result<Grads<T>, NnError> {
        let mut grads = self.zero_grads();
        self.backward_into(cache, loss_grad, &mut grads)?;
        Ok(grads)
    }

    /// Like [`Network::backward`] but adds into existing gradient buffers.
    pub fn backward_into(
        &self,
        cache: &ForwardCache<T>,
        loss_grad: &Tensor<T>,
        grads: &mut Grads<T>,
    ) -> Result<(), NnError> {
        self.backprop(cache, self.layers.len(), &loss_grad.data, grads, false).map(|_| ())
    }

    /// Backpropagate a gradient given w.r.t. the input of layer `upto`
    /// (i.e. the output of layer `upto - 1`) through layers `0..upto`.
    /// Returns the gradient w.r.t. the network input when `want_input` is set.
    pub fn backprop(
        &self,
        cache: &ForwardCache<T>,
        upto: usize,
        grad: &[T],
        grads: &mut Grads<T>,
        want_input: bool,
    ) -> Result<Option<Vec<T>>, NnError> {
        if !cache.training {
            return Err(NnError::State("cache comes from an inference pass; call forward with training = true".into()));
        }
        if cache.version != self.version || cache.layers.len() != self.layers.len() {
            return Err(NnError::State("cache is stale: parameters changed since the forward pass".into()));
        }
        if upto > self.layers.len() {
            return Err(NnError::State(format!("no layer {upto}")));
        }
        let expect: usize = self.shapes[upto].iter().product();
        if grad.len() != expect {
            return Err(NnError::Dimension {
                layer: upto.saturating_sub(1),
                kind: self.layers.get(upto.saturating_sub(1)).map(|l| l.name()).unwrap_or("input"),
                detail: format!("gradient has {} elements, expected {:?}", grad.len(), self.shapes[upto]),
            });
        }
        if grads.len() != self.params.len() {
            return Err(NnError::State("gradient buffer does not match network".into()));
        }
        // layers before the first parameterised one need no input gradient
        let first_param =
            if want_input { 0 } else { self.param_ranges.iter().position(|r| !r.is_empty()).unwrap_or(usize::MAX) };
        let mut g = grad.to_vec();
        for i in (0..upto).rev() {
            if i < first_param {
                return Ok(None);
            }
            let need_input = want_input || i > first_param;
            let range = self.param_ranges[i].clone();
            let lg = &mut grads[range];
            g = self.layer_backward(i, &cache.layers[i], g, lg, need_input);
        }
        Ok(want_input.then_some(g))
    }

    fn layer_backward(
        &self,
        i: usize,
        cache: &LayerCache<T>,
        g: Vec<T>,
        lg: &mut [Tensor<T>],
        need_input: bool,
    ) -> Vec<T> {
        let in_shape = &self.shapes[i];
        let p = self.layer_params(i);
        match (&self.layers[i], cache) {
            (LayerSpec::Conv2d { out_channels, .. }, LayerCache::Conv { cols }) => {
                let geom = self.geom(i);
                let (gw, gb) = lg.split_at_mut(1);
                conv_backward(
                    &geom,
                    *out_channels,
                    &p[0].value.data,
                    cols,
                    &g,
                    &mut gw[0].data,
                    &mut gb[0].data,
                    need_input,
                )
                .unwrap_or_default()
            }
            (LayerSpec::MaxPool2d { .. }, LayerCache::Pool { arg }) => {
                maxpool_backward(in_shape.iter().product(), arg, &g)
            }
            (LayerSpec::Dense { inputs, outputs }, LayerCache::Dense { input }) => {
                let (gw, gb) = lg.split_at_mut(1);
                gemm(Mat::N(&g, *outputs, 1), Mat::N(input, 1, *inputs), T::one(), &mut gw[0].data);
                for (b, v) in gb[0].data.iter_mut().zip(&g) {
                    *b += *v;
                }
                if !need_input {
                    return Vec::new();
                }
                let mut dx = vec![T::zero(); *inputs];
                gemm(Mat::T(&p[0].value.data, *inputs, *outputs), Mat::N(&g, *outputs, 1), T::zero(), &mut dx);
                dx
            }
            (LayerSpec::ColumnScale { columns }, LayerCache::Scale { input }) => {
                let gain = &p[0].value.data;
                let gg = &mut lg[0].data;
                for (k, (a, x)) in g.iter().zip(input).enumerate() {
                    gg[k % columns] += *a * *x;
                }
                if !need_input {
                    return Vec::new();
                }
                g.iter().enumerate().map(|(k, a)| *a * gain[k % *columns]).collect()
            }
            (LayerSpec::Dropout { .. }, LayerCache::Dropout { mask }) => {
                g.iter().zip(mask).map(|(a, m)| *a * *m).collect()
            }
            (LayerSpec::ReLU, LayerCache::Relu { output }) => {
                g.iter().zip(output).map(|(a, o)| if *o > T::zero() { *a } else { T::zero() }).collect()
            }
            (LayerSpec::Sigmoid, LayerCache::Sigmoid { output }) => {
                g.iter().zip(output).map(|(a, s)| *a * *s * (T::one() - *s)).collect()
            }
            (LayerSpec::ChannelsToSequence, _) => {
                let (c, t, w) = (in_shape[0], in_shape[1], in_shape[2]);
                let mut dx = vec![T::zero(); g.len()];
                for ci in 0..c {
                    for ti in 0..t {
                        for wi in 0..w {
                            dx[(ci * t + ti) * w + wi] = g[ti * c * w + ci * w + wi];
                        }
                    }
                }
                dx
            }
            (LayerSpec::Recurrent { cell, input_size, hidden_size, num_layers }, LayerCache::Recurrent { traces }) => {
                let (cell, hidden, steps) = (*cell, *hidden_size, in_shape[0]);
                let per = if cell == CellKind::Gru { 4 } else { 3 };
                // gradient reaches only the final hidden state of the top layer
                let mut grad_h = vec![T::zero(); steps * hidden];
                grad_h[(steps - 1) * hidden..].copy_from_slice(&g);
                for l in (0..*num_layers).rev() {
                    let q = &p[l * per..(l + 1) * per];
                    let cp = CellParams {
                        w_ih: &q[0].value.data,
                        w_hh: &q[1].value.data,
                        b_ih: &q[2].value.data,
                        b_hh: (cell == CellKind::Gru).then(|| q[3].value.data.as_slice()),
                    };
                    let lgl = &mut lg[l * per..(l + 1) * per];
                    let (a, rest) = lgl.split_at_mut(1);
                    let (b, rest) = rest.split_at_mut(1);
                    let (c, rest) = rest.split_at_mut(1);
                    let mut cg = CellGrads {
                        w_ih: &mut a[0].data,
                        w_hh: &mut b[0].data,
                        b_ih: &mut c[0].data,
                        b_hh: rest.first_mut().map(|t| t.data.as_mut_slice()),
                    };
                    let inp = if l == 0 { *input_size } else { hidden };
                    let need = l > 0 || need_input;
                    match layer_backward(cell, &cp, &mut cg, &traces[l], &grad_h, steps, inp, hidden, need) {
                        Some(d) => grad_h = d,
                        None => grad_h = Vec::new(),
                    }
                }
                grad_h
            }
            // shape-only layers and inactive dropout
            _ => g,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn conv_scalar_scaling() {
        let spec =
            LayerSpec::Conv2d { in_channels: 1, out_channels: 1, kernel: [1, 1], stride: [1, 1], padding: [0, 0] };
        let mut net = Network::<f64>::empty(vec![1, 2, 2], vec![spec]).unwrap();
        net.params_mut()[0].value.data[0] = 2.0;
        let y = net.predict(&Tensor::from_f64(&[1, 2, 2], &[1., 2., 3., 4.])).unwrap();
        assert_eq!(y.shape, vec![1, 2, 2]);
        assert_eq!(y.data, vec![2., 4., 6., 8.]);
    }

    #[test]
    fn maxpool_example() {
        let net = Network::<f64>::empty(vec![1, 2, 2], vec![LayerSpec::MaxPool2d { size: 2, stride: 2 }]).unwrap();
        let y = net.predict(&Tensor::from_f64(&[1, 2, 2], &[1., 2., 3., 4.])).unwrap();
        assert_eq!(y.data, vec![4.]);
    }

    #[test]
    fn dense_sum_loss_gradient_is_outer_product() {
        let mut net = Network::<f64>::new(vec![3], vec![LayerSpec::Dense { inputs: 3, outputs: 2 }], 1).unwrap();
        net.params_mut()[1].value.data = vec![0.3, -0.2];
        let x = Tensor::from_f64(&[3], &[1.0, -2.0, 0.5]);
        let (_, cache) = net.forward(&x, true, 0).unwrap();
        let g = net.backward(&cache, &Tensor::from_f64(&[2], &[1.0, 1.0])).unwrap();
        assert_eq!(g[0].data, vec![1.0, -2.0, 0.5, 1.0, -2.0, 0.5]);
        assert_eq!(g[1].data, vec![1.0, 1.0]);
    }

    #[test]
    fn relu_blocks_negative_inputs() {
        let net =
            Network::<f64>::new(vec![2], vec![LayerSpec::Dense { inputs: 2, outputs: 2 }, LayerSpec::ReLU], 4).unwrap();
        let mut net = net;
        net.params_mut()[0].value.data = vec![1.0, 0.0, 0.0, 1.0];
        let (y, cache) = net.forward(&Tensor::from_f64(&[2], &[-1.0, 2.0]), true, 0).unwrap();
        assert_eq!(y.data, vec![0.0, 2.0]);
        let g = net.backward(&cache, &Tensor::from_f64(&[2], &[1.0, 1.0])).unwrap();
        // unit 0 was negative: no gradient reaches its weights or bias
        assert_eq!(&g[0].data[..2], &[0.0, 0.0]);
        assert_eq!(g[1].data, vec![0.0, 1.0]);
    }

    #[test]
    fn wrong_input_shape_names_layer() {
        let net = Network::<f32>::empty(vec![1, 4, 4], vec![LayerSpec::MaxPool2d { size: 2, stride: 2 }]).unwrap();
        let err = net.predict(&Tensor::zeros(&[1, 3, 3])).unwrap_err();
        assert!(matches!(err, NnError::Dimension { kind: "MaxPool2d", .. }), "{err}");
    }

    #[test]
    fn stale_and_inference_caches_are_rejected() {
        let mut net = Network::<f64>::new(vec![2], vec![LayerSpec::Dense { inputs: 2, outputs: 1 }], 0).unwrap();
        let x = Tensor::from_f64(&[2], &[1.0, 1.0]);
        let (_, inf) = net.forward(&x, false, 0).unwrap();
        assert!(matches!(net.backward(&inf, &Tensor::scalar(1.0)), Err(NnError::State(_))));
        let (_, tr) = net.forward(&x, true, 0).unwrap();
        net.params_mut()[0].value.data[0] += 1.0;
        assert!(matches!(net.backward(&tr, &Tensor::scalar(1.0)), Err(NnError::State(_))));
    }

    #[test]
    fn dropout_statistics() {
        let net = Network::<f64>::empty(vec![20_000], vec![LayerSpec::Dropout { rate: 0.3 }]).unwrap();
        let x = Tensor::from_f64(&[20_000], &vec![1.0; 20_000]);
        let (y, _) = net.forward(&x, true, 9).unwrap();
        let zeros = y.data.iter().filter(|v| **v == 0.0).count() as f64 / 20_000.0;
        assert!((zeros - 0.3).abs() < 0.02, "{zeros}");
        assert!(y.data.iter().all(|v| *v == 0.0 || (*v - 1.0 / 0.7).abs() < 1e-12));
        assert_eq!(net.predict(&x).unwrap(), x);
        let id = Network::<f64>::empty(vec![5], vec![LayerSpec::Dropout { rate: 0.0 }]).unwrap();
        let x5 = Tensor::from_f64(&[5], &[1., 2., 3., 4., 5.]);
        assert_eq!(id.forward(&x5, true, 1).unwrap().0, x5);
    }

    #[test]
    fn initialisation_is_seeded_and_bounded() {
        let layers = vec![LayerSpec::Dense { inputs: 16, outputs: 4 }];
        let a = Network::<f32>::new(vec![16], layers.clone(), 5).unwrap();
        let b = Network::<f32>::new(vec![16], layers.clone(), 5).unwrap();
        let c = Network::<f32>::new(vec![16], layers, 6).unwrap();
        assert_eq!(a.params, b.params);
        assert_ne!(a.params, c.params);
        let bound = (6.0f32 / 16.0).sqrt();
        assert!(a.params[0].value.data.iter().all(|v| v.abs() <= bound));
        assert!(a.params[0].value.data.iter().any(|v| v.abs() > 0.25));
        assert!(a.params[1].value.data.iter().all(|v| *v == 0.0));
        let s = Network::<f32>::new(vec![2, 3], vec![LayerSpec::ColumnScale { columns: 3 }], 5).unwrap();
        assert_eq!(s.params[0].value.data, vec![1.0; 3]);
    }
}
