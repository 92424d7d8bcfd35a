//! Stacked RNN / GRU / LSTM cells with backpropagation through time.
//!
//! Gate layout in the stacked weight matrices:
//! - RNN: `h' = tanh(W_ih x + W_hh h + b)`
//! - GRU (`r, z, n`): `n = tanh(W_in x + b_in + r * (W_hn h + b_hn))`, `h' = (1 - z) * n + z * h`
//! - LSTM (`i, f, g, o`): `c' = f * c + i * g`, `h' = o * tanh(c')`

use super::spec::CellKind;
use super::tensor::{gemm, Mat, Scalar};

#[inline]
fn sigmoid<T: Scalar>(x: T) -> T {
    T::one() / (T::one() + (-x).exp())
}

/// Per-layer parameter views, in the order produced by `LayerSpec::param_shapes`.
pub(crate) struct CellParams<'a, T> {
    pub w_ih: &'a [T],
    pub w_hh: &'a [T],
    pub b_ih: &'a [T],
    /// GRU only.
    pub b_hh: Option<&'a [T]>,
}

pub(crate) struct CellGrads<'a, T> {
    pub w_ih: &'a mut [T],
    pub w_hh: &'a mut [T],
    pub b_ih: &'a mut [T],
    pub b_hh: Option<&'a mut [T]>,
}

/// Cached activations of one layer over all time steps.
#[derive(Debug, Clone)]
pub struct LayerTrace<T> {
    input: Vec<T>,
    /// Hidden state before each step, `[T+1, H]` (row 0 is the initial state).
    hs: Vec<T>,
    /// Cell state, LSTM only, `[T+1, H]`.
    cs: Vec<T>,
    /// Post-activation gates, `[T, G*H]`.
    gates: Vec<T>,
    /// GRU: `W_hn h + b_hn` per step, `[T, H]`.
    hn: Vec<T>,
}

impl<T: Scalar> LayerTrace<T> {
    pub fn final_hidden(&self, hidden: usize) -> &[T] {
        let steps = self.hs.len() / hidden - 1;
        &self.hs[steps * hidden..]
    }

    pub fn outputs(&self, hidden: usize) -> &[T] {
        &self.hs[hidden..]
    }
}

/// Run one layer over `steps` inputs of width `inp`.
#[allow(clippy::too_many_arguments)]
pub(crate) fn layer_forward<T: Scalar>(
    cell: CellKind,
    p: &CellParams<'_, T>,
    input: &[T],
    steps: usize,
    inp: usize,
    hidden: usize,
    h0: Option<&[T]>,
    c0: Option<&[T]>,
) -> LayerTrace<T> {
    let gh = cell.gates() * hidden;
    // x-projection for all steps at once: [steps, gh]
    let mut xp = Vec::with_capacity(steps * gh);
    for _ in 0..steps {
        xp.extend_from_slice(p.b_ih);
    }
    gemm(Mat::N(input, steps, inp), Mat::T(p.w_ih, inp, gh), T::one(), &mut xp);

    let mut hs = vec![T::zero(); (steps + 1) * hidden];
    if let Some(h0) = h0 {
        hs[..hidden].copy_from_slice(h0);
    }
    let mut cs = if cell == CellKind::Lstm { vec![T::zero(); (steps + 1) * hidden] } else { Vec::new() };
    if let (Some(c0), CellKind::Lstm) = (c0, cell) {
        cs[..hidden].copy_from_slice(c0);
    }
    let mut gates = vec![T::zero(); steps * gh];
    let mut hn = if cell == CellKind::Gru { vec![T::zero(); steps * hidden] } else { Vec::new() };
    let mut hp = vec![T::zero(); gh];

    for t in 0..steps {
        let (prev, next) = hs.split_at_mut((t + 1) * hidden);
        let h_prev = &prev[t * hidden..];
        let h_next = &mut next[..hidden];
        match p.b_hh {
            Some(b) => hp.copy_from_slice(b),
            None => hp.fill(T::zero()),
        }
        gemm(Mat::N(p.w_hh, gh, hidden), Mat::N(h_prev, hidden, 1), T::one(), &mut hp);
        let x = &xp[t * gh..(t + 1) * gh];
        let g = &mut gates[t * gh..(t + 1) * gh];
        match cell {
            CellKind::Rnn => {
                for j in 0..hidden {
                    let a = (x[j] + hp[j]).tanh();
                    g[j] = a;
                    h_next[j] = a;
                }
            }
            CellKind::Gru => {
                let hn_t = &mut hn[t * hidden..(t + 1) * hidden];
                for j in 0..hidden {
                    let r = sigmoid(x[j] + hp[j]);
                    let z = sigmoid(x[hidden + j] + hp[hidden + j]);
                    let hn_j = hp[2 * hidden + j];
                    let n = (x[2 * hidden + j] + r * hn_j).tanh();
                    g[j] = r;
                    g[hidden + j] = z;
                    g[2 * hidden + j] = n;
                    hn_t[j] = hn_j;
                    h_next[j] = (T::one() - z) * n + z * h_prev[j];
                }
            }
            CellKind::Lstm => {
                let (cprev, cnext) = cs.split_at_mut((t + 1) * hidden);
                let c_prev = &cprev[t * hidden..];
                let c_next = &mut cnext[..hidden];
                for j in 0..hidden {
                    let i = sigmoid(x[j] + hp[j]);
                    let f = sigmoid(x[hidden + j] + hp[hidden + j]);
                    let gg = (x[2 * hidden + j] + hp[2 * hidden + j]).tanh();
                    let o = sigmoid(x[3 * hidden + j] + hp[3 * hidden + j]);
                    g[j] = i;
                    g[hidden + j] = f;
                    g[2 * hidden + j] = gg;
                    g[3 * hidden + j] = o;
                    let c = f * c_prev[j] + i * gg;
                    c_next[j] = c;
                    h_next[j] = o * c.tanh();
                }
            }
        }
    }
    LayerTrace { input: input.to_vec(), hs, cs, gates, hn }
}

/// Backpropagate through one layer. `grad_h` is the gradient w.r.t. every
/// output hidden state `[steps, H]`. Returns the gradient w.r.t. the input sequence.
#[allow(clippy::too_many_arguments)]
pub(crate) fn layer_backward<T: Scalar>(
    cell: CellKind,
    p: &CellParams<'_, T>,
    grads: &mut CellGrads<'_, T>,
    trace: &LayerTrace<T>,
    grad_h: &[T],
    steps: usize,
    inp: usize,
    hidden: usize,
    need_input: bool,
) -> Option<Vec<T>> {
    let gh = cell.gates() * hidden;
    // pre-activation gradients of the x-part and h-part, [steps, gh]
    let mut dx_pre = vec![T::zero(); steps * gh];
    let mut dh_pre = if cell == CellKind::Gru { vec![T::zero(); steps * gh] } else { Vec::new() };
    let mut dh = vec![T::zero(); hidden];
    let mut dc = vec![T::zero(); hidden];
    let one = T::one();

    for t in (0..steps).rev() {
        for j in 0..hidden {
            dh[j] += grad_h[t * hidden + j];
        }
        let g = &trace.gates[t * gh..(t + 1) * gh];
        let h_prev = &trace.hs[t * hidden..(t + 1) * hidden];
        let dxp = &mut dx_pre[t * gh..(t + 1) * gh];
        let mut dh_direct = vec![T::zero(); hidden];
        match cell {
            CellKind::Rnn => {
                for j in 0..hidden {
                    let a = g[j];
                    dxp[j] = dh[j] * (one - a * a);
                }
            }
            CellKind::Gru => {
                let hn = &trace.hn[t * hidden..(t + 1) * hidden];
                let dhp = &mut dh_pre[t * gh..(t + 1) * gh];
                for j in 0..hidden {
                    let (r, z, n) = (g[j], g[hidden + j], g[2 * hidden + j]);
                    let d = dh[j];
                    let dn = d * (one - z) * (one - n * n);
                    let dz = d * (h_prev[j] - n) * z * (one - z);
                    let dr = dn * hn[j] * r * (one - r);
                    dh_direct[j] = d * z;
                    dxp[j] = dr;
                    dxp[hidden + j] = dz;
                    dxp[2 * hidden + j] = dn;
                    dhp[j] = dr;
                    dhp[hidden + j] = dz;
                    dhp[2 * hidden + j] = dn * r;
                }
            }
            CellKind::Lstm => {
                let c_prev = &trace.cs[t * hidden..(t + 1) * hidden];
                let c = &trace.cs[(t + 1) * hidden..(t + 2) * hidden];
                for j in 0..hidden {
                    let (i, f, gg, o) = (g[j], g[hidden + j], g[2 * hidden + j], g[3 * hidden + j]);
                    let tc = c[j].tanh();
                    let dcj = dc[j] + dh[j] * o * (one - tc * tc);
                    dxp[j] = dcj * gg * i * (one - i);
                    dxp[hidden + j] = dcj * c_prev[j] * f * (one - f);
                    dxp[2 * hidden + j] = dcj * i * (one - gg * gg);
                    dxp[3 * hidden + j] = dh[j] * tc * o * (one - o);
                    dc[j] = dcj * f;
                }
            }
        }
        // dh for the previous step: recurrent path plus direct path (GRU)
        let hpart: &[T] =
            if cell == CellKind::Gru { &dh_pre[t * gh..(t + 1) * gh] } else { &dx_pre[t * gh..(t + 1) * gh] };
        gemm(Mat::T(p.w_hh, hidden, gh), Mat::N(hpart, gh, 1), T::zero(), &mut dh);
        for j in 0..hidden {
            dh[j] += dh_direct[j];
        }
    }

    let hs_prev = &trace.hs[..steps * hidden];
    let hpart = if cell == CellKind::Gru { &dh_pre } else { &dx_pre };
    gemm(Mat::T(hpart, gh, steps), Mat::N(hs_prev, steps, hidden), T::one(), grads.w_hh);
    gemm(Mat::T(&dx_pre, gh, steps), Mat::N(&trace.input, steps, inp), T::one(), grads.w_ih);
    for t in 0..steps {
        for k in 0..gh {
            grads.b_ih[k] += dx_pre[t * gh + k];
        }
        if let Some(b) = grads.b_hh.as_deref_mut() {
            for k in 0..gh {
                b[k] += hpart[t * gh + k];
            }
        }
    }
    if !need_input {
        return None;
    }
    let mut dinput = vec![T::zero(); steps * inp];
    gemm(Mat::N(&dx_pre, steps, gh), Mat::N(p.w_ih, gh, inp), T::zero(), &mut dinput);
    Some(dinput)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gru_halves_hidden_state() {
        let h = 3;
        let zeros_ih = vec![0.0f64; 3 * h * 2];
        let zeros_hh = vec![0.0f64; 3 * h * h];
        let zb = vec![0.0f64; 3 * h];
        let p = CellParams { w_ih: &zeros_ih, w_hh: &zeros_hh, b_ih: &zb, b_hh: Some(&zb) };
        let h0 = [0.8, -0.4, 2.0];
        let x = vec![1.0; 2 * 4];
        let trace = layer_forward(CellKind::Gru, &p, &x, 4, 2, h, Some(&h0), None);
        let out = trace.outputs(h);
        for (j, v) in h0.iter().enumerate() {
            assert!((out[j] - 0.5 * v).abs() < 1e-15);
        }
        let fin = trace.final_hidden(h);
        for (j, v) in h0.iter().enumerate() {
            assert!((fin[j] - v / 16.0).abs() < 1e-15);
        }
    }
}
