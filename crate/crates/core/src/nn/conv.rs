//! 2-D convolution (im2col + GEMM) and max pooling.

use super::tensor::{gemm, Mat, Scalar};

#[derive(Debug, Clone, Copy)]
pub(crate) struct ConvGeom {
    pub c: usize,
    pub h: usize,
    pub w: usize,
    pub kh: usize,
    pub kw: usize,
    pub sh: usize,
    pub sw: usize,
    pub ph: usize,
    pub pw: usize,
    pub oh: usize,
    pub ow: usize,
}

impl ConvGeom {
    fn rows(&self) -> usize {
        self.c * self.kh * self.kw
    }

    fn cols(&self) -> usize {
        self.oh * self.ow
    }

    /// Source offset in the unpadded input for patch row `(c, ki, kj)` at output `(oy, ox)`.
    #[inline]
    fn src(&self, ki: usize, kj: usize, oy: usize, ox: usize) -> Option<(usize, usize)> {
        let y = (oy * self.sh + ki).checked_sub(self.ph)?;
        let x = (ox * self.sw + kj).checked_sub(self.pw)?;
        (y < self.h && x < self.w).then_some((y, x))
    }
}

pub(crate) fn im2col<T: Scalar>(g: &ConvGeom, input: &[T]) -> Vec<T> {
    let p = g.cols();
    let mut cols = vec![T::zero(); g.rows() * p];
    for c in 0..g.c {
        let plane = &input[c * g.h * g.w..(c + 1) * g.h * g.w];
        for ki in 0..g.kh {
            for kj in 0..g.kw {
                let row = ((c * g.kh + ki) * g.kw + kj) * p;
                let dst = &mut cols[row..row + p];
                for oy in 0..g.oh {
                    for ox in 0..g.ow {
                        if let Some((y, x)) = g.src(ki, kj, oy, ox) {
                            dst[oy * g.ow + ox] = plane[y * g.w + x];
                        }
                    }
                }
            }
        }
    }
    cols
}

fn col2im<T: Scalar>(g: &ConvGeom, cols: &[T], out: &mut [T]) {
    let p = g.cols();
    for c in 0..g.c {
        for ki in 0..g.kh {
            for kj in 0..g.kw {
                let row = ((c * g.kh + ki) * g.kw + kj) * p;
                let src = &cols[row..row + p];
                for oy in 0..g.oh {
                    for ox in 0..g.ow {
                        if let Some((y, x)) = g.src(ki, kj, oy, ox) {
                            out[(c * g.h + y) * g.w + x] += src[oy * g.ow + ox];
                        }
                    }
                }
            }
        }
    }
}

/// Returns the output `[O, oh*ow]` and the im2col matrix for backward.
pub(crate) fn conv_forward<T: Scalar>(
    g: &ConvGeom,
    out_channels: usize,
    weight: &[T],
    bias: &[T],
    input: &[T],
) -> (Vec<T>, Vec<T>) {
    let cols = im2col(g, input);
    let p = g.cols();
    let mut out = Vec::with_capacity(out_channels * p);
    for &b in bias {
        out.extend(std::iter::repeat_n(b, p));
    }
    gemm(Mat::N(weight, out_channels, g.rows()), Mat::N(&cols, g.rows(), p), T::one(), &mut out);
    (out, cols)
}

/// Accumulates weight/bias gradients; returns the input gradient when requested.
#[allow(clippy::too_many_arguments)]
pub(crate) fn conv_backward<T: Scalar>(
    g: &ConvGeom,
    out_channels: usize,
    weight: &[T],
    cols: &[T],
    grad_out: &[T],
    grad_w: &mut [T],
    grad_b: &mut [T],
    need_input: bool,
) -> Option<Vec<T>> {
    let p = g.cols();
    let k = g.rows();
    gemm(Mat::N(grad_out, out_channels, p), Mat::T(cols, p, k), T::one(), grad_w);
    for (o, gb) in grad_b.iter_mut().enumerate() {
        *gb += grad_out[o * p..(o + 1) * p].iter().copied().sum::<T>();
    }
    if !need_input {
        return None;
    }
    let mut dcols = vec![T::zero(); k * p];
    gemm(Mat::T(weight, k, out_channels), Mat::N(grad_out, out_channels, p), T::zero(), &mut dcols);
    let mut dx = vec![T::zero(); g.c * g.h * g.w];
    col2im(g, &dcols, &mut dx);
    Some(dx)
}

/// Returns pooled values and the flat input index of each maximum.
pub(crate) fn maxpool_forward<T: Scalar>(
    c: usize,
    h: usize,
    w: usize,
    size: usize,
    stride: usize,
    input: &[T],
) -> (Vec<T>, Vec<u32>) {
    let oh = (h - size) / stride + 1;
    let ow = (w - size) / stride + 1;
    let mut out = Vec::with_capacity(c * oh * ow);
    let mut arg = Vec::with_capacity(c * oh * ow);
    for ch in 0..c {
        for oy in 0..oh {
            for ox in 0..ow {
                let mut best = usize::MAX;
                let mut best_v = T::neg_infinity();
                for dy in 0..size {
                    for dx in 0..size {
                        let i = (ch * h + oy * stride + dy) * w + ox * stride + dx;
                        if best == usize::MAX || input[i] > best_v {
                            best = i;
                            best_v = input[i];
                        }
                    }
                }
                out.push(best_v);
                arg.push(best as u32);
            }
        }
    }
    (out, arg)
}

pub(crate) fn maxpool_backward<T: Scalar>(input_len: usize, arg: &[u32], grad_out: &[T]) -> Vec<T> {
    let mut dx = vec![T::zero(); input_len];
    for (&i, &g) in arg.iter().zip(grad_out) {
        dx[i as usize] += g;
    }
    dx
}
