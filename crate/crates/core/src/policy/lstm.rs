//! Gated recurrent cell with explicit cell state: forward pass with the
//! activations needed for backpropagation, and the matching backward pass.
//!
//! Gate layout in the stacked pre-activation vector: input, forget, candidate,
//! output, each `hidden` wide.

use crate::scalar::Scalar;
use crate::tensor::{sigmoid, Tensor};

#[derive(Debug, Clone, PartialEq)]
pub struct LstmLayer<F> {
    /// `4h × (input + h)`, acting on `[x; h_prev]`.
    pub weight: Tensor<F>,
    /// `4h × 1`.
    pub bias: Tensor<F>,
}

impl<F: Scalar> LstmLayer<F> {
    pub fn hidden(&self) -> usize {
        self.weight.rows() / 4
    }

    pub fn input(&self) -> usize {
        self.weight.cols() - self.hidden()
    }
}

#[derive(Debug, Clone)]
pub(crate) struct CellCache<F> {
    /// `[x; h_prev]`
    pub xh: Vec<F>,
    /// Post-activation gates `[i; f; g; o]`.
    pub gates: Vec<F>,
    pub c_prev: Vec<F>,
    pub tanh_c: Vec<F>,
    pub h: Vec<F>,
    pub c: Vec<F>,
}

pub(crate) fn cell_forward<F: Scalar>(
    layer: &LstmLayer<F>,
    x: &[F],
    h_prev: &[F],
    c_prev: &[F],
) -> CellCache<F> {
    let h = layer.hidden();
    let mut xh = Vec::with_capacity(x.len() + h);
    xh.extend_from_slice(x);
    xh.extend_from_slice(h_prev);
    let mut gates = layer.bias.data().to_vec();
    for (r, g) in gates.iter_mut().enumerate() {
        *g += crate::tensor::dot(layer.weight.row(r), &xh);
    }
    for (k, g) in gates.iter_mut().enumerate() {
        *g = if k / h == 2 { g.tanh() } else { sigmoid(*g) };
    }
    let mut c = vec![F::zero(); h];
    let mut tanh_c = vec![F::zero(); h];
    let mut out = vec![F::zero(); h];
    for j in 0..h {
        let (i, f, g, o) = (gates[j], gates[h + j], gates[2 * h + j], gates[3 * h + j]);
        c[j] = f * c_prev[j] + i * g;
        tanh_c[j] = c[j].tanh();
        out[j] = o * tanh_c[j];
    }
    CellCache {
        xh,
        gates,
        c_prev: c_prev.to_vec(),
        tanh_c,
        h: out,
        c,
    }
}

/// Backward through one cell application. `dh` and `dc` are the total
/// gradients arriving at this step's outputs. Accumulates parameter gradients
/// and returns `(dx, dh_prev, dc_prev)`.
pub(crate) fn cell_backward<F: Scalar>(
    layer: &LstmLayer<F>,
    cache: &CellCache<F>,
    dh: &[F],
    dc: &[F],
    grad: &mut LstmLayer<F>,
) -> (Vec<F>, Vec<F>, Vec<F>) {
    let h = layer.hidden();
    let one = F::one();
    let mut dz = vec![F::zero(); 4 * h];
    let mut dc_prev = vec![F::zero(); h];
    let g = &cache.gates;
    for j in 0..h {
        let (i, f, gg, o) = (g[j], g[h + j], g[2 * h + j], g[3 * h + j]);
        let tc = cache.tanh_c[j];
        let d_o = dh[j] * tc;
        let dcj = dc[j] + dh[j] * o * (one - tc * tc);
        let di = dcj * gg;
        let dg = dcj * i;
        let df = dcj * cache.c_prev[j];
        dc_prev[j] = dcj * f;
        dz[j] = di * i * (one - i);
        dz[h + j] = df * f * (one - f);
        dz[2 * h + j] = dg * (one - gg * gg);
        dz[3 * h + j] = d_o * o * (one - o);
    }
    grad.weight.add_outer(&dz, &cache.xh);
    for (b, &d) in grad.bias.data_mut().iter_mut().zip(&dz) {
        *b += d;
    }
    let mut dxh = vec![F::zero(); cache.xh.len()];
    layer.weight.matvec_t_acc(&dz, &mut dxh);
    let dh_prev = dxh.split_off(layer.input());
    (dxh, dh_prev, dc_prev)
}
