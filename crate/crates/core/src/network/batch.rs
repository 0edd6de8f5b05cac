//! Batched forward/backward through the MLP with second-order jets.
//!
//! Every evaluation point contributes `1 + 2k` rows, `k` being the number
//! of tagged axes: one value row, then a first- and a second-derivative row
//! per axis. Rows are stored block-wise:
//!
//! ```text
//! [values (P rows) | d1 axis 0 | d2 axis 0 | d1 axis 1 | d2 axis 1 | …]
//! ```
//!
//! The linear part of a layer acts on every row identically (bias on value
//! rows only), so one matrix product per layer propagates the whole jet.
//! [`Network::batch_backward`] is the hand-derived adjoint of that forward
//! pass and accumulates parameter gradients for any adjoint seeded on the
//! output rows.

use alloc::vec::Vec;

use super::gemm::{gemm, View};
use super::Network;

/// Cached activations of one batched forward pass.
#[derive(Debug, Default, Clone)]
pub struct BatchWorkspace {
    n_points: usize,
    axes: Vec<usize>,
    // input rows, then per layer: pre-activation and post-activation rows
    input: Vec<f64>,
    pre: Vec<Vec<f64>>,
    post: Vec<Vec<f64>>,
    grad_post: Vec<f64>,
    grad_pre: Vec<f64>,
}

impl BatchWorkspace {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    fn rows(&self) -> usize {
        self.n_points * (1 + 2 * self.axes.len())
    }

    /// Network outputs, one per point.
    pub fn values(&self) -> &[f64] {
        &self.output()[..self.n_points]
    }

    /// `∂u/∂x` along the `k`-th tagged axis, one per point.
    pub fn d1(&self, k: usize) -> &[f64] {
        let p = self.n_points;
        &self.output()[p * (1 + 2 * k)..p * (2 + 2 * k)]
    }

    /// `∂²u/∂x²` along the `k`-th tagged axis, one per point.
    pub fn d2(&self, k: usize) -> &[f64] {
        let p = self.n_points;
        &self.output()[p * (2 + 2 * k)..p * (3 + 2 * k)]
    }

    fn output(&self) -> &[f64] {
        self.post.last().map(|v| v.as_slice()).unwrap_or(&[])
    }
}

impl Network {
    /// Evaluates the network at `P` points (`inputs` row-major, `P × input_dim`),
    /// propagating second-order jets along each of `axes`.
    ///
    /// Panics if `inputs` is not a multiple of the input dimension or an axis is out of range.
    pub fn batch_forward(&self, inputs: &[f64], axes: &[usize], ws: &mut BatchWorkspace) {
        let dim = self.config.input_dim;
        assert_eq!(inputs.len() % dim, 0, "batch input length");
        assert!(axes.iter().all(|&a| a < dim), "axis out of range");
        let p = inputs.len() / dim;
        ws.n_points = p;
        ws.axes.clear();
        ws.axes.extend_from_slice(axes);
        let rows = ws.rows();

        ws.input.clear();
        ws.input.resize(rows * dim, 0.0);
        ws.input[..p * dim].copy_from_slice(inputs);
        for (k, &axis) in axes.iter().enumerate() {
            let d1 = &mut ws.input[p * (1 + 2 * k) * dim..p * (2 + 2 * k) * dim];
            for row in d1.chunks_exact_mut(dim) {
                row[axis] = 1.0;
            }
        }

        let shapes = self.config.layer_shapes();
        ws.pre.resize_with(shapes.len(), Vec::new);
        ws.post.resize_with(shapes.len(), Vec::new);
        let last = shapes.len() - 1;
        let mut offset = 0;
        for (l, &(fan_in, fan_out)) in shapes.iter().enumerate() {
            let w = &self.params[offset..offset + fan_in * fan_out];
            let b = &self.params[offset + fan_in * fan_out..offset + (fan_in + 1) * fan_out];
            offset += (fan_in + 1) * fan_out;

            let mut pre = core::mem::take(&mut ws.pre[l]);
            set_len(&mut pre, rows * fan_out);
            {
                let input: &[f64] = if l == 0 { &ws.input } else { &ws.post[l - 1] };
                gemm(rows, fan_in, fan_out, View::row_major(input, fan_in), View::transposed(w, fan_in), 0.0, &mut pre);
            }
            for z in pre[..p * fan_out].chunks_exact_mut(fan_out) {
                for (zo, &bo) in z.iter_mut().zip(b) {
                    *zo += bo;
                }
            }

            let mut post = core::mem::take(&mut ws.post[l]);
            if l == last {
                post.clear();
                post.extend_from_slice(&pre);
            } else {
                set_len(&mut post, rows * fan_out);
                tanh_jet_forward(&pre, &mut post, p, axes.len(), fan_out);
            }
            ws.pre[l] = pre;
            ws.post[l] = post;
        }
    }

    /// Accumulates into `grad` the parameter gradient of `Σ_rows adjoint[row]·output[row]`
    /// for the pass cached in `ws`.
    pub fn batch_backward(&self, ws: &mut BatchWorkspace, adjoint: &[f64], grad: &mut [f64]) {
        let rows = ws.rows();
        let p = ws.n_points;
        let k = ws.axes.len();
        assert_eq!(adjoint.len(), rows, "adjoint length");
        assert_eq!(grad.len(), self.params.len(), "gradient length");

        let shapes = self.config.layer_shapes();
        let last = shapes.len() - 1;
        let offsets: Vec<usize> = shapes
            .iter()
            .scan(0, |acc, &(i, o)| {
                let start = *acc;
                *acc += (i + 1) * o;
                Some(start)
            })
            .collect();

        let mut grad_post = core::mem::take(&mut ws.grad_post);
        let mut grad_pre = core::mem::take(&mut ws.grad_pre);
        grad_pre.clear();
        grad_pre.extend_from_slice(adjoint);

        for l in (0..=last).rev() {
            let (fan_in, fan_out) = shapes[l];
            if l != last {
                // grad_post holds ∂/∂(post-activation rows) of this layer
                set_len(&mut grad_pre, rows * fan_out);
                tanh_jet_backward(&ws.pre[l], &ws.post[l], &grad_post, &mut grad_pre, p, k, fan_out);
            }
            let offset = offsets[l];
            let input: &[f64] = if l == 0 { &ws.input } else { &ws.post[l - 1] };
            let w = &self.params[offset..offset + fan_in * fan_out];
            let (gw, gb) = grad[offset..offset + (fan_in + 1) * fan_out].split_at_mut(fan_in * fan_out);

            gemm(fan_out, rows, fan_in, View::transposed(&grad_pre, fan_out), View::row_major(input, fan_in), 1.0, gw);
            for gz in grad_pre[..p * fan_out].chunks_exact(fan_out) {
                for (a, &g) in gb.iter_mut().zip(gz) {
                    *a += g;
                }
            }

            if l > 0 {
                set_len(&mut grad_post, rows * fan_in);
                gemm(rows, fan_out, fan_in, View::row_major(&grad_pre, fan_out), View::row_major(w, fan_in), 0.0, &mut grad_post);
            }
        }
        ws.grad_post = grad_post;
        ws.grad_pre = grad_pre;
    }
}

/// Resizes a scratch buffer whose contents are about to be overwritten in full.
fn set_len(v: &mut Vec<f64>, n: usize) {
    if v.len() != n {
        v.resize(n, 0.0);
    }
}

fn tanh_jet_forward(pre: &[f64], post: &mut [f64], p: usize, k: usize, n: usize) {
    for i in 0..p * n {
        let s = libm::tanh(pre[i]);
        post[i] = s;
        let s1 = 1.0 - s * s;
        let s2 = -2.0 * s * s1;
        for a in 0..k {
            let j1 = p * n * (1 + 2 * a) + i;
            let j2 = p * n * (2 + 2 * a) + i;
            let z1 = pre[j1];
            let z2 = pre[j2];
            post[j1] = s1 * z1;
            post[j2] = s2 * z1 * z1 + s1 * z2;
        }
    }
}

fn tanh_jet_backward(pre: &[f64], post: &[f64], g_post: &[f64], g_pre: &mut [f64], p: usize, k: usize, n: usize) {
    for i in 0..p * n {
        let s = post[i];
        let s1 = 1.0 - s * s;
        let s2 = -2.0 * s * s1;
        let s3 = -2.0 * s1 * (s1 - 2.0 * s * s);
        let mut gv = g_post[i] * s1;
        for a in 0..k {
            let j1 = p * n * (1 + 2 * a) + i;
            let j2 = p * n * (2 + 2 * a) + i;
            let z1 = pre[j1];
            let z2 = pre[j2];
            let g1 = g_post[j1];
            let g2 = g_post[j2];
            g_pre[j2] = g2 * s1;
            g_pre[j1] = g1 * s1 + 2.0 * g2 * s2 * z1;
            gv += g1 * s2 * z1 + g2 * (s3 * z1 * z1 + s2 * z2);
        }
        g_pre[i] = gv;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diff::{grad, DualJet2, Scalar};
    use crate::network::NetworkConfig;
    use alloc::vec;

    fn sample_points() -> Vec<f64> {
        vec![0.1, 0.2, 0.3, 1.7, 0.4, 0.9, 1.2, 1.1, 0.05, 0.6, 0.45, 0.35]
    }

    #[test]
    fn batch_matches_pointwise_jets() {
        let net = Network::init(NetworkConfig::new(3, 3, 6, 21)).unwrap();
        let pts = sample_points();
        let mut ws = BatchWorkspace::new();
        net.batch_forward(&pts, &[0, 1], &mut ws);
        for (i, x) in pts.chunks_exact(3).enumerate() {
            let jx = net.forward_jet(x, 0).unwrap();
            let jy = net.forward_jet(x, 1).unwrap();
            let tol = 1e-13;
            assert!((ws.values()[i] - jx.value).abs() < tol);
            assert!((ws.d1(0)[i] - jx.d1).abs() < tol);
            assert!((ws.d2(0)[i] - jx.d2).abs() < tol);
            assert!((ws.d1(1)[i] - jy.d1).abs() < tol);
            assert!((ws.d2(1)[i] - jy.d2).abs() < tol);
        }
    }

    #[test]
    fn batch_without_axes_matches_forward() {
        let net = Network::init(NetworkConfig::new(2, 2, 5, 4)).unwrap();
        let pts = [0.3, 0.1, 1.5, 0.8];
        let mut ws = BatchWorkspace::new();
        net.batch_forward(&pts, &[], &mut ws);
        assert!((ws.values()[0] - net.forward(&pts[..2]).unwrap()).abs() < 1e-14);
        assert!((ws.values()[1] - net.forward(&pts[2..]).unwrap()).abs() < 1e-14);
    }

    /// The adjoint of a random linear functional of (u, u_x, u_xx, u_y, u_yy)
    /// agrees with the tape running through `DualJet2<Var>`.
    #[test]
    fn backward_matches_tape() {
        let net = Network::init(NetworkConfig::new(3, 2, 5, 8)).unwrap();
        let pts = sample_points();
        let p = pts.len() / 3;
        let coeff: Vec<f64> = (0..p * 5).map(|i| ((i * 7 + 3) % 11) as f64 / 11.0 - 0.4).collect();

        let mut ws = BatchWorkspace::new();
        net.batch_forward(&pts, &[0, 1], &mut ws);
        let mut g = vec![0.0; net.params().len()];
        net.batch_backward(&mut ws, &coeff, &mut g);

        let (_, g_tape) = grad(
            |tape, params| {
                let mut total = tape.constant(0.0);
                for (i, x) in pts.chunks_exact(3).enumerate() {
                    for (k, axis) in [0usize, 1].into_iter().enumerate() {
                        let jets: Vec<DualJet2<_>> = x
                            .iter()
                            .enumerate()
                            .map(|(d, &xi)| {
                                let v = tape.constant(xi);
                                if d == axis { DualJet2::variable(v) } else { DualJet2::constant(v) }
                            })
                            .collect();
                        let u = net.forward_with(params, &jets);
                        if k == 0 {
                            total = total + u.value.scale(coeff[i]);
                        }
                        total = total + u.d1.scale(coeff[p * (1 + 2 * k) + i]);
                        total = total + u.d2.scale(coeff[p * (2 + 2 * k) + i]);
                    }
                }
                total
            },
            net.params(),
        );
        for (a, b) in g.iter().zip(&g_tape) {
            assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0), "{a} vs {b}");
        }
    }
}
