//! Forward pass with activation cache and the matching reverse pass,
//! generic over [`Scalar`].

use alloc::vec;
use alloc::vec::Vec;

use super::{LossKind, Mlp, Scalar};
use crate::Matrix;

pub(crate) struct Cache<S> {
    /// `inputs[l]` is the (n x in_l) input to layer `l`; the last entry is the
    /// head's raw output.
    pub acts: Vec<Vec<S>>,
    /// Encoder pre-activations, one per encoder layer.
    pub pres: Vec<Vec<S>>,
    pub rows: usize,
}

impl<S: Scalar> Cache<S> {
    pub fn outputs(&self) -> &[S] {
        self.acts.last().expect("cache has outputs")
    }

    /// Encoder output (input of the head).
    pub fn features(&self) -> &[S] {
        &self.acts[self.acts.len() - 2]
    }
}

fn dense<S: Scalar>(w: &[S], b: Option<&[S]>, x: &[S], rows: usize, input: usize, output: usize) -> Vec<S> {
    let mut out = vec![S::zero(); rows * output];
    for i in 0..rows {
        let xi = &x[i * input..(i + 1) * input];
        for j in 0..output {
            let wj = &w[j * input..(j + 1) * input];
            let mut acc = match b {
                Some(b) => b[j],
                None => S::zero(),
            };
            for k in 0..input {
                acc += wj[k] * xi[k];
            }
            out[i * output + j] = acc;
        }
    }
    out
}

pub(crate) fn forward_cached<S: Scalar>(model: &Mlp, params: &[S], inputs: &Matrix) -> Cache<S> {
    let rows = inputs.rows();
    let mut acts: Vec<Vec<S>> = Vec::with_capacity(model.encoder().len() + 2);
    let mut pres = Vec::with_capacity(model.encoder().len());
    acts.push(inputs.data().iter().map(|&v| S::from_f64(v)).collect());
    let mut off = 0;
    for layer in model.encoder() {
        let nw = layer.input * layer.output;
        let w = &params[off..off + nw];
        let b = layer.bias.then(|| &params[off + nw..off + nw + layer.output]);
        off += layer.param_count();
        let pre = dense(w, b, acts.last().unwrap(), rows, layer.input, layer.output);
        let post = pre.iter().map(|&v| layer.activation.apply(v)).collect();
        pres.push(pre);
        acts.push(post);
    }
    let head = model.head();
    let nw = head.input * head.output;
    let w = &params[off..off + nw];
    let b = head.bias.then(|| &params[off + nw..off + nw + head.output]);
    let out = dense(w, b, acts.last().unwrap(), rows, head.input, head.output);
    acts.push(out);
    Cache { acts, pres, rows }
}

/// Gradient of `Σ_{i,j} d_out[i][j] · outputs[i][j]` with respect to the parameters.
pub(crate) fn backward<S: Scalar>(model: &Mlp, params: &[S], cache: &Cache<S>, d_out: &[S]) -> Vec<S> {
    let rows = cache.rows;
    let mut grad = vec![S::zero(); params.len()];
    let layers: Vec<_> = model.layers().copied().collect();
    let mut offsets = Vec::with_capacity(layers.len());
    let mut off = 0;
    for l in &layers {
        offsets.push(off);
        off += l.param_count();
    }

    let mut delta: Vec<S> = d_out.to_vec();
    for li in (0..layers.len()).rev() {
        let layer = layers[li];
        let (input, output) = (layer.input, layer.output);
        if li < layers.len() - 1 {
            // encoder layer: fold in the activation derivative
            let pre = &cache.pres[li];
            let post = &cache.acts[li + 1];
            for ((d, &x), &y) in delta.iter_mut().zip(pre).zip(post) {
                *d = *d * layer.activation.derivative(x, y);
            }
        }
        let x = &cache.acts[li];
        let o = offsets[li];
        let nw = input * output;
        {
            let (gw, gb) = grad[o..o + layer.param_count()].split_at_mut(nw);
            for i in 0..rows {
                let di = &delta[i * output..(i + 1) * output];
                let xi = &x[i * input..(i + 1) * input];
                for j in 0..output {
                    let dj = di[j];
                    let gwj = &mut gw[j * input..(j + 1) * input];
                    for k in 0..input {
                        gwj[k] += dj * xi[k];
                    }
                    if layer.bias {
                        gb[j] += dj;
                    }
                }
            }
        }
        if li > 0 {
            let w = &params[o..o + nw];
            let mut d_in = vec![S::zero(); rows * input];
            for i in 0..rows {
                let di = &delta[i * output..(i + 1) * output];
                let dx = &mut d_in[i * input..(i + 1) * input];
                for j in 0..output {
                    let dj = di[j];
                    let wj = &w[j * input..(j + 1) * input];
                    for k in 0..input {
                        dx[k] += dj * wj[k];
                    }
                }
            }
            delta = d_in;
        }
    }
    grad
}

pub(crate) struct BatchLoss<S> {
    pub loss: S,
    pub grad_params: Vec<S>,
    pub grad_targets: Vec<S>,
}

/// Mean loss over the rows of `inputs` with gradients for params and targets.
/// An empty batch has loss 0 and zero gradients.
pub(crate) fn batch_loss<S: Scalar>(
    model: &Mlp,
    params: &[S],
    inputs: &Matrix,
    targets: &[S],
    kind: LossKind,
) -> BatchLoss<S> {
    let n = inputs.rows();
    let k = model.output_dim();
    if n == 0 {
        return BatchLoss { loss: S::zero(), grad_params: vec![S::zero(); params.len()], grad_targets: Vec::new() };
    }
    let cache = forward_cached(model, params, inputs);
    let out = cache.outputs();
    let inv_n = 1.0 / n as f64;
    let mut d_out = vec![S::zero(); n * k];
    let mut d_z = vec![S::zero(); n * k];
    let mut scratch = vec![S::zero(); k];
    let mut loss = S::zero();
    for i in 0..n {
        let r = i * k..(i + 1) * k;
        loss += super::loss::row_loss(
            kind,
            model.task(),
            &out[r.clone()],
            &targets[r.clone()],
            &mut d_out[r.clone()],
            &mut d_z[r],
            &mut scratch,
        );
    }
    for v in d_out.iter_mut().chain(d_z.iter_mut()) {
        *v = v.scale(inv_n);
    }
    let grad_params = backward(model, params, &cache, &d_out);
    BatchLoss { loss: loss.scale(inv_n), grad_params, grad_targets: d_z }
}
