//! Fully connected feed-forward network with manual backprop and Adam.
//! Shared by the MLP classifier and the autoencoder.

use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Tanh,
    Identity,
}

impl Activation {
    fn apply(self, v: f64) -> f64 {
        match self {
            Activation::Relu => v.max(0.0),
            Activation::Tanh => v.tanh(),
            Activation::Identity => v,
        }
    }

    /// Derivative expressed through the activation output.
    fn derivative_from_output(self, out: f64) -> f64 {
        match self {
            Activation::Relu => {
                if out > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => 1.0 - out * out,
            Activation::Identity => 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub inputs: usize,
    pub outputs: usize,
    /// Row-major `outputs x inputs`.
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
    pub activation: Activation,
}

impl Layer {
    fn forward(&self, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        for o in 0..self.outputs {
            let row = &self.weights[o * self.inputs..(o + 1) * self.inputs];
            let z = self.bias[o] + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>();
            out.push(self.activation.apply(z));
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Network {
    pub layers: Vec<Layer>,
}

/// Same shapes as the network parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub weights: Vec<Vec<f64>>,
    pub bias: Vec<Vec<f64>>,
}

impl Network {
    /// Glorot-uniform weights, zero biases. `sizes` includes input and output.
    pub fn new<R: Rng>(sizes: &[usize], activations: &[Activation], rng: &mut R) -> Self {
        assert_eq!(sizes.len(), activations.len() + 1);
        let layers = sizes
            .windows(2)
            .zip(activations)
            .map(|(w, &activation)| {
                let (inputs, outputs) = (w[0], w[1]);
                let limit = (6.0 / (inputs + outputs) as f64).sqrt();
                Layer {
                    inputs,
                    outputs,
                    weights: (0..inputs * outputs).map(|_| rng.random_range(-limit..limit)).collect(),
                    bias: vec![0.0; outputs],
                    activation,
                }
            })
            .collect();
        Network { layers }
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].inputs
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().map(|l| l.outputs).unwrap_or(0)
    }

    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        self.forward_to(x, self.layers.len())
    }

    /// Output of the first `depth` layers.
    pub fn forward_to(&self, x: &[f64], depth: usize) -> Vec<f64> {
        let mut cur = x.to_vec();
        let mut next = Vec::new();
        for layer in &self.layers[..depth] {
            layer.forward(&cur, &mut next);
            std::mem::swap(&mut cur, &mut next);
        }
        cur
    }

    fn trace(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let mut acts = Vec::with_capacity(self.layers.len() + 1);
        acts.push(x.to_vec());
        for layer in &self.layers {
            let mut out = Vec::with_capacity(layer.outputs);
            layer.forward(acts.last().unwrap(), &mut out);
            acts.push(out);
        }
        acts
    }

    pub fn zero_gradients(&self) -> Gradients {
        Gradients {
            weights: self.layers.iter().map(|l| vec![0.0; l.weights.len()]).collect(),
            bias: self.layers.iter().map(|l| vec![0.0; l.bias.len()]).collect(),
        }
    }

    /// Mean loss over `batch` and its gradient. `loss` maps (network output,
    /// sample index) to (loss, d loss / d output). `l2` adds
    /// `0.5 * l2 * sum(w^2)` over all weights (biases excluded).
    pub fn loss_and_gradients<F>(&self, batch: &[usize], inputs: &[Vec<f64>], l2: f64, loss: F) -> (f64, Gradients)
    where
        F: Fn(&[f64], usize) -> (f64, Vec<f64>),
    {
        let mut grads = self.zero_gradients();
        let mut total = 0.0;
        let scale = 1.0 / batch.len() as f64;
        for &idx in batch {
            let acts = self.trace(&inputs[idx]);
            let (l, dout) = loss(acts.last().unwrap(), idx);
            total += l;
            let mut delta = dout;
            for (li, layer) in self.layers.iter().enumerate().rev() {
                let out = &acts[li + 1];
                for (d, o) in delta.iter_mut().zip(out) {
                    *d *= layer.activation.derivative_from_output(*o);
                }
                let input = &acts[li];
                let gw = &mut grads.weights[li];
                for o in 0..layer.outputs {
                    let row = &mut gw[o * layer.inputs..(o + 1) * layer.inputs];
                    for (g, v) in row.iter_mut().zip(input) {
                        *g += scale * delta[o] * v;
                    }
                    grads.bias[li][o] += scale * delta[o];
                }
                if li > 0 {
                    let mut prev = vec![0.0; layer.inputs];
                    for o in 0..layer.outputs {
                        let row = &layer.weights[o * layer.inputs..(o + 1) * layer.inputs];
                        for (p, w) in prev.iter_mut().zip(row) {
                            *p += delta[o] * w;
                        }
                    }
                    delta = prev;
                }
            }
        }
        let mut mean = total * scale;
        if l2 > 0.0 {
            for (layer, gw) in self.layers.iter().zip(&mut grads.weights) {
                for (g, w) in gw.iter_mut().zip(&layer.weights) {
                    *g += l2 * w;
                    mean += 0.5 * l2 * w * w;
                }
            }
        }
        (mean, grads)
    }

    pub fn is_finite(&self) -> bool {
        self.layers.iter().all(|l| l.weights.iter().chain(&l.bias).all(|v| v.is_finite()))
    }
}

/// Adam optimizer state.
#[derive(Debug, Clone)]
pub struct Adam {
    pub lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
    t: i32,
    m: Gradients,
    v: Gradients,
}

impl Adam {
    pub fn new(net: &Network, lr: f64) -> Self {
        Adam { lr, beta1: 0.9, beta2: 0.999, eps: 1e-8, t: 0, m: net.zero_gradients(), v: net.zero_gradients() }
    }

    pub fn step(&mut self, net: &mut Network, g: &Gradients) {
        self.t += 1;
        let c1 = 1.0 - self.beta1.powi(self.t);
        let c2 = 1.0 - self.beta2.powi(self.t);
        let (b1, b2, lr, eps) = (self.beta1, self.beta2, self.lr, self.eps);
        let update = |p: &mut [f64], g: &[f64], m: &mut [f64], v: &mut [f64]| {
            for k in 0..p.len() {
                m[k] = b1 * m[k] + (1.0 - b1) * g[k];
                v[k] = b2 * v[k] + (1.0 - b2) * g[k] * g[k];
                p[k] -= lr * (m[k] / c1) / ((v[k] / c2).sqrt() + eps);
            }
        };
        for (li, layer) in net.layers.iter_mut().enumerate() {
            update(&mut layer.weights, &g.weights[li], &mut self.m.weights[li], &mut self.v.weights[li]);
            update(&mut layer.bias, &g.bias[li], &mut self.m.bias[li], &mut self.v.bias[li]);
        }
    }
}

/// Softmax cross-entropy for a one-hot class; returns (loss, d loss / d logits).
pub fn softmax_cross_entropy(logits: &[f64], class: usize) -> (f64, Vec<f64>) {
    let mx = logits.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    let lse = mx + logits.iter().map(|v| (v - mx).exp()).sum::<f64>().ln();
    let loss = lse - logits[class];
    let mut grad = softmax(logits);
    grad[class] -= 1.0;
    (loss, grad)
}

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let mx = logits.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    let e: Vec<f64> = logits.iter().map(|v| (v - mx).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

/// Half squared error summed over components, so the gradient is `out - target`.
/// Reported loss is the mean over components.
pub fn squared_error(out: &[f64], target: &[f64]) -> (f64, Vec<f64>) {
    let d = out.len() as f64;
    let grad: Vec<f64> = out.iter().zip(target).map(|(o, t)| (o - t) * 2.0 / d).collect();
    let loss = out.iter().zip(target).map(|(o, t)| (o - t) * (o - t)).sum::<f64>() / d;
    (loss, grad)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Stream};

    fn numeric_check(net: &Network, inputs: &[Vec<f64>], loss: &dyn Fn(&[f64], usize) -> (f64, Vec<f64>), l2: f64) -> f64 {
        let batch: Vec<usize> = (0..inputs.len()).collect();
        let (_, g) = net.loss_and_gradients(&batch, inputs, l2, loss);
        let h = 1e-6;
        let mut worst = 0.0f64;
        for li in 0..net.layers.len() {
            for k in 0..net.layers[li].weights.len() + net.layers[li].bias.len() {
                let nw = net.layers[li].weights.len();
                let mut plus = net.clone();
                let mut minus = net.clone();
                let (analytic, p, m) = if k < nw {
                    (g.weights[li][k], &mut plus.layers[li].weights[k], &mut minus.layers[li].weights[k])
                } else {
                    (g.bias[li][k - nw], &mut plus.layers[li].bias[k - nw], &mut minus.layers[li].bias[k - nw])
                };
                *p += h;
                *m -= h;
                let fp = plus.loss_and_gradients(&batch, inputs, l2, loss).0;
                let fm = minus.loss_and_gradients(&batch, inputs, l2, loss).0;
                let numeric = (fp - fm) / (2.0 * h);
                let rel = (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-7);
                worst = worst.max(rel);
            }
        }
        worst
    }

    fn sample_inputs(n: usize, d: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = stream(seed, Stream::Classifier);
        (0..n).map(|_| (0..d).map(|_| rng.random_range(-1.0..1.0)).collect()).collect()
    }

    #[test]
    fn tanh_gradient_matches_finite_differences() {
        let mut rng = stream(11, Stream::Autoencoder);
        let net = Network::new(&[4, 5, 3, 4], &[Activation::Tanh, Activation::Tanh, Activation::Identity], &mut rng);
        let x = sample_inputs(5, 4, 2);
        let xt = x.clone();
        let loss = move |out: &[f64], i: usize| squared_error(out, &xt[i]);
        assert!(numeric_check(&net, &x, &loss, 0.0) < 1e-4);
    }

    #[test]
    fn softmax_ce_gradient_with_l2() {
        let mut rng = stream(5, Stream::Classifier);
        let net = Network::new(&[3, 6, 2], &[Activation::Tanh, Activation::Identity], &mut rng);
        let x = sample_inputs(5, 3, 9);
        let loss = |out: &[f64], i: usize| softmax_cross_entropy(out, i % 2);
        assert!(numeric_check(&net, &x, &loss, 1e-2) < 1e-4);
    }

    #[test]
    fn softmax_sums_to_one() {
        let p = softmax(&[1000.0, -3.0, 2.0]);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn adam_reduces_a_quadratic() {
        let mut rng = stream(1, Stream::Classifier);
        let mut net = Network::new(&[1, 1], &[Activation::Identity], &mut rng);
        let inputs = vec![vec![1.0], vec![2.0]];
        let targets = [vec![3.0], vec![5.0]];
        let loss = |o: &[f64], i: usize| squared_error(o, &targets[i]);
        let mut opt = Adam::new(&net, 0.05);
        let start = net.loss_and_gradients(&[0, 1], &inputs, 0.0, loss).0;
        for _ in 0..2000 {
            let (_, g) = net.loss_and_gradients(&[0, 1], &inputs, 0.0, loss);
            opt.step(&mut net, &g);
        }
        let end = net.loss_and_gradients(&[0, 1], &inputs, 0.0, loss).0;
        assert!(end < start * 1e-3);
    }
}
