//! Small dense networks with exact reverse-mode gradients and Adam.
//!
//! Everything is `f64`. Weight matrices are stored `out × in` row-major so
//! that forward dot products and backward axpys both walk contiguous memory.

use rand::Rng;

use crate::error::{Error, Result};
use crate::par;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Identity,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub in_dim: usize,
    pub out_dim: usize,
    /// `out_dim × in_dim`, row-major.
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
    pub activation: Activation,
}

impl Dense {
    pub fn zeros(in_dim: usize, out_dim: usize, activation: Activation) -> Self {
        Self {
            in_dim,
            out_dim,
            weights: vec![0.0; in_dim * out_dim],
            bias: vec![0.0; out_dim],
            activation,
        }
    }

    #[inline]
    fn row(&self, o: usize) -> &[f64] {
        &self.weights[o * self.in_dim..(o + 1) * self.in_dim]
    }

    fn forward_into(&self, x: &[f64], n: usize, out: &mut Vec<f64>) {
        out.clear();
        out.resize(n * self.out_dim, 0.0);
        for s in 0..n {
            let xs = &x[s * self.in_dim..(s + 1) * self.in_dim];
            let ys = &mut out[s * self.out_dim..(s + 1) * self.out_dim];
            for (o, y) in ys.iter_mut().enumerate() {
                let z = self.bias[o] + dot(self.row(o), xs);
                *y = match self.activation {
                    Activation::Relu => z.max(0.0),
                    Activation::Identity => z,
                };
            }
        }
    }
}

/// Dot product with independent accumulators so the loop vectorizes.
#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f64; 8];
    let chunks = a.len() / 8;
    for i in 0..chunks {
        let (pa, pb) = (&a[i * 8..i * 8 + 8], &b[i * 8..i * 8 + 8]);
        for j in 0..8 {
            acc[j] += pa[j] * pb[j];
        }
    }
    let mut tail = 0.0;
    for i in chunks * 8..a.len() {
        tail += a[i] * b[i];
    }
    ((acc[0] + acc[1]) + (acc[2] + acc[3])) + ((acc[4] + acc[5]) + (acc[6] + acc[7])) + tail
}

#[inline]
fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseNet {
    pub layers: Vec<Dense>,
}

/// Activations kept from a batched forward pass: `acts[0]` is the input,
/// `acts[i + 1]` the output of layer `i`.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    pub batch: usize,
    pub acts: Vec<Vec<f64>>,
}

impl ForwardCache {
    pub fn output(&self) -> &[f64] {
        self.acts.last().expect("at least the input")
    }
}

/// Parameter-shaped buffers, one `(weights, bias)` pair per layer.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<(Vec<f64>, Vec<f64>)>,
}

impl Gradients {
    pub fn zeros_like(net: &DenseNet) -> Self {
        Self {
            layers: net
                .layers
                .iter()
                .map(|l| (vec![0.0; l.weights.len()], vec![0.0; l.bias.len()]))
                .collect(),
        }
    }

    pub fn add_assign(&mut self, other: &Gradients) {
        for ((w, b), (ow, ob)) in self.layers.iter_mut().zip(&other.layers) {
            axpy(1.0, ow, w);
            axpy(1.0, ob, b);
        }
    }

    pub fn flat(&self) -> Vec<f64> {
        self.layers
            .iter()
            .flat_map(|(w, b)| w.iter().chain(b.iter()).copied())
            .collect()
    }

    pub fn global_norm(&self) -> f64 {
        self.layers
            .iter()
            .flat_map(|(w, b)| w.iter().chain(b))
            .map(|g| g * g)
            .sum::<f64>()
            .sqrt()
    }

    pub fn scale(&mut self, factor: f64) {
        for (w, b) in &mut self.layers {
            for g in w.iter_mut().chain(b.iter_mut()) {
                *g *= factor;
            }
        }
    }

    /// Rescales so the global L2 norm is at most `max_norm`.
    pub fn clip_norm(&mut self, max_norm: f64) {
        let n = self.global_norm();
        if n > max_norm && n > 0.0 {
            self.scale(max_norm / n);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.layers
            .iter()
            .all(|(w, b)| w.iter().chain(b).all(|&g| g == 0.0))
    }
}

impl DenseNet {
    /// ReLU hidden layers and an identity output layer.
    ///
    /// Hidden layers use He-uniform initialization, the output layer
    /// Xavier-uniform; biases start at zero.
    pub fn new<R: Rng + ?Sized>(sizes: &[usize], rng: &mut R) -> Self {
        assert!(sizes.len() >= 2, "a network needs input and output sizes");
        let n = sizes.len() - 1;
        let layers = (0..n)
            .map(|i| {
                let (fan_in, fan_out) = (sizes[i], sizes[i + 1]);
                let last = i + 1 == n;
                let limit = if last {
                    (6.0 / (fan_in + fan_out) as f64).sqrt()
                } else {
                    (6.0 / fan_in as f64).sqrt()
                };
                let mut layer = Dense::zeros(
                    fan_in,
                    fan_out,
                    if last {
                        Activation::Identity
                    } else {
                        Activation::Relu
                    },
                );
                for w in &mut layer.weights {
                    *w = rng.random_range(-limit..limit);
                }
                layer
            })
            .collect();
        Self { layers }
    }

    pub fn from_layers(layers: Vec<Dense>) -> Result<Self> {
        for pair in layers.windows(2) {
            if pair[0].out_dim != pair[1].in_dim {
                return Err(Error::Contract("layer dimensions do not chain".into()));
            }
        }
        if layers.is_empty() {
            return Err(Error::Contract("empty network".into()));
        }
        Ok(Self { layers })
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].in_dim
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().unwrap().out_dim
    }

    pub fn n_params(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.len() + l.bias.len())
            .sum()
    }

    pub fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weights.iter().chain(&l.bias).all(|v| v.is_finite()))
    }

    pub fn forward(&self, input: &[f64]) -> Vec<f64> {
        self.forward_batch(input, 1).acts.pop().unwrap()
    }

    /// Forward pass over `batch` row-major samples.
    ///
    /// Panics when the input length is not `batch × input_dim`.
    pub fn forward_batch(&self, input: &[f64], batch: usize) -> ForwardCache {
        assert_eq!(
            input.len(),
            batch * self.input_dim(),
            "input dimension mismatch"
        );
        let mut acts = Vec::with_capacity(self.layers.len() + 1);
        acts.push(input.to_vec());
        for layer in &self.layers {
            let mut out = Vec::new();
            layer.forward_into(acts.last().unwrap(), batch, &mut out);
            acts.push(out);
        }
        ForwardCache { batch, acts }
    }

    /// Reverse-mode gradients of `Σ output_grad · output` with respect to every
    /// parameter, plus the gradient with respect to the input.
    pub fn backward(&self, cache: &ForwardCache, output_grad: &[f64]) -> (Gradients, Vec<f64>) {
        let n = cache.batch;
        assert_eq!(output_grad.len(), n * self.output_dim());
        let mut grads = Gradients::zeros_like(self);
        let mut delta = output_grad.to_vec();
        for (li, layer) in self.layers.iter().enumerate().rev() {
            let out = &cache.acts[li + 1];
            if layer.activation == Activation::Relu {
                for (d, &y) in delta.iter_mut().zip(out) {
                    if y <= 0.0 {
                        *d = 0.0;
                    }
                }
            }
            let x = &cache.acts[li];
            let (gw, gb) = &mut grads.layers[li];
            let mut dx = vec![0.0; n * layer.in_dim];
            for s in 0..n {
                let xs = &x[s * layer.in_dim..(s + 1) * layer.in_dim];
                let dxs = &mut dx[s * layer.in_dim..(s + 1) * layer.in_dim];
                for o in 0..layer.out_dim {
                    let d = delta[s * layer.out_dim + o];
                    if d == 0.0 {
                        continue;
                    }
                    gb[o] += d;
                    axpy(d, xs, &mut gw[o * layer.in_dim..(o + 1) * layer.in_dim]);
                    axpy(d, layer.row(o), dxs);
                }
            }
            delta = dx;
        }
        (grads, delta)
    }

    /// Gradients of a batch loss computed over fixed-size chunks.
    ///
    /// `loss_grad` maps a chunk's forward output and the chunk's sample range to
    /// the gradient of the loss with respect to that output, plus that chunk's
    /// share of the loss value. Chunk results are summed in chunk order, so the
    /// result does not depend on scheduling.
    pub fn batch_gradients<F>(
        &self,
        input: &[f64],
        batch: usize,
        chunk: usize,
        loss_grad: F,
    ) -> (Gradients, f64)
    where
        F: Fn(&[f64], std::ops::Range<usize>) -> (Vec<f64>, f64) + Sync + Send,
    {
        let chunk = chunk.max(1);
        let n_chunks = batch.div_ceil(chunk);
        let d = self.input_dim();
        let parts = par::map_range(n_chunks, |c| {
            let range = c * chunk..((c + 1) * chunk).min(batch);
            let cache = self.forward_batch(&input[range.start * d..range.end * d], range.len());
            let (g, loss) = loss_grad(cache.output(), range);
            (self.backward(&cache, &g).0, loss)
        });
        let mut total = Gradients::zeros_like(self);
        let mut loss = 0.0;
        for (g, l) in &parts {
            total.add_assign(g);
            loss += l;
        }
        (total, loss)
    }

    pub fn params_flat(&self) -> Vec<f64> {
        self.layers
            .iter()
            .flat_map(|l| l.weights.iter().chain(l.bias.iter()).copied())
            .collect()
    }

    pub fn set_params_flat(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.n_params() {
            return Err(Error::Contract(format!(
                "expected {} parameters, got {}",
                self.n_params(),
                flat.len()
            )));
        }
        let mut off = 0;
        for l in &mut self.layers {
            let nw = l.weights.len();
            l.weights.copy_from_slice(&flat[off..off + nw]);
            off += nw;
            let nb = l.bias.len();
            l.bias.copy_from_slice(&flat[off..off + nb]);
            off += nb;
        }
        Ok(())
    }

    /// `(in, out)` per layer.
    pub fn shape_manifest(&self) -> Vec<(usize, usize)> {
        self.layers.iter().map(|l| (l.in_dim, l.out_dim)).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Adam {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub step: u64,
    first: Vec<(Vec<f64>, Vec<f64>)>,
    second: Vec<(Vec<f64>, Vec<f64>)>,
}

impl Adam {
    pub fn new(net: &DenseNet) -> Self {
        let zeros = Gradients::zeros_like(net).layers;
        Self {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            step: 0,
            first: zeros.clone(),
            second: zeros,
        }
    }

    /// One bias-corrected Adam descent step.
    pub fn step(&mut self, net: &mut DenseNet, grads: &Gradients, lr: f64) {
        self.step += 1;
        let t = self.step as i32;
        let c1 = 1.0 - self.beta1.powi(t);
        let c2 = 1.0 - self.beta2.powi(t);
        let (b1, b2, eps) = (self.beta1, self.beta2, self.eps);
        let update = |p: &mut [f64], g: &[f64], m: &mut [f64], v: &mut [f64]| {
            for i in 0..p.len() {
                m[i] = b1 * m[i] + (1.0 - b1) * g[i];
                v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
                let mh = m[i] / c1;
                let vh = v[i] / c2;
                p[i] -= lr * mh / (vh.sqrt() + eps);
            }
        };
        for (li, layer) in net.layers.iter_mut().enumerate() {
            let (gw, gb) = &grads.layers[li];
            let (mw, mb) = &mut self.first[li];
            let (vw, vb) = &mut self.second[li];
            update(&mut layer.weights, gw, mw, vw);
            update(&mut layer.bias, gb, mb, vb);
        }
    }
}

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&z| (z - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

pub fn log_softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + logits.iter().map(|&z| (z - max).exp()).sum::<f64>().ln();
    logits.iter().map(|&z| z - lse).collect()
}

/// Index of the largest entry; the lowest index wins ties.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}
