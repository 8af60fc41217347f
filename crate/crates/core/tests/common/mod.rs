#![allow(dead_code)]

use v2i_coop::env::{Env, EnvConfig};
use v2i_coop::scenario::ScenarioConfig;

pub fn default_env() -> Env {
    Env::new(Default::default(), Default::default(), Default::default()).unwrap()
}

pub fn env_with(scenario: ScenarioConfig, env: EnvConfig) -> Env {
    Env::new(scenario, Default::default(), env).unwrap()
}

/// Relative error with an exact-match shortcut, so equal zeros pass.
pub fn rel_err(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

pub mod gradcheck {
    use rand::Rng;
    use v2i_coop::nn::{Activation, DenseNet};

    /// `L = Σ c·y + ½ Σ y²` over a batch; returns the loss and `∂L/∂y`.
    fn loss(net: &DenseNet, x: &[f64], batch: usize, c: &[f64]) -> (f64, Vec<f64>) {
        let y = net.forward_batch(x, batch).output().to_vec();
        let l = y.iter().zip(c).map(|(y, c)| c * y + 0.5 * y * y).sum();
        let g = y.iter().zip(c).map(|(y, c)| c + y).collect();
        (l, g)
    }

    /// Sign pattern of every hidden pre-activation, and the smallest |z|.
    fn pattern(net: &DenseNet, x: &[f64], batch: usize) -> (Vec<bool>, f64) {
        let mut acts = x.to_vec();
        let mut signs = Vec::new();
        let mut margin = f64::INFINITY;
        for layer in &net.layers {
            let mut next = Vec::with_capacity(batch * layer.out_dim);
            for s in 0..batch {
                let xs = &acts[s * layer.in_dim..(s + 1) * layer.in_dim];
                for o in 0..layer.out_dim {
                    let w = &layer.weights[o * layer.in_dim..(o + 1) * layer.in_dim];
                    let z = layer.bias[o] + w.iter().zip(xs).map(|(a, b)| a * b).sum::<f64>();
                    if layer.activation == Activation::Relu {
                        signs.push(z > 0.0);
                        margin = margin.min(z.abs());
                        next.push(z.max(0.0));
                    } else {
                        next.push(z);
                    }
                }
            }
            acts = next;
        }
        (signs, margin)
    }

    pub struct Case {
        pub net: DenseNet,
        pub x: Vec<f64>,
        pub batch: usize,
        pub c: Vec<f64>,
    }

    /// A random small network with some permanently dead units, redrawn until
    /// no pre-activation sits within `1e-3` of a ReLU kink.
    pub fn random_case<R: Rng>(rng: &mut R) -> Case {
        loop {
            let depth = rng.random_range(1..=3);
            let mut sizes = vec![rng.random_range(1..=6)];
            for _ in 0..depth {
                sizes.push(rng.random_range(1..=8));
            }
            sizes.push(rng.random_range(1..=4));
            let mut net = DenseNet::new(&sizes, rng);
            let n_hidden = net.layers.len() - 1;
            for layer in &mut net.layers[..n_hidden] {
                for b in &mut layer.bias {
                    *b = if rng.random_bool(0.25) { -50.0 } else { rng.random_range(-0.5..0.5) };
                }
            }
            let batch = rng.random_range(1..=4);
            let x: Vec<f64> = (0..batch * sizes[0]).map(|_| rng.random_range(-2.0..2.0)).collect();
            let c: Vec<f64> = (0..batch * net.output_dim()).map(|_| rng.random_range(-1.0..1.0)).collect();
            if pattern(&net, &x, batch).1 > 1e-3 {
                return Case { net, x, batch, c };
            }
        }
    }

    /// Largest relative error between analytic and central-difference
    /// gradients over every parameter and every input.
    pub fn max_rel_error(case: &Case, h: f64) -> f64 {
        let Case { net, x, batch, c } = case;
        let (_, gy) = loss(net, x, *batch, c);
        let cache = net.forward_batch(x, *batch);
        let (grads, gx) = net.backward(&cache, &gy);
        let analytic = grads.flat();
        let base = net.params_flat();
        let (signs, _) = pattern(net, x, *batch);
        let mut worst = 0.0f64;
        let mut probe = net.clone();
        for (i, &a) in analytic.iter().enumerate() {
            let mut at = |delta: f64| {
                let mut p = base.clone();
                p[i] += delta;
                probe.set_params_flat(&p).unwrap();
                assert_eq!(pattern(&probe, x, *batch).0, signs, "perturbation crossed a kink");
                loss(&probe, x, *batch, c).0
            };
            let fd = (at(h) - at(-h)) / (2.0 * h);
            worst = worst.max(super::rel_err(a, fd));
        }
        for (i, &a) in gx.iter().enumerate() {
            let at = |delta: f64| {
                let mut xp = x.clone();
                xp[i] += delta;
                loss(net, &xp, *batch, c).0
            };
            let fd = (at(h) - at(-h)) / (2.0 * h);
            worst = worst.max(super::rel_err(a, fd));
        }
        worst
    }
}
