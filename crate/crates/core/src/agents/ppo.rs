//! PPO building blocks: the clipped surrogate, the value loss, GAE, and
//! observation normalization.

use rand::Rng;

/// `min(r·A, clip(r, 1-ε, 1+ε)·A)`, the per-sample objective to maximize.
pub fn clipped_objective(ratio: f64, advantage: f64, clip_eps: f64) -> f64 {
    let clipped = ratio.clamp(1.0 - clip_eps, 1.0 + clip_eps);
    (ratio * advantage).min(clipped * advantage)
}

/// Whether the unclipped branch is the active one, i.e. the objective still
/// depends on the ratio.
pub fn clip_is_inactive(ratio: f64, advantage: f64, clip_eps: f64) -> bool {
    if advantage >= 0.0 {
        ratio <= 1.0 + clip_eps
    } else {
        ratio >= 1.0 - clip_eps
    }
}

/// Mean squared error between critic values and return targets.
pub fn critic_loss(values: &[f64], returns: &[f64]) -> f64 {
    assert_eq!(values.len(), returns.len());
    if values.is_empty() {
        return 0.0;
    }
    values
        .iter()
        .zip(returns)
        .map(|(v, r)| (v - r) * (v - r))
        .sum::<f64>()
        / values.len() as f64
}

/// Generalized advantage estimation.
///
/// `values` holds one entry per reward plus a final bootstrap value. A `done`
/// flag cuts the recursion after that step. Returns raw (unnormalized)
/// advantages and the return targets `advantage + value`.
pub fn compute_advantages(
    rewards: &[f64],
    values: &[f64],
    dones: &[bool],
    gamma: f64,
    gae_lambda: f64,
) -> (Vec<f64>, Vec<f64>) {
    let n = rewards.len();
    assert_eq!(values.len(), n + 1, "values need a bootstrap entry");
    assert_eq!(dones.len(), n);
    let mut adv = vec![0.0; n];
    let mut next_adv = 0.0;
    for t in (0..n).rev() {
        let not_done = if dones[t] { 0.0 } else { 1.0 };
        let delta = rewards[t] + gamma * values[t + 1] * not_done - values[t];
        next_adv = delta + gamma * gae_lambda * not_done * next_adv;
        adv[t] = next_adv;
    }
    let returns = adv.iter().zip(values).map(|(a, v)| a + v).collect();
    (adv, returns)
}

/// Rescales to zero mean and unit variance. Constant inputs become all zero.
pub fn normalize_advantages(adv: &mut [f64]) {
    if adv.is_empty() {
        return;
    }
    let n = adv.len() as f64;
    let mean = adv.iter().sum::<f64>() / n;
    let var = adv.iter().map(|a| (a - mean) * (a - mean)).sum::<f64>() / n;
    let std = var.sqrt();
    for a in adv.iter_mut() {
        *a = if std > 1e-12 { (*a - mean) / (std + 1e-8) } else { 0.0 };
    }
}

/// Draws an index from a probability vector by inverse CDF.
pub fn sample_categorical<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    // Rounding left a sliver above the total: take the last non-zero entry.
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(0)
}

/// Running per-feature mean and variance (parallel Welford merge).
#[derive(Debug, Clone, PartialEq)]
pub struct RunningNorm {
    pub count: f64,
    pub mean: Vec<f64>,
    pub var: Vec<f64>,
}

impl RunningNorm {
    pub const CLIP: f64 = 10.0;

    pub fn new(dim: usize) -> Self {
        Self {
            count: 0.0,
            mean: vec![0.0; dim],
            var: vec![1.0; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// Merges the statistics of `batch` row-major samples.
    pub fn update(&mut self, samples: &[f64]) {
        let d = self.dim();
        let n = samples.len() / d;
        if n == 0 {
            return;
        }
        let nb = n as f64;
        for j in 0..d {
            let col = (0..n).map(|i| samples[i * d + j]);
            let bm = col.clone().sum::<f64>() / nb;
            let bv = col.map(|x| (x - bm) * (x - bm)).sum::<f64>() / nb;
            if self.count == 0.0 {
                self.mean[j] = bm;
                self.var[j] = bv;
            } else {
                let total = self.count + nb;
                let delta = bm - self.mean[j];
                let m2 = self.var[j] * self.count + bv * nb + delta * delta * self.count * nb / total;
                self.mean[j] += delta * nb / total;
                self.var[j] = m2 / total;
            }
        }
        self.count += nb;
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let d = self.dim();
        x.iter()
            .enumerate()
            .map(|(i, &v)| {
                let j = i % d;
                ((v - self.mean[j]) / (self.var[j] + 1e-8).sqrt()).clamp(-Self::CLIP, Self::CLIP)
            })
            .collect()
    }
}
